#include "geoidx/crdt_index.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace geoidx::index {

Interval Term::interval() const {
    if (exact) return Interval{lo, lo, false, false};
    return Interval{lo, hi, false, !hi_closed};
}

bool Term::operator<(const Term& other) const {
    if (attr != other.attr) return attr < other.attr;
    return compare(lo, other.lo) < 0;
}

bool Term::operator==(const Term& other) const {
    return attr == other.attr && compare(lo, other.lo) == 0;
}

Binning::Binning(const Schema& schema, const std::map<std::string, AttrBinning>& policies)
    : per_axis_(schema.size()) {
    for (const auto& [name, policy] : policies) {
        const std::size_t axis = schema.axis_of(name);
        if (policy.kind == AttrBinning::Kind::EquiWidth) {
            if (schema.at(axis).kind != AttrKind::Numeric) {
                throw SchemaError("equi-width binning needs a numeric attribute, '" + name + "' is text");
            }
            if (policy.bins == 0) throw SchemaError("binning of '" + name + "' needs at least one bin");
        }
        per_axis_[axis] = policy;
    }
}

Binning Binning::none(const Schema& schema) { return Binning(schema, {}); }

AttrBinning Binning::at(std::size_t axis) const {
    return axis < per_axis_.size() ? per_axis_[axis] : AttrBinning{};
}

Term Binning::term_for(const Schema& schema, std::size_t axis, const Value& v) const {
    const AttrBinning policy = at(axis);
    if (policy.kind == AttrBinning::Kind::None) return Term{axis, v, v, true, true};

    const double min = std::get<double>(schema.at(axis).min);
    const double max = std::get<double>(schema.at(axis).max);
    const double x = std::get<double>(v);
    const auto bins = static_cast<long long>(policy.bins);
    const double width = (max - min) / static_cast<double>(bins);
    auto lo_of = [&](long long b) { return b >= bins ? max : min + static_cast<double>(b) * width; };

    long long b = width > 0 ? static_cast<long long>(std::floor((x - min) / width)) : 0;
    b = std::clamp(b, 0LL, bins - 1);
    // Floating point may put x just outside the computed bin.
    while (b > 0 && x < lo_of(b)) --b;
    while (b < bins - 1 && x >= lo_of(b + 1)) ++b;
    return Term{axis, lo_of(b), lo_of(b + 1), false, b == bins - 1};
}

bool Visibility::hides(const Effects& effects) const {
    switch (mode) {
        case Mode::All: return false;
        case Mode::Current: return !effects.empty();
        case Mode::At:
            for (const auto& [origin, seq] : effects) {
                if (seq <= clock.get(origin)) return true;
            }
            return false;
    }
    return false;
}

CrdtIndex::CrdtIndex(std::shared_ptr<const Schema> schema, Binning binning)
    : schema_(std::move(schema)), binning_(std::move(binning)) {
    if (!schema_) throw std::invalid_argument("index needs a schema");
}

IndexDelta CrdtIndex::apply_write(const store::LogEntry& entry, const Region* region) {
    IndexDelta delta;
    const Stamp tag = entry.stamp();
    if (entry.op == store::Op::Put) {
        bool ok = entry.attrs.size() == schema_->size();
        for (std::size_t i = 0; ok && i < entry.attrs.size(); ++i) ok = schema_->conforms(i, entry.attrs[i]);
        if (!ok) {
            ++skipped_;
            return delta;
        }
        const bool relevant = !region || region->contains(entry.attrs);
        if (relevant) delta.adds.push_back(IndexedVersion{entry.key, tag, entry.attrs});
        if (entry.superseded && (!region || relevant || knows(*entry.superseded))) {
            delta.removes.push_back(Removal{*entry.superseded, entry.origin, entry.seq});
        }
    } else {
        if (entry.superseded) delta.removes.push_back(Removal{*entry.superseded, entry.origin, entry.seq});
        auto it = by_key_.find(entry.key);
        if (it != by_key_.end()) {
            for (const Stamp& old : it->second) {
                if (old < tag && !(entry.superseded && old == *entry.superseded)) {
                    delta.removes.push_back(Removal{old, entry.origin, entry.seq});
                }
            }
        }
    }
    apply(delta);
    return delta;
}

void CrdtIndex::add(const IndexedVersion& v) {
    if (!versions_.emplace(v.tag, v).second) return;
    by_key_[v.key].insert(v.tag);
    for (std::size_t axis = 0; axis < v.point.size(); ++axis) {
        terms_[binning_.term_for(*schema_, axis, v.point[axis])].insert(Posting{v.key, v.tag});
    }
}

void CrdtIndex::tombstone(const Removal& r) {
    auto& effects = removed_[r.tag];
    auto it = effects.find(r.effect_origin);
    if (it == effects.end()) {
        effects.emplace(r.effect_origin, r.effect_seq);
    } else if (r.effect_seq < it->second) {
        it->second = r.effect_seq;
    }
}

void CrdtIndex::apply(const IndexDelta& delta) {
    for (const auto& v : delta.adds) add(v);
    for (const auto& r : delta.removes) tombstone(r);
}

void CrdtIndex::merge(const CrdtIndex& other) {
    if (!(*schema_ == *other.schema_)) throw std::logic_error("cannot merge indexes over different schemas");
    if (!(binning_ == other.binning_)) throw std::logic_error("cannot merge indexes with different binning");
    for (const auto& [_, v] : other.versions_) add(v);
    for (const auto& [tag, effects] : other.removed_) {
        for (const auto& [origin, seq] : effects) tombstone(Removal{tag, origin, seq});
    }
    skipped_ += other.skipped_;
}

CrdtIndex merge(const CrdtIndex& a, const CrdtIndex& b) {
    CrdtIndex out = a;
    out.merge(b);
    return out;
}

const Effects* CrdtIndex::effects(const Stamp& tag) const {
    auto it = removed_.find(tag);
    return it == removed_.end() ? nullptr : &it->second;
}

bool CrdtIndex::visible(const Stamp& tag, const Visibility& vis) const {
    if (!knows(tag)) return false;
    const Effects* e = effects(tag);
    return !e || !vis.hides(*e);
}

LookupResult CrdtIndex::lookup_range(std::size_t axis, const Interval& q, const Visibility& vis) const {
    LookupResult out;
    if (axis >= schema_->size()) throw SchemaError("lookup on unknown axis " + std::to_string(axis));
    if (q.empty()) return out;

    Term probe{axis, q.lo, q.lo, true, true};
    auto it = terms_.lower_bound(probe);
    // The previous bin of this attribute may still reach into q.
    if (it != terms_.begin()) {
        auto prev = std::prev(it);
        if (prev->first.attr == axis && !prev->first.exact) it = prev;
    }
    for (; it != terms_.end() && it->first.attr == axis; ++it) {
        const Term& term = it->first;
        const int c = compare(term.lo, q.hi);
        if (c > 0 || (c == 0 && q.hi_open)) break;
        const Interval bin = term.interval();
        if (intersect(bin, q).empty()) continue;
        ++out.touched_terms;
        const bool whole = q.contains(bin);
        for (const Posting& p : it->second) {
            if (!visible(p.tag, vis)) continue;
            if (whole) {
                out.exact.insert(p.tag);
                out.exact_keys.insert(p.key);
            } else {
                out.candidates.insert(p.tag);
                out.candidate_keys.insert(p.key);
            }
        }
    }
    return out;
}

std::size_t CrdtIndex::scrub(const store::DcReplica& replica, std::vector<Removal>* out) {
    std::vector<Removal> removals;
    for (const auto& [tag, v] : versions_) {
        if (!visible(tag)) continue;
        const store::ObjectVersion* cur = replica.find(v.key);
        if (!cur || cur->stamp <= tag) continue;
        removals.push_back(Removal{tag, cur->stamp.origin, cur->stamp.seq});
    }
    for (const auto& r : removals) tombstone(r);
    if (out) out->insert(out->end(), removals.begin(), removals.end());
    return removals.size();
}

std::size_t CrdtIndex::object_count() const { return visible_keys().size(); }

std::set<Key> CrdtIndex::visible_keys() const {
    std::set<Key> keys;
    for (const auto& [tag, v] : versions_) {
        if (!removed_.count(tag)) keys.insert(v.key);
    }
    return keys;
}

std::vector<const IndexedVersion*> CrdtIndex::visible_versions(const Visibility& vis) const {
    std::vector<const IndexedVersion*> out;
    for (const auto& [tag, v] : versions_) {
        if (visible(tag, vis)) out.push_back(&v);
    }
    return out;
}

TermPostings CrdtIndex::visible_postings() const {
    TermPostings out;
    for (const auto& [term, postings] : terms_) {
        for (const Posting& p : postings) {
            if (!removed_.count(p.tag)) out[term].insert(p);
        }
    }
    return out;
}

std::string CrdtIndex::canonical() const { return canonical_serialization(*schema_, visible_postings()); }

CrdtIndex CrdtIndex::restricted(const Region& region) const {
    CrdtIndex out(schema_, binning_);
    for (const auto& [_, v] : versions_) {
        if (region.contains(v.point)) out.add(v);
    }
    out.removed_ = removed_;
    return out;
}

bool CrdtIndex::operator==(const CrdtIndex& other) const {
    return terms_ == other.terms_ && versions_ == other.versions_ && removed_ == other.removed_;
}

std::string canonical_serialization(const Schema& schema, const TermPostings& postings) {
    std::ostringstream os;
    for (const auto& [term, set] : postings) {
        if (set.empty()) continue;
        os << schema.at(term.attr).name << ' ';
        if (term.exact) {
            os << '=' << format_value(term.lo);
        } else {
            os << '[' << format_value(term.lo) << ',' << format_value(term.hi) << (term.hi_closed ? ']' : ')');
        }
        os << " :";
        for (const Posting& p : set) os << ' ' << p.key << '@' << p.tag.to_string();
        os << '\n';
    }
    return os.str();
}

}  // namespace geoidx::index
