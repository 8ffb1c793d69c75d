#include "geoidx/qpu.hpp"

#include <sstream>

namespace geoidx::qpu {

const char* to_string(Role r) {
    switch (r) {
        case Role::Internal: return "internal";
        case Role::History: return "history";
        case Role::Live: return "live";
    }
    return "?";
}

const char* to_string(Dispatch d) {
    switch (d) {
        case Dispatch::Value: return "value";
        case Dispatch::Dc: return "dc";
        case Dispatch::Freshness: return "freshness";
    }
    return "?";
}

const char* to_string(ReplMode m) { return m == ReplMode::LogReplay ? "log_replay" : "index_delta"; }

Role parse_role(const std::string& s) {
    if (s == "internal") return Role::Internal;
    if (s == "history") return Role::History;
    if (s == "live") return Role::Live;
    throw Error("unknown role '" + s + "' (expected internal, history or live)");
}

Dispatch parse_dispatch(const std::string& s) {
    if (s == "value") return Dispatch::Value;
    if (s == "dc") return Dispatch::Dc;
    if (s == "freshness") return Dispatch::Freshness;
    throw Error("unknown dispatch '" + s + "' (expected value, dc or freshness)");
}

ReplMode parse_mode(const std::string& s) {
    if (s == "log_replay") return ReplMode::LogReplay;
    if (s == "index_delta") return ReplMode::IndexDelta;
    throw Error("unknown replication mode '" + s + "' (expected log_replay or index_delta)");
}

namespace {

std::string lag_text(const std::set<DcId>& dcs) {
    std::string out;
    for (DcId d : dcs) {
        if (!out.empty()) out += ",";
        out += dc_name(d);
    }
    return out;
}

}  // namespace

UnsatisfiableError::UnsatisfiableError(std::set<DcId> lagging, const std::string& detail)
    : Error("unsatisfiable: local replica lags on " + lag_text(lagging) + (detail.empty() ? "" : " (" + detail + ")")),
      lagging_(std::move(lagging)) {}

void SplitPolicy::validate() const {
    if (t_split == 0) throw Error("t_split must be positive");
    if (!(t_merge < t_split / 2.0)) throw Error("t_merge must be below t_split / 2");
    if (mode != "internal" && mode != "replace") throw Error("split mode must be 'internal' or 'replace'");
}

void SwitchPolicy::validate() const {
    if (window == 0) throw Error("selectivity window must be positive");
    if (!(theta_low >= 0.0 && theta_low < theta_high && theta_high <= 1.0)) {
        throw Error("switch thresholds need 0 <= theta_low < theta_high <= 1");
    }
}

void PartialResult::add_effect(const Stamp& tag, DcId origin, Seq seq) {
    auto& e = removed[tag];
    auto it = e.find(origin);
    if (it == e.end() || seq < it->second) e[origin] = seq;
}

void PartialResult::merge(const PartialResult& other) {
    for (const auto& [tag, item] : other.items) items.emplace(tag, item);
    for (const auto& [tag, effects] : other.removed) {
        for (const auto& [origin, seq] : effects) add_effect(tag, origin, seq);
    }
}

bool PartialResult::visible(const Stamp& tag, const index::Visibility& vis) const {
    auto it = removed.find(tag);
    return it == removed.end() || !vis.hides(it->second);
}

PartialResult PartialResult::restricted(const Region& rect) const {
    PartialResult out;
    out.clock = clock;
    for (const auto& [tag, item] : items) {
        if (!rect.contains(item.point)) continue;
        out.items.emplace(tag, item);
        auto it = removed.find(tag);
        if (it != removed.end()) out.removed.emplace(tag, it->second);
    }
    return out;
}

std::optional<PartialResult> ResultCache::probe(const Region& sub, const VectorClock& target, bool current,
                                                const std::set<DcId>& scope, Tick now) {
    for (auto& e : entries_) {
        if (!e.rect.contains(sub)) continue;
        if (!e.data.clock.dominates_on(target, scope)) continue;
        if (!current && (e.current || !target.dominates(e.fill_target))) continue;
        e.last_use = now;
        return e.data.restricted(sub);
    }
    return std::nullopt;
}

void ResultCache::fill(Region rect, PartialResult data, bool current, VectorClock fill_target, Tick now) {
    if (capacity_ == 0) return;
    Entry fresh{std::move(rect), std::move(data), current, std::move(fill_target), now, next_order_++};
    for (auto& e : entries_) {
        if (e.rect == fresh.rect) {
            e = std::move(fresh);
            return;
        }
    }
    if (entries_.size() >= capacity_) {
        auto victim = entries_.begin();
        for (auto it = entries_.begin(); it != entries_.end(); ++it) {
            if (it->last_use < victim->last_use ||
                (it->last_use == victim->last_use && it->order < victim->order)) {
                victim = it;
            }
        }
        entries_.erase(victim);
    }
    entries_.push_back(std::move(fresh));
}

std::size_t ResultCache::push(const index::IndexDelta& delta) {
    std::size_t touched = 0;
    for (auto& e : entries_) {
        bool changed = false;
        for (const auto& v : delta.adds) {
            if (e.rect.contains(v.point) && e.data.items.emplace(v.tag, Item{v.key, v.point}).second) changed = true;
        }
        for (const auto& r : delta.removes) {
            if (!e.data.items.count(r.tag)) continue;
            auto& effects = e.data.removed[r.tag];
            auto it = effects.find(r.effect_origin);
            if (it == effects.end() || r.effect_seq < it->second) {
                effects[r.effect_origin] = r.effect_seq;
                changed = true;
            }
        }
        if (changed) ++touched;
    }
    return touched;
}

void ResultCache::advance(const VectorClock& c) {
    for (auto& e : entries_) e.data.clock = merge_clock(e.data.clock, c);
}

void SelectivityWindow::record(bool relevant) {
    bits_.push_back(relevant);
    if (relevant) ++relevant_;
    while (bits_.size() > size_) {
        if (bits_.front()) --relevant_;
        bits_.pop_front();
    }
}

double SelectivityWindow::selectivity() const {
    return bits_.empty() ? 0.0 : static_cast<double>(relevant_) / static_cast<double>(bits_.size());
}

void SelectivityWindow::clear() {
    bits_.clear();
    relevant_ = 0;
}

std::optional<ReplMode> decide_mode(ReplMode current, double s, const SwitchPolicy& p) {
    if (current == ReplMode::LogReplay && s < p.theta_low) return ReplMode::IndexDelta;
    if (current == ReplMode::IndexDelta && s > p.theta_high) return ReplMode::LogReplay;
    return std::nullopt;
}

}  // namespace geoidx::qpu
