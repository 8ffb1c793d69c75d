#include "geoidx/store.hpp"

#include <sstream>
#include <stdexcept>

namespace geoidx::store {

std::string Stamp::to_string() const {
    return std::to_string(ts) + "." + dc_name(origin) + "." + std::to_string(seq);
}

std::string LogEntry::describe() const {
    std::ostringstream os;
    os << dc_name(origin) << '#' << seq << ' ' << (op == Op::Put ? "put " : "delete ") << key;
    return os.str();
}

ObjectVersion lww_merge(const ObjectVersion& a, const ObjectVersion& b) {
    if (a.key != b.key) throw std::logic_error("lww_merge of different keys '" + a.key + "', '" + b.key + "'");
    return b.stamp > a.stamp ? b : a;
}

std::optional<ObjectVersion> DcReplica::get(const Key& key) const {
    auto it = objects_.find(key);
    if (it == objects_.end() || it->second.deleted) return std::nullopt;
    return it->second;
}

const ObjectVersion* DcReplica::find(const Key& key) const {
    auto it = objects_.find(key);
    return it == objects_.end() ? nullptr : &it->second;
}

const LogEntry& DcReplica::entry(DcId origin, Seq seq) const {
    const auto& pos = positions_.at(origin);
    if (seq == 0 || seq > pos.size()) {
        throw std::out_of_range("entry " + dc_name(origin) + "#" + std::to_string(seq) +
                                " not applied at " + dc_name(id_));
    }
    return log_[pos[seq - 1]];
}

void DcReplica::append(LogEntry e) {
    auto& pos = positions_[e.origin];
    pos.push_back(log_.size());
    heads_.set(e.origin, e.seq);
    ObjectVersion v = e.version();
    auto it = objects_.find(e.key);
    if (it == objects_.end()) {
        objects_.emplace(e.key, std::move(v));
    } else {
        it->second = lww_merge(it->second, v);
    }
    log_.push_back(std::move(e));
}

GeoStore::GeoStore(sim::Simulator& sim, sim::Bus& bus, std::shared_ptr<const Schema> schema,
                   std::size_t dc_count)
    : sim_(sim), bus_(bus), schema_(std::move(schema)) {
    if (dc_count == 0) throw std::invalid_argument("store needs at least one DC");
    for (std::size_t i = 0; i < dc_count; ++i) {
        const auto dc = static_cast<DcId>(i);
        replicas_.emplace_back(dc);
        const sim::NodeId node = bus_.add_node("store@" + dc_name(dc), dc);
        bus_.set_handler(node, [this, dc](const sim::Envelope& env) {
            const auto& entry = std::any_cast<const std::shared_ptr<const LogEntry>&>(env.payload);
            apply_remote(dc, *entry);
        });
        nodes_.push_back(node);
    }
}

const LogEntry& GeoStore::put(DcId dc, const Key& key, const Attrs& attrs) {
    return write(dc, key, Op::Put, schema_->to_point(attrs));
}

const LogEntry& GeoStore::put(DcId dc, const Key& key, Point point) {
    if (point.size() != schema_->size()) throw SchemaError("point arity does not match the schema");
    for (std::size_t i = 0; i < point.size(); ++i) {
        if (!schema_->conforms(i, point[i])) {
            throw SchemaError("value " + format_value(point[i]) + " violates the domain of '" +
                              schema_->at(i).name + "'");
        }
    }
    return write(dc, key, Op::Put, std::move(point));
}

const LogEntry& GeoStore::remove(DcId dc, const Key& key) { return write(dc, key, Op::Delete, {}); }

const LogEntry& GeoStore::write(DcId dc, const Key& key, Op op, Point point) {
    DcReplica& r = replicas_.at(dc);
    LogEntry e;
    e.origin = dc;
    e.seq = r.heads_.get(dc) + 1;
    e.op = op;
    e.key = key;
    e.attrs = std::move(point);
    e.ts = sim_.now();
    if (const ObjectVersion* prev = r.find(key)) {
        // A local write always overwrites what the writer sees.
        if (prev->stamp >= e.stamp()) e.ts = prev->stamp.ts + 1;
        if (!prev->deleted) e.superseded = prev->stamp;
    }
    r.append(e);
    const LogEntry& stored = r.log_.back();
    auto shared = std::make_shared<const LogEntry>(stored);
    for (std::size_t other = 0; other < replicas_.size(); ++other) {
        if (other == dc) continue;
        bus_.send(nodes_[dc], nodes_[other], "replicate", stored.describe(), shared);
    }
    notify(dc);
    return stored;
}

std::optional<ObjectVersion> GeoStore::get(DcId dc, const Key& key) const {
    return replicas_.at(dc).get(key);
}

ApplyResult GeoStore::apply_remote(DcId dc, const LogEntry& entry) {
    DcReplica& r = replicas_.at(dc);
    if (entry.seq <= r.heads_.get(entry.origin)) return ApplyResult::Duplicate;
    auto& pending = r.pending_[entry.origin];
    if (entry.seq != r.heads_.get(entry.origin) + 1) {
        pending.emplace(entry.seq, entry);
        return ApplyResult::Buffered;
    }
    r.append(entry);
    while (!pending.empty()) {
        auto it = pending.begin();
        if (it->first <= r.heads_.get(entry.origin)) {
            pending.erase(it);
            continue;
        }
        if (it->first != r.heads_.get(entry.origin) + 1) break;
        r.append(std::move(it->second));
        pending.erase(it);
    }
    notify(dc);
    return ApplyResult::Applied;
}

void GeoStore::notify(DcId dc) {
    // Copy callbacks first; a subscriber may subscribe or unsubscribe.
    std::vector<std::function<void()>> callbacks;
    for (const auto& [_, s] : subscriptions_) {
        if (s.dc == dc && s.notify) callbacks.push_back(s.notify);
    }
    for (auto& cb : callbacks) cb();
}

SubscriptionId GeoStore::subscribe(DcId dc, const VectorClock& from, std::function<void()> notify) {
    const DcReplica& r = replicas_.at(dc);
    if (!r.heads_.dominates(from)) {
        throw sim::RejectedError("subscription start " + from.to_string() + " is ahead of " +
                                 dc_name(dc) + " heads " + r.heads_.to_string());
    }
    const SubscriptionId id = next_subscription_++;
    subscriptions_.emplace(id, Subscription{dc, from, 0, std::move(notify)});
    return id;
}

std::vector<const LogEntry*> GeoStore::poll(SubscriptionId id) {
    auto& s = subscriptions_.at(id);
    const DcReplica& r = replicas_.at(s.dc);
    std::vector<const LogEntry*> out;
    for (; s.cursor < r.log_.size(); ++s.cursor) {
        const LogEntry& e = r.log_[s.cursor];
        if (e.seq <= s.from.get(e.origin)) continue;
        out.push_back(&e);
    }
    return out;
}

void GeoStore::unsubscribe(SubscriptionId id) { subscriptions_.erase(id); }

bool GeoStore::converged() const {
    for (std::size_t i = 1; i < replicas_.size(); ++i) {
        if (replicas_[i].objects_ != replicas_[0].objects_) return false;
    }
    return true;
}

}  // namespace geoidx::store
