#pragma once

#include <compare>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "geoidx/clock.hpp"
#include "geoidx/sim.hpp"
#include "geoidx/value.hpp"

namespace geoidx::store {

/// Write stamp. Ordered by (ts, origin, seq); the last component only breaks
/// ties between writes of one DC within a tick.
struct Stamp {
    Tick ts = 0;
    DcId origin = 0;
    Seq seq = 0;

    auto operator<=>(const Stamp&) const = default;
    std::string to_string() const;
};

enum class Op { Put, Delete };

struct ObjectVersion {
    Key key;
    Point attrs;
    Stamp stamp;
    bool deleted = false;

    bool operator==(const ObjectVersion&) const = default;
};

struct LogEntry {
    DcId origin = 0;
    Seq seq = 0;
    Op op = Op::Put;
    Key key;
    Point attrs;
    Tick ts = 0;
    /// Stamp of the version this write overwrote at the writing replica.
    std::optional<Stamp> superseded;

    Stamp stamp() const { return Stamp{ts, origin, seq}; }
    ObjectVersion version() const { return ObjectVersion{key, attrs, stamp(), op == Op::Delete}; }
    std::string describe() const;
};

/// Larger stamp wins. Throws std::logic_error on a key mismatch.
ObjectVersion lww_merge(const ObjectVersion& a, const ObjectVersion& b);

enum class ApplyResult { Applied, Duplicate, Buffered };

using SubscriptionId = std::uint64_t;

/// One DC's full replica: objects, the local log in apply order, and the
/// contiguous per-origin prefix applied so far.
class DcReplica {
public:
    explicit DcReplica(DcId id) : id_(id) {}

    DcId id() const { return id_; }
    const std::map<Key, ObjectVersion>& objects() const { return objects_; }
    const std::deque<LogEntry>& log() const { return log_; }
    const VectorClock& heads() const { return heads_; }

    /// Live version, or nullopt when never written or deleted.
    std::optional<ObjectVersion> get(const Key& key) const;
    /// Current version including tombstones.
    const ObjectVersion* find(const Key& key) const;

    /// Entry (origin, seq); requires seq <= heads[origin].
    const LogEntry& entry(DcId origin, Seq seq) const;

private:
    friend class GeoStore;

    void append(LogEntry e);

    DcId id_;
    std::map<Key, ObjectVersion> objects_;
    std::deque<LogEntry> log_;
    VectorClock heads_;
    std::map<DcId, std::vector<std::size_t>> positions_;
    std::map<DcId, std::map<Seq, LogEntry>> pending_;
};

/// Weakly consistent, fully replicated object store. Writes are served by
/// the local replica, logged, and propagated to the other DCs over the bus.
class GeoStore {
public:
    GeoStore(sim::Simulator& sim, sim::Bus& bus, std::shared_ptr<const Schema> schema,
             std::size_t dc_count);

    GeoStore(const GeoStore&) = delete;
    GeoStore& operator=(const GeoStore&) = delete;

    /// Throws SchemaError without appending anything if attrs do not conform.
    const LogEntry& put(DcId dc, const Key& key, const Attrs& attrs);
    const LogEntry& put(DcId dc, const Key& key, Point point);
    const LogEntry& remove(DcId dc, const Key& key);

    std::optional<ObjectVersion> get(DcId dc, const Key& key) const;

    ApplyResult apply_remote(DcId dc, const LogEntry& entry);

    /// Replays entries after `from` in log order on the first poll, then
    /// every later applied entry once. `notify` runs after each append.
    /// Throws sim::RejectedError if from is ahead of the replica heads.
    SubscriptionId subscribe(DcId dc, const VectorClock& from, std::function<void()> notify = {});
    std::vector<const LogEntry*> poll(SubscriptionId id);
    void unsubscribe(SubscriptionId id);

    const DcReplica& replica(DcId dc) const { return replicas_.at(dc); }
    std::size_t dc_count() const { return replicas_.size(); }
    const Schema& schema() const { return *schema_; }
    std::shared_ptr<const Schema> schema_ptr() const { return schema_; }
    sim::NodeId node(DcId dc) const { return nodes_.at(dc); }

    /// All replicas hold identical objects maps.
    bool converged() const;

private:
    struct Subscription {
        DcId dc = 0;
        VectorClock from;
        std::size_t cursor = 0;
        std::function<void()> notify;
    };

    const LogEntry& write(DcId dc, const Key& key, Op op, Point point);
    void apply(DcReplica& r, const LogEntry& e);
    void notify(DcId dc);

    sim::Simulator& sim_;
    sim::Bus& bus_;
    std::shared_ptr<const Schema> schema_;
    std::vector<DcReplica> replicas_;
    std::vector<sim::NodeId> nodes_;
    std::map<SubscriptionId, Subscription> subscriptions_;
    SubscriptionId next_subscription_ = 1;
};

}  // namespace geoidx::store
