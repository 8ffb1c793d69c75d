#pragma once

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "geoidx/clock.hpp"
#include "geoidx/crdt_index.hpp"
#include "geoidx/region.hpp"
#include "geoidx/sim.hpp"
#include "geoidx/store.hpp"

namespace geoidx::qpu {

using QpuId = std::uint32_t;
using index::Stamp;

enum class Role { Internal, History, Live };
enum class Dispatch { Value, Dc, Freshness };
enum class ReplMode { LogReplay, IndexDelta };

const char* to_string(Role r);
const char* to_string(Dispatch d);
const char* to_string(ReplMode m);
Role parse_role(const std::string& s);
Dispatch parse_dispatch(const std::string& s);
ReplMode parse_mode(const std::string& s);

class UnsatisfiableError : public Error {
public:
    explicit UnsatisfiableError(std::set<DcId> lagging, const std::string& detail);
    const std::set<DcId>& lagging() const { return lagging_; }

private:
    std::set<DcId> lagging_;
};

class SplitRefused : public Error {
public:
    using Error::Error;
};

class TopologyError : public Error {
public:
    using Error::Error;
};

struct SplitPolicy {
    std::size_t t_split = 1000;
    std::size_t t_merge = 100;
    bool automatic = false;
    /// "internal": the split leaf becomes a value-dispatch node over its two
    /// halves. "replace": the halves take its place under its parent.
    std::string mode = "internal";

    void validate() const;
};

struct SwitchPolicy {
    std::size_t window = 1000;
    double theta_low = 0.05;
    double theta_high = 0.15;
    bool adaptive = false;

    void validate() const;
};

/// One version as carried in query results.
struct Item {
    Key key;
    Point point;

    bool operator==(const Item&) const = default;
};

/// Versions plus the tombstone effects known for them, and the clock up to
/// which the producer's view is complete.
struct PartialResult {
    std::map<Stamp, Item> items;
    std::map<Stamp, index::Effects> removed;
    VectorClock clock;

    /// Union of items, pointwise minimum of effects. Clocks are not touched.
    void merge(const PartialResult& other);
    void add_effect(const Stamp& tag, DcId origin, Seq seq);
    bool visible(const Stamp& tag, const index::Visibility& vis) const;
    /// Items whose point lies in rect, with their effects.
    PartialResult restricted(const Region& rect) const;
};

/// Per-QPU cache of sub-query results keyed on the rectangle. An entry
/// filled at target F holds every version in its rectangle that was visible
/// at F and written by an entry within its clock; it can therefore answer
/// targets that dominate F. Entries filled with current visibility answer
/// only current-visibility probes.
class ResultCache {
public:
    struct Entry {
        Region rect;
        PartialResult data;
        bool current = false;
        VectorClock fill_target;
        Tick last_use = 0;
        std::uint64_t order = 0;
    };

    explicit ResultCache(std::size_t capacity = 256) : capacity_(capacity) {}

    /// On a hit returns the entry data restricted to sub, with the entry clock.
    std::optional<PartialResult> probe(const Region& sub, const VectorClock& target, bool current,
                                       const std::set<DcId>& scope, Tick now);
    void fill(Region rect, PartialResult data, bool current, VectorClock fill_target, Tick now);
    /// Applies a delta in place; returns the number of entries it changed.
    std::size_t push(const index::IndexDelta& delta);
    /// Raises every entry clock to at least c.
    void advance(const VectorClock& c);

    std::size_t size() const { return entries_.size(); }
    std::size_t capacity() const { return capacity_; }
    const std::vector<Entry>& entries() const { return entries_; }
    void clear() { entries_.clear(); }

private:
    std::size_t capacity_;
    std::vector<Entry> entries_;
    std::uint64_t next_order_ = 0;
};

/// Relevance bits of the last W observed log entries.
class SelectivityWindow {
public:
    explicit SelectivityWindow(std::size_t size = 1000) : size_(size) {}

    void record(bool relevant);
    bool full() const { return bits_.size() >= size_; }
    double selectivity() const;
    void clear();
    std::size_t size() const { return size_; }

private:
    std::size_t size_;
    std::deque<bool> bits_;
    std::size_t relevant_ = 0;
};

/// Mode decision with hysteresis; nullopt keeps the current mode.
std::optional<ReplMode> decide_mode(ReplMode current, double selectivity, const SwitchPolicy& p);

/// A node of the QPU network. Leaves (History) own an index fed from the
/// local replica log; Live leaves scan the log tail at query time; internal
/// nodes dispatch sub-queries and cache results.
struct Qpu {
    QpuId id = 0;
    std::string name;
    DcId dc = 0;
    Role role = Role::Internal;
    Dispatch dispatch = Dispatch::Value;
    Region region;
    std::set<DcId> scope;
    std::vector<QpuId> parents;
    std::vector<QpuId> children;
    sim::NodeId node = 0;
    bool alive = true;

    // History leaves.
    std::unique_ptr<index::CrdtIndex> index;
    VectorClock clock;
    ReplMode mode = ReplMode::LogReplay;
    std::optional<store::SubscriptionId> feed;
    bool drain_scheduled = false;
    SelectivityWindow window;
    std::uint64_t peer_epoch = 0;
    std::map<QpuId, Seq> peer_watermarks;
    std::map<QpuId, std::uint64_t> subscribers;
    std::map<QpuId, Seq> sent_watermark;

    // Internal nodes: last clock reported by each child.
    std::map<QpuId, VectorClock> known;
    ResultCache cache;
    VectorClock last_gossip;
    bool gossiped = false;

    bool leaf() const { return role != Role::Internal; }
};

}  // namespace geoidx::qpu
