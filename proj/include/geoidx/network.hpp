#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "geoidx/qpu.hpp"
#include "geoidx/query.hpp"
#include "geoidx/router.hpp"

namespace geoidx::qpu {

struct NodeSpec {
    std::string name;
    DcId dc = 0;
    Role role = Role::Internal;
    Dispatch dispatch = Dispatch::Value;
    Region region;
    std::vector<std::string> parents;
    std::optional<std::set<DcId>> scope;
};

struct Topology {
    std::vector<NodeSpec> nodes;

    /// One history leaf per DC over the whole domain.
    static Topology single(const Schema& schema, std::size_t dcs);
    /// Per DC a value-dispatch root over `partitions` slices of the first
    /// axis, one history leaf per slice.
    static Topology value_grid(const Schema& schema, std::size_t dcs, std::size_t partitions);
    /// Per DC a value-dispatch root over `partitions` slices; each slice has
    /// a DC-dispatch node whose children are the freshness nodes (history and
    /// live leaf pair) of that slice at every DC.
    static Topology fig2(const Schema& schema, std::size_t dcs, std::size_t partitions);
};

/// Equal slices of the first axis.
std::vector<Region> slice_first_axis(const Schema& schema, std::size_t parts);

struct NetworkConfig {
    /// Leaves index writes from every DC; otherwise only their own DC's.
    bool index_replication = true;
    ReplMode initial_mode = ReplMode::LogReplay;
    SwitchPolicy switching;
    SplitPolicy split;
    index::Binning binning;
    Tick gossip_period = 10;
    Tick ingest_delay = 1;
    /// 0 disables periodic scrubbing.
    Tick scrub_period = 0;
    std::size_t cache_capacity = 256;
};

struct QueryStats {
    std::size_t qpus_visited = 0;
    std::size_t cache_hits = 0;
    std::size_t candidate_checked = 0;
    std::size_t false_positives_removed = 0;
    Tick ticks_elapsed = 0;
};

struct QueryResult {
    std::uint64_t id = 0;
    query::Query query;
    std::set<Key> keys;
    VectorClock target;
    VectorClock clock;
    QueryStats stats;
    Tick issued = 0;
    Tick completed = 0;
    std::map<DcId, Seq> lag;
    std::string trace;
    std::optional<std::string> error;
    /// DCs a leaf could not catch up on, when error is set for that reason.
    std::set<DcId> lagging;
};

struct ModeSwitch {
    Tick tick = 0;
    std::string qpu;
    ReplMode from = ReplMode::LogReplay;
    ReplMode to = ReplMode::LogReplay;
    double selectivity = 0.0;
};

struct NetworkCounters {
    std::uint64_t pushes = 0;
    std::uint64_t cache_entries_pushed = 0;
    std::uint64_t cache_fills = 0;
    std::uint64_t peer_messages = 0;
    std::uint64_t entries_ingested = 0;
    std::uint64_t splits = 0;
    std::uint64_t merges = 0;
    std::uint64_t split_refusals = 0;
};

/// The QPU network layered over a GeoStore. Every QPU is a bus node; queries,
/// clock gossip, cache pushes and peer index deltas travel as ordered
/// messages through the simulated network.
class Network {
public:
    using Callback = std::function<void(const QueryResult&)>;

    /// Throws TopologyError when the topology is malformed or leaves part of
    /// some region uncovered.
    Network(sim::Simulator& sim, sim::Bus& bus, store::GeoStore& store, const Topology& topology,
            NetworkConfig config);
    ~Network();

    Network(const Network&) = delete;
    Network& operator=(const Network&) = delete;

    /// Issues q from the client at q.origin. The target defaults to the one
    /// resolved from q.level; passing one pins it.
    std::uint64_t submit(const query::Query& q, Callback done = {},
                         std::optional<VectorClock> target = std::nullopt);
    /// submit, then runs the simulation until the answer arrives. Throws
    /// UnsatisfiableError when a leaf could not reach the target.
    QueryResult route(const query::Query& q, std::optional<VectorClock> target = std::nullopt);
    std::size_t in_flight() const { return queries_.size(); }

    SnapshotReport snapshot_report(DcId origin) const;
    VectorClock resolve(const StalenessLevel& level, DcId origin) const;

    /// Pulls entries up to target from the local replica log into a history
    /// leaf. Throws UnsatisfiableError naming the DCs the replica lags on.
    std::size_t catch_up(QpuId leaf, const VectorClock& target);

    /// Scrubs every history leaf against its local replica.
    std::size_t scrub_all();
    std::size_t scrub(QpuId leaf);

    /// Splits a history leaf; returns the two halves. Throws SplitRefused.
    std::pair<QpuId, QpuId> split(QpuId leaf);
    /// Merges two history leaves under one value-dispatch parent whose
    /// regions form a rectangle. With enforce_thresholds the split policy's
    /// size preconditions apply too. Throws SplitRefused.
    QpuId merge_siblings(QpuId a, QpuId b, bool enforce_thresholds = false);

    void set_mode(QpuId leaf, ReplMode mode);

    const Qpu& qpu(QpuId id) const { return *qpus_.at(id); }
    std::optional<QpuId> find(const std::string& name) const;
    /// Alive QPUs, optionally filtered by role and DC.
    std::vector<QpuId> qpus(std::optional<Role> role = std::nullopt, std::optional<DcId> dc = std::nullopt) const;
    std::optional<QpuId> root(DcId dc) const;
    VectorClock stable(QpuId id) const;

    const std::vector<ModeSwitch>& mode_switches() const { return switches_; }
    const NetworkCounters& counters() const { return counters_; }
    const NetworkConfig& config() const { return config_; }
    const Schema& schema() const { return store_.schema(); }
    store::GeoStore& store() { return store_; }

    /// One line per QPU, depth-first from the roots.
    std::string describe() const;
    /// The live QPUs as a topology that rebuilds the current tree.
    Topology topology() const;

private:
    struct Visit {
        std::optional<std::size_t> parent;
        std::string node;
        std::string line;
    };
    struct PendingQuery {
        query::Query query;
        VectorClock target;
        bool current = false;
        Tick issued = 0;
        std::size_t outstanding = 0;
        PartialResult acc;
        bool have_clock = false;
        std::vector<Visit> visits;
        std::optional<std::string> error;
        std::set<DcId> lagging;
        QueryStats stats;
        Callback done;
        std::map<DcId, Seq> lag;
    };
    struct PendingVisit {
        std::uint64_t qid = 0;
        std::size_t visit = 0;
        QpuId node = 0;
        sim::NodeId reply_to = 0;
        std::uint64_t reply_key = 0;
        Region rect;
        VectorClock target;
        bool current = false;
        std::size_t outstanding = 0;
        PartialResult acc;
        std::vector<std::pair<std::set<DcId>, VectorClock>> clocks;
        std::vector<index::IndexDelta> pushes;
        std::optional<std::string> error;
        std::set<DcId> lagging;
        std::string head;
        std::string decision;
    };

    struct SubQueryMsg;
    struct PartialMsg;
    struct ClockMsg;
    struct PushMsg;
    struct PeerSubscribeMsg;
    struct PeerDataMsg;

    QpuId add_qpu(const std::string& name, DcId dc, Role role, Dispatch dispatch, Region region);
    void validate_and_link(const Topology& topology);
    void compute_scope(QpuId id);
    void start_leaf(Qpu& q);
    void stop_leaf(Qpu& q);
    void install_handler(Qpu& q);

    void on_message(QpuId id, const sim::Envelope& env);
    void on_client(DcId dc, const sim::Envelope& env);
    void on_subquery(Qpu& q, const sim::Envelope& env);
    void on_partial(Qpu& q, const sim::Envelope& env);
    void on_clock(Qpu& q, const sim::Envelope& env);
    void on_push(Qpu& q, const sim::Envelope& env);
    void on_peer_subscribe(Qpu& q, const sim::Envelope& env);
    void on_peer_data(Qpu& q, const sim::Envelope& env);

    void send_subquery(sim::NodeId from, std::uint64_t reply_key, const Qpu& to, std::uint64_t qid,
                       std::optional<std::size_t> parent_visit, const Region& rect, const VectorClock& target,
                       bool current, bool catch_up, std::optional<VectorClock> live_from);
    void reply(const Qpu& q, sim::NodeId to, std::uint64_t qid, std::uint64_t reply_key, PartialResult result,
               std::optional<std::string> error, std::set<DcId> lagging);
    void finish_visit(Qpu& q, std::uint64_t visit_key);
    void complete_query(std::uint64_t qid);

    PartialResult serve_history(Qpu& q, const Region& rect, const VectorClock& target, bool current,
                                bool catch_up);
    PartialResult serve_live(Qpu& q, const Region& rect, const VectorClock& from, const VectorClock& target);

    void schedule_drain(QpuId id);
    void drain(QpuId id);
    void apply_entry(Qpu& q, const store::LogEntry& e, index::IndexDelta& all, index::IndexDelta& own);
    void push_up(const Qpu& q, const index::IndexDelta& delta);
    void publish(Qpu& q, const index::IndexDelta& own);
    void refresh_peers();
    void recompute_peer_clock(Qpu& q);
    void maybe_switch(Qpu& q);
    void maybe_resize(QpuId id);

    void gossip_tick();
    void scrub_tick();
    VectorClock report_clock(const Qpu& q) const;

    sim::Simulator& sim_;
    sim::Bus& bus_;
    store::GeoStore& store_;
    NetworkConfig config_;
    std::vector<std::unique_ptr<Qpu>> qpus_;
    std::map<std::string, QpuId> by_name_;
    std::map<sim::NodeId, QpuId> by_node_;
    std::vector<sim::NodeId> clients_;
    std::map<std::uint64_t, PendingQuery> queries_;
    std::map<std::uint64_t, PendingVisit> visits_;
    std::uint64_t next_query_ = 1;
    std::uint64_t next_visit_key_ = 1;
    std::vector<ModeSwitch> switches_;
    NetworkCounters counters_;
    std::set<QpuId> resize_pending_;
    /// Object count at which an automatic resize last failed, per leaf.
    std::map<QpuId, std::size_t> refused_;
    std::shared_ptr<bool> alive_;
};

}  // namespace geoidx::qpu
