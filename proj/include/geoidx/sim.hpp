#pragma once

#include <any>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "geoidx/value.hpp"

namespace geoidx::sim {

inline constexpr Tick kNoLimit = std::numeric_limits<Tick>::max();

class LivelockError : public Error {
public:
    LivelockError(std::size_t queue_size, Tick limit);
    std::size_t queue_size() const { return queue_size_; }

private:
    std::size_t queue_size_;
};

class RejectedError : public Error {
public:
    using Error::Error;
};

/// Single-threaded discrete-event loop over logical ticks. Events run in
/// (tick, insertion sequence) order. Background events (periodic gossip,
/// scrubbing) and everything they schedule do not keep the simulation from
/// being quiescent.
class Simulator {
public:
    explicit Simulator(std::uint64_t seed = 1) : rng_(seed) {}

    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    Tick now() const { return now_; }

    /// Schedules fn at `when` (clamped to now). Inherits the background flag
    /// of the currently executing event.
    void at(Tick when, std::function<void()> fn);
    void after(Tick delay, std::function<void()> fn) { at(now_ + delay, std::move(fn)); }
    void at_background(Tick when, std::function<void()> fn);

    /// Runs until no foreground events remain. Throws LivelockError if the
    /// next foreground work lies beyond `limit`.
    Tick run_until_quiescent(Tick limit = kNoLimit);

    /// Runs every event with tick <= t, then sets the clock to t.
    void run_until(Tick t);

    /// Runs until done() holds. Returns false if the queue drains or the next
    /// event lies beyond `limit` first.
    bool run_until(const std::function<bool()>& done, Tick limit = kNoLimit);

    std::size_t pending() const { return queue_.size(); }
    std::size_t pending_foreground() const { return foreground_; }
    bool in_background() const { return current_background_; }

    std::mt19937_64& rng() { return rng_; }
    std::uint64_t executed() const { return executed_; }

private:
    struct Event {
        Tick at = 0;
        std::uint64_t seq = 0;
        bool background = false;
        std::function<void()> fn;
    };
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            return a.at != b.at ? a.at > b.at : a.seq > b.seq;
        }
    };

    void push(Tick when, bool background, std::function<void()> fn);
    void step();

    std::vector<Event> queue_;
    Tick now_ = 0;
    std::uint64_t next_seq_ = 0;
    std::size_t foreground_ = 0;
    bool current_background_ = false;
    std::uint64_t executed_ = 0;
    std::mt19937_64 rng_;
};

using NodeId = std::uint32_t;

/// Blocks the link between DCs a and b for ticks in [start, end).
struct PartitionWindow {
    Tick start = 0;
    Tick end = 0;
    DcId a = 0;
    DcId b = 0;
};

struct NetConfig {
    std::uint64_t seed = 1;
    Tick min_delay = 1;
    Tick max_delay = 10;
    double dup_prob = 0.0;
    Tick reorder_jitter = 0;
    /// Fixed latency of intra-DC links, which never duplicate or reorder.
    Tick local_delay = 1;
    std::vector<PartitionWindow> partitions;

    void validate() const;
};

struct Envelope {
    NodeId src = 0;
    NodeId dst = 0;
    Tick sent_at = 0;
    Tick deliver_at = 0;
    std::string kind;
    std::string detail;
    std::any payload;
};

struct TraceRow {
    Tick tick = 0;
    std::string src;
    std::string dst;
    std::string kind;
    std::string detail;
};

/// Unreliable inter-DC message bus. Cross-DC messages get a seeded delay in
/// [min_delay, max_delay] plus up to reorder_jitter, may be duplicated, and
/// are held while their link is partitioned. send_ordered layers a per-link
/// sequence number on top so the receiver sees each message once, in order.
class Bus {
public:
    using Handler = std::function<void(const Envelope&)>;

    Bus(Simulator& sim, NetConfig config);

    NodeId add_node(std::string name, DcId dc, Handler handler = {});
    void set_handler(NodeId node, Handler handler);
    /// Messages still in flight to a removed node are dropped on arrival.
    void remove_node(NodeId node);
    bool has_node(NodeId node) const;
    bool alive(NodeId node) const;
    const std::string& name(NodeId node) const;
    DcId dc_of(NodeId node) const;

    /// Draws the delivery tick and enqueues env (and maybe a duplicate).
    /// Throws RejectedError for an unknown destination.
    void schedule(Envelope env);

    void send(NodeId src, NodeId dst, std::string kind, std::string detail, std::any payload);
    void send_ordered(NodeId src, NodeId dst, std::string kind, std::string detail,
                      std::any payload);

    void add_partition(PartitionWindow w);
    bool link_blocked(DcId a, DcId b, Tick t) const;

    const NetConfig& config() const { return config_; }

    void set_tracing(bool on) { tracing_ = on; }
    const std::vector<TraceRow>& trace() const { return trace_; }
    /// "tick,src,dst,kind,detail" rows with a header line.
    std::string trace_csv() const;

    std::uint64_t messages_sent() const { return sent_; }
    std::uint64_t cross_dc_messages() const { return cross_dc_; }

private:
    struct Node {
        std::string name;
        DcId dc = 0;
        Handler handler;
        bool alive = true;
    };
    struct Frame {
        std::uint64_t seq = 0;
        std::any inner;
    };
    struct InboundLink {
        std::uint64_t expected = 1;
        std::map<std::uint64_t, Envelope> held;
    };

    /// Each directed link draws from its own stream seeded by the node names,
    /// so traffic on one link never perturbs delays on another.
    std::mt19937_64& link_rng(NodeId src, NodeId dst);
    Tick draw_delay(std::mt19937_64& rng, DcId from, DcId to);
    Tick hold_for_partitions(DcId from, DcId to, Tick deliver_at) const;
    void enqueue(Envelope env);
    void deliver(Envelope env);
    void dispatch(const Envelope& env);

    Simulator& sim_;
    NetConfig config_;
    std::vector<Node> nodes_;
    std::map<std::pair<NodeId, NodeId>, std::uint64_t> outbound_seq_;
    std::map<std::pair<NodeId, NodeId>, std::mt19937_64> link_rng_;
    std::map<std::pair<NodeId, NodeId>, InboundLink> inbound_;
    bool tracing_ = false;
    std::vector<TraceRow> trace_;
    std::uint64_t sent_ = 0;
    std::uint64_t cross_dc_ = 0;
};

}  // namespace geoidx::sim
