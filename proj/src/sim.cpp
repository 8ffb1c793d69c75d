#include "geoidx/sim.hpp"

#include <algorithm>
#include <sstream>

namespace geoidx::sim {

LivelockError::LivelockError(std::size_t queue_size, Tick limit)
    : Error("simulation not quiescent at tick limit " + std::to_string(limit) + " (" +
            std::to_string(queue_size) + " events queued)"),
      queue_size_(queue_size) {}

void Simulator::at(Tick when, std::function<void()> fn) {
    push(std::max(when, now_), current_background_, std::move(fn));
}

void Simulator::at_background(Tick when, std::function<void()> fn) {
    push(std::max(when, now_), true, std::move(fn));
}

void Simulator::push(Tick when, bool background, std::function<void()> fn) {
    queue_.push_back(Event{when, next_seq_++, background, std::move(fn)});
    std::push_heap(queue_.begin(), queue_.end(), Later{});
    if (!background) ++foreground_;
}

void Simulator::step() {
    std::pop_heap(queue_.begin(), queue_.end(), Later{});
    Event ev = std::move(queue_.back());
    queue_.pop_back();
    if (!ev.background) --foreground_;
    now_ = std::max(now_, ev.at);
    const bool saved = current_background_;
    current_background_ = ev.background;
    ++executed_;
    ev.fn();
    current_background_ = saved;
}

Tick Simulator::run_until_quiescent(Tick limit) {
    while (foreground_ > 0) {
        if (queue_.front().at > limit) throw LivelockError(queue_.size(), limit);
        step();
    }
    return now_;
}

void Simulator::run_until(Tick t) {
    while (!queue_.empty() && queue_.front().at <= t) step();
    now_ = std::max(now_, t);
}

bool Simulator::run_until(const std::function<bool()>& done, Tick limit) {
    while (!done()) {
        if (queue_.empty() || queue_.front().at > limit) return false;
        step();
    }
    return true;
}

void NetConfig::validate() const {
    if (dup_prob < 0.0 || dup_prob > 1.0) throw Error("dup_prob must lie in [0, 1]");
    if (min_delay > max_delay) throw Error("min_delay must not exceed max_delay");
    for (const auto& w : partitions) {
        if (w.start > w.end) throw Error("partition window ends before it starts");
    }
}

Bus::Bus(Simulator& sim, NetConfig config) : sim_(sim), config_(std::move(config)) {
    config_.validate();
}

NodeId Bus::add_node(std::string name, DcId dc, Handler handler) {
    nodes_.push_back(Node{std::move(name), dc, std::move(handler), true});
    return static_cast<NodeId>(nodes_.size() - 1);
}

void Bus::set_handler(NodeId node, Handler handler) { nodes_.at(node).handler = std::move(handler); }

void Bus::remove_node(NodeId node) { nodes_.at(node).alive = false; }

bool Bus::has_node(NodeId node) const { return node < nodes_.size(); }

bool Bus::alive(NodeId node) const { return has_node(node) && nodes_[node].alive; }

const std::string& Bus::name(NodeId node) const { return nodes_.at(node).name; }

DcId Bus::dc_of(NodeId node) const { return nodes_.at(node).dc; }

void Bus::add_partition(PartitionWindow w) {
    if (w.start > w.end) throw Error("partition window ends before it starts");
    config_.partitions.push_back(w);
}

bool Bus::link_blocked(DcId a, DcId b, Tick t) const {
    for (const auto& w : config_.partitions) {
        const bool same = (w.a == a && w.b == b) || (w.a == b && w.b == a);
        if (same && w.start <= t && t < w.end) return true;
    }
    return false;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace

std::mt19937_64& Bus::link_rng(NodeId src, NodeId dst) {
    auto it = link_rng_.find({src, dst});
    if (it == link_rng_.end()) {
        const std::uint64_t a = fnv1a(nodes_[src].name);
        const std::uint64_t b = fnv1a(nodes_[dst].name);
        std::seed_seq seq{static_cast<std::uint32_t>(config_.seed), static_cast<std::uint32_t>(config_.seed >> 32),
                          static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                          static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
        it = link_rng_.emplace(std::make_pair(src, dst), std::mt19937_64(seq)).first;
    }
    return it->second;
}

Tick Bus::draw_delay(std::mt19937_64& rng, DcId from, DcId to) {
    if (from == to) return config_.local_delay;
    Tick delay = std::uniform_int_distribution<Tick>(config_.min_delay, config_.max_delay)(rng);
    if (config_.reorder_jitter > 0) {
        delay += std::uniform_int_distribution<Tick>(0, config_.reorder_jitter)(rng);
    }
    return delay;
}

Tick Bus::hold_for_partitions(DcId from, DcId to, Tick deliver_at) const {
    if (from == to) return deliver_at;
    bool moved = true;
    while (moved) {
        moved = false;
        for (const auto& w : config_.partitions) {
            const bool same = (w.a == from && w.b == to) || (w.a == to && w.b == from);
            if (same && w.start <= deliver_at && deliver_at < w.end) {
                deliver_at = w.end;
                moved = true;
            }
        }
    }
    return deliver_at;
}

void Bus::schedule(Envelope env) {
    if (!has_node(env.dst)) throw RejectedError("unknown destination node " + std::to_string(env.dst));
    if (!has_node(env.src)) throw RejectedError("unknown source node " + std::to_string(env.src));
    const DcId from = nodes_[env.src].dc;
    const DcId to = nodes_[env.dst].dc;
    env.sent_at = sim_.now();
    ++sent_;
    if (from != to) ++cross_dc_;

    auto& rng = link_rng(env.src, env.dst);
    const bool duplicate =
        from != to && config_.dup_prob > 0.0 &&
        std::uniform_real_distribution<double>(0.0, 1.0)(rng) < config_.dup_prob;

    env.deliver_at = hold_for_partitions(from, to, env.sent_at + draw_delay(rng, from, to));
    if (duplicate) {
        Envelope copy = env;
        copy.deliver_at = hold_for_partitions(from, to, env.sent_at + draw_delay(rng, from, to));
        enqueue(std::move(copy));
    }
    enqueue(std::move(env));
}

void Bus::enqueue(Envelope env) {
    const Tick when = env.deliver_at;
    sim_.at(when, [this, e = std::move(env)]() mutable { deliver(std::move(e)); });
}

void Bus::send(NodeId src, NodeId dst, std::string kind, std::string detail, std::any payload) {
    Envelope env;
    env.src = src;
    env.dst = dst;
    env.kind = std::move(kind);
    env.detail = std::move(detail);
    env.payload = std::move(payload);
    schedule(std::move(env));
}

void Bus::send_ordered(NodeId src, NodeId dst, std::string kind, std::string detail,
                       std::any payload) {
    const std::uint64_t seq = ++outbound_seq_[{src, dst}];
    send(src, dst, std::move(kind), std::move(detail), Frame{seq, std::move(payload)});
}

void Bus::deliver(Envelope env) {
    if (tracing_) {
        trace_.push_back(TraceRow{sim_.now(), nodes_[env.src].name, nodes_[env.dst].name, env.kind,
                                  env.detail});
    }
    if (!nodes_[env.dst].alive) return;
    auto* frame = std::any_cast<Frame>(&env.payload);
    if (!frame) {
        dispatch(env);
        return;
    }
    auto& link = inbound_[{env.src, env.dst}];
    const std::uint64_t seq = frame->seq;
    if (seq < link.expected || link.held.count(seq)) return;
    link.held.emplace(seq, std::move(env));
    while (!link.held.empty() && link.held.begin()->first == link.expected) {
        Envelope next = std::move(link.held.begin()->second);
        link.held.erase(link.held.begin());
        ++link.expected;
        std::any inner = std::move(std::any_cast<Frame&>(next.payload).inner);
        next.payload = std::move(inner);
        dispatch(next);
        if (!nodes_[next.dst].alive) break;
    }
}

void Bus::dispatch(const Envelope& env) {
    // Handlers may add nodes, so call a copy.
    const Handler handler = nodes_[env.dst].handler;
    if (handler) handler(env);
}

std::string Bus::trace_csv() const {
    std::ostringstream os;
    os << "tick,src,dst,kind,detail\n";
    for (const auto& r : trace_) {
        std::string detail = r.detail;
        std::replace(detail.begin(), detail.end(), ',', ';');
        os << r.tick << ',' << r.src << ',' << r.dst << ',' << r.kind << ',' << detail << '\n';
    }
    return os.str();
}

}  // namespace geoidx::sim
