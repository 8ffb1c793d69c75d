#include "geoidx/network.hpp"

#include <algorithm>
#include <sstream>

namespace geoidx::qpu {

struct Network::SubQueryMsg {
    std::uint64_t qid = 0;
    std::uint64_t reply_key = 0;
    std::size_t visit = 0;
    Region rect;
    VectorClock target;
    bool current = false;
    bool catch_up = true;
    std::optional<VectorClock> live_from;
};

struct Network::PartialMsg {
    std::uint64_t qid = 0;
    std::uint64_t reply_key = 0;
    PartialResult result;
    std::set<DcId> scope;
    std::optional<std::string> error;
    std::set<DcId> lagging;
};

struct Network::ClockMsg {
    VectorClock clock;
};

struct Network::PushMsg {
    index::IndexDelta delta;
};

struct Network::PeerSubscribeMsg {
    std::uint64_t epoch = 0;
    QpuId subscriber = 0;
    bool subscribe = true;
};

struct Network::PeerDataMsg {
    std::uint64_t epoch = 0;
    QpuId publisher = 0;
    index::IndexDelta delta;
    Seq watermark = 0;
};

namespace {

std::set<DcId> all_dcs(std::size_t n) {
    std::set<DcId> s;
    for (std::size_t i = 0; i < n; ++i) s.insert(static_cast<DcId>(i));
    return s;
}

VectorClock clock_min(const VectorClock& a, const VectorClock& b) { return stable_snapshot({a, b}); }

void append(index::IndexDelta& into, const index::IndexDelta& d) {
    into.adds.insert(into.adds.end(), d.adds.begin(), d.adds.end());
    into.removes.insert(into.removes.end(), d.removes.begin(), d.removes.end());
}

void apply_delta(PartialResult& r, const Region& rect, const index::IndexDelta& d) {
    for (const auto& v : d.adds) {
        if (rect.contains(v.point)) r.items.emplace(v.tag, Item{v.key, v.point});
    }
    for (const auto& rm : d.removes) {
        if (r.items.count(rm.tag)) r.add_effect(rm.tag, rm.effect_origin, rm.effect_seq);
    }
}

std::string dcs_text(const std::set<DcId>& dcs) {
    std::string out;
    for (DcId d : dcs) {
        if (!out.empty()) out += ",";
        out += dc_name(d);
    }
    return out;
}

}  // namespace

std::vector<Region> slice_first_axis(const Schema& schema, std::size_t parts) {
    if (parts == 0) throw TopologyError("need at least one partition");
    const Region full = Region::full(schema);
    if (parts == 1) return {full};
    if (schema.at(0).kind != AttrKind::Numeric) {
        throw TopologyError("partitioning needs a numeric first attribute, '" + schema.at(0).name + "' is text");
    }
    const double lo = std::get<double>(schema.at(0).min);
    const double hi = std::get<double>(schema.at(0).max);
    const double w = (hi - lo) / static_cast<double>(parts);
    std::vector<Region> out;
    for (std::size_t i = 0; i < parts; ++i) {
        Region r = full;
        r.axis(0).lo = i == 0 ? lo : lo + w * static_cast<double>(i);
        r.axis(0).hi = i + 1 == parts ? hi : lo + w * static_cast<double>(i + 1);
        r.axis(0).hi_open = i + 1 != parts;
        out.push_back(r);
    }
    return out;
}

Topology Topology::single(const Schema& schema, std::size_t dcs) {
    Topology t;
    for (std::size_t d = 0; d < dcs; ++d) {
        t.nodes.push_back(NodeSpec{"leaf@" + dc_name(static_cast<DcId>(d)), static_cast<DcId>(d), Role::History,
                                   Dispatch::Value, Region::full(schema), {}, std::nullopt});
    }
    return t;
}

Topology Topology::value_grid(const Schema& schema, std::size_t dcs, std::size_t partitions) {
    Topology t;
    const auto slices = slice_first_axis(schema, partitions);
    for (std::size_t d = 0; d < dcs; ++d) {
        const auto dc = static_cast<DcId>(d);
        const std::string root = "root@" + dc_name(dc);
        t.nodes.push_back(NodeSpec{root, dc, Role::Internal, Dispatch::Value, Region::full(schema), {}, std::nullopt});
        for (std::size_t p = 0; p < slices.size(); ++p) {
            t.nodes.push_back(NodeSpec{"leaf@" + dc_name(dc) + "/p" + std::to_string(p), dc, Role::History,
                                       Dispatch::Value, slices[p], {root}, std::nullopt});
        }
    }
    return t;
}

Topology Topology::fig2(const Schema& schema, std::size_t dcs, std::size_t partitions) {
    Topology t;
    const auto slices = slice_first_axis(schema, partitions);
    for (std::size_t d = 0; d < dcs; ++d) {
        const auto dc = static_cast<DcId>(d);
        t.nodes.push_back(NodeSpec{"root@" + dc_name(dc), dc, Role::Internal, Dispatch::Value, Region::full(schema),
                                   {}, std::nullopt});
        for (std::size_t p = 0; p < slices.size(); ++p) {
            t.nodes.push_back(NodeSpec{"dc@" + dc_name(dc) + "/p" + std::to_string(p), dc, Role::Internal,
                                       Dispatch::Dc, slices[p], {"root@" + dc_name(dc)}, std::nullopt});
        }
    }
    for (std::size_t e = 0; e < dcs; ++e) {
        const auto dc = static_cast<DcId>(e);
        for (std::size_t p = 0; p < slices.size(); ++p) {
            const std::string suffix = "@" + dc_name(dc) + "/p" + std::to_string(p);
            std::vector<std::string> parents;
            for (std::size_t d = 0; d < dcs; ++d) {
                parents.push_back("dc@" + dc_name(static_cast<DcId>(d)) + "/p" + std::to_string(p));
            }
            t.nodes.push_back(NodeSpec{"fresh" + suffix, dc, Role::Internal, Dispatch::Freshness, slices[p], parents,
                                       std::nullopt});
            t.nodes.push_back(
                NodeSpec{"hist" + suffix, dc, Role::History, Dispatch::Value, slices[p], {"fresh" + suffix}, std::nullopt});
            t.nodes.push_back(
                NodeSpec{"live" + suffix, dc, Role::Live, Dispatch::Value, slices[p], {"fresh" + suffix}, std::nullopt});
        }
    }
    return t;
}

Network::Network(sim::Simulator& sim, sim::Bus& bus, store::GeoStore& store, const Topology& topology,
                 NetworkConfig config)
    : sim_(sim), bus_(bus), store_(store), config_(std::move(config)), alive_(std::make_shared<bool>(true)) {
    config_.split.validate();
    config_.switching.validate();
    if (config_.gossip_period == 0) throw Error("gossip period must be positive");
    if (!config_.index_replication) config_.initial_mode = ReplMode::LogReplay;

    for (std::size_t d = 0; d < store_.dc_count(); ++d) {
        const auto dc = static_cast<DcId>(d);
        const sim::NodeId node = bus_.add_node("client@" + dc_name(dc), dc);
        bus_.set_handler(node, [this, dc](const sim::Envelope& env) { on_client(dc, env); });
        clients_.push_back(node);
    }
    validate_and_link(topology);
    for (auto& q : qpus_) {
        if (q->role == Role::History) {
            q->mode = config_.initial_mode;
            start_leaf(*q);
        }
    }
    refresh_peers();

    sim_.at_background(sim_.now() + config_.gossip_period, [this, alive = alive_] {
        if (*alive) gossip_tick();
    });
    if (config_.scrub_period > 0) {
        sim_.at_background(sim_.now() + config_.scrub_period, [this, alive = alive_] {
            if (*alive) scrub_tick();
        });
    }
}

Network::~Network() {
    *alive_ = false;
    for (auto& q : qpus_) {
        if (q->feed) store_.unsubscribe(*q->feed);
        bus_.set_handler(q->node, {});
    }
    for (auto node : clients_) bus_.set_handler(node, {});
}

QpuId Network::add_qpu(const std::string& name, DcId dc, Role role, Dispatch dispatch, Region region) {
    if (by_name_.count(name)) throw TopologyError("duplicate QPU name '" + name + "'");
    auto q = std::make_unique<Qpu>();
    q->id = static_cast<QpuId>(qpus_.size());
    q->name = name;
    q->dc = dc;
    q->role = role;
    q->dispatch = dispatch;
    q->region = std::move(region);
    q->cache = ResultCache(role == Role::Internal ? config_.cache_capacity : 0);
    q->window = SelectivityWindow(config_.switching.window);
    q->node = bus_.add_node(name, dc);
    by_name_[name] = q->id;
    by_node_[q->node] = q->id;
    qpus_.push_back(std::move(q));
    install_handler(*qpus_.back());
    return qpus_.back()->id;
}

void Network::install_handler(Qpu& q) {
    const QpuId id = q.id;
    bus_.set_handler(q.node, [this, id](const sim::Envelope& env) { on_message(id, env); });
}

void Network::validate_and_link(const Topology& topology) {
    const Schema& schema = store_.schema();
    const Region full = Region::full(schema);
    if (topology.nodes.empty()) throw TopologyError("topology declares no QPUs");
    for (const auto& spec : topology.nodes) {
        if (spec.dc >= store_.dc_count()) {
            throw TopologyError("QPU '" + spec.name + "' is placed at unknown " + dc_name(spec.dc));
        }
        if (spec.region.dims() != schema.size()) {
            throw TopologyError("QPU '" + spec.name + "' region has " + std::to_string(spec.region.dims()) +
                                " axes, schema has " + std::to_string(schema.size()));
        }
        if (spec.region.empty()) throw TopologyError("QPU '" + spec.name + "' has an empty region");
        if (!full.contains(spec.region)) {
            throw TopologyError("QPU '" + spec.name + "' region " + spec.region.to_string(schema) +
                                " leaves the attribute domain");
        }
        add_qpu(spec.name, spec.dc, spec.role, spec.dispatch, spec.region);
    }
    for (const auto& spec : topology.nodes) {
        Qpu& q = *qpus_[by_name_.at(spec.name)];
        for (const auto& pname : spec.parents) {
            auto it = by_name_.find(pname);
            if (it == by_name_.end()) throw TopologyError("QPU '" + spec.name + "' names unknown parent '" + pname + "'");
            Qpu& p = *qpus_[it->second];
            if (p.role != Role::Internal) throw TopologyError("parent '" + pname + "' of '" + spec.name + "' is a leaf");
            if (!p.region.contains(q.region)) {
                throw TopologyError("QPU '" + spec.name + "' region is not inside its parent '" + pname + "'");
            }
            if (q.role == Role::Live && p.dispatch != Dispatch::Freshness) {
                throw TopologyError("live QPU '" + spec.name + "' must hang under a freshness-dispatch parent");
            }
            q.parents.push_back(p.id);
            p.children.push_back(q.id);
        }
    }

    // Cycle check and scope computation, children first.
    std::vector<int> state(qpus_.size(), 0);
    std::function<void(QpuId)> visit = [&](QpuId id) {
        if (state[id] == 2) return;
        if (state[id] == 1) throw TopologyError("topology has a cycle through '" + qpus_[id]->name + "'");
        state[id] = 1;
        for (QpuId c : qpus_[id]->children) visit(c);
        state[id] = 2;
        compute_scope(id);
    };
    for (std::size_t i = 0; i < qpus_.size(); ++i) {
        Qpu& q = *qpus_[i];
        if (q.leaf()) {
            const auto& spec = topology.nodes[i];
            q.scope = spec.scope ? *spec.scope : (config_.index_replication ? all_dcs(store_.dc_count())
                                                                            : std::set<DcId>{q.dc});
            if (!q.scope.count(q.dc)) throw TopologyError("QPU '" + q.name + "' scope must include its own DC");
        }
    }
    for (std::size_t i = 0; i < qpus_.size(); ++i) visit(static_cast<QpuId>(i));

    bool any_root = false;
    for (auto& qp : qpus_) {
        Qpu& q = *qp;
        if (q.parents.empty()) {
            any_root = true;
            if (!q.region.contains(full)) {
                throw TopologyError("root '" + q.name + "' leaves point " +
                                    schema.format_point(representative_point(uncovered(full, {q.region}).front())) +
                                    " uncovered");
            }
        }
        if (q.role == Role::Internal) {
            std::vector<Region> covers;
            std::size_t live = 0;
            std::size_t other = 0;
            for (QpuId c : q.children) {
                if (qpus_[c]->role == Role::Live) {
                    ++live;
                } else {
                    ++other;
                    covers.push_back(qpus_[c]->region);
                }
            }
            if (q.children.empty()) throw TopologyError("internal QPU '" + q.name + "' has no children");
            if (q.dispatch == Dispatch::Freshness && (other != 1 || live > 1)) {
                throw TopologyError("freshness QPU '" + q.name + "' needs one history child and at most one live child");
            }
            const auto gaps = uncovered(q.region, covers);
            if (!gaps.empty()) {
                throw TopologyError("children of '" + q.name + "' leave point " +
                                    schema.format_point(representative_point(gaps.front())) + " uncovered");
            }
        }
    }
    if (!any_root) throw TopologyError("topology has no root");
}

void Network::compute_scope(QpuId id) {
    Qpu& q = *qpus_[id];
    if (q.leaf()) return;
    q.scope.clear();
    for (QpuId c : q.children) {
        if (qpus_[c]->role == Role::Live) continue;
        q.scope.insert(qpus_[c]->scope.begin(), qpus_[c]->scope.end());
    }
}

void Network::start_leaf(Qpu& q) {
    if (!q.index) q.index = std::make_unique<index::CrdtIndex>(store_.schema_ptr(), config_.binning);
    const QpuId id = q.id;
    q.feed = store_.subscribe(q.dc, q.clock, [this, id] { schedule_drain(id); });
    schedule_drain(id);
}

void Network::stop_leaf(Qpu& q) {
    if (q.feed) store_.unsubscribe(*q.feed);
    q.feed.reset();
    for (const auto& [pub, _] : q.peer_watermarks) {
        if (qpus_[pub]->alive) {
            bus_.send_ordered(q.node, qpus_[pub]->node, "peer-sub", "unsubscribe",
                              PeerSubscribeMsg{q.peer_epoch, q.id, false});
        }
    }
    q.peer_watermarks.clear();
    q.subscribers.clear();
    q.sent_watermark.clear();
    q.index.reset();
    q.window.clear();
}

void Network::on_message(QpuId id, const sim::Envelope& env) {
    Qpu& q = *qpus_[id];
    if (!q.alive) return;
    if (env.kind == "subquery") on_subquery(q, env);
    else if (env.kind == "partial") on_partial(q, env);
    else if (env.kind == "clock") on_clock(q, env);
    else if (env.kind == "push") on_push(q, env);
    else if (env.kind == "peer-sub") on_peer_subscribe(q, env);
    else if (env.kind == "peer-data") on_peer_data(q, env);
}

std::optional<QpuId> Network::find(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end() || !qpus_[it->second]->alive) return std::nullopt;
    return it->second;
}

std::vector<QpuId> Network::qpus(std::optional<Role> role, std::optional<DcId> dc) const {
    std::vector<QpuId> out;
    for (const auto& q : qpus_) {
        if (!q->alive) continue;
        if (role && q->role != *role) continue;
        if (dc && q->dc != *dc) continue;
        out.push_back(q->id);
    }
    return out;
}

std::optional<QpuId> Network::root(DcId dc) const {
    std::optional<QpuId> any;
    for (const auto& q : qpus_) {
        if (!q->alive || !q->parents.empty()) continue;
        if (q->dc == dc) return q->id;
        if (!any) any = q->id;
    }
    return any;
}

VectorClock Network::report_clock(const Qpu& q) const {
    if (q.role == Role::History) return q.clock.restricted(q.scope);
    if (q.role == Role::Live) return {};
    VectorClock out;
    for (DcId d : q.scope) {
        std::optional<Seq> lo;
        for (QpuId c : q.children) {
            const Qpu& child = *qpus_[c];
            if (!child.alive || child.role == Role::Live || !child.scope.count(d)) continue;
            auto it = q.known.find(c);
            const Seq v = it == q.known.end() ? 0 : it->second.get(d);
            lo = lo ? std::min(*lo, v) : v;
        }
        if (lo) out.set(d, *lo);
    }
    return out;
}

VectorClock Network::stable(QpuId id) const { return report_clock(*qpus_.at(id)); }

SnapshotReport Network::snapshot_report(DcId origin) const {
    SnapshotReport r;
    r.heads = store_.replica(origin).heads();
    const auto root_id = root(origin);
    const VectorClock s = root_id ? stable(*root_id) : VectorClock{};
    for (const auto& [d, seq] : s.entries()) r.stable.set(d, std::min(seq, r.heads.get(d)));
    return r;
}

VectorClock Network::resolve(const StalenessLevel& level, DcId origin) const {
    return resolve_target(level, snapshot_report(origin));
}

// ---------------------------------------------------------------------------
// Queries

std::uint64_t Network::submit(const query::Query& q, Callback done, std::optional<VectorClock> target) {
    if (q.origin >= store_.dc_count()) throw Error("query origin " + dc_name(q.origin) + " does not exist");
    const auto root_id = root(q.origin);
    if (!root_id) throw TopologyError("no root QPU to route from " + dc_name(q.origin));

    const std::uint64_t qid = next_query_++;
    PendingQuery& pq = queries_[qid];
    pq.query = q;
    const SnapshotReport report = snapshot_report(q.origin);
    pq.lag = report.lag();
    pq.target = target ? *target : resolve_target(q.level, report);
    pq.current = !target && q.level.kind == StalenessLevel::Kind::Any;
    pq.issued = sim_.now();
    pq.done = std::move(done);

    const Qpu& r = *qpus_[*root_id];
    for (const auto& rect : query::to_rectangles(q.expr, store_.schema())) {
        const Region part = intersect(rect.region, r.region);
        if (part.empty()) continue;
        ++pq.outstanding;
        send_subquery(clients_[q.origin], 0, r, qid, std::nullopt, part, pq.target, pq.current, true, std::nullopt);
    }
    if (pq.outstanding == 0) {
        sim_.at(sim_.now(), [this, qid, alive = alive_] {
            if (*alive) complete_query(qid);
        });
    }
    return qid;
}

QueryResult Network::route(const query::Query& q, std::optional<VectorClock> target) {
    std::optional<QueryResult> out;
    submit(q, [&out](const QueryResult& r) { out = r; }, std::move(target));
    if (!sim_.run_until([&out] { return out.has_value(); })) throw Error("query did not complete");
    if (out->error) {
        if (!out->lagging.empty()) throw UnsatisfiableError(out->lagging, *out->error);
        throw Error(*out->error);
    }
    return *out;
}

void Network::send_subquery(sim::NodeId from, std::uint64_t reply_key, const Qpu& to, std::uint64_t qid,
                            std::optional<std::size_t> parent_visit, const Region& rect, const VectorClock& target,
                            bool current, bool catch_up, std::optional<VectorClock> live_from) {
    PendingQuery& pq = queries_.at(qid);
    pq.visits.push_back(Visit{parent_visit, to.name, to.name + " (no answer)"});
    ++pq.stats.qpus_visited;
    SubQueryMsg msg{qid, reply_key, pq.visits.size() - 1, rect, target, current, catch_up, std::move(live_from)};
    bus_.send_ordered(from, to.node, "subquery", "q" + std::to_string(qid) + " " + rect.to_string(store_.schema()),
                      std::move(msg));
}

void Network::reply(const Qpu& q, sim::NodeId to, std::uint64_t qid, std::uint64_t reply_key, PartialResult result,
                    std::optional<std::string> error, std::set<DcId> lagging) {
    std::string detail = "q" + std::to_string(qid) + " items=" + std::to_string(result.items.size());
    if (error) detail += " error";
    bus_.send_ordered(q.node, to, "partial", detail,
                      PartialMsg{qid, reply_key, std::move(result), q.scope, std::move(error), std::move(lagging)});
}

void Network::on_subquery(Qpu& q, const sim::Envelope& env) {
    const auto& msg = std::any_cast<const SubQueryMsg&>(env.payload);
    auto qit = queries_.find(msg.qid);
    if (qit == queries_.end()) return;
    PendingQuery& pq = qit->second;
    const Schema& schema = store_.schema();
    const std::string head = q.name + " region=" + q.region.to_string(schema) + " rect=" + msg.rect.to_string(schema);

    if (q.leaf()) {
        PartialResult r;
        std::optional<std::string> error;
        std::set<DcId> lagging;
        try {
            if (q.role == Role::Live) {
                r = serve_live(q, msg.rect, msg.live_from.value_or(VectorClock{}), msg.target);
            } else {
                r = serve_history(q, msg.rect, msg.target, msg.current, msg.catch_up);
            }
        } catch (const UnsatisfiableError& e) {
            error = e.what();
            lagging = e.lagging();
        }
        pq.visits[msg.visit].line = head + " leaf-serve " + to_string(q.role) +
                                    (q.role == Role::Live ? " from=" + msg.live_from.value_or(VectorClock{}).to_string() : "") +
                                    " items=" + std::to_string(r.items.size()) + " clock=" + r.clock.to_string() +
                                    (error ? " error=" + *error : "");
        reply(q, env.src, msg.qid, msg.reply_key, std::move(r), std::move(error), std::move(lagging));
        return;
    }

    if (auto hit = q.cache.probe(msg.rect, msg.target, msg.current, q.scope, sim_.now())) {
        ++pq.stats.cache_hits;
        pq.visits[msg.visit].line = head + " cache-hit items=" + std::to_string(hit->items.size()) +
                                    " clock=" + hit->clock.to_string();
        reply(q, env.src, msg.qid, msg.reply_key, std::move(*hit), std::nullopt, {});
        return;
    }

    const std::uint64_t key = next_visit_key_++;
    PendingVisit& pv = visits_[key];
    pv.qid = msg.qid;
    pv.visit = msg.visit;
    pv.node = q.id;
    pv.reply_to = env.src;
    pv.reply_key = msg.reply_key;
    pv.rect = msg.rect;
    pv.target = msg.target;
    pv.current = msg.current;
    pv.head = head;

    std::vector<QpuId> kids;
    std::optional<QpuId> live;
    for (QpuId c : q.children) {
        if (!qpus_[c]->alive) continue;
        if (qpus_[c]->role == Role::Live) live = c;
        else kids.push_back(c);
    }

    std::size_t sent = 0;
    auto forward = [&](const Qpu& child, const Region& part, bool catch_up, std::optional<VectorClock> from) {
        ++sent;
        send_subquery(q.node, key, child, msg.qid, msg.visit, part, msg.target, msg.current, catch_up, std::move(from));
    };

    try {
        switch (q.dispatch) {
            case Dispatch::Value: {
                std::vector<Region> regions;
                for (QpuId c : kids) regions.push_back(qpus_[c]->region);
                const auto cover = router::greedy_cover(schema, regions, msg.rect);
                std::string names;
                for (const auto& a : cover) {
                    names += (names.empty() ? "" : ",") + qpus_[kids[a.child]]->name;
                    for (const Region& part : a.parts) forward(*qpus_[kids[a.child]], part, msg.catch_up, std::nullopt);
                }
                pv.decision = "forward value-dispatch to " + names;
                break;
            }
            case Dispatch::Dc: {
                std::stable_sort(kids.begin(), kids.end(), [&](QpuId a, QpuId b) {
                    return (qpus_[a]->dc == q.dc) > (qpus_[b]->dc == q.dc);
                });
                std::set<DcId> needed = q.scope;
                std::set<DcId> chosen;
                for (QpuId c : kids) {
                    const Qpu& child = *qpus_[c];
                    bool useful = false;
                    for (DcId d : child.scope) useful = useful || needed.count(d);
                    if (!useful) continue;
                    const Region part = intersect(msg.rect, child.region);
                    if (part.empty()) continue;
                    for (DcId d : child.scope) needed.erase(d);
                    chosen.insert(child.dc);
                    forward(child, part, msg.catch_up, std::nullopt);
                }
                const bool replicated = chosen.size() == 1 && chosen.count(q.dc);
                pv.decision = std::string("forward dc-dispatch ") + (replicated ? "(index replicated) " : "") + "to " +
                              dcs_text(chosen);
                break;
            }
            case Dispatch::Freshness: {
                const Qpu& h = *qpus_[kids.at(0)];
                auto kit = q.known.find(h.id);
                const VectorClock c_h = kit == q.known.end() ? VectorClock{} : kit->second;
                if (!live || msg.current || c_h.dominates_on(msg.target, h.scope)) {
                    forward(h, msg.rect, msg.catch_up && !live, std::nullopt);
                    pv.decision = "forward freshness-dispatch history (known " + c_h.to_string() + ")";
                } else {
                    forward(h, msg.rect, false, std::nullopt);
                    forward(*qpus_[*live], msg.rect, false, c_h);
                    pv.decision = "forward freshness-dispatch history+live (live covers " + c_h.to_string() + " to " +
                                  msg.target.restricted(h.scope).to_string() + ")";
                }
                break;
            }
        }
    } catch (const router::UnroutableError& e) {
        pv.error = e.what();
    }
    pv.outstanding = sent;
    if (sent == 0) finish_visit(q, key);
}

void Network::on_partial(Qpu& q, const sim::Envelope& env) {
    const auto& msg = std::any_cast<const PartialMsg&>(env.payload);
    auto it = visits_.find(msg.reply_key);
    if (it == visits_.end()) return;
    PendingVisit& pv = it->second;
    pv.acc.merge(msg.result);
    pv.clocks.emplace_back(msg.scope, msg.result.clock);
    if (msg.error && !pv.error) {
        pv.error = msg.error;
        pv.lagging = msg.lagging;
    }
    if (--pv.outstanding == 0) finish_visit(q, msg.reply_key);
}

void Network::finish_visit(Qpu& q, std::uint64_t key) {
    auto node = visits_.extract(key);
    PendingVisit& pv = node.mapped();

    VectorClock combined;
    if (q.dispatch == Dispatch::Freshness) {
        for (const auto& [_, c] : pv.clocks) combined = merge_clock(combined, c);
    } else {
        for (DcId d : q.scope) {
            std::optional<Seq> lo;
            for (const auto& [scope, c] : pv.clocks) {
                if (!scope.count(d)) continue;
                lo = lo ? std::min(*lo, c.get(d)) : c.get(d);
            }
            if (lo) combined.set(d, *lo);
        }
    }
    pv.acc.clock = combined;
    for (const auto& d : pv.pushes) apply_delta(pv.acc, pv.rect, d);

    if (!pv.error) {
        q.cache.fill(pv.rect, pv.acc, pv.current, pv.target, sim_.now());
        ++counters_.cache_fills;
    }
    auto qit = queries_.find(pv.qid);
    if (qit != queries_.end()) {
        qit->second.visits[pv.visit].line = pv.head + " " + (pv.error ? "error=" + *pv.error : pv.decision) +
                                            " clock=" + combined.to_string();
    }
    reply(q, pv.reply_to, pv.qid, pv.reply_key, std::move(pv.acc), pv.error, pv.lagging);
}

void Network::on_client(DcId, const sim::Envelope& env) {
    if (env.kind != "partial") return;
    const auto& msg = std::any_cast<const PartialMsg&>(env.payload);
    auto it = queries_.find(msg.qid);
    if (it == queries_.end()) return;
    PendingQuery& pq = it->second;
    pq.acc.merge(msg.result);
    pq.acc.clock = pq.have_clock ? clock_min(pq.acc.clock, msg.result.clock) : msg.result.clock;
    pq.have_clock = true;
    if (msg.error && !pq.error) {
        pq.error = msg.error;
        pq.lagging = msg.lagging;
    }
    if (--pq.outstanding == 0) complete_query(msg.qid);
}

void Network::complete_query(std::uint64_t qid) {
    auto node = queries_.extract(qid);
    if (node.empty()) return;
    PendingQuery& pq = node.mapped();
    const Schema& schema = store_.schema();

    QueryResult r;
    r.id = qid;
    r.query = pq.query;
    r.target = pq.target;
    r.clock = pq.have_clock ? pq.acc.clock : pq.target;
    r.issued = pq.issued;
    r.completed = sim_.now();
    r.lag = pq.lag;
    r.error = pq.error;
    r.lagging = pq.lagging;
    r.stats = pq.stats;
    r.stats.ticks_elapsed = r.completed - r.issued;

    if (!r.error) {
        const index::Visibility vis = pq.current ? index::Visibility::current() : index::Visibility::at(pq.target);
        std::set<Key> keys;
        for (const auto& [tag, item] : pq.acc.items) {
            if (pq.acc.visible(tag, vis)) keys.insert(item.key);
        }
        auto checked = router::candidate_check(keys, pq.query.expr, schema, store_.replica(pq.query.origin));
        r.stats.candidate_checked = keys.size();
        r.stats.false_positives_removed = checked.removed;
        r.keys = std::move(checked.kept);
    }

    std::ostringstream os;
    os << "query " << qid << " from " << dc_name(pq.query.origin) << " at tick " << r.issued << ": "
       << query::print(pq.query) << "\n";
    os << "  target=" << r.target.to_string() << " result=" << r.keys.size() << " keys clock=" << r.clock.to_string()
       << " checked=" << r.stats.candidate_checked << " removed=" << r.stats.false_positives_removed << "\n";
    std::vector<std::vector<std::size_t>> kids(pq.visits.size());
    std::vector<std::size_t> roots;
    for (std::size_t i = 0; i < pq.visits.size(); ++i) {
        if (pq.visits[i].parent) kids[*pq.visits[i].parent].push_back(i);
        else roots.push_back(i);
    }
    std::function<void(std::size_t, int)> dump = [&](std::size_t i, int depth) {
        os << std::string(static_cast<std::size_t>(depth) * 2, ' ') << pq.visits[i].line << "\n";
        for (std::size_t c : kids[i]) dump(c, depth + 1);
    };
    for (std::size_t i : roots) dump(i, 2);
    if (r.error) os << "  error: " << *r.error << "\n";
    r.trace = os.str();

    if (pq.done) pq.done(r);
}

PartialResult Network::serve_history(Qpu& q, const Region& rect, const VectorClock& target, bool current,
                                     bool catch_up) {
    if (catch_up) {
        const VectorClock t = target.restricted(q.scope);
        if (!q.clock.dominates(t)) this->catch_up(q.id, t);
    }
    const index::Visibility vis = current ? index::Visibility::current() : index::Visibility::at(target);
    const index::CrdtIndex& idx = *q.index;

    std::optional<std::set<Stamp>> tags;
    for (std::size_t axis = 0; axis < rect.dims(); ++axis) {
        if (rect.axis(axis).contains(q.region.axis(axis))) continue;
        const auto lr = idx.lookup_range(axis, rect.axis(axis), vis);
        std::set<Stamp> hits = lr.exact;
        hits.insert(lr.candidates.begin(), lr.candidates.end());
        if (!tags) {
            tags = std::move(hits);
        } else {
            std::set<Stamp> both;
            std::set_intersection(tags->begin(), tags->end(), hits.begin(), hits.end(),
                                  std::inserter(both, both.end()));
            tags = std::move(both);
        }
        if (tags->empty()) break;
    }

    PartialResult r;
    r.clock = q.clock.restricted(q.scope);
    auto add = [&](const index::IndexedVersion& v) {
        r.items.emplace(v.tag, Item{v.key, v.point});
        if (const auto* e = idx.effects(v.tag)) r.removed.emplace(v.tag, *e);
    };
    if (!tags) {
        for (const auto* v : idx.visible_versions(vis)) add(*v);
    } else {
        for (const Stamp& t : *tags) add(idx.versions().at(t));
    }
    return r;
}

PartialResult Network::serve_live(Qpu& q, const Region& rect, const VectorClock& from, const VectorClock& target) {
    const store::DcReplica& replica = store_.replica(q.dc);
    std::set<DcId> lagging;
    for (DcId d : q.scope) {
        if (target.get(d) > replica.heads().get(d)) lagging.insert(d);
    }
    if (!lagging.empty()) {
        throw UnsatisfiableError(lagging, "target " + target.to_string() + ", " + dc_name(q.dc) + " heads " +
                                              replica.heads().to_string());
    }
    PartialResult r;
    for (DcId d : q.scope) {
        for (Seq s = from.get(d) + 1; s <= target.get(d); ++s) {
            const store::LogEntry& e = replica.entry(d, s);
            if (e.superseded) r.add_effect(*e.superseded, d, s);
            if (e.op == store::Op::Put && rect.contains(e.attrs)) r.items.emplace(e.stamp(), Item{e.key, e.attrs});
        }
    }
    // Entries the live leaf scanned may retire versions it also returned.
    r.clock = target.restricted(q.scope);
    return r;
}

// ---------------------------------------------------------------------------
// Index maintenance

std::size_t Network::catch_up(QpuId id, const VectorClock& target) {
    Qpu& q = *qpus_.at(id);
    if (q.role != Role::History) throw Error("catch_up needs a history leaf, '" + q.name + "' is not one");
    const store::DcReplica& replica = store_.replica(q.dc);
    std::set<DcId> lagging;
    for (const auto& [d, seq] : target.entries()) {
        if (q.scope.count(d) && seq > replica.heads().get(d)) lagging.insert(d);
    }
    if (!lagging.empty()) {
        throw UnsatisfiableError(lagging, "target " + target.to_string() + ", " + dc_name(q.dc) + " heads " +
                                              replica.heads().to_string());
    }
    std::size_t applied = 0;
    index::IndexDelta all;
    index::IndexDelta own;
    for (DcId d : q.scope) {
        for (Seq s = q.clock.get(d) + 1; s <= target.get(d); ++s) {
            const store::LogEntry& e = replica.entry(d, s);
            const auto delta = q.index->apply_write(e, &q.region);
            append(all, delta);
            if (d == q.dc) append(own, delta);
            q.clock.set(d, s);
            ++applied;
        }
    }
    push_up(q, all);
    publish(q, own);
    return applied;
}

void Network::schedule_drain(QpuId id) {
    Qpu& q = *qpus_[id];
    if (q.drain_scheduled) return;
    q.drain_scheduled = true;
    sim_.after(config_.ingest_delay, [this, id, alive = alive_] {
        if (*alive) drain(id);
    });
}

void Network::drain(QpuId id) {
    Qpu& q = *qpus_[id];
    q.drain_scheduled = false;
    if (!q.alive || q.role != Role::History || !q.feed) return;
    index::IndexDelta all;
    index::IndexDelta own;
    for (const store::LogEntry* e : store_.poll(*q.feed)) apply_entry(q, *e, all, own);
    push_up(q, all);
    publish(q, own);
    if (q.mode == ReplMode::IndexDelta) recompute_peer_clock(q);
    maybe_switch(q);
    maybe_resize(id);
}

void Network::apply_entry(Qpu& q, const store::LogEntry& e, index::IndexDelta& all, index::IndexDelta& own) {
    ++counters_.entries_ingested;
    const bool relevant = e.op == store::Op::Put && e.attrs.size() == q.region.dims() && q.region.contains(e.attrs);
    q.window.record(relevant);
    if (!q.scope.count(e.origin) || e.seq <= q.clock.get(e.origin)) return;
    const bool own_origin = e.origin == q.dc;
    if (q.mode == ReplMode::IndexDelta && !own_origin) return;
    const store::DcReplica& replica = store_.replica(q.dc);
    for (Seq s = q.clock.get(e.origin) + 1; s <= e.seq; ++s) {
        const store::LogEntry& entry = s == e.seq ? e : replica.entry(e.origin, s);
        const auto delta = q.index->apply_write(entry, &q.region);
        append(all, delta);
        if (own_origin) append(own, delta);
        q.clock.set(e.origin, s);
    }
}

void Network::push_up(const Qpu& q, const index::IndexDelta& delta) {
    if (delta.empty()) return;
    for (QpuId p : q.parents) {
        if (!qpus_[p]->alive) continue;
        ++counters_.pushes;
        bus_.send_ordered(q.node, qpus_[p]->node, "push",
                          "adds=" + std::to_string(delta.adds.size()) + " removes=" + std::to_string(delta.removes.size()),
                          PushMsg{delta});
    }
}

void Network::on_push(Qpu& q, const sim::Envelope& env) {
    const auto& msg = std::any_cast<const PushMsg&>(env.payload);
    counters_.cache_entries_pushed += q.cache.push(msg.delta);
    for (auto& [_, pv] : visits_) {
        if (pv.node == q.id) pv.pushes.push_back(msg.delta);
    }
    push_up(q, msg.delta);
}

void Network::on_clock(Qpu& q, const sim::Envelope& env) {
    const auto& msg = std::any_cast<const ClockMsg&>(env.payload);
    auto it = by_node_.find(env.src);
    if (it == by_node_.end()) return;
    auto& known = q.known[it->second];
    known = merge_clock(known, msg.clock);
    q.cache.advance(report_clock(q));
}

void Network::gossip_tick() {
    for (auto& qp : qpus_) {
        Qpu& q = *qp;
        if (!q.alive || q.role == Role::Live || q.parents.empty()) continue;
        const VectorClock c = report_clock(q);
        if (q.gossiped && c == q.last_gossip) continue;
        q.last_gossip = c;
        q.gossiped = true;
        for (QpuId p : q.parents) {
            if (qpus_[p]->alive) bus_.send_ordered(q.node, qpus_[p]->node, "clock", c.to_string(), ClockMsg{c});
        }
    }
    sim_.at_background(sim_.now() + config_.gossip_period, [this, alive = alive_] {
        if (*alive) gossip_tick();
    });
}

void Network::scrub_tick() {
    scrub_all();
    sim_.at_background(sim_.now() + config_.scrub_period, [this, alive = alive_] {
        if (*alive) scrub_tick();
    });
}

std::size_t Network::scrub(QpuId id) {
    Qpu& q = *qpus_.at(id);
    if (q.role != Role::History || !q.alive) return 0;
    std::vector<index::Removal> removals;
    const std::size_t n = q.index->scrub(store_.replica(q.dc), &removals);
    index::IndexDelta delta;
    delta.removes = std::move(removals);
    push_up(q, delta);
    return n;
}

std::size_t Network::scrub_all() {
    std::size_t n = 0;
    for (QpuId id : qpus(Role::History)) n += scrub(id);
    return n;
}

// ---------------------------------------------------------------------------
// Peer index deltas

void Network::publish(Qpu& q, const index::IndexDelta& own) {
    const Seq watermark = q.clock.get(q.dc);
    for (const auto& [sub_id, epoch] : q.subscribers) {
        const Qpu& sub = *qpus_[sub_id];
        if (!sub.alive) continue;
        index::IndexDelta d;
        for (const auto& v : own.adds) {
            if (sub.region.contains(v.point)) d.adds.push_back(v);
        }
        d.removes = own.removes;
        auto& sent = q.sent_watermark[sub_id];
        if (d.empty() && sent == watermark) continue;
        sent = watermark;
        ++counters_.peer_messages;
        bus_.send_ordered(q.node, sub.node, "peer-data",
                          "wm=" + std::to_string(watermark) + " adds=" + std::to_string(d.adds.size()),
                          PeerDataMsg{epoch, q.id, std::move(d), watermark});
    }
}

void Network::on_peer_subscribe(Qpu& q, const sim::Envelope& env) {
    const auto& msg = std::any_cast<const PeerSubscribeMsg&>(env.payload);
    if (q.role != Role::History) return;
    if (!msg.subscribe) {
        auto it = q.subscribers.find(msg.subscriber);
        if (it != q.subscribers.end() && it->second == msg.epoch) {
            q.subscribers.erase(it);
            q.sent_watermark.erase(msg.subscriber);
        }
        return;
    }
    const Qpu& sub = *qpus_[msg.subscriber];
    q.subscribers[msg.subscriber] = msg.epoch;
    index::IndexDelta snapshot;
    for (const auto& [tag, v] : q.index->versions()) {
        if (!sub.region.contains(v.point)) continue;
        snapshot.adds.push_back(v);
        if (const auto* e = q.index->effects(tag)) {
            for (const auto& [origin, seq] : *e) snapshot.removes.push_back(index::Removal{tag, origin, seq});
        }
    }
    const Seq watermark = q.clock.get(q.dc);
    q.sent_watermark[msg.subscriber] = watermark;
    ++counters_.peer_messages;
    bus_.send_ordered(q.node, sub.node, "peer-data", "snapshot wm=" + std::to_string(watermark),
                      PeerDataMsg{msg.epoch, q.id, std::move(snapshot), watermark});
}

void Network::on_peer_data(Qpu& q, const sim::Envelope& env) {
    const auto& msg = std::any_cast<const PeerDataMsg&>(env.payload);
    if (q.role != Role::History || q.mode != ReplMode::IndexDelta || msg.epoch != q.peer_epoch) return;
    auto it = q.peer_watermarks.find(msg.publisher);
    if (it == q.peer_watermarks.end()) return;
    index::IndexDelta d;
    for (const auto& v : msg.delta.adds) {
        if (q.region.contains(v.point)) d.adds.push_back(v);
    }
    d.removes = msg.delta.removes;
    q.index->apply(d);
    push_up(q, d);
    it->second = std::max(it->second, msg.watermark);
    recompute_peer_clock(q);
}

void Network::recompute_peer_clock(Qpu& q) {
    const VectorClock& heads = store_.replica(q.dc).heads();
    for (DcId d : q.scope) {
        if (d == q.dc) continue;
        std::optional<Seq> lo;
        for (const auto& [pub, wm] : q.peer_watermarks) {
            if (qpus_[pub]->dc != d) continue;
            lo = lo ? std::min(*lo, wm) : wm;
        }
        if (!lo) continue;
        const Seq c = std::min(*lo, heads.get(d));
        if (c > q.clock.get(d)) q.clock.set(d, c);
    }
}

void Network::refresh_peers() {
    for (auto& qp : qpus_) {
        Qpu& q = *qp;
        if (!q.alive || q.role != Role::History) continue;
        for (const auto& [pub, _] : q.peer_watermarks) {
            if (qpus_[pub]->alive) {
                bus_.send_ordered(q.node, qpus_[pub]->node, "peer-sub", "unsubscribe",
                                  PeerSubscribeMsg{q.peer_epoch, q.id, false});
            }
        }
        q.peer_watermarks.clear();
        ++q.peer_epoch;
        if (q.mode != ReplMode::IndexDelta) continue;
        for (const auto& pp : qpus_) {
            const Qpu& p = *pp;
            if (!p.alive || p.role != Role::History || p.dc == q.dc || !q.scope.count(p.dc)) continue;
            if (!p.region.intersects(q.region)) continue;
            q.peer_watermarks[p.id] = 0;
            ++counters_.peer_messages;
            bus_.send_ordered(q.node, p.node, "peer-sub", "subscribe", PeerSubscribeMsg{q.peer_epoch, q.id, true});
        }
    }
}

void Network::set_mode(QpuId id, ReplMode mode) {
    Qpu& q = *qpus_.at(id);
    if (q.role != Role::History) throw Error("'" + q.name + "' is not a history leaf");
    if (q.mode == mode) return;
    if (mode == ReplMode::IndexDelta && !config_.index_replication) {
        throw Error("index deltas need index replication enabled");
    }
    switches_.push_back(ModeSwitch{sim_.now(), q.name, q.mode, mode, q.window.selectivity()});
    q.window.clear();
    q.mode = mode;
    if (mode == ReplMode::IndexDelta) {
        refresh_peers();
    } else {
        for (const auto& [pub, _] : q.peer_watermarks) {
            if (qpus_[pub]->alive) {
                bus_.send_ordered(q.node, qpus_[pub]->node, "peer-sub", "unsubscribe",
                                  PeerSubscribeMsg{q.peer_epoch, q.id, false});
            }
        }
        q.peer_watermarks.clear();
        ++q.peer_epoch;
        catch_up(id, store_.replica(q.dc).heads().restricted(q.scope));
    }
}

void Network::maybe_switch(Qpu& q) {
    if (!config_.switching.adaptive || !config_.index_replication || !q.window.full()) return;
    if (auto next = decide_mode(q.mode, q.window.selectivity(), config_.switching)) set_mode(q.id, *next);
}

// ---------------------------------------------------------------------------
// Split and merge

void Network::maybe_resize(QpuId id) {
    if (!config_.split.automatic || resize_pending_.count(id)) return;
    const Qpu& q = *qpus_[id];
    const std::size_t count = q.index->object_count();
    auto refused = refused_.find(id);
    if (refused != refused_.end() && refused->second == count) return;
    const bool want_split = count > config_.split.t_split;
    const bool want_merge = count < config_.split.t_merge && q.parents.size() == 1 &&
                            qpus_[q.parents[0]]->dispatch == Dispatch::Value && qpus_[q.parents[0]]->children.size() > 1;
    if (!want_split && !want_merge) return;
    resize_pending_.insert(id);
    auto run = std::make_shared<std::function<void()>>();
    *run = [this, id, alive = alive_, run]() {
        if (!*alive) return;
        if (!queries_.empty()) {
            sim_.after(1, *run);
            return;
        }
        resize_pending_.erase(id);
        Qpu& q = *qpus_[id];
        if (!q.alive || q.role != Role::History) return;
        const std::size_t count = q.index->object_count();
        if (count > config_.split.t_split) {
            try {
                split(id);
            } catch (const SplitRefused&) {
                ++counters_.split_refusals;
                refused_[id] = count;
            }
            return;
        }
        if (count >= config_.split.t_merge || q.parents.size() != 1) return;
        const Qpu& p = *qpus_[q.parents[0]];
        for (QpuId s : p.children) {
            if (s == id || !qpus_[s]->alive || qpus_[s]->role != Role::History) continue;
            if (!rectangular_union(q.region, qpus_[s]->region)) continue;
            try {
                merge_siblings(id, s, true);
                return;
            } catch (const SplitRefused&) {
            }
        }
        refused_[id] = count;
    };
    sim_.after(1, *run);
}

std::pair<QpuId, QpuId> Network::split(QpuId id) {
    Qpu& q = *qpus_.at(id);
    const Schema& schema = store_.schema();
    if (q.role != Role::History || !q.alive) throw SplitRefused("'" + q.name + "' is not a history leaf");
    if (config_.split.mode == "replace" &&
        (q.parents.size() != 1 || qpus_[q.parents[0]]->dispatch != Dispatch::Value)) {
        throw SplitRefused("'" + q.name + "' can only be replaced under a single value-dispatch parent");
    }
    const auto versions = q.index->visible_versions();
    if (versions.empty()) throw SplitRefused("'" + q.name + "' indexes no objects");

    std::vector<std::size_t> axes(schema.size());
    for (std::size_t i = 0; i < axes.size(); ++i) axes[i] = i;
    std::stable_sort(axes.begin(), axes.end(), [&](std::size_t a, std::size_t b) {
        return extent(schema, a, q.region.axis(a)) > extent(schema, b, q.region.axis(b));
    });

    std::optional<std::pair<Region, Region>> halves;
    for (std::size_t axis : axes) {
        std::vector<Value> vals;
        for (const auto* v : versions) vals.push_back(v->point[axis]);
        std::sort(vals.begin(), vals.end(), [](const Value& a, const Value& b) { return compare(a, b) < 0; });
        const Value& lowest = vals.front();
        std::optional<Value> m;
        for (std::size_t i = vals.size() / 2; i < vals.size(); ++i) {
            if (compare(vals[i], lowest) > 0) {
                m = vals[i];
                break;
            }
        }
        if (!m) continue;
        Region left = q.region;
        Region right = q.region;
        left.axis(axis).hi = *m;
        left.axis(axis).hi_open = true;
        right.axis(axis).lo = *m;
        right.axis(axis).lo_open = false;
        halves.emplace(std::move(left), std::move(right));
        break;
    }
    if (!halves) {
        ++counters_.split_refusals;
        throw SplitRefused("all objects of '" + q.name + "' share one attribute point");
    }

    auto make_child = [&](const std::string& suffix, const Region& region) {
        const QpuId cid = add_qpu(q.name + suffix, q.dc, Role::History, Dispatch::Value, region);
        Qpu& c = *qpus_[cid];
        Qpu& parent_view = *qpus_[id];
        c.scope = parent_view.scope;
        c.index = std::make_unique<index::CrdtIndex>(parent_view.index->restricted(region));
        c.clock = parent_view.clock;
        c.mode = parent_view.mode;
        return cid;
    };
    const QpuId a = make_child(".0", halves->first);
    const QpuId b = make_child(".1", halves->second);
    Qpu& self = *qpus_[id];
    const VectorClock inherited = self.clock.restricted(self.scope);

    if (config_.split.mode == "replace") {
        Qpu& p = *qpus_[self.parents[0]];
        auto pos = std::find(p.children.begin(), p.children.end(), id);
        *pos = a;
        p.children.insert(pos + 1, b);
        const VectorClock known = p.known.count(id) ? p.known[id] : VectorClock{};
        p.known.erase(id);
        p.known[a] = known;
        p.known[b] = known;
        qpus_[a]->parents = {p.id};
        qpus_[b]->parents = {p.id};
        stop_leaf(self);
        self.alive = false;
        bus_.remove_node(self.node);
    } else {
        stop_leaf(self);
        self.role = Role::Internal;
        self.dispatch = Dispatch::Value;
        self.children = {a, b};
        self.known[a] = inherited;
        self.known[b] = inherited;
        self.cache = ResultCache(config_.cache_capacity);
        qpus_[a]->parents = {id};
        qpus_[b]->parents = {id};
    }
    start_leaf(*qpus_[a]);
    start_leaf(*qpus_[b]);
    refused_.erase(id);
    refresh_peers();
    ++counters_.splits;
    return {a, b};
}

QpuId Network::merge_siblings(QpuId ia, QpuId ib, bool enforce_thresholds) {
    if (ia == ib) throw SplitRefused("cannot merge a QPU with itself");
    Qpu& a = *qpus_.at(ia);
    Qpu& b = *qpus_.at(ib);
    if (!a.alive || !b.alive || a.role != Role::History || b.role != Role::History) {
        throw SplitRefused("only history leaves can be merged");
    }
    if (a.parents.size() != 1 || a.parents != b.parents) throw SplitRefused("'" + a.name + "' and '" + b.name + "' are not siblings");
    Qpu& p = *qpus_[a.parents[0]];
    if (p.dispatch != Dispatch::Value) throw SplitRefused("siblings must share a value-dispatch parent");
    auto u = rectangular_union(a.region, b.region);
    if (!u) throw SplitRefused("union of '" + a.name + "' and '" + b.name + "' is not a rectangle");
    if (enforce_thresholds) {
        const std::size_t ca = a.index->object_count();
        const std::size_t cb = b.index->object_count();
        if (!(ca + cb < config_.split.t_split / 2.0)) throw SplitRefused("merged QPU would be too large");
        if (ca >= config_.split.t_merge && cb >= config_.split.t_merge) throw SplitRefused("neither sibling is small");
    }

    auto merged = std::make_unique<index::CrdtIndex>(index::merge(*a.index, *b.index));
    const VectorClock clock = clock_min(a.clock, b.clock);
    const ReplMode mode = a.mode == b.mode ? a.mode : ReplMode::LogReplay;
    const std::set<DcId> scope = a.scope;

    QpuId result;
    const bool collapse = p.children.size() == 2;
    if (collapse) {
        result = p.id;
        p.role = Role::History;
        p.children.clear();
        p.known.clear();
        p.cache = ResultCache(0);
        p.index = std::move(merged);
        p.clock = clock;
        p.mode = mode;
        p.scope = scope;
        p.window = SelectivityWindow(config_.switching.window);
    } else {
        const VectorClock known = clock_min(p.known[ia], p.known[ib]);
        result = add_qpu(p.name + ".m" + std::to_string(counters_.merges), p.dc, Role::History, Dispatch::Value, *u);
        Qpu& m = *qpus_[result];
        Qpu& parent = *qpus_[a.parents[0]];
        m.index = std::move(merged);
        m.clock = clock;
        m.mode = mode;
        m.scope = scope;
        m.parents = {parent.id};
        auto pos = std::find(parent.children.begin(), parent.children.end(), ia);
        *pos = result;
        parent.children.erase(std::find(parent.children.begin(), parent.children.end(), ib));
        parent.known.erase(ia);
        parent.known.erase(ib);
        parent.known[result] = known;
    }
    for (Qpu* gone : {qpus_[ia].get(), qpus_[ib].get()}) {
        stop_leaf(*gone);
        gone->alive = false;
        bus_.remove_node(gone->node);
    }
    start_leaf(*qpus_[result]);
    refresh_peers();
    ++counters_.merges;
    return result;
}

Topology Network::topology() const {
    Topology t;
    for (const auto& q : qpus_) {
        if (!q->alive) continue;
        NodeSpec spec{q->name, q->dc, q->role, q->dispatch, q->region, {}, std::nullopt};
        for (QpuId p : q->parents) spec.parents.push_back(qpus_[p]->name);
        if (q->leaf()) spec.scope = q->scope;
        t.nodes.push_back(std::move(spec));
    }
    return t;
}

std::string Network::describe() const {
    const Schema& schema = store_.schema();
    std::ostringstream os;
    std::function<void(QpuId, int)> dump = [&](QpuId id, int depth) {
        const Qpu& q = *qpus_[id];
        os << std::string(static_cast<std::size_t>(depth) * 2, ' ') << q.name << " [" << to_string(q.role);
        if (q.role == Role::Internal) os << "/" << to_string(q.dispatch);
        os << "] " << dc_name(q.dc) << " region=" << q.region.to_string(schema) << " scope={" << dcs_text(q.scope) << "}";
        if (q.role == Role::History) {
            os << " mode=" << to_string(q.mode) << " objects=" << q.index->object_count()
               << " clock=" << q.clock.to_string();
        }
        os << "\n";
        for (QpuId c : q.children) {
            if (qpus_[c]->alive && qpus_[c]->parents.front() == id) dump(c, depth + 1);
            else if (qpus_[c]->alive) os << std::string(static_cast<std::size_t>(depth + 1) * 2, ' ') << "-> " << qpus_[c]->name << "\n";
        }
    };
    for (const auto& q : qpus_) {
        if (q->alive && q->parents.empty()) dump(q->id, 0);
    }
    return os.str();
}

}  // namespace geoidx::qpu
