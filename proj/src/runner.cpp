#include "geoidx/runner.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "geoidx/oracle.hpp"

namespace geoidx::runner {

using scenario::Action;
using scenario::json;

std::string format_lag(const std::map<DcId, Seq>& lag) {
    std::string out;
    for (const auto& [dc, n] : lag) {
        if (!out.empty()) out += ";";
        out += dc_name(dc) + ":" + std::to_string(n);
    }
    return out;
}

std::string metrics_row(const qpu::QueryResult& r) {
    std::ostringstream os;
    os << r.completed << ',' << r.id << ',' << r.query.level.to_string() << ',' << r.stats.qpus_visited << ','
       << r.stats.cache_hits << ',' << r.stats.candidate_checked << ',' << r.stats.false_positives_removed << ','
       << r.keys.size() << ',' << format_lag(r.lag);
    return os.str();
}

json network_config_to_json(const Schema& schema, const qpu::NetworkConfig& c) {
    json j;
    j["replication"] = c.index_replication;
    j["mode"] = qpu::to_string(c.initial_mode);
    j["gossip_period"] = c.gossip_period;
    j["ingest_delay"] = c.ingest_delay;
    j["scrub_period"] = c.scrub_period;
    j["cache_capacity"] = c.cache_capacity;
    json binning = json::object();
    for (std::size_t i = 0; i < schema.size(); ++i) {
        const auto b = c.binning.at(i);
        if (b.kind == index::AttrBinning::Kind::EquiWidth) binning[schema.at(i).name] = {{"kind", "equi_width"}, {"bins", b.bins}};
    }
    j["binning"] = std::move(binning);
    j["switching"] = {{"adaptive", c.switching.adaptive},
                      {"window", c.switching.window},
                      {"theta_low", c.switching.theta_low},
                      {"theta_high", c.switching.theta_high}};
    j["split"] = {{"automatic", c.split.automatic},
                  {"t_split", c.split.t_split},
                  {"t_merge", c.split.t_merge},
                  {"mode", c.split.mode}};
    return j;
}

namespace {

std::string keys_text(const std::set<Key>& keys, std::size_t limit = 8) {
    std::string out;
    std::size_t n = 0;
    for (const auto& k : keys) {
        if (n++ == limit) {
            out += " ...";
            break;
        }
        out += (out.empty() ? "" : " ") + k;
    }
    return out;
}

std::set<Key> minus(const std::set<Key>& a, const std::set<Key>& b) {
    std::set<Key> out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
    return out;
}

std::set<Key> both(const std::set<Key>& a, const std::set<Key>& b) {
    std::set<Key> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
    return out;
}

class Run {
public:
    Run(const scenario::Scenario& s, const RunOptions& opts)
        : s_(s),
          net_cfg_(with_seed(s.net, opts.seed)),
          sim_(net_cfg_.seed),
          bus_(sim_, net_cfg_),
          store_(sim_, bus_, s.schema, s.dcs),
          net_(sim_, bus_, store_, s.topology, s.network) {
        out_.trace_enabled = opts.trace || s.trace;
        out_.verify_enabled = opts.oracle || s.oracle;
        bus_.set_tracing(out_.trace_enabled);
    }

    RunOutput go() {
        for (const Action& a : s_.actions) {
            sim_.at(a.tick, [this, &a] { perform(a); });
        }
        sim_.run_until_quiescent(s_.max_ticks);
        out_.final_tick = sim_.now();
        const std::size_t scrubbed = net_.scrub_all();
        log("final scrub removed " + std::to_string(scrubbed) + " postings");
        if (out_.verify_enabled) verify_indexes();
        finish();
        return std::move(out_);
    }

    OneShot one_shot(query::Query q) {
        for (const Action& a : s_.actions) {
            sim_.at(a.tick, [this, &a] { perform(a); });
        }
        sim_.run_until_quiescent(s_.max_ticks);
        net_.scrub_all();
        // Let clock gossip settle so snapshot levels see the loaded data.
        sim_.run_until(sim_.now() + 4 * s_.network.gossip_period + 2 * net_cfg_.max_delay);
        OneShot o;
        o.result = net_.route(q);
        o.current = oracle::scan(store_.replica(q.origin), store_.schema(), q.expr);
        return o;
    }

private:
    static sim::NetConfig with_seed(sim::NetConfig c, std::optional<std::uint64_t> seed) {
        if (seed) c.seed = *seed;
        return c;
    }

    void log(const std::string& line) { log_ << "tick " << sim_.now() << ": " << line << "\n"; }

    std::optional<qpu::QpuId> named(const Action& a, const std::string& name) {
        auto id = net_.find(name);
        if (!id) log(std::string(scenario::to_string(a.kind)) + " (" + a.origin + "): no QPU named '" + name + "'");
        return id;
    }

    void perform(const Action& a) {
        switch (a.kind) {
            case Action::Kind::Put:
                store_.put(a.dc, a.key, a.point);
                break;
            case Action::Kind::Delete:
                if (store_.get(a.dc, a.key)) store_.remove(a.dc, a.key);
                else log("delete of absent key '" + a.key + "' at " + dc_name(a.dc) + " skipped");
                break;
            case Action::Kind::Query:
                net_.submit(a.query, [this](const qpu::QueryResult& r) { on_result(r); });
                break;
            case Action::Kind::Split:
            case Action::Kind::Merge:
                // Topology changes wait for in-flight queries to drain.
                if (net_.in_flight() > 0) {
                    sim_.after(1, [this, &a] { perform(a); });
                    return;
                }
                resize(a);
                break;
            case Action::Kind::Partition:
                bus_.add_partition(a.window);
                log("partition " + dc_name(a.window.a) + "-" + dc_name(a.window.b) + " until tick " +
                    std::to_string(a.window.end));
                break;
            case Action::Kind::Scrub:
                log("scrub removed " + std::to_string(net_.scrub_all()) + " postings");
                break;
            case Action::Kind::SetMode:
                if (auto id = named(a, a.qpus[0])) {
                    try {
                        net_.set_mode(*id, a.mode);
                        log("set-mode " + a.qpus[0] + " " + qpu::to_string(a.mode));
                    } catch (const Error& e) {
                        log("set-mode " + a.qpus[0] + " refused: " + e.what());
                    }
                }
                break;
        }
    }

    void resize(const Action& a) {
        try {
            if (a.kind == Action::Kind::Split) {
                if (auto id = named(a, a.qpus[0])) {
                    const auto [l, r] = net_.split(*id);
                    log("split " + a.qpus[0] + " into " + net_.qpu(l).name + " " +
                        net_.qpu(l).region.to_string(store_.schema()) + " and " + net_.qpu(r).name + " " +
                        net_.qpu(r).region.to_string(store_.schema()));
                }
            } else {
                auto x = named(a, a.qpus[0]);
                auto y = named(a, a.qpus[1]);
                if (x && y) {
                    const auto m = net_.merge_siblings(*x, *y);
                    log("merge " + a.qpus[0] + " + " + a.qpus[1] + " into " + net_.qpu(m).name);
                }
            }
        } catch (const qpu::SplitRefused& e) {
            log(std::string(scenario::to_string(a.kind)) + " refused: " + e.what());
        }
    }

    void on_result(const qpu::QueryResult& r) {
        metrics_ << metrics_row(r) << "\n";
        trace_ << r.trace;
        out_.results.push_back(r);
        if (!out_.verify_enabled) return;

        const Schema& schema = store_.schema();
        const auto& replica = store_.replica(r.query.origin);
        std::ostringstream line;
        line << "query " << r.id << " " << dc_name(r.query.origin) << " tick " << r.completed << " "
             << r.query.level.to_string() << ": ";
        ++out_.checks;
        if (r.error) {
            ++out_.failures;
            report_ << line.str() << "FAIL error " << *r.error << "\n";
            return;
        }
        const auto current = oracle::scan(replica, schema, r.query.expr);
        const auto at_target = oracle::scan(oracle::replay_to(replica, r.target).objects, schema, r.query.expr);
        const auto extra = minus(r.keys, current);
        const auto missing = minus(both(at_target, current), r.keys);
        const bool stable = at_target == current;
        const auto exact_missing = stable ? minus(current, r.keys) : std::set<Key>{};
        if (extra.empty() && missing.empty() && exact_missing.empty()) {
            report_ << line.str() << "PASS result=" << r.keys.size() << " oracle=" << current.size()
                    << (stable ? " exact" : " bounded") << "\n";
        } else {
            ++out_.failures;
            report_ << line.str() << "FAIL";
            if (!extra.empty()) report_ << " false-positives=[" << keys_text(extra) << "]";
            if (!missing.empty()) report_ << " missing=[" << keys_text(missing) << "]";
            if (!exact_missing.empty()) report_ << " missing=[" << keys_text(exact_missing) << "]";
            report_ << " " << query::print(r.query) << "\n";
        }
    }

    void verify_indexes() {
        const Schema& schema = store_.schema();
        for (auto id : net_.qpus(qpu::Role::History)) {
            const qpu::Qpu& q = net_.qpu(id);
            ++out_.checks;
            const std::string expect =
                oracle::rebuild_index(store_.replica(q.dc), schema, q.region, s_.network.binning, q.scope);
            if (q.index->canonical() == expect) {
                report_ << "index " << q.name << ": PASS objects=" << q.index->object_count() << "\n";
            } else {
                ++out_.failures;
                report_ << "index " << q.name << ": FAIL differs from rebuild\n";
            }
        }
        ++out_.checks;
        if (store_.converged()) {
            report_ << "store: PASS replicas converged\n";
        } else {
            ++out_.failures;
            report_ << "store: FAIL replicas differ\n";
        }
    }

    void finish() {
        const Schema& schema = store_.schema();
        out_.metrics_csv = std::string(kMetricsHeader) + "\n" + metrics_.str();
        out_.routing_trace = trace_.str();
        if (out_.trace_enabled) out_.event_trace_csv = bus_.trace_csv();
        if (out_.verify_enabled) {
            report_ << "summary: " << (out_.checks - out_.failures) << "/" << out_.checks << " checks passed, "
                    << (out_.passed() ? "PASS" : "FAIL") << "\n";
            out_.verify_report = report_.str();
        }
        std::ostringstream sw;
        sw << kModeSwitchHeader << "\n";
        for (const auto& m : net_.mode_switches()) {
            char sel[32];
            std::snprintf(sel, sizeof sel, "%.4f", m.selectivity);
            sw << m.tick << ',' << m.qpu << ',' << qpu::to_string(m.from) << ',' << qpu::to_string(m.to) << ','
               << sel << "\n";
        }
        out_.mode_switches_csv = sw.str();
        out_.action_log = log_.str();
        out_.topology = net_.describe();

        json st;
        st["name"] = s_.name + "-final";
        st["seed"] = net_cfg_.seed;
        st["schema"] = scenario::schema_to_json(schema);
        st["dcs"] = s_.dcs;
        st["index"] = network_config_to_json(schema, s_.network);
        st["topology"] = scenario::topology_to_json(schema, net_.topology());
        json dataset = json::array();
        for (const auto& [key, v] : store_.replica(0).objects()) {
            if (v.deleted) continue;
            Action a;
            a.kind = Action::Kind::Put;
            a.dc = 0;
            a.key = key;
            a.point = v.attrs;
            json j = scenario::action_to_json(schema, a);
            j.erase("op");
            j.erase("tick");
            dataset.push_back(std::move(j));
        }
        st["dataset"] = std::move(dataset);
        out_.final_state = std::move(st);
    }

    const scenario::Scenario& s_;
    sim::NetConfig net_cfg_;
    sim::Simulator sim_;
    sim::Bus bus_;
    store::GeoStore store_;
    qpu::Network net_;
    RunOutput out_;
    std::ostringstream metrics_;
    std::ostringstream trace_;
    std::ostringstream report_;
    std::ostringstream log_;
};

void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error("cannot write '" + p.string() + "'");
    f << text;
}

}  // namespace

RunOutput run(const scenario::Scenario& s, const RunOptions& opts) { return Run(s, opts).go(); }

OneShot one_shot(const scenario::Scenario& s, const query::Query& q, const RunOptions& opts) {
    return Run(s, opts).one_shot(q);
}

void write_outputs(const RunOutput& out, const std::string& dir) {
    const std::filesystem::path d(dir);
    std::filesystem::create_directories(d);
    write_file(d / "metrics.csv", out.metrics_csv);
    write_file(d / "routing_trace.txt", out.routing_trace);
    write_file(d / "mode_switches.csv", out.mode_switches_csv);
    write_file(d / "actions.log", out.action_log);
    write_file(d / "topology.txt", out.topology);
    write_file(d / "final_state.json", out.final_state.dump(2) + "\n");
    if (out.trace_enabled) write_file(d / "events.csv", out.event_trace_csv);
    if (out.verify_enabled) write_file(d / "verify_report.txt", out.verify_report);
}

}  // namespace geoidx::runner
