#include <filesystem>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "geoidx/oracle.hpp"
#include "geoidx/runner.hpp"
#include "geoidx/workload.hpp"

namespace py = pybind11;
using namespace geoidx;

namespace {

using scenario::json;

json to_json(const py::handle& h) {
    if (h.is_none()) return nullptr;
    if (py::isinstance<py::bool_>(h)) return h.cast<bool>();
    if (py::isinstance<py::int_>(h)) {
        const auto i = h.cast<std::int64_t>();
        if (i >= 0) return static_cast<std::uint64_t>(i);
        return i;
    }
    if (py::isinstance<py::float_>(h)) return h.cast<double>();
    if (py::isinstance<py::str>(h)) return h.cast<std::string>();
    if (py::isinstance<py::dict>(h)) {
        json o = json::object();
        for (const auto& [k, v] : h.cast<py::dict>()) o[py::str(k).cast<std::string>()] = to_json(v);
        return o;
    }
    if (py::isinstance<py::list>(h) || py::isinstance<py::tuple>(h)) {
        json a = json::array();
        for (const auto& v : h) a.push_back(to_json(v));
        return a;
    }
    throw py::type_error("cannot convert " + py::str(py::type::of(h)).cast<std::string>() + " to JSON");
}

jsonio::Document doc_of(const json& j, const std::string& source) { return jsonio::Document::parse(j.dump(), source); }

py::object value_to_py(const Value& v) {
    if (const auto* d = std::get_if<double>(&v)) return py::float_(*d);
    return py::str(std::get<std::string>(v));
}

py::dict result_to_py(const qpu::QueryResult& r) {
    py::dict d;
    d["id"] = r.id;
    d["query"] = query::print(r.query);
    d["keys"] = std::vector<Key>(r.keys.begin(), r.keys.end());
    d["target"] = r.target.to_string();
    d["clock"] = r.clock.to_string();
    d["issued"] = r.issued;
    d["completed"] = r.completed;
    d["qpus_visited"] = r.stats.qpus_visited;
    d["cache_hits"] = r.stats.cache_hits;
    d["candidate_checked"] = r.stats.candidate_checked;
    d["false_positives_removed"] = r.stats.false_positives_removed;
    d["trace"] = r.trace;
    d["error"] = r.error ? py::object(py::str(*r.error)) : py::none();
    return d;
}

// A simulated deployment driven step by step from Python.
class Cluster {
public:
    Cluster(const py::list& schema, std::size_t dcs, const std::string& topology, std::size_t partitions,
            const py::dict& net, const py::dict& index)
        : schema_(std::make_shared<const Schema>(
              scenario::schema_from_json(doc_of(json{{"schema", to_json(schema)}}, "schema"), "/schema"))),
          dcs_(dcs) {
        // Reuse the scenario loader so options are validated the same way.
        json s{{"name", "python"}, {"schema", to_json(schema)}, {"dcs", dcs}, {"net", to_json(net)},
               {"index", to_json(index)}, {"topology", {{"preset", topology}, {"partitions", partitions}}}};
        if (net.contains("seed")) {
            s["seed"] = s["net"]["seed"];
            s["net"].erase("seed");
        }
        scenario_ = scenario::parse_scenario(doc_of(s, "cluster"));
        sim_ = std::make_unique<sim::Simulator>(scenario_.net.seed);
        bus_ = std::make_unique<sim::Bus>(*sim_, scenario_.net);
        store_ = std::make_unique<store::GeoStore>(*sim_, *bus_, scenario_.schema, dcs);
        net_ = std::make_unique<qpu::Network>(*sim_, *bus_, *store_, scenario_.topology, scenario_.network);
    }

    void put(const py::object& dc, const Key& key, const py::dict& attrs) {
        store_->put(dc_of(dc), key, schema().to_point(to_attrs(attrs)));
    }

    bool remove(const py::object& dc, const Key& key) {
        const DcId d = dc_of(dc);
        if (!store_->get(d, key)) return false;
        store_->remove(d, key);
        return true;
    }

    py::object get(const py::object& dc, const Key& key) const {
        const auto v = store_->get(dc_of(dc), key);
        if (!v) return py::none();
        py::dict d;
        for (std::size_t i = 0; i < schema().size(); ++i) d[py::str(schema().at(i).name)] = value_to_py(v->attrs[i]);
        return d;
    }

    Tick run() { return sim_->run_until_quiescent(scenario_.max_ticks); }
    void advance(Tick ticks) { sim_->run_until(sim_->now() + ticks); }
    Tick now() const { return sim_->now(); }

    py::dict route(const std::string& text, const py::object& dc) {
        auto q = query::parse(text, schema());
        q.origin = dc_of(dc);
        return result_to_py(net_->route(q));
    }

    std::vector<Key> scan(const std::string& text, const py::object& dc) const {
        const auto q = query::parse(text, schema());
        const auto keys = oracle::scan(store_->replica(dc_of(dc)), schema(), q.expr);
        return {keys.begin(), keys.end()};
    }

    std::size_t scrub() { return net_->scrub_all(); }
    bool converged() const { return store_->converged(); }
    std::string describe() const { return net_->describe(); }

    std::map<std::string, std::string> leaf_indexes() const {
        std::map<std::string, std::string> out;
        for (auto id : net_->qpus(qpu::Role::History)) out[net_->qpu(id).name] = net_->qpu(id).index->canonical();
        return out;
    }

    std::map<std::string, std::string> rebuilt_indexes() const {
        std::map<std::string, std::string> out;
        for (auto id : net_->qpus(qpu::Role::History)) {
            const auto& q = net_->qpu(id);
            std::optional<std::set<DcId>> origins;
            if (q.scope.size() != dcs_) origins = q.scope;
            out[q.name] = oracle::rebuild_index(store_->replica(q.dc), schema(), q.region, q.index->binning(), origins);
        }
        return out;
    }

    std::pair<std::string, std::string> split(const std::string& name) {
        const auto [a, b] = net_->split(find(name));
        return {net_->qpu(a).name, net_->qpu(b).name};
    }

    std::string merge(const std::string& a, const std::string& b) {
        return net_->qpu(net_->merge_siblings(find(a), find(b))).name;
    }

private:
    const Schema& schema() const { return *schema_; }

    DcId dc_of(const py::object& dc) const { return scenario::parse_dc(to_json(dc), dcs_); }

    qpu::QpuId find(const std::string& name) const {
        auto id = net_->find(name);
        if (!id) throw py::key_error("no QPU named '" + name + "'");
        return *id;
    }

    static Attrs to_attrs(const py::dict& d) {
        Attrs a;
        for (const auto& [k, v] : d) {
            const auto name = py::str(k).cast<std::string>();
            if (py::isinstance<py::str>(v)) a[name] = v.cast<std::string>();
            else a[name] = v.cast<double>();
        }
        return a;
    }

    std::shared_ptr<const Schema> schema_;
    std::size_t dcs_;
    scenario::Scenario scenario_;
    std::unique_ptr<sim::Simulator> sim_;
    std::unique_ptr<sim::Bus> bus_;
    std::unique_ptr<store::GeoStore> store_;
    std::unique_ptr<qpu::Network> net_;
};

py::dict run_scenario(const std::string& path, std::optional<std::uint64_t> seed, bool trace, bool oracle,
                      std::optional<std::string> out_dir) {
    const auto s = scenario::load_scenario(path);
    runner::RunOptions o;
    o.seed = seed;
    o.trace = trace;
    o.oracle = oracle;
    const auto out = runner::run(s, o);
    if (out_dir) runner::write_outputs(out, *out_dir);
    py::dict d;
    d["name"] = s.name;
    d["metrics_csv"] = out.metrics_csv;
    d["routing_trace"] = out.routing_trace;
    d["event_trace_csv"] = out.event_trace_csv;
    d["verify_report"] = out.verify_report;
    d["mode_switches_csv"] = out.mode_switches_csv;
    d["final_state"] = out.final_state.dump(2);
    d["checks"] = out.checks;
    d["failures"] = out.failures;
    d["passed"] = out.passed();
    d["final_tick"] = out.final_tick;
    py::list results;
    for (const auto& r : out.results) results.append(result_to_py(r));
    d["results"] = results;
    return d;
}

std::string gen_workload(const std::string& params_path, std::uint64_t seed) {
    const auto doc = jsonio::Document::load(params_path);
    const auto base = std::filesystem::path(params_path).parent_path().string();
    return workload::generate(workload::parse_params(doc, base.empty() ? "." : base), seed).dump(2);
}

std::string normalize_query(const std::string& text, const py::list& schema) {
    const auto s = scenario::schema_from_json(doc_of(json{{"schema", to_json(schema)}}, "schema"), "/schema");
    return query::print(query::parse(text, s));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Simulated geo-distributed secondary index";

    // Translators run newest first, so the base class goes first.
    const auto base = py::register_exception<Error>(m, "GeoidxError", PyExc_RuntimeError);
    py::register_exception<jsonio::ValidationError>(m, "ValidationError", base.ptr());
    py::register_exception<query::ParseError>(m, "QueryError", base.ptr());

    py::class_<Cluster>(m, "Cluster")
        .def(py::init<const py::list&, std::size_t, const std::string&, std::size_t, const py::dict&, const py::dict&>(),
             py::arg("schema"), py::arg("dcs") = 1, py::arg("topology") = "single", py::arg("partitions") = 2,
             py::arg("net") = py::dict(), py::arg("index") = py::dict())
        .def("put", &Cluster::put, py::arg("dc"), py::arg("key"), py::arg("attrs"))
        .def("delete", &Cluster::remove, py::arg("dc"), py::arg("key"))
        .def("get", &Cluster::get, py::arg("dc"), py::arg("key"))
        .def("run", &Cluster::run, "Runs until no foreground work remains; returns the tick.")
        .def("advance", &Cluster::advance, py::arg("ticks"))
        .def_property_readonly("now", &Cluster::now)
        .def("route", &Cluster::route, py::arg("query"), py::arg("dc") = "DC1")
        .def("scan", &Cluster::scan, py::arg("query"), py::arg("dc") = "DC1")
        .def("scrub", &Cluster::scrub)
        .def("converged", &Cluster::converged)
        .def("describe", &Cluster::describe)
        .def("leaf_indexes", &Cluster::leaf_indexes)
        .def("rebuilt_indexes", &Cluster::rebuilt_indexes)
        .def("split", &Cluster::split, py::arg("qpu"))
        .def("merge", &Cluster::merge, py::arg("a"), py::arg("b"));

    m.def("run_scenario", &run_scenario, py::arg("path"), py::arg("seed") = py::none(), py::arg("trace") = false,
          py::arg("oracle") = false, py::arg("out_dir") = py::none());
    m.def("gen_workload", &gen_workload, py::arg("params_path"), py::arg("seed") = 1);
    m.def("normalize_query", &normalize_query, py::arg("query"), py::arg("schema"));
    m.attr("METRICS_HEADER") = runner::kMetricsHeader;
}
