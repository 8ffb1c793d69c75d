#include "geoidx/scenario.hpp"

#include <algorithm>
#include <filesystem>
#include <set>

namespace geoidx::scenario {

using jsonio::Document;

const char* to_string(Action::Kind k) {
    switch (k) {
        case Action::Kind::Put: return "put";
        case Action::Kind::Delete: return "delete";
        case Action::Kind::Query: return "query";
        case Action::Kind::Split: return "split";
        case Action::Kind::Merge: return "merge";
        case Action::Kind::Partition: return "partition";
        case Action::Kind::Scrub: return "scrub";
        case Action::Kind::SetMode: return "set-mode";
    }
    return "?";
}

namespace {

using Obj = jsonio::Object;

const json& node_at(const Document& doc, const std::string& ptr) { return doc.root().at(json::json_pointer(ptr)); }

void require_array(const Document& doc, const std::string& ptr) {
    if (!node_at(doc, ptr).is_array()) doc.fail(ptr, "expected an array");
}

Value value_for(const Document& doc, const std::string& ptr, const Schema& schema, std::size_t axis) {
    const json& v = node_at(doc, ptr);
    const Attribute& a = schema.at(axis);
    Value out;
    if (a.kind == AttrKind::Numeric) {
        if (!v.is_number()) doc.fail(ptr, "'" + a.name + "' takes a number");
        out = v.get<double>();
    } else {
        if (!v.is_string()) doc.fail(ptr, "'" + a.name + "' takes a string");
        out = v.get<std::string>();
    }
    if (!schema.conforms(axis, out)) {
        doc.fail(ptr, format_value(out) + " is outside the domain of '" + a.name + "' [" + format_value(a.min) + ", " +
                          format_value(a.max) + "]");
    }
    return out;
}

Point point_for(const Document& doc, const std::string& ptr, const Schema& schema) {
    const json& v = node_at(doc, ptr);
    if (!v.is_object()) doc.fail(ptr, "attrs must be an object");
    Point p(schema.size());
    std::vector<bool> seen(schema.size(), false);
    for (const auto& [k, _] : v.items()) {
        const auto axis = schema.find(k);
        if (!axis) doc.fail(ptr + "/" + jsonio::pointer_token(k), "unknown attribute '" + k + "'");
        p[*axis] = value_for(doc, ptr + "/" + jsonio::pointer_token(k), schema, *axis);
        seen[*axis] = true;
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
        if (!seen[i]) doc.fail(ptr, "attrs lack attribute '" + schema.at(i).name + "'");
    }
    return p;
}

Region region_for(const Document& doc, const std::string& ptr, const Schema& schema) {
    Region r = Region::full(schema);
    const json& v = node_at(doc, ptr);
    if (!v.is_object()) doc.fail(ptr, "region must be an object of attribute intervals");
    for (const auto& [k, iv] : v.items()) {
        const std::string kp = ptr + "/" + jsonio::pointer_token(k);
        const auto axis = schema.find(k);
        if (!axis) doc.fail(kp, "unknown attribute '" + k + "'");
        Interval& out = r.axis(*axis);
        if (iv.is_array()) {
            if (iv.size() != 2) doc.fail(kp, "interval arrays hold [lo, hi]");
            out.lo = value_for(doc, kp + "/0", schema, *axis);
            out.hi = value_for(doc, kp + "/1", schema, *axis);
            out.lo_open = out.hi_open = false;
        } else {
            Obj o(doc, kp, {"lo", "hi", "lo_open", "hi_open"});
            if (o.has("lo")) out.lo = value_for(doc, o.p("lo"), schema, *axis);
            if (o.has("hi")) out.hi = value_for(doc, o.p("hi"), schema, *axis);
            out.lo_open = o.flag("lo_open", false);
            out.hi_open = o.flag("hi_open", false);
        }
        if (out.empty()) doc.fail(kp, "interval for '" + k + "' is empty");
    }
    return r;
}

std::set<DcId> dc_set(const Document& doc, const std::string& ptr, std::size_t dcs) {
    require_array(doc, ptr);
    std::set<DcId> out;
    const json& v = node_at(doc, ptr);
    for (std::size_t i = 0; i < v.size(); ++i) {
        try {
            out.insert(parse_dc(v[i], dcs));
        } catch (const Error& e) {
            doc.fail(ptr + "/" + std::to_string(i), e.what());
        }
    }
    return out;
}

DcId dc_field(const Obj& o, const std::string& k, std::size_t dcs) {
    try {
        return parse_dc(o.at(k), dcs);
    } catch (const jsonio::ValidationError&) {
        throw;
    } catch (const Error& e) {
        o.doc().fail(o.p(k), e.what());
    }
}

sim::NetConfig net_config(const Document& doc, const std::string& ptr, std::size_t dcs, std::uint64_t seed) {
    sim::NetConfig c;
    c.seed = seed;
    if (!doc.root().contains(json::json_pointer(ptr))) return c;
    Obj o(doc, ptr, {"min_delay", "max_delay", "dup_prob", "reorder_jitter", "local_delay", "partitions"});
    c.min_delay = o.u64("min_delay", c.min_delay);
    c.max_delay = o.u64("max_delay", c.max_delay);
    c.dup_prob = o.num("dup_prob", c.dup_prob);
    c.reorder_jitter = o.u64("reorder_jitter", c.reorder_jitter);
    c.local_delay = o.u64("local_delay", c.local_delay);
    if (o.has("partitions")) {
        require_array(doc, o.p("partitions"));
        for (std::size_t i = 0; i < o.at("partitions").size(); ++i) {
            Obj w(doc, o.p("partitions") + "/" + std::to_string(i), {"a", "b", "start", "end"});
            sim::PartitionWindow pw{w.u64("start"), w.u64("end"), dc_field(w, "a", dcs), dc_field(w, "b", dcs)};
            if (pw.end <= pw.start) doc.fail(w.ptr(), "partition window must end after it starts");
            c.partitions.push_back(pw);
        }
    }
    try {
        c.validate();
    } catch (const Error& e) {
        doc.fail(ptr, e.what());
    }
    return c;
}

qpu::NetworkConfig network_config(const Document& doc, const std::string& ptr, const Schema& schema) {
    qpu::NetworkConfig c;
    c.binning = index::Binning::none(schema);
    if (!doc.root().contains(json::json_pointer(ptr))) return c;
    Obj o(doc, ptr,
          {"replication", "mode", "gossip_period", "ingest_delay", "scrub_period", "cache_capacity", "binning",
           "switching", "split"});
    c.index_replication = o.flag("replication", c.index_replication);
    if (o.has("mode")) {
        try {
            c.initial_mode = qpu::parse_mode(o.str("mode"));
        } catch (const jsonio::ValidationError&) {
            throw;
        } catch (const Error& e) {
            doc.fail(o.p("mode"), e.what());
        }
    }
    c.gossip_period = o.u64("gossip_period", c.gossip_period);
    if (c.gossip_period == 0) doc.fail(o.p("gossip_period"), "gossip_period must be positive");
    c.ingest_delay = o.u64("ingest_delay", c.ingest_delay);
    c.scrub_period = o.u64("scrub_period", c.scrub_period);
    c.cache_capacity = o.u64("cache_capacity", c.cache_capacity);
    if (o.has("binning")) {
        const json& b = o.at("binning");
        if (!b.is_object()) doc.fail(o.p("binning"), "binning must map attribute names to policies");
        std::map<std::string, index::AttrBinning> policies;
        for (const auto& [k, _] : b.items()) {
            const std::string kp = o.p("binning") + "/" + jsonio::pointer_token(k);
            if (!schema.find(k)) doc.fail(kp, "unknown attribute '" + k + "'");
            Obj pol(doc, kp, {"kind", "bins"});
            index::AttrBinning ab;
            const std::string kind = pol.str("kind", "equi_width");
            if (kind == "none") ab.kind = index::AttrBinning::Kind::None;
            else if (kind == "equi_width") ab.kind = index::AttrBinning::Kind::EquiWidth;
            else doc.fail(pol.p("kind"), "binning kind must be 'none' or 'equi_width'");
            ab.bins = pol.u64("bins", ab.bins);
            if (ab.bins == 0) doc.fail(pol.p("bins"), "bins must be positive");
            if (ab.kind == index::AttrBinning::Kind::EquiWidth && schema.at(*schema.find(k)).kind != AttrKind::Numeric) {
                doc.fail(kp, "equi-width binning needs a numeric attribute");
            }
            policies[k] = ab;
        }
        c.binning = index::Binning(schema, policies);
    }
    if (o.has("switching")) {
        Obj s(doc, o.p("switching"), {"adaptive", "window", "theta_low", "theta_high"});
        c.switching.adaptive = s.flag("adaptive", c.switching.adaptive);
        c.switching.window = s.u64("window", c.switching.window);
        c.switching.theta_low = s.num("theta_low", c.switching.theta_low);
        c.switching.theta_high = s.num("theta_high", c.switching.theta_high);
        try {
            c.switching.validate();
        } catch (const Error& e) {
            doc.fail(s.ptr(), e.what());
        }
    }
    if (o.has("split")) {
        Obj s(doc, o.p("split"), {"automatic", "t_split", "t_merge", "mode"});
        c.split.automatic = s.flag("automatic", c.split.automatic);
        c.split.t_split = s.u64("t_split", c.split.t_split);
        c.split.t_merge = s.u64("t_merge", c.split.t_merge);
        c.split.mode = s.str("mode", c.split.mode);
        try {
            c.split.validate();
        } catch (const Error& e) {
            doc.fail(s.ptr(), e.what());
        }
    }
    if (c.switching.adaptive && !c.index_replication) {
        doc.fail(o.p("switching"), "adaptive switching needs index replication");
    }
    if (c.initial_mode == qpu::ReplMode::IndexDelta && !c.index_replication) {
        doc.fail(o.p("mode"), "index_delta mode needs index replication");
    }
    return c;
}

qpu::Topology topology(const Document& doc, const std::string& ptr, const Schema& schema, std::size_t dcs) {
    if (!doc.root().contains(json::json_pointer(ptr))) return qpu::Topology::single(schema, dcs);
    const json& v = node_at(doc, ptr);
    if (!v.is_object()) doc.fail(ptr, "topology must be an object");
    if (v.contains("preset")) {
        Obj o(doc, ptr, {"preset", "partitions"});
        const std::string preset = o.str("preset");
        const std::size_t parts = o.u64("partitions", 2);
        try {
            if (preset == "single") return qpu::Topology::single(schema, dcs);
            if (preset == "value_grid") return qpu::Topology::value_grid(schema, dcs, parts);
            if (preset == "fig2") return qpu::Topology::fig2(schema, dcs, parts);
        } catch (const Error& e) {
            doc.fail(o.p("partitions"), e.what());
        }
        doc.fail(o.p("preset"), "unknown topology preset '" + preset + "' (expected single, value_grid or fig2)");
    }
    Obj o(doc, ptr, {"nodes"});
    const std::string np = o.p("nodes");
    require_array(doc, np);
    qpu::Topology t;
    for (std::size_t i = 0; i < o.at("nodes").size(); ++i) {
        Obj n(doc, np + "/" + std::to_string(i), {"name", "dc", "role", "dispatch", "region", "parents", "scope"});
        qpu::NodeSpec spec;
        spec.name = n.str("name");
        spec.dc = dc_field(n, "dc", dcs);
        try {
            spec.role = qpu::parse_role(n.str("role"));
            if (n.has("dispatch")) spec.dispatch = qpu::parse_dispatch(n.str("dispatch"));
        } catch (const jsonio::ValidationError&) {
            throw;
        } catch (const Error& e) {
            doc.fail(n.ptr(), e.what());
        }
        spec.region = n.has("region") ? region_for(doc, n.p("region"), schema) : Region::full(schema);
        if (n.has("parents")) {
            require_array(doc, n.p("parents"));
            for (std::size_t j = 0; j < n.at("parents").size(); ++j) {
                const json& pj = n.at("parents")[j];
                if (!pj.is_string()) doc.fail(n.p("parents") + "/" + std::to_string(j), "parent names are strings");
                spec.parents.push_back(pj.get<std::string>());
            }
        }
        if (n.has("scope")) spec.scope = dc_set(doc, n.p("scope"), dcs);
        t.nodes.push_back(std::move(spec));
    }
    return t;
}

Action parse_action(const Document& doc, const std::string& ptr, const Schema& schema, std::size_t dcs) {
    const json& v = node_at(doc, ptr);
    if (!v.is_object() || !v.contains("op") || !v.at("op").is_string()) doc.fail(ptr, "action needs an 'op' string");
    const std::string op = v.at("op").get<std::string>();
    Action a;
    a.origin = doc.source() + ":" + std::to_string(doc.line_of(ptr));
    if (op == "put") {
        Obj o(doc, ptr, {"op", "tick", "dc", "key", "attrs"});
        a.kind = Action::Kind::Put;
        a.tick = o.u64("tick", 0);
        a.dc = dc_field(o, "dc", dcs);
        a.key = o.str("key");
        a.point = point_for(doc, o.p("attrs"), schema);
    } else if (op == "delete") {
        Obj o(doc, ptr, {"op", "tick", "dc", "key"});
        a.kind = Action::Kind::Delete;
        a.tick = o.u64("tick", 0);
        a.dc = dc_field(o, "dc", dcs);
        a.key = o.str("key");
    } else if (op == "query") {
        Obj o(doc, ptr, {"op", "tick", "dc", "query"});
        a.kind = Action::Kind::Query;
        a.tick = o.u64("tick", 0);
        a.dc = dc_field(o, "dc", dcs);
        try {
            a.query = query::parse(o.str("query"), schema);
        } catch (const query::ParseError& e) {
            doc.fail(o.p("query"), std::string("query error at offset ") + std::to_string(e.offset()) + ": " + e.what());
        } catch (const Error& e) {
            doc.fail(o.p("query"), e.what());
        }
        a.query.origin = a.dc;
        try {
            query::to_rectangles(a.query.expr, schema);
        } catch (const Error& e) {
            doc.fail(o.p("query"), e.what());
        }
    } else if (op == "split") {
        Obj o(doc, ptr, {"op", "tick", "qpu"});
        a.kind = Action::Kind::Split;
        a.tick = o.u64("tick", 0);
        a.qpus = {o.str("qpu")};
    } else if (op == "merge") {
        Obj o(doc, ptr, {"op", "tick", "qpus"});
        a.kind = Action::Kind::Merge;
        a.tick = o.u64("tick", 0);
        const json& q = o.at("qpus");
        if (!q.is_array() || q.size() != 2 || !q[0].is_string() || !q[1].is_string()) {
            doc.fail(o.p("qpus"), "merge takes two QPU names");
        }
        a.qpus = {q[0].get<std::string>(), q[1].get<std::string>()};
    } else if (op == "partition") {
        Obj o(doc, ptr, {"op", "tick", "a", "b", "duration"});
        a.kind = Action::Kind::Partition;
        a.tick = o.u64("tick", 0);
        const Tick d = o.u64("duration");
        if (d == 0) doc.fail(o.p("duration"), "duration must be positive");
        a.window = sim::PartitionWindow{a.tick, a.tick + d, dc_field(o, "a", dcs), dc_field(o, "b", dcs)};
        if (a.window.a == a.window.b) doc.fail(o.p("b"), "a partition needs two different DCs");
    } else if (op == "scrub") {
        Obj o(doc, ptr, {"op", "tick"});
        a.kind = Action::Kind::Scrub;
        a.tick = o.u64("tick", 0);
    } else if (op == "set-mode") {
        Obj o(doc, ptr, {"op", "tick", "qpu", "mode"});
        a.kind = Action::Kind::SetMode;
        a.tick = o.u64("tick", 0);
        a.qpus = {o.str("qpu")};
        try {
            a.mode = qpu::parse_mode(o.str("mode"));
        } catch (const jsonio::ValidationError&) {
            throw;
        } catch (const Error& e) {
            doc.fail(o.p("mode"), e.what());
        }
    } else {
        doc.fail(ptr + "/op", "unknown op '" + op + "' (expected put, delete, query, split, merge, partition, scrub or set-mode)");
    }
    return a;
}

std::vector<Action> actions_at(const Document& doc, const std::string& ptr, const Schema& schema, std::size_t dcs) {
    require_array(doc, ptr);
    std::vector<Action> out;
    for (std::size_t i = 0; i < node_at(doc, ptr).size(); ++i) {
        out.push_back(parse_action(doc, ptr + "/" + std::to_string(i), schema, dcs));
    }
    return out;
}

}  // namespace

DcId parse_dc(const json& v, std::size_t dcs) {
    std::uint64_t n = 0;
    if (v.is_number_unsigned()) {
        n = v.get<std::uint64_t>();
    } else if (v.is_string() && v.get<std::string>().rfind("DC", 0) == 0) {
        const std::string s = v.get<std::string>().substr(2);
        if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
            throw Error("bad DC name '" + v.get<std::string>() + "'");
        }
        n = std::stoull(s);
    } else {
        throw Error("DCs are written \"DC1\", \"DC2\", ...");
    }
    if (n == 0 || n > dcs) throw Error("DC" + std::to_string(n) + " does not exist (" + std::to_string(dcs) + " DCs)");
    return static_cast<DcId>(n - 1);
}

Schema schema_from_json(const Document& doc, const std::string& ptr) {
    require_array(doc, ptr);
    std::vector<Attribute> attrs;
    std::set<std::string> names;
    const json& v = node_at(doc, ptr);
    if (v.empty()) doc.fail(ptr, "schema needs at least one attribute");
    for (std::size_t i = 0; i < v.size(); ++i) {
        Obj o(doc, ptr + "/" + std::to_string(i), {"name", "type", "min", "max"});
        Attribute a;
        a.name = o.str("name");
        if (!names.insert(a.name).second) doc.fail(o.p("name"), "duplicate attribute '" + a.name + "'");
        const std::string type = o.str("type");
        if (type == "numeric") {
            a.kind = AttrKind::Numeric;
            a.min = o.num("min");
            a.max = o.num("max");
        } else if (type == "text") {
            a.kind = AttrKind::Text;
            a.min = o.str("min", " ");
            a.max = o.str("max", "~");
        } else {
            doc.fail(o.p("type"), "attribute type must be 'numeric' or 'text'");
        }
        if (compare(a.min, a.max) > 0) doc.fail(o.ptr(), "attribute '" + a.name + "' has min > max");
        attrs.push_back(std::move(a));
    }
    try {
        return Schema(std::move(attrs));
    } catch (const Error& e) {
        doc.fail(ptr, e.what());
    }
}

Scenario parse_scenario(const Document& doc, const std::string& base_dir) {
    Obj top(doc, "",
            {"name", "seed", "schema", "dcs", "net", "index", "topology", "dataset", "workload", "workload_file",
             "verification", "max_ticks"});
    Scenario s;
    s.name = top.str("name", "scenario");
    s.dcs = top.u64("dcs", 1);
    if (s.dcs == 0 || s.dcs > 64) doc.fail(top.p("dcs"), "dcs must lie in [1, 64]");
    s.schema = std::make_shared<const Schema>(schema_from_json(doc, top.p("schema")));
    const Schema& schema = *s.schema;
    s.net = net_config(doc, "/net", s.dcs, top.u64("seed", 1));
    s.network = network_config(doc, "/index", schema);
    s.topology = topology(doc, "/topology", schema, s.dcs);
    s.max_ticks = top.u64("max_ticks", s.max_ticks);

    if (top.has("dataset")) {
        require_array(doc, "/dataset");
        for (std::size_t i = 0; i < top.at("dataset").size(); ++i) {
            const std::string p = "/dataset/" + std::to_string(i);
            Obj o(doc, p, {"dc", "key", "attrs", "tick"});
            Action a;
            a.kind = Action::Kind::Put;
            a.origin = doc.source() + ":" + std::to_string(doc.line_of(p));
            a.tick = o.u64("tick", 0);
            a.dc = dc_field(o, "dc", s.dcs);
            a.key = o.str("key");
            a.point = point_for(doc, o.p("attrs"), schema);
            s.actions.push_back(std::move(a));
        }
    }
    if (top.has("workload")) {
        auto w = actions_at(doc, "/workload", schema, s.dcs);
        s.actions.insert(s.actions.end(), w.begin(), w.end());
    }
    if (top.has("workload_file")) {
        std::filesystem::path p = top.str("workload_file");
        if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
        std::vector<Action> w;
        try {
            w = load_workload(p.string(), schema, s.dcs);
        } catch (const jsonio::ValidationError&) {
            throw;
        } catch (const Error& e) {
            doc.fail(top.p("workload_file"), e.what());
        }
        s.actions.insert(s.actions.end(), w.begin(), w.end());
    }
    std::stable_sort(s.actions.begin(), s.actions.end(),
                     [](const Action& a, const Action& b) { return a.tick < b.tick; });
    if (top.has("verification")) {
        Obj v(doc, top.p("verification"), {"oracle", "trace"});
        s.oracle = v.flag("oracle", false);
        s.trace = v.flag("trace", false);
    }

    // Build the network once to surface topology errors at load time.
    try {
        sim::Simulator sim(s.net.seed);
        sim::Bus bus(sim, s.net);
        store::GeoStore store(sim, bus, s.schema, s.dcs);
        qpu::Network net(sim, bus, store, s.topology, s.network);
    } catch (const qpu::TopologyError& e) {
        std::string ptr = "/topology";
        const std::string msg = e.what();
        if (top.has("topology") && top.at("topology").contains("nodes")) {
            const auto& nodes = top.at("topology").at("nodes");
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                if (msg.find("'" + nodes[i].value("name", std::string()) + "'") != std::string::npos) {
                    ptr = "/topology/nodes/" + std::to_string(i);
                    break;
                }
            }
        }
        doc.fail(ptr, msg);
    }
    return s;
}

Scenario load_scenario(const std::string& path) {
    const Document doc = Document::load(path);
    return parse_scenario(doc, std::filesystem::path(path).parent_path().string());
}

std::vector<Action> parse_workload(const Document& doc, const Schema& schema, std::size_t dcs) {
    Obj top(doc, "", {"actions", "seed", "params"});
    return actions_at(doc, "/actions", schema, dcs);
}

std::vector<Action> load_workload(const std::string& path, const Schema& schema, std::size_t dcs) {
    return parse_workload(Document::load(path), schema, dcs);
}

json schema_to_json(const Schema& schema) {
    json out = json::array();
    for (const auto& a : schema.attributes()) {
        json j;
        j["name"] = a.name;
        if (a.kind == AttrKind::Numeric) {
            j["type"] = "numeric";
            j["min"] = std::get<double>(a.min);
            j["max"] = std::get<double>(a.max);
        } else {
            j["type"] = "text";
            j["min"] = std::get<std::string>(a.min);
            j["max"] = std::get<std::string>(a.max);
        }
        out.push_back(std::move(j));
    }
    return out;
}

namespace {

json value_json(const Value& v) {
    if (const auto* d = std::get_if<double>(&v)) return *d;
    return std::get<std::string>(v);
}

}  // namespace

json region_to_json(const Schema& schema, const Region& r) {
    json out = json::object();
    const Region full = Region::full(schema);
    for (std::size_t i = 0; i < schema.size(); ++i) {
        if (r.axis(i) == full.axis(i)) continue;
        json iv;
        iv["lo"] = value_json(r.axis(i).lo);
        iv["hi"] = value_json(r.axis(i).hi);
        if (r.axis(i).lo_open) iv["lo_open"] = true;
        if (r.axis(i).hi_open) iv["hi_open"] = true;
        out[schema.at(i).name] = std::move(iv);
    }
    return out;
}

json topology_to_json(const Schema& schema, const qpu::Topology& t) {
    json nodes = json::array();
    for (const auto& n : t.nodes) {
        json j;
        j["name"] = n.name;
        j["dc"] = dc_name(n.dc);
        j["role"] = qpu::to_string(n.role);
        if (n.role == qpu::Role::Internal) j["dispatch"] = qpu::to_string(n.dispatch);
        j["region"] = region_to_json(schema, n.region);
        if (!n.parents.empty()) j["parents"] = n.parents;
        if (n.scope) {
            json sc = json::array();
            for (DcId d : *n.scope) sc.push_back(dc_name(d));
            j["scope"] = std::move(sc);
        }
        nodes.push_back(std::move(j));
    }
    json out;
    out["nodes"] = std::move(nodes);
    return out;
}

json action_to_json(const Schema& schema, const Action& a) {
    json j;
    j["tick"] = a.tick;
    j["op"] = to_string(a.kind);
    switch (a.kind) {
        case Action::Kind::Put: {
            j["dc"] = dc_name(a.dc);
            j["key"] = a.key;
            json attrs = json::object();
            for (std::size_t i = 0; i < schema.size(); ++i) attrs[schema.at(i).name] = value_json(a.point[i]);
            j["attrs"] = std::move(attrs);
            break;
        }
        case Action::Kind::Delete:
            j["dc"] = dc_name(a.dc);
            j["key"] = a.key;
            break;
        case Action::Kind::Query:
            j["dc"] = dc_name(a.dc);
            j["query"] = query::print(a.query);
            break;
        case Action::Kind::Split:
            j["qpu"] = a.qpus.at(0);
            break;
        case Action::Kind::Merge:
            j["qpus"] = a.qpus;
            break;
        case Action::Kind::Partition:
            j["a"] = dc_name(a.window.a);
            j["b"] = dc_name(a.window.b);
            j["duration"] = a.window.end - a.window.start;
            break;
        case Action::Kind::Scrub:
            break;
        case Action::Kind::SetMode:
            j["qpu"] = a.qpus.at(0);
            j["mode"] = qpu::to_string(a.mode);
            break;
    }
    return j;
}

}  // namespace geoidx::scenario
