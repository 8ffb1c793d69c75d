#include "geoidx/workload.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

namespace geoidx::workload {

using jsonio::Document;
using Obj = jsonio::Object;
using scenario::Action;
using scenario::json;

namespace {

std::vector<double> zipf_weights(std::size_t n, double theta) {
    std::vector<double> w(n);
    for (std::size_t r = 0; r < n; ++r) w[r] = 1.0 / std::pow(static_cast<double>(r + 1), theta);
    return w;
}

}  // namespace

ZipfSampler::ZipfSampler(std::size_t n, double theta) : n_(n), theta_(theta), norm_(0.0) {
    if (n == 0) throw Error("zipf needs at least one rank");
    if (!(theta >= 0.0) || !std::isfinite(theta)) throw Error("zipf theta must be a finite value >= 0");
    const auto w = zipf_weights(n, theta);
    for (double x : w) norm_ += x;
    dist_ = std::discrete_distribution<std::size_t>(w.begin(), w.end());
}

double ZipfSampler::mass(std::size_t r) const {
    return 1.0 / std::pow(static_cast<double>(r + 1), theta_) / norm_;
}

namespace {

Distribution parse_distribution(const Document& doc, const std::string& ptr, const Schema* schema,
                                std::optional<std::size_t> axis) {
    Obj o(doc, ptr, {"kind", "theta", "values", "buckets"});
    Distribution d;
    const std::string kind = o.str("kind", "uniform");
    if (kind == "uniform") d.kind = Distribution::Kind::Uniform;
    else if (kind == "zipf") d.kind = Distribution::Kind::Zipf;
    else doc.fail(o.p("kind"), "distribution kind must be 'uniform' or 'zipf'");
    d.theta = o.num("theta", 1.0);
    if (!(d.theta >= 0.0)) doc.fail(o.p("theta"), "theta must be >= 0");
    d.buckets = o.u64("buckets", 0);
    if (o.has("values")) {
        if (!axis) doc.fail(o.p("values"), "values only apply to attributes");
        const json& vs = o.at("values");
        if (!vs.is_array() || vs.empty()) doc.fail(o.p("values"), "values must be a non-empty array");
        for (std::size_t i = 0; i < vs.size(); ++i) {
            const std::string vp = o.p("values") + "/" + std::to_string(i);
            Value v;
            if (schema->at(*axis).kind == AttrKind::Numeric) {
                if (!vs[i].is_number()) doc.fail(vp, "expected a number");
                v = vs[i].get<double>();
            } else {
                if (!vs[i].is_string()) doc.fail(vp, "expected a string");
                v = vs[i].get<std::string>();
            }
            if (!schema->conforms(*axis, v)) doc.fail(vp, format_value(v) + " is outside the attribute domain");
            d.values.push_back(v);
        }
    }
    if (axis && schema->at(*axis).kind == AttrKind::Text && d.values.empty()) {
        doc.fail(ptr, "text attribute '" + schema->at(*axis).name + "' needs a values list");
    }
    if (axis && d.kind == Distribution::Kind::Zipf && d.values.empty() && d.buckets == 0) d.buckets = 100;
    return d;
}

}  // namespace

Params parse_params(const Document& doc, const std::string& base_dir) {
    Obj top(doc, "",
            {"schema", "scenario", "dcs", "keys", "writes", "queries", "duration", "key_distribution", "attributes",
             "delete_fraction", "dc_weights", "levels", "query_depth"});
    Params p;
    if (top.has("scenario")) {
        std::filesystem::path sp = top.str("scenario");
        if (sp.is_relative()) sp = std::filesystem::path(base_dir) / sp;
        try {
            const auto s = scenario::load_scenario(sp.string());
            p.schema = s.schema;
            p.dcs = s.dcs;
        } catch (const jsonio::ValidationError&) {
            throw;
        } catch (const Error& e) {
            doc.fail(top.p("scenario"), e.what());
        }
    } else {
        p.schema = std::make_shared<const Schema>(scenario::schema_from_json(doc, top.p("schema")));
    }
    p.dcs = top.u64("dcs", p.dcs);
    if (p.dcs == 0) doc.fail(top.p("dcs"), "dcs must be positive");
    p.keys = top.u64("keys", p.keys);
    if (p.keys == 0) doc.fail(top.p("keys"), "keys must be positive");
    p.writes = top.u64("writes", 0);
    p.queries = top.u64("queries", 0);
    p.duration = top.u64("duration", p.duration);
    if (top.has("key_distribution")) {
        p.key_distribution = parse_distribution(doc, top.p("key_distribution"), nullptr, std::nullopt);
    }
    const Schema& schema = *p.schema;
    for (std::size_t i = 0; i < schema.size(); ++i) {
        Distribution d;
        if (schema.at(i).kind == AttrKind::Text) d.values = {schema.at(i).min, schema.at(i).max};
        p.attributes[schema.at(i).name] = d;
    }
    if (top.has("attributes")) {
        const json& a = top.at("attributes");
        if (!a.is_object()) doc.fail(top.p("attributes"), "attributes must map names to distributions");
        for (const auto& [k, _] : a.items()) {
            const std::string kp = top.p("attributes") + "/" + jsonio::pointer_token(k);
            const auto axis = schema.find(k);
            if (!axis) doc.fail(kp, "unknown attribute '" + k + "'");
            p.attributes[k] = parse_distribution(doc, kp, &schema, *axis);
        }
    }
    p.delete_fraction = top.num("delete_fraction", 0.0);
    if (!(p.delete_fraction >= 0.0 && p.delete_fraction <= 1.0)) {
        doc.fail(top.p("delete_fraction"), "delete_fraction must lie in [0, 1]");
    }
    p.dc_weights.assign(p.dcs, 1.0);
    if (top.has("dc_weights")) {
        const json& w = top.at("dc_weights");
        if (!w.is_array() || w.size() != p.dcs) doc.fail(top.p("dc_weights"), "dc_weights needs one weight per DC");
        double sum = 0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (!w[i].is_number() || w[i].get<double>() < 0) {
                doc.fail(top.p("dc_weights") + "/" + std::to_string(i), "weights must be non-negative numbers");
            }
            p.dc_weights[i] = w[i].get<double>();
            sum += p.dc_weights[i];
        }
        if (sum <= 0) doc.fail(top.p("dc_weights"), "dc_weights must not all be zero");
    }
    if (top.has("levels")) {
        const json& l = top.at("levels");
        if (!l.is_object() || l.empty()) doc.fail(top.p("levels"), "levels must map staleness levels to weights");
        for (const auto& [k, w] : l.items()) {
            const std::string kp = top.p("levels") + "/" + jsonio::pointer_token(k);
            StalenessLevel level;
            try {
                level = StalenessLevel::parse(k);
            } catch (const std::exception& e) {
                doc.fail(kp, e.what());
            }
            if (!w.is_number() || w.get<double>() < 0) doc.fail(kp, "weights must be non-negative numbers");
            p.levels.emplace_back(level, w.get<double>());
        }
    } else {
        p.levels = {{StalenessLevel::strong(), 1.0},
                    {StalenessLevel::bounded(5), 1.0},
                    {StalenessLevel::snapshot(), 1.0},
                    {StalenessLevel::any(), 1.0}};
    }
    p.query_depth = static_cast<int>(top.u64("query_depth", 2));
    if (p.query_depth < 1 || p.query_depth > 6) doc.fail(top.p("query_depth"), "query_depth must lie in [1, 6]");
    return p;
}

namespace {

class ValueSampler {
public:
    ValueSampler(const Schema& schema, std::size_t axis, const Distribution& d) : a_(schema.at(axis)), d_(d) {
        const std::size_t n = !d.values.empty() ? d.values.size() : d.buckets;
        if (n > 0 && d.kind == Distribution::Kind::Zipf) zipf_.emplace(n, d.theta);
    }

    Value operator()(std::mt19937_64& rng) {
        const std::size_t n = !d_.values.empty() ? d_.values.size() : d_.buckets;
        if (n == 0) {
            const double lo = std::get<double>(a_.min);
            const double hi = std::get<double>(a_.max);
            const double x = std::uniform_real_distribution<double>(lo, hi)(rng);
            return std::clamp(std::round(x * 1000.0) / 1000.0, lo, hi);
        }
        const std::size_t r = zipf_ ? (*zipf_)(rng) : std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
        if (!d_.values.empty()) return d_.values[r];
        const double lo = std::get<double>(a_.min);
        const double hi = std::get<double>(a_.max);
        return n == 1 ? lo : lo + (hi - lo) * static_cast<double>(r) / static_cast<double>(n - 1);
    }

private:
    const Attribute& a_;
    const Distribution& d_;
    std::optional<ZipfSampler> zipf_;
};

}  // namespace

json generate(const Params& p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const Schema& schema = *p.schema;
    std::vector<ValueSampler> attrs;
    for (std::size_t i = 0; i < schema.size(); ++i) attrs.emplace_back(schema, i, p.attributes.at(schema.at(i).name));
    std::optional<ZipfSampler> key_zipf;
    if (p.key_distribution.kind == Distribution::Kind::Zipf) key_zipf.emplace(p.keys, p.key_distribution.theta);
    std::discrete_distribution<std::size_t> dc_pick(p.dc_weights.begin(), p.dc_weights.end());
    std::vector<double> lw;
    for (const auto& [_, w] : p.levels) lw.push_back(w);
    std::discrete_distribution<std::size_t> level_pick(lw.begin(), lw.end());
    std::bernoulli_distribution del(p.delete_fraction);

    std::vector<std::vector<Value>> pools(schema.size());
    for (std::size_t i = 0; i < schema.size(); ++i) {
        const auto& d = p.attributes.at(schema.at(i).name);
        if (!d.values.empty()) {
            pools[i] = d.values;
        } else {
            const double lo = std::get<double>(schema.at(i).min);
            const double hi = std::get<double>(schema.at(i).max);
            for (int s = 0; s <= 20; ++s) pools[i].push_back(lo + (hi - lo) * s / 20.0);
        }
    }
    query::QueryGenerator gen(schema, pools);

    const std::size_t total = p.writes + p.queries;
    std::vector<bool> is_query(total, false);
    std::fill(is_query.begin(), is_query.begin() + static_cast<std::ptrdiff_t>(p.queries), true);
    std::shuffle(is_query.begin(), is_query.end(), rng);

    std::set<Key> live;
    json actions = json::array();
    for (std::size_t i = 0; i < total; ++i) {
        Action a;
        a.tick = total == 0 ? 0 : i * p.duration / total;
        a.dc = static_cast<DcId>(dc_pick(rng));
        if (is_query[i]) {
            a.kind = Action::Kind::Query;
            a.query.expr = gen.expr(rng, p.query_depth);
            a.query.level = p.levels[level_pick(rng)].first;
            a.query.origin = a.dc;
        } else {
            const std::size_t rank =
                key_zipf ? (*key_zipf)(rng) : std::uniform_int_distribution<std::size_t>(0, p.keys - 1)(rng);
            a.key = "k" + std::to_string(rank);
            if (live.count(a.key) && del(rng)) {
                a.kind = Action::Kind::Delete;
                live.erase(a.key);
            } else {
                a.kind = Action::Kind::Put;
                for (auto& s : attrs) a.point.push_back(s(rng));
                live.insert(a.key);
            }
        }
        actions.push_back(scenario::action_to_json(schema, a));
    }
    json out;
    out["seed"] = seed;
    out["actions"] = std::move(actions);
    return out;
}

}  // namespace geoidx::workload
