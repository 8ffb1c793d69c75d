#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "geoidx/runner.hpp"
#include "geoidx/workload.hpp"

namespace fs = std::filesystem;
using namespace geoidx;

namespace {

constexpr int kPass = 0;
constexpr int kVerifyFailed = 1;
constexpr int kInvalid = 2;

struct RunArgs {
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    bool trace = false;
    bool oracle = false;
};

int do_run(const RunArgs& a, bool force_oracle) {
    const auto s = scenario::load_scenario(a.scenario);
    runner::RunOptions opts;
    opts.seed = a.seed;
    opts.trace = a.trace;
    opts.oracle = a.oracle || force_oracle;
    const auto out = runner::run(s, opts);
    const std::string dir = a.out_dir.empty() ? "geoidx-out/" + s.name : a.out_dir;
    runner::write_outputs(out, dir);

    std::cout << "scenario " << s.name << ": " << s.actions.size() << " actions, " << out.results.size()
              << " queries, final tick " << out.final_tick << "\n";
    if (out.verify_enabled) {
        if (force_oracle) std::cout << out.verify_report;
        std::cout << "verify: " << (out.checks - out.failures) << "/" << out.checks << " checks passed, "
                  << (out.passed() ? "PASS" : "FAIL") << "\n";
    }
    std::cout << "outputs written to " << dir << "\n";
    return out.verify_enabled && !out.passed() ? kVerifyFailed : kPass;
}

int do_gen(const std::string& params_path, std::uint64_t seed, const std::string& out_dir, const std::string& out_file) {
    const auto doc = jsonio::Document::load(params_path);
    const auto params = workload::parse_params(doc, fs::path(params_path).parent_path().string());
    const auto w = workload::generate(params, seed);
    const std::string text = w.dump(2) + "\n";
    std::string path = out_file;
    if (path.empty() && !out_dir.empty()) path = (fs::path(out_dir) / "workload.json").string();
    if (path.empty()) {
        std::cout << text;
        return kPass;
    }
    if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
    std::ofstream(path) << text;
    std::cerr << "wrote " << w["actions"].size() << " actions to " << path << "\n";
    return kPass;
}

int do_query(std::string state, const std::string& text, const std::string& dc, std::optional<std::uint64_t> seed,
             bool trace, bool check) {
    if (fs::is_directory(state)) state = (fs::path(state) / "final_state.json").string();
    const auto s = scenario::load_scenario(state);
    query::Query q;
    try {
        q = query::parse(text, *s.schema);
    } catch (const query::ParseError& e) {
        throw jsonio::ValidationError("query", 1, e.what());
    }
    try {
        q.origin = scenario::parse_dc(scenario::json(dc), s.dcs);
    } catch (const Error& e) {
        throw jsonio::ValidationError("--dc", 1, e.what());
    }
    runner::RunOptions opts;
    opts.seed = seed;
    const auto shot = runner::one_shot(s, q, opts);
    const auto& r = shot.result;
    if (trace) std::cout << r.trace;
    if (r.error) {
        std::cerr << "query failed: " << *r.error << "\n";
        return kVerifyFailed;
    }
    std::cout << query::print(r.query) << "\n";
    std::cout << r.keys.size() << " keys:";
    for (const auto& k : r.keys) std::cout << " " << k;
    std::cout << "\n";
    if (check) {
        const bool ok = r.keys == shot.current;
        std::cout << "oracle: " << shot.current.size() << " keys, " << (ok ? "match" : "MISMATCH") << "\n";
        if (!ok) return kVerifyFailed;
    }
    return kPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Geo-distributed secondary index simulator"};
    app.require_subcommand(1);

    RunArgs run_args;
    std::uint64_t seed_value = 0;
    auto add_run_flags = [&](CLI::App* c) {
        c->add_option("scenario", run_args.scenario, "scenario JSON file")->required();
        c->add_option("--seed", seed_value, "override the scenario seed");
        c->add_option("--out-dir,-o", run_args.out_dir, "output directory (default geoidx-out/<name>)");
        c->add_flag("--trace", run_args.trace, "write the message-level event trace");
    };
    auto* run = app.add_subcommand("run", "run a scenario");
    add_run_flags(run);
    run->add_flag("--oracle", run_args.oracle, "verify every query and leaf index against the oracle");
    auto* verify = app.add_subcommand("verify", "run a scenario with oracle checks and print the report");
    add_run_flags(verify);

    std::string params_path, gen_out_dir, gen_out_file;
    std::uint64_t gen_seed = 1;
    auto* gen = app.add_subcommand("gen-workload", "generate a workload file from parameters");
    gen->add_option("params", params_path, "parameter JSON file")->required();
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out-dir", gen_out_dir, "write <dir>/workload.json");
    gen->add_option("--out,-o", gen_out_file, "write to this file (default stdout)");

    std::string state_path, query_text, query_dc = "DC1";
    bool query_trace = false, query_oracle = false;
    auto* qry = app.add_subcommand("query", "load a final state and route one query");
    qry->add_option("state", state_path, "final_state.json or a run output directory")->required();
    qry->add_option("query", query_text, "query text, e.g. 'GPA > 2 FRESHNESS strong'")->required();
    qry->add_option("--dc", query_dc, "origin DC");
    qry->add_option("--seed", seed_value, "override the state seed");
    qry->add_flag("--trace", query_trace, "print the routing trace");
    qry->add_flag("--oracle", query_oracle, "compare against a scan of the origin replica");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kInvalid;
    }

    std::optional<std::uint64_t> seed;
    if ((run->parsed() && run->count("--seed")) || (verify->parsed() && verify->count("--seed")) ||
        (qry->parsed() && qry->count("--seed"))) {
        seed = seed_value;
    }
    run_args.seed = seed;

    try {
        if (run->parsed()) return do_run(run_args, false);
        if (verify->parsed()) return do_run(run_args, true);
        if (gen->parsed()) return do_gen(params_path, gen_seed, gen_out_dir, gen_out_file);
        if (qry->parsed()) return do_query(state_path, query_text, query_dc, seed, query_trace, query_oracle);
    } catch (const jsonio::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return kInvalid;
    } catch (const sim::LivelockError& e) {
        std::cerr << "livelock: " << e.what() << "\n";
        return kVerifyFailed;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInvalid;
    }
    return kInvalid;
}
