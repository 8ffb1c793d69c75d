#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "geoidx/runner.hpp"

using namespace geoidx;

namespace {

std::string bundled(const std::string& name) { return std::string(GEOIDX_SOURCE_DIR) + "/scenarios/" + name; }

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Runner, Fig3PassesVerification) {
    const auto s = scenario::load_scenario(bundled("fig3.scenario"));
    const auto out = runner::run(s);
    EXPECT_TRUE(out.verify_enabled);
    EXPECT_TRUE(out.passed()) << out.verify_report;
    EXPECT_GT(out.checks, 0u);
    EXPECT_NE(out.routing_trace.find("value-dispatch"), std::string::npos);
    EXPECT_NE(out.routing_trace.find("dc-dispatch"), std::string::npos);
    EXPECT_NE(out.routing_trace.find("freshness-dispatch"), std::string::npos);
}

TEST(Runner, MetricsHaveOneRowPerQuery) {
    const auto s = scenario::load_scenario(bundled("conflict.scenario"));
    const auto out = runner::run(s);
    EXPECT_EQ(out.metrics_csv.substr(0, out.metrics_csv.find('\n')), runner::kMetricsHeader);
    EXPECT_EQ(lines(out.metrics_csv), 1 + out.results.size());
    EXPECT_EQ(out.results.size(), 4u);
}

TEST(Runner, SameScenarioTwiceIsByteIdentical) {
    for (const char* name : {"fig3.scenario", "conflict.scenario"}) {
        const auto s = scenario::load_scenario(bundled(name));
        runner::RunOptions o;
        o.trace = true;
        o.oracle = true;
        const auto a = runner::run(s, o);
        const auto b = runner::run(s, o);
        EXPECT_EQ(a.metrics_csv, b.metrics_csv);
        EXPECT_EQ(a.routing_trace, b.routing_trace);
        EXPECT_EQ(a.event_trace_csv, b.event_trace_csv);
        EXPECT_EQ(a.verify_report, b.verify_report);
        EXPECT_EQ(a.final_state.dump(), b.final_state.dump());
    }
}

TEST(Runner, SeedOverrideChangesTheEventTrace) {
    const auto s = scenario::load_scenario(bundled("fig3.scenario"));
    runner::RunOptions o;
    o.trace = true;
    const auto a = runner::run(s, o);
    o.seed = 1234;
    const auto b = runner::run(s, o);
    EXPECT_NE(a.event_trace_csv, b.event_trace_csv);
}

TEST(Runner, FinalStateReloadsAndAnswersQueries) {
    const auto s = scenario::load_scenario(bundled("conflict.scenario"));
    const auto out = runner::run(s);
    const auto dir = std::filesystem::temp_directory_path() / "geoidx_runner_test";
    runner::write_outputs(out, dir.string());
    for (const char* f : {"metrics.csv", "routing_trace.txt", "final_state.json", "verify_report.txt", "events.csv"}) {
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    }
    const auto state = scenario::load_scenario((dir / "final_state.json").string());
    EXPECT_EQ(*state.schema, *s.schema);
    auto q = query::parse("Attr = \"A\" OR Attr = \"B\" FRESHNESS strong", *state.schema);
    q.origin = 1;
    const auto shot = runner::one_shot(state, q);
    EXPECT_FALSE(shot.result.error);
    EXPECT_EQ(shot.result.keys, (std::set<Key>{"Obj"}));
    EXPECT_EQ(shot.result.keys, shot.current);
    std::filesystem::remove_all(dir);
}

TEST(Runner, LagColumnFormat) {
    EXPECT_EQ(runner::format_lag({{0, 0}, {1, 3}}), "DC1:0;DC2:3");
    EXPECT_EQ(runner::format_lag({}), "");
}
