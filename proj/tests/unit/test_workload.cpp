#include <gtest/gtest.h>

#include "geoidx/workload.hpp"

using namespace geoidx;
using namespace geoidx::workload;

namespace {

const char* kParams = R"({
  "schema": [
    {"name": "x", "type": "numeric", "min": 0, "max": 10},
    {"name": "t", "type": "text", "min": "a", "max": "z"}
  ],
  "dcs": 3,
  "keys": 50,
  "writes": 400,
  "queries": 100,
  "duration": 2000,
  "key_distribution": {"kind": "zipf", "theta": 1.0},
  "attributes": {"t": {"kind": "uniform", "values": ["b", "cs", "ee"]}},
  "delete_fraction": 0.2
})";

Params params(const std::string& text) { return parse_params(jsonio::Document::parse(text, "p.json")); }

std::size_t error_line(const std::string& text) {
    try {
        params(text);
    } catch (const jsonio::ValidationError& e) {
        return e.line();
    }
    ADD_FAILURE() << "accepted";
    return 0;
}

}  // namespace

TEST(Zipf, RankOneMatchesAnalyticMass) {
    ZipfSampler z(1000, 1.0);
    std::mt19937_64 rng(2024);
    const int n = 100000;
    int ones = 0;
    for (int i = 0; i < n; ++i) ones += z(rng) == 0;
    const double expected = z.mass(0);
    EXPECT_NEAR(static_cast<double>(ones) / n, expected, 0.05 * expected);
    double total = 0;
    for (std::size_t r = 0; r < z.size(); ++r) total += z.mass(r);
    EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(Zipf, ThetaZeroIsUniform) {
    ZipfSampler z(10, 0.0);
    EXPECT_DOUBLE_EQ(z.mass(0), 0.1);
    EXPECT_DOUBLE_EQ(z.mass(9), 0.1);
    EXPECT_THROW(ZipfSampler(0, 1.0), Error);
}

TEST(Workload, ZeroCountIsEmpty) {
    Params p = params(kParams);
    p.writes = p.queries = 0;
    EXPECT_TRUE(generate(p, 1)["actions"].empty());
}

TEST(Workload, SameSeedSameFile) {
    const Params p = params(kParams);
    EXPECT_EQ(generate(p, 7).dump(), generate(p, 7).dump());
    EXPECT_NE(generate(p, 7).dump(), generate(p, 8).dump());
}

TEST(Workload, GeneratedActionsLoadBack) {
    const Params p = params(kParams);
    const auto w = generate(p, 3);
    const auto actions = scenario::parse_workload(jsonio::Document::parse(w.dump(2), "w.json"), *p.schema, p.dcs);
    ASSERT_EQ(actions.size(), 500u);
    std::size_t queries = 0, deletes = 0;
    Tick last = 0;
    for (const auto& a : actions) {
        queries += a.kind == scenario::Action::Kind::Query;
        deletes += a.kind == scenario::Action::Kind::Delete;
        EXPECT_GE(a.tick, last);
        EXPECT_LT(a.tick, 2000u);
        last = a.tick;
        if (a.kind == scenario::Action::Kind::Put) {
            const auto& t = std::get<std::string>(a.point[1]);
            EXPECT_TRUE(t == "b" || t == "cs" || t == "ee") << t;
        }
    }
    EXPECT_EQ(queries, 100u);
    EXPECT_GT(deletes, 0u);
}

TEST(Workload, InvalidParamsAreRejectedWithLine) {
    std::string s = kParams;
    EXPECT_EQ(error_line(std::string(s).replace(s.find("\"theta\": 1.0"), 12, "\"theta\": -1")), 11u);
    EXPECT_EQ(error_line(std::string(s).replace(s.find("\"kind\": \"zipf\""), 14, "\"kind\": \"pareto\"")), 11u);
    EXPECT_EQ(error_line(std::string(s).replace(s.find("\"cs\""), 4, "\"CS\"")), 12u);
    EXPECT_EQ(error_line(std::string(s).replace(s.find("\"attributes\": {\"t\""), 18, "\"attributes\": {\"q\"")), 12u);
    EXPECT_EQ(error_line(std::string(s).replace(s.find("0.2"), 3, "1.5")), 13u);
}
