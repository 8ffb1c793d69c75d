#include <gtest/gtest.h>

#include "world.hpp"

namespace geoidx {
namespace {

using testing::World;

sim::NetConfig lossy(std::uint64_t seed) {
    sim::NetConfig c;
    c.seed = seed;
    c.dup_prob = 0.2;
    c.reorder_jitter = 20;
    return c;
}

void random_writes(World& w, std::size_t n, std::size_t keys, std::mt19937_64& rng, double delete_p = 0.1) {
    std::uniform_int_distribution<std::size_t> key(0, keys - 1);
    std::uniform_int_distribution<DcId> dc(0, static_cast<DcId>(w.store.dc_count() - 1));
    std::bernoulli_distribution del(delete_p);
    for (std::size_t i = 0; i < n; ++i) {
        const Key k = "k" + std::to_string(key(rng));
        const DcId d = dc(rng);
        if (del(rng) && w.store.get(d, k)) {
            w.store.remove(d, k);
        } else {
            w.store.put(d, k, testing::random_point(w.store.schema(), rng));
        }
        if (i % 7 == 0) w.sim.run_until(w.sim.now() + 1);
    }
}

class TopologyRouting : public ::testing::TestWithParam<int> {};

qpu::Topology make(int kind, const Schema& s, std::size_t dcs) {
    switch (kind) {
        case 0: return qpu::Topology::single(s, dcs);
        case 1: return qpu::Topology::value_grid(s, dcs, 4);
        default: return qpu::Topology::fig2(s, dcs, 3);
    }
}

TEST_P(TopologyRouting, StrongMatchesOracleAfterQuiescence) {
    World w(testing::four_axis_schema(), 3, lossy(7));
    w.build(make(GetParam(), w.store.schema(), 3));
    std::mt19937_64 rng(11);
    random_writes(w, 600, 150, rng);
    w.sim.run_until_quiescent();

    query::QueryGenerator gen(w.store.schema());
    for (int i = 0; i < 60; ++i) {
        query::Query q{gen.expr(rng), StalenessLevel::strong(), static_cast<DcId>(i % 3)};
        const auto r = w.net->route(q);
        const auto expect = oracle::scan(w.store.replica(q.origin), w.store.schema(), q.expr);
        ASSERT_EQ(r.keys, expect) << query::print(q) << "\n" << r.trace;
    }
}

TEST_P(TopologyRouting, StrongUnderChurnHasNoFalsePositives) {
    World w(testing::four_axis_schema(), 3, lossy(8));
    w.build(make(GetParam(), w.store.schema(), 3));
    std::mt19937_64 rng(12);
    query::QueryGenerator gen(w.store.schema());
    std::size_t answered = 0;
    for (int round = 0; round < 30; ++round) {
        random_writes(w, 20, 80, rng);
        query::Query q{gen.expr(rng), gen.query(rng).level, static_cast<DcId>(round % 3)};
        w.net->submit(q, [&, q](const qpu::QueryResult& r) {
            ++answered;
            if (r.error) return;
            const auto now = oracle::scan(w.store.replica(q.origin), w.store.schema(), q.expr);
            for (const auto& k : r.keys) EXPECT_TRUE(now.count(k)) << k;
        });
    }
    w.sim.run_until_quiescent();
    EXPECT_EQ(answered, 30u);
}

INSTANTIATE_TEST_SUITE_P(Presets, TopologyRouting, ::testing::Values(0, 1, 2));

TEST(Network, RegionGapIsRejectedWithPoint) {
    World w(testing::student_schema(), 1, sim::NetConfig{});
    auto t = qpu::Topology::value_grid(w.store.schema(), 1, 2);
    t.nodes.pop_back();
    try {
        w.build(t);
        FAIL() << "expected a topology error";
    } catch (const qpu::TopologyError& e) {
        EXPECT_NE(std::string(e.what()).find("uncovered"), std::string::npos) << e.what();
    }
}

TEST(Network, UnsatisfiablePinnedTargetNamesLaggingDc) {
    World w(testing::student_schema(), 2, sim::NetConfig{}, qpu::Topology::single);
    w.store.put(0, "x", Point{1.0, std::string("cs")});
    w.sim.run_until_quiescent();
    query::Query q = query::parse("GPA > 0", w.store.schema());
    VectorClock t{{0, 1}, {1, 5}};
    try {
        w.net->route(q, t);
        FAIL();
    } catch (const qpu::UnsatisfiableError& e) {
        EXPECT_EQ(e.lagging(), std::set<DcId>{1});
    }
}

TEST(Network, CacheServesRepeatedQuery) {
    World w(testing::student_schema(), 1, sim::NetConfig{}, [](const Schema& s, std::size_t d) {
        return qpu::Topology::value_grid(s, d, 2);
    });
    for (int i = 0; i < 20; ++i) w.store.put(0, "k" + std::to_string(i), Point{i / 5.0, std::string("cs")});
    w.sim.run_until_quiescent();
    w.sim.run_until(w.sim.now() + 50);
    auto q = query::parse("GPA >= 1 FRESHNESS snapshot", w.store.schema());
    const auto first = w.net->route(q);
    const auto second = w.net->route(q);
    EXPECT_EQ(first.keys, second.keys);
    EXPECT_EQ(first.stats.cache_hits, 0u);
    EXPECT_GE(second.stats.cache_hits, 1u);
}

TEST(Network, SplitThenMergeKeepsAnswers) {
    World w(testing::four_axis_schema(), 2, lossy(3), qpu::Topology::single);
    std::mt19937_64 rng(5);
    random_writes(w, 300, 100, rng);
    w.sim.run_until_quiescent();
    const auto leaf = *w.net->find("leaf@DC1");
    const auto [a, b] = w.net->split(leaf);
    EXPECT_EQ(w.net->qpu(leaf).role, qpu::Role::Internal);
    query::QueryGenerator gen(w.store.schema());
    for (int i = 0; i < 20; ++i) {
        query::Query q{gen.expr(rng), StalenessLevel::strong(), 0};
        EXPECT_EQ(w.net->route(q).keys, oracle::scan(w.store.replica(0), w.store.schema(), q.expr));
    }
    const auto merged = w.net->merge_siblings(a, b);
    EXPECT_EQ(merged, leaf);
    EXPECT_EQ(w.net->qpu(leaf).role, qpu::Role::History);
    for (int i = 0; i < 20; ++i) {
        query::Query q{gen.expr(rng), StalenessLevel::strong(), 0};
        EXPECT_EQ(w.net->route(q).keys, oracle::scan(w.store.replica(0), w.store.schema(), q.expr));
    }
}

TEST(Network, IndexDeltaModeConvergesToLogReplay) {
    auto run = [](qpu::ReplMode mode) {
        World w(testing::four_axis_schema(), 3, lossy(21));
        qpu::NetworkConfig nc;
        nc.initial_mode = mode;
        w.build(qpu::Topology::value_grid(w.store.schema(), 3, 3), nc);
        std::mt19937_64 rng(4);
        random_writes(w, 400, 120, rng);
        w.sim.run_until_quiescent();
        w.net->scrub_all();
        std::vector<std::string> out;
        for (auto id : w.net->qpus(qpu::Role::History)) out.push_back(w.net->qpu(id).index->canonical());
        return out;
    };
    EXPECT_EQ(run(qpu::ReplMode::LogReplay), run(qpu::ReplMode::IndexDelta));
}

}  // namespace
}  // namespace geoidx
