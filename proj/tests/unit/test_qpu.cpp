#include <gtest/gtest.h>

#include <random>

#include "world.hpp"

using namespace geoidx;
using namespace geoidx::qpu;
namespace gt = geoidx::testing;

namespace {

index::IndexDelta add(const Key& k, Tick ts, Point p) {
    index::IndexDelta d;
    d.adds.push_back({k, Stamp{ts, 0, ts}, std::move(p)});
    return d;
}

PartialResult one_item(const Key& k, Point p, VectorClock c) {
    PartialResult r;
    r.items[Stamp{1, 0, 1}] = Item{k, std::move(p)};
    r.clock = std::move(c);
    return r;
}

Point student(double gpa) { return {gpa, std::string("CS")}; }

}  // namespace

TEST(ResultCache, EmptyCacheMisses) {
    const auto s = gt::student_schema();
    ResultCache cache(4);
    EXPECT_FALSE(cache.probe(Region::full(*s), {}, true, {0}, 0));
}

TEST(ResultCache, RepeatHitsWithSameKeys) {
    const auto s = gt::student_schema();
    ResultCache cache(4);
    const Region full = Region::full(*s);
    cache.fill(full, one_item("k", student(1), VectorClock{{0, 1}}), false, VectorClock{{0, 1}}, 0);
    const auto hit = cache.probe(full, VectorClock{{0, 1}}, false, {0}, 1);
    ASSERT_TRUE(hit);
    ASSERT_EQ(hit->items.size(), 1u);
    EXPECT_EQ(hit->items.begin()->second.key, "k");
}

TEST(ResultCache, StaleEntryMissesNewerTarget) {
    const auto s = gt::student_schema();
    ResultCache cache(4);
    const Region full = Region::full(*s);
    cache.fill(full, one_item("k", student(1), VectorClock{{0, 1}}), false, VectorClock{{0, 1}}, 0);
    EXPECT_FALSE(cache.probe(full, VectorClock{{0, 5}}, false, {0}, 1));
    // A current-visibility entry cannot answer a pinned probe.
    Region part = full;
    part.axis(0).hi = 1.0;
    cache.fill(part, one_item("k", student(1), VectorClock{{0, 9}}), true, {}, 2);
    EXPECT_FALSE(cache.probe(part, VectorClock{{0, 9}}, false, {0}, 3));
    EXPECT_TRUE(cache.probe(part, VectorClock{{0, 9}}, true, {0}, 3));
}

TEST(ResultCache, PushTouchesOnlyCoveringEntriesOnce) {
    const auto s = gt::student_schema();
    ResultCache cache(4);
    Region low = Region::full(*s);
    low.axis(0).hi = 2.0;
    cache.fill(low, PartialResult{}, false, {}, 0);
    EXPECT_EQ(cache.push(add("far", 3, student(3.5))), 0u);
    const auto d = add("near", 4, student(1.0));
    EXPECT_EQ(cache.push(d), 1u);
    EXPECT_EQ(cache.push(d), 0u);
    cache.advance(VectorClock{{0, 4}});
    const auto hit = cache.probe(low, VectorClock{{0, 4}}, false, {0}, 1);
    ASSERT_TRUE(hit);
    ASSERT_EQ(hit->items.size(), 1u);
    EXPECT_EQ(hit->items.begin()->second.key, "near");
}

TEST(ResultCache, EvictsWhenFull) {
    const auto s = gt::student_schema();
    ResultCache cache(2);
    for (int i = 0; i < 5; ++i) {
        Region r = Region::full(*s);
        r.axis(0).lo = r.axis(0).hi = static_cast<double>(i) / 2;
        cache.fill(r, PartialResult{}, false, {}, i);
    }
    EXPECT_EQ(cache.size(), 2u);
}

TEST(SelectivityWindow, CountsRecentEntriesOnly) {
    SelectivityWindow w(4);
    for (bool b : {true, true, true, true}) w.record(b);
    EXPECT_TRUE(w.full());
    EXPECT_DOUBLE_EQ(w.selectivity(), 1.0);
    for (bool b : {false, false, false}) w.record(b);
    EXPECT_DOUBLE_EQ(w.selectivity(), 0.25);
}

TEST(ModeSwitch, ThresholdsAndHysteresis) {
    SwitchPolicy p;
    p.theta_low = 0.1;
    p.theta_high = 0.3;
    EXPECT_EQ(decide_mode(ReplMode::LogReplay, 0.0, p), ReplMode::IndexDelta);
    EXPECT_EQ(decide_mode(ReplMode::IndexDelta, 1.0, p), ReplMode::LogReplay);
    ReplMode m = ReplMode::LogReplay;
    int switches = 0;
    for (int i = 0; i < 100; ++i) {
        const double s = i % 2 ? 0.12 : 0.28;
        if (auto next = decide_mode(m, s, p)) {
            m = *next;
            ++switches;
        }
    }
    EXPECT_EQ(switches, 0);
}

class LeafFixture : public ::testing::Test {
protected:
    gt::World w{gt::student_schema(), 2, sim::NetConfig{}};

    QpuId build(NetworkConfig nc = {}) {
        w.build(Topology::single(w.store.schema(), 2), nc);
        return *w.net->find("leaf@DC1");
    }
};

TEST_F(LeafFixture, SplitBalancesUniformData) {
    NetworkConfig nc;
    nc.split.t_split = 2000;
    nc.split.t_merge = 100;
    const QpuId leaf = build(nc);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> gpa(0, 4);
    for (int i = 0; i < 2001; ++i) w.store.put(0, "s" + std::to_string(i), student(gpa(rng)));
    w.sim.run_until_quiescent();
    const auto [l, r] = w.net->split(leaf);
    const double a = w.net->qpu(l).index->object_count();
    const double b = w.net->qpu(r).index->object_count();
    EXPECT_EQ(a + b, 2001);
    EXPECT_LT(std::abs(a - b) / std::max(a, b), 0.1);
}

TEST_F(LeafFixture, SplitRefusedWhenAllPointsCoincide) {
    const QpuId leaf = build();
    for (int i = 0; i < 50; ++i) w.store.put(0, "s" + std::to_string(i), student(2.0));
    w.sim.run_until_quiescent();
    EXPECT_THROW(w.net->split(leaf), SplitRefused);
}

TEST_F(LeafFixture, MergedClockIsStableSnapshotOfHalves) {
    const QpuId leaf = build();
    std::mt19937_64 rng(4);
    for (int i = 0; i < 100; ++i) w.store.put(i % 2, "s" + std::to_string(i), gt::random_point(w.store.schema(), rng));
    w.sim.run_until_quiescent();
    const auto [l, r] = w.net->split(leaf);
    const auto expected = stable_snapshot({w.net->qpu(l).clock, w.net->qpu(r).clock});
    const QpuId m = w.net->merge_siblings(l, r);
    EXPECT_EQ(w.net->qpu(m).clock, expected);
    EXPECT_EQ(w.net->qpu(m).index->object_count(), 100u);
}

TEST_F(LeafFixture, CatchUpAppliesLogSlice) {
    NetworkConfig nc;
    nc.ingest_delay = 1'000'000;
    const QpuId leaf = build(nc);
    for (int i = 0; i < 7; ++i) w.store.put(0, "s" + std::to_string(i), student(1.0));
    w.sim.run_until(100);
    ASSERT_TRUE(w.net->qpu(leaf).clock.is_zero());
    EXPECT_EQ(w.net->catch_up(leaf, VectorClock{{0, 2}}), 2u);
    EXPECT_EQ(w.net->catch_up(leaf, VectorClock{{0, 5}}), 3u);
    EXPECT_EQ(w.net->catch_up(leaf, VectorClock{{0, 5}}), 0u);
    w.store.put(1, "remote", student(1.0));
    try {
        w.net->catch_up(leaf, VectorClock{{1, 4}});
        FAIL();
    } catch (const UnsatisfiableError& e) {
        EXPECT_EQ(e.lagging(), (std::set<DcId>{1}));
    }
}

TEST_F(LeafFixture, OutOfRegionEntryStillAdvancesClock) {
    build();
    w.store.put(0, "a", student(1.0));
    w.store.put(0, "b", student(3.0));
    w.sim.run_until_quiescent();
    w.net->split(*w.net->find("leaf@DC1"));
    w.store.put(0, "s", student(0.5));
    w.sim.run_until_quiescent();
    std::size_t holders = 0;
    for (QpuId id : w.net->qpus(Role::History, 0)) {
        EXPECT_EQ(w.net->qpu(id).clock.get(0), 3u);
        holders += w.net->qpu(id).index->object_count();
    }
    EXPECT_EQ(holders, 3u);
}
