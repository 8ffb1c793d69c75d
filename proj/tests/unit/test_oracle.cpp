#include <gtest/gtest.h>

#include <random>

#include "world.hpp"

using namespace geoidx;
namespace gt = geoidx::testing;

namespace {

struct Churned {
    gt::World w{gt::four_axis_schema(), 3, config()};
    // Objects map of replica 0 after each notified append, keyed by its clock.
    std::map<std::string, std::map<Key, store::ObjectVersion>> seen;

    static sim::NetConfig config() {
        sim::NetConfig c;
        c.seed = 21;
        c.dup_prob = 0.2;
        c.reorder_jitter = 15;
        return c;
    }

    Churned() {
        auto sub = w.store.subscribe(0, {}, [this] { seen[w.store.replica(0).heads().to_string()] = w.store.replica(0).objects(); });
        (void)sub;
        std::mt19937_64 rng(6);
        for (int i = 0; i < 500; ++i) {
            w.sim.at(i, [this, dc = DcId(rng() % 3), k = "k" + std::to_string(rng() % 50),
                         p = gt::random_point(w.store.schema(), rng), del = rng() % 7 == 0] {
                if (del && w.store.get(dc, k)) w.store.remove(dc, k);
                else w.store.put(dc, k, p);
            });
        }
        w.sim.run_until_quiescent();
    }
};

}  // namespace

TEST(Oracle, EmptyReplica) {
    gt::World w(gt::student_schema(), 1, {});
    const auto& s = w.store.schema();
    EXPECT_TRUE(oracle::scan(w.store.replica(0), s, query::parse("GPA >= 0", s).expr).empty());
    EXPECT_TRUE(oracle::replay_to(w.store.replica(0), {}).objects.empty());
    EXPECT_TRUE(oracle::rebuild_postings(w.store.replica(0), s, Region::full(s), index::Binning::none(s)).empty());
}

TEST(Oracle, UniversalScanReturnsLiveKeys) {
    Churned c;
    const auto& r = c.w.store.replica(0);
    std::set<Key> live;
    for (const auto& [k, v] : r.objects()) {
        if (!v.deleted) live.insert(k);
    }
    EXPECT_EQ(oracle::scan(r, c.w.store.schema(), query::parse("a >= 0", c.w.store.schema()).expr), live);
}

TEST(Oracle, ReplayToHeadsIsCurrentState) {
    Churned c;
    const auto& r = c.w.store.replica(1);
    EXPECT_EQ(oracle::replay_to(r, r.heads()).objects, r.objects());
    EXPECT_TRUE(oracle::replay_to(r, {}).objects.empty());
    VectorClock ahead = r.heads();
    ahead.set(0, ahead.get(0) + 1);
    EXPECT_THROW(oracle::replay_to(r, ahead), Error);
}

TEST(Oracle, ReplayMatchesStateCapturedAtThatClock) {
    Churned c;
    ASSERT_GT(c.seen.size(), 100u);
    // Rebuild the clock sequence by walking the log in apply order.
    VectorClock clock;
    std::size_t matched = 0;
    for (const auto& e : c.w.store.replica(0).log()) {
        clock.set(e.origin, e.seq);
        auto it = c.seen.find(clock.to_string());
        if (it == c.seen.end()) continue;
        EXPECT_EQ(oracle::replay_to(c.w.store.replica(0), clock).objects, it->second) << clock.to_string();
        ++matched;
    }
    EXPECT_GT(matched, 100u);
}

TEST(Oracle, RegionRebuildIsSubsetOfFull) {
    Churned c;
    const auto& s = c.w.store.schema();
    const auto& r = c.w.store.replica(2);
    const auto bins = index::Binning::none(s);
    Region half = Region::full(s);
    half.axis(0).hi = 50.0;
    const auto full = oracle::rebuild_postings(r, s, Region::full(s), bins);
    const auto part = oracle::rebuild_postings(r, s, half, bins);
    for (const auto& [term, postings] : part) {
        ASSERT_TRUE(full.count(term));
        for (const auto& p : postings) EXPECT_TRUE(full.at(term).count(p));
    }
}

TEST(Oracle, OriginRestrictedRebuildKeepsOnlyThoseWriters) {
    Churned c;
    const auto& s = c.w.store.schema();
    const auto& r = c.w.store.replica(0);
    const auto only1 = oracle::rebuild_postings(r, s, Region::full(s), index::Binning::none(s), std::set<DcId>{1});
    for (const auto& [_, postings] : only1) {
        for (const auto& p : postings) EXPECT_EQ(p.tag.origin, 1u);
    }
}
