#include <gtest/gtest.h>

#include <random>

#include "world.hpp"

using namespace geoidx;
using namespace geoidx::store;
using geoidx::testing::student_schema;

namespace {

struct Stores {
    sim::Simulator sim;
    sim::Bus bus;
    GeoStore store;

    Stores(std::size_t dcs, sim::NetConfig c = {}) : sim(c.seed), bus(sim, c), store(sim, bus, student_schema(), dcs) {}
};

Attrs student(double gpa, const std::string& major) { return {{"GPA", gpa}, {"Major", major}}; }

}  // namespace

TEST(GeoStore, FirstPutGetsSequenceOne) {
    Stores s(2);
    const auto& e = s.store.put(0, "k1", student(3.5, "CS"));
    EXPECT_EQ(e.origin, 0u);
    EXPECT_EQ(e.seq, 1u);
    EXPECT_EQ(s.store.put(0, "k2", student(1.0, "EE")).seq, 2u);
}

TEST(GeoStore, LaterLocalPutWins) {
    Stores s(1);
    s.store.put(0, "k", student(1.0, "CS"));
    s.sim.run_until(3);
    s.store.put(0, "k", student(2.0, "CS"));
    EXPECT_EQ(std::get<double>(s.store.get(0, "k")->attrs[0]), 2.0);
}

TEST(GeoStore, UnknownKeyIsAbsent) {
    Stores s(1);
    EXPECT_FALSE(s.store.get(0, "nope"));
}

TEST(GeoStore, RejectsNonConformingAttrs) {
    Stores s(1);
    EXPECT_THROW(s.store.put(0, "k", student(9.0, "CS")), SchemaError);
    EXPECT_THROW(s.store.put(0, "k", Attrs{{"GPA", 1.0}}), SchemaError);
    EXPECT_TRUE(s.store.replica(0).log().empty());
}

TEST(GeoStore, RemoteReadIsStaleBeforePropagation) {
    sim::NetConfig c;
    c.min_delay = c.max_delay = 100;
    Stores s(2, c);
    s.store.put(1, "Obj", student(1.0, "A"));
    s.sim.run_until_quiescent();
    s.store.put(0, "Obj", student(2.0, "B"));
    s.sim.run_until(s.sim.now() + 50);
    EXPECT_EQ(std::get<std::string>(s.store.get(1, "Obj")->attrs[1]), "A");
    s.sim.run_until_quiescent();
    EXPECT_EQ(std::get<std::string>(s.store.get(1, "Obj")->attrs[1]), "B");
}

TEST(GeoStore, ConcurrentWritesConvergeToTheLwwWinner) {
    Stores s(2);
    const auto a = s.store.put(0, "Obj", student(1.0, "A")).version();
    const auto b = s.store.put(1, "Obj", student(1.0, "B")).version();
    s.sim.run_until_quiescent();
    const auto winner = lww_merge(a, b);
    EXPECT_EQ(*s.store.get(0, "Obj"), winner);
    EXPECT_EQ(*s.store.get(1, "Obj"), winner);
    EXPECT_EQ(std::get<std::string>(winner.attrs[1]), "B");
}

TEST(Lww, IsIdempotentAndPrefersLargerStamp) {
    ObjectVersion v{"k", {1.0, std::string("x")}, {5, 0, 1}, false};
    EXPECT_EQ(lww_merge(v, v), v);
    ObjectVersion w = v;
    w.stamp = {7, 1, 1};
    EXPECT_EQ(lww_merge(v, w), w);
    EXPECT_EQ(lww_merge(w, v), w);
}

TEST(Lww, EqualTimestampsBreakTowardLargerDc) {
    ObjectVersion v{"k", {1.0, std::string("x")}, {5, 0, 1}, false};
    ObjectVersion w{"k", {2.0, std::string("y")}, {5, 1, 1}, false};
    EXPECT_EQ(lww_merge(v, w), w);
    EXPECT_EQ(lww_merge(w, v), w);
}

TEST(Lww, KeyMismatchThrows) {
    ObjectVersion v{"k", {}, {}, false};
    ObjectVersion w{"j", {}, {}, false};
    EXPECT_THROW(lww_merge(v, w), std::logic_error);
}

TEST(GeoStore, SubscribeReplaysLocalLogInOrder) {
    Stores s(1);
    auto empty = s.store.subscribe(0, {});
    EXPECT_TRUE(s.store.poll(empty).empty());
    for (int i = 0; i < 3; ++i) s.store.put(0, "k" + std::to_string(i), student(i, "CS"));
    auto sub = s.store.subscribe(0, {});
    const auto got = s.store.poll(sub);
    ASSERT_EQ(got.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(got[i]->seq, i + 1);
    EXPECT_TRUE(s.store.poll(sub).empty());
    EXPECT_EQ(s.store.poll(empty).size(), 3u);
}

TEST(GeoStore, SubscriberSeesRemoteOrigin) {
    Stores s(2);
    auto sub = s.store.subscribe(0, {});
    s.store.put(1, "k", student(1.0, "CS"));
    s.sim.run_until_quiescent();
    const auto got = s.store.poll(sub);
    ASSERT_EQ(got.size(), 1u);
    EXPECT_EQ(got[0]->origin, 1u);
}

TEST(GeoStore, SubscribeAheadOfHeadsIsRejected) {
    Stores s(1);
    EXPECT_THROW(s.store.subscribe(0, VectorClock{{0, 4}}), sim::RejectedError);
}

TEST(GeoStore, ApplyRemoteBuffersGapsAndIgnoresDuplicates) {
    Stores src(1);
    const LogEntry e1 = src.store.put(0, "a", student(1.0, "A"));
    const LogEntry e2 = src.store.put(0, "b", student(2.0, "B"));
    Stores dst(2);
    EXPECT_EQ(dst.store.apply_remote(1, e2), ApplyResult::Buffered);
    EXPECT_FALSE(dst.store.get(1, "b"));
    EXPECT_EQ(dst.store.apply_remote(1, e1), ApplyResult::Applied);
    EXPECT_TRUE(dst.store.get(1, "b"));
    EXPECT_EQ(dst.store.replica(1).heads().get(0), 2u);
    const auto before = dst.store.replica(1).objects();
    EXPECT_EQ(dst.store.apply_remote(1, e1), ApplyResult::Duplicate);
    EXPECT_EQ(dst.store.replica(1).objects(), before);
}

TEST(GeoStore, LogSequenceHasNoGaps) {
    Stores s(3);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) s.store.put(rng() % 3, "k" + std::to_string(rng() % 20), student(1.0, "CS"));
    s.sim.run_until_quiescent();
    for (DcId dc = 0; dc < 3; ++dc) {
        std::map<DcId, Seq> last;
        for (const auto& e : s.store.replica(dc).log()) {
            EXPECT_EQ(e.seq, last[e.origin] + 1);
            last[e.origin] = e.seq;
        }
    }
}

TEST(GeoStore, ReplicasConvergeUnderDuplicationAndJitter) {
    sim::NetConfig c;
    c.seed = 17;
    c.dup_prob = 0.3;
    c.reorder_jitter = 25;
    Stores s(3, c);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> gpa(0, 4);
    for (int i = 0; i < 1000; ++i) {
        s.sim.at(i / 4, [&s, dc = DcId(rng() % 3), key = "k" + std::to_string(rng() % 100), g = gpa(rng),
                         del = rng() % 10 == 0] {
            if (del && s.store.get(dc, key)) s.store.remove(dc, key);
            else s.store.put(dc, key, student(g, "CS"));
        });
    }
    s.sim.run_until_quiescent();
    EXPECT_TRUE(s.store.converged());
    // Folding every entry in any order with LWW gives the same map.
    std::map<Key, ObjectVersion> fold;
    auto log = s.store.replica(2).log();
    std::shuffle(log.begin(), log.end(), rng);
    for (const auto& e : log) {
        auto it = fold.find(e.key);
        if (it == fold.end()) fold.emplace(e.key, e.version());
        else it->second = lww_merge(it->second, e.version());
    }
    EXPECT_EQ(fold, s.store.replica(0).objects());
}
