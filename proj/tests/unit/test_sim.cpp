#include <gtest/gtest.h>

#include "geoidx/sim.hpp"

using namespace geoidx;
using namespace geoidx::sim;

namespace {

struct Pair {
    Simulator sim;
    Bus bus;
    NodeId a = 0;
    NodeId b = 0;
    std::vector<std::pair<Tick, std::string>> got;

    explicit Pair(NetConfig c) : sim(c.seed), bus(sim, c) {
        a = bus.add_node("a", 0);
        b = bus.add_node("b", 1, [this](const Envelope& e) { got.emplace_back(sim.now(), e.detail); });
    }
};

}  // namespace

TEST(Simulator, EmptyQueueIsQuiescentAtZero) {
    Simulator sim;
    EXPECT_EQ(sim.run_until_quiescent(), 0u);
}

TEST(Simulator, SingleEventSetsFinalTick) {
    Simulator sim;
    bool ran = false;
    sim.at(5, [&] { ran = true; });
    EXPECT_EQ(sim.run_until_quiescent(), 5u);
    EXPECT_TRUE(ran);
}

TEST(Simulator, SameTickEventsRunInInsertionOrder) {
    Simulator sim;
    std::string order;
    sim.at(3, [&] { order += "x"; });
    sim.at(1, [&] { order += "a"; });
    sim.at(3, [&] { order += "y"; });
    sim.run_until_quiescent();
    EXPECT_EQ(order, "axy");
}

TEST(Simulator, ClockNeverDecreases) {
    Simulator sim;
    std::vector<Tick> seen;
    for (Tick t : {9, 2, 7, 2, 0}) sim.at(t, [&] {
        seen.push_back(sim.now());
        if (seen.size() < 4) sim.at(1, [&] { seen.push_back(sim.now()); });
    });
    sim.run_until_quiescent();
    EXPECT_TRUE(std::is_sorted(seen.begin(), seen.end()));
}

TEST(Simulator, BackgroundWorkDoesNotBlockQuiescence) {
    Simulator sim;
    int beats = 0;
    std::function<void()> beat = [&] {
        ++beats;
        sim.after(10, beat);
    };
    sim.at_background(0, beat);
    sim.at(35, [] {});
    EXPECT_EQ(sim.run_until_quiescent(), 35u);
    EXPECT_EQ(beats, 4);
}

TEST(Simulator, LivelockPastLimitThrows) {
    Simulator sim;
    std::function<void()> again = [&] { sim.after(1, again); };
    sim.at(0, again);
    EXPECT_THROW(sim.run_until_quiescent(100), LivelockError);
}

TEST(Bus, ZeroDelayDeliversSameTickOnce) {
    NetConfig c;
    c.min_delay = c.max_delay = 0;
    Pair p(c);
    p.sim.at(4, [&] { p.bus.send(p.a, p.b, "m", "hello", {}); });
    p.sim.run_until_quiescent();
    ASSERT_EQ(p.got.size(), 1u);
    EXPECT_EQ(p.got[0].first, 4u);
}

TEST(Bus, DuplicationProbabilityOneDeliversTwice) {
    NetConfig c;
    c.dup_prob = 1.0;
    Pair p(c);
    p.bus.send(p.a, p.b, "m", "x", {});
    p.sim.run_until_quiescent();
    EXPECT_EQ(p.got.size(), 2u);
}

TEST(Bus, OrderedSendHidesDuplicatesAndReordering) {
    NetConfig c;
    c.dup_prob = 0.5;
    c.reorder_jitter = 30;
    c.seed = 9;
    Pair p(c);
    for (int i = 0; i < 50; ++i) p.bus.send_ordered(p.a, p.b, "m", std::to_string(i), {});
    p.sim.run_until_quiescent();
    ASSERT_EQ(p.got.size(), 50u);
    for (int i = 0; i < 50; ++i) EXPECT_EQ(p.got[i].second, std::to_string(i));
}

TEST(Bus, DeliveryNeverPrecedesSend) {
    NetConfig c;
    c.min_delay = 2;
    c.max_delay = 9;
    c.reorder_jitter = 5;
    c.dup_prob = 0.3;
    Simulator sim(c.seed);
    Bus bus(sim, c);
    bool ok = true;
    const NodeId a = bus.add_node("a", 0);
    const NodeId b = bus.add_node("b", 1, [&](const Envelope& e) { ok = ok && e.deliver_at >= e.sent_at && sim.now() >= e.sent_at; });
    for (int i = 0; i < 200; ++i) sim.at(i, [&] { bus.send(a, b, "m", "", {}); });
    sim.run_until_quiescent();
    EXPECT_TRUE(ok);
}

TEST(Bus, JitteredOrderIsReproducibleForAFixedSeed) {
    auto run = [] {
        NetConfig c;
        c.seed = 42;
        c.reorder_jitter = 25;
        Pair p(c);
        for (int i = 0; i < 20; ++i) p.bus.send(p.a, p.b, "m", std::to_string(i), {});
        p.sim.run_until_quiescent();
        return p.got;
    };
    EXPECT_EQ(run(), run());
}

TEST(Bus, PartitionHoldsMessagesUntilHealed) {
    NetConfig c;
    c.min_delay = c.max_delay = 1;
    Pair p(c);
    p.bus.add_partition({10, 50, 0, 1});
    p.sim.at(20, [&] { p.bus.send(p.a, p.b, "m", "held", {}); });
    p.sim.run_until_quiescent();
    ASSERT_EQ(p.got.size(), 1u);
    EXPECT_GE(p.got[0].first, 50u);
}

TEST(Bus, TraceCsvHasFixedHeader) {
    NetConfig c;
    Pair p(c);
    p.bus.set_tracing(true);
    p.bus.send(p.a, p.b, "m", "d", {});
    p.sim.run_until_quiescent();
    const std::string csv = p.bus.trace_csv();
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "tick,src,dst,kind,detail");
    EXPECT_NE(csv.find(",a,b,m,d"), std::string::npos);
}

TEST(NetConfig, RejectsInvertedDelays) {
    NetConfig c;
    c.min_delay = 5;
    c.max_delay = 2;
    EXPECT_THROW(c.validate(), Error);
    c.max_delay = 5;
    c.dup_prob = 1.5;
    EXPECT_THROW(c.validate(), Error);
}
