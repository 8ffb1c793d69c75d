#include <gtest/gtest.h>

#include <random>

#include "geoidx/crdt_index.hpp"
#include "world.hpp"

namespace gt = geoidx::testing;

using namespace geoidx;
using namespace geoidx::index;
using store::LogEntry;
using store::Op;

namespace {

std::shared_ptr<const Schema> attr_schema() {
    return std::make_shared<const Schema>(std::vector<Attribute>{{"Attr", AttrKind::Text, std::string("A"), std::string("Z")}});
}

LogEntry write(DcId dc, Seq seq, Tick ts, const Key& k, const std::string& v, std::optional<store::Stamp> sup = {}) {
    LogEntry e;
    e.origin = dc;
    e.seq = seq;
    e.ts = ts;
    e.key = k;
    e.attrs = {v};
    e.superseded = sup;
    return e;
}

std::set<Key> keys_for(const CrdtIndex& idx, const std::string& v) {
    return idx.lookup_range(0, Interval{v, v}).exact_keys;
}

}  // namespace

TEST(CrdtIndex, FirstInsertIsVisible) {
    CrdtIndex idx(attr_schema(), Binning::none(*attr_schema()));
    idx.apply_write(write(0, 1, 1, "Obj", "A"));
    EXPECT_EQ(keys_for(idx, "A"), (std::set<Key>{"Obj"}));
    EXPECT_EQ(idx.object_count(), 1u);
}

TEST(CrdtIndex, ConcurrentWritesLeaveBothPostings) {
    const auto s = attr_schema();
    CrdtIndex dc1(s, Binning::none(*s)), dc2(s, Binning::none(*s));
    const auto a = write(0, 1, 5, "Obj", "A");
    const auto b = write(1, 1, 5, "Obj", "B");
    dc1.apply_write(a);
    dc2.apply_write(b);
    dc1.merge(dc2);
    EXPECT_EQ(keys_for(dc1, "A"), (std::set<Key>{"Obj"}));
    EXPECT_EQ(keys_for(dc1, "B"), (std::set<Key>{"Obj"}));
}

TEST(CrdtIndex, LocalOverwriteTombstonesOldPosting) {
    const auto s = attr_schema();
    CrdtIndex idx(s, Binning::none(*s));
    const auto a = write(0, 1, 1, "Obj", "A");
    idx.apply_write(a);
    idx.apply_write(write(0, 2, 2, "Obj", "C", a.stamp()));
    EXPECT_TRUE(keys_for(idx, "A").empty());
    EXPECT_EQ(keys_for(idx, "C"), (std::set<Key>{"Obj"}));
    EXPECT_FALSE(idx.visible(a.stamp()));
    // Readers pinned before the overwrite still see the old posting.
    EXPECT_TRUE(idx.visible(a.stamp(), Visibility::at(VectorClock{{0, 1}})));
}

TEST(CrdtIndex, MergeIdentityAndIdempotence) {
    const auto s = attr_schema();
    CrdtIndex x(s, Binning::none(*s));
    x.apply_write(write(0, 1, 1, "k", "Q"));
    CrdtIndex empty(s, Binning::none(*s));
    EXPECT_EQ(merge(x, x), x);
    EXPECT_EQ(merge(x, empty), x);
}

TEST(CrdtIndex, MergeRejectsBinningMismatch) {
    const auto s = gt::student_schema();
    CrdtIndex a(s, Binning::none(*s));
    CrdtIndex b(s, Binning(*s, {{"GPA", {AttrBinning::Kind::EquiWidth, 8}}}));
    EXPECT_THROW(a.merge(b), std::logic_error);
}

TEST(CrdtIndex, DeltasAreIdempotentAndOrderInsensitive) {
    sim::NetConfig c;
    c.dup_prob = 0.2;
    c.reorder_jitter = 10;
    gt::World w(gt::four_axis_schema(), 3, c);
    std::mt19937_64 rng(4);
    for (int i = 0; i < 400; ++i) {
        const DcId dc = rng() % 3;
        const Key k = "k" + std::to_string(rng() % 40);
        if (rng() % 6 == 0 && w.store.get(dc, k)) w.store.remove(dc, k);
        else w.store.put(dc, k, gt::random_point(w.store.schema(), rng));
        w.sim.run_until(w.sim.now() + rng() % 5);
    }
    w.sim.run_until_quiescent();
    const auto schema = w.store.schema_ptr();
    const Binning bins(*schema, {{"a", {AttrBinning::Kind::EquiWidth, 10}}});

    CrdtIndex source(schema, bins);
    std::vector<IndexDelta> deltas;
    for (const auto& e : w.store.replica(0).log()) deltas.push_back(source.apply_write(e));

    std::vector<CrdtIndex> replicas(3, CrdtIndex(schema, bins));
    for (auto& r : replicas) {
        auto order = deltas;
        order.insert(order.end(), deltas.begin(), deltas.begin() + 50);
        std::shuffle(order.begin(), order.end(), rng);
        for (const auto& d : order) r.apply(d);
        EXPECT_EQ(r, source);
    }
}

TEST(CrdtIndex, ReplicasMergedToClosureAgreeWithRebuild) {
    sim::NetConfig c;
    c.dup_prob = 0.2;
    c.reorder_jitter = 20;
    c.seed = 8;
    gt::World w(gt::four_axis_schema(), 3, c);
    std::mt19937_64 rng(12);
    for (int i = 0; i < 600; ++i) {
        const DcId dc = rng() % 3;
        const Key k = "k" + std::to_string(rng() % 60);
        if (rng() % 5 == 0 && w.store.get(dc, k)) w.store.remove(dc, k);
        else w.store.put(dc, k, gt::random_point(w.store.schema(), rng));
        w.sim.run_until(w.sim.now() + rng() % 3);
    }
    w.sim.run_until_quiescent();
    const auto schema = w.store.schema_ptr();
    const Binning bins(*schema, {{"b", {AttrBinning::Kind::EquiWidth, 7}}});

    // Each replica folds its own DC's log order.
    std::vector<CrdtIndex> idx(3, CrdtIndex(schema, bins));
    for (DcId d = 0; d < 3; ++d) {
        for (const auto& e : w.store.replica(d).log()) idx[d].apply_write(e);
    }
    EXPECT_EQ(merge(merge(idx[0], idx[1]), idx[2]), merge(idx[0], merge(idx[1], idx[2])));
    EXPECT_EQ(merge(idx[0], idx[1]), merge(idx[1], idx[0]));
    for (DcId d = 0; d < 3; ++d) {
        idx[d].scrub(w.store.replica(d));
        EXPECT_EQ(idx[d].canonical(),
                  oracle::rebuild_index(w.store.replica(d), *schema, Region::full(*schema), bins));
    }
    EXPECT_EQ(idx[0].canonical(), idx[1].canonical());
    EXPECT_EQ(idx[1].canonical(), idx[2].canonical());
}

TEST(CrdtIndex, ExactTextLookupHasNoCandidates) {
    const auto s = gt::student_schema();
    CrdtIndex idx(s, Binning::none(*s));
    LogEntry e;
    e.origin = 0;
    e.seq = 1;
    e.ts = 1;
    e.key = "ann";
    e.attrs = {2.5, std::string("Computer Science")};
    idx.apply_write(e);
    const auto r = idx.lookup_range(1, Interval{std::string("Computer Science"), std::string("Computer Science")});
    EXPECT_EQ(r.exact_keys, (std::set<Key>{"ann"}));
    EXPECT_TRUE(r.candidate_keys.empty());
}

TEST(CrdtIndex, BoundaryBinsYieldCandidates) {
    const auto s = gt::student_schema();
    CrdtIndex idx(s, Binning(*s, {{"GPA", {AttrBinning::Kind::EquiWidth, 8}}}));
    const std::vector<std::pair<Key, double>> rows = {{"a", 1.9}, {"b", 2.0}, {"c", 2.2}, {"d", 2.6}, {"e", 3.0}, {"f", 3.1}};
    Seq seq = 0;
    for (const auto& [k, g] : rows) {
        LogEntry e;
        e.origin = 0;
        e.seq = ++seq;
        e.ts = seq;
        e.key = k;
        e.attrs = {g, std::string("X")};
        idx.apply_write(e);
    }
    const auto r = idx.lookup_range(0, Interval{2.0, 3.0, true, true});
    EXPECT_EQ(r.exact_keys, (std::set<Key>{"d"}));
    EXPECT_EQ(r.candidate_keys, (std::set<Key>{"b", "c"}));
    const auto all = idx.lookup_range(0, Interval{0.0, 4.0});
    EXPECT_EQ(all.exact_keys.size(), rows.size());
    EXPECT_TRUE(all.candidate_keys.empty());
}

TEST(CrdtIndex, ScrubRemovesConflictLoser) {
    gt::World w(attr_schema(), 2, {});
    w.store.put(0, "Obj", Attrs{{"Attr", std::string("A")}});
    w.store.put(1, "Obj", Attrs{{"Attr", std::string("B")}});
    w.sim.run_until_quiescent();
    const auto s = w.store.schema_ptr();
    CrdtIndex idx(s, Binning::none(*s));
    for (const auto& e : w.store.replica(0).log()) idx.apply_write(e);
    EXPECT_EQ(keys_for(idx, "A"), (std::set<Key>{"Obj"}));
    EXPECT_EQ(idx.scrub(w.store.replica(0)), 1u);
    EXPECT_TRUE(keys_for(idx, "A").empty());
    EXPECT_EQ(keys_for(idx, "B"), (std::set<Key>{"Obj"}));
    EXPECT_EQ(idx.scrub(w.store.replica(0)), 0u);
}

TEST(CrdtIndex, RegionFilterSkipsOutsideAdds) {
    const auto s = gt::student_schema();
    CrdtIndex idx(s, Binning::none(*s));
    Region low = Region::full(*s);
    low.axis(0).hi = 2.0;
    LogEntry e;
    e.origin = 0;
    e.seq = 1;
    e.ts = 1;
    e.key = "hi";
    e.attrs = {3.5, std::string("X")};
    const auto d = idx.apply_write(e, &low);
    EXPECT_TRUE(d.adds.empty());
    EXPECT_EQ(idx.object_count(), 0u);
}
