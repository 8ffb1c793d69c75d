#include <gtest/gtest.h>

#include <random>

#include "geoidx/router.hpp"
#include "world.hpp"

using namespace geoidx;
using namespace geoidx::router;

namespace {

std::shared_ptr<const Schema> plane() {
    return std::make_shared<const Schema>(std::vector<Attribute>{
        {"x", AttrKind::Numeric, 0.0, 100.0},
        {"y", AttrKind::Numeric, 0.0, 100.0},
    });
}

Region box(double x0, double x1, double y0, double y1) { return Region({{x0, x1}, {y0, y1}}); }

// Random tree made by recursive splits, sometimes with overlapping children.
RegionTree random_tree(std::mt19937_64& rng, const Region& r, int depth) {
    RegionTree t{r, {}};
    if (depth == 0 || rng() % 4 == 0) return t;
    const std::size_t axis = rng() % 2;
    const double lo = std::get<double>(r.axis(axis).lo);
    const double hi = std::get<double>(r.axis(axis).hi);
    const double cut = lo + (hi - lo) * (0.2 + 0.6 * (rng() % 100) / 100.0);
    Region left = r, right = r;
    left.axis(axis).hi = cut;
    left.axis(axis).hi_open = true;
    right.axis(axis).lo = cut;
    right.axis(axis).lo_open = false;
    if (rng() % 3 == 0) left.axis(axis).hi = std::min(hi, cut + (hi - lo) * 0.1);
    t.children.push_back(random_tree(rng, left, depth - 1));
    t.children.push_back(random_tree(rng, right, depth - 1));
    return t;
}

Region random_rect(std::mt19937_64& rng) {
    auto iv = [&] {
        double a = rng() % 101, b = rng() % 101;
        if (a > b) std::swap(a, b);
        return Interval{a, b, rng() % 3 == 0, rng() % 3 == 0};
    };
    return Region({iv(), iv()});
}

}  // namespace

TEST(GreedyCover, PrefersLargerCoverage) {
    const auto s = plane();
    const auto a = greedy_cover(*s, {box(0, 10, 0, 100), box(0, 100, 0, 100)}, box(0, 50, 0, 50));
    ASSERT_EQ(a.size(), 1u);
    EXPECT_EQ(a[0].child, 1u);
}

TEST(GreedyCover, GapNamesUncoveredPoint) {
    const auto s = plane();
    try {
        greedy_cover(*s, {box(0, 40, 0, 100), box(60, 100, 0, 100)}, box(0, 100, 0, 100));
        FAIL();
    } catch (const UnroutableError& e) {
        EXPECT_NE(std::string(e.what()).find("x="), std::string::npos);
    }
}

TEST(Plan, CoversRectangleExactlyWithinLeaves) {
    const auto s = plane();
    std::mt19937_64 rng(77);
    const Region root = Region::full(*s);
    for (int i = 0; i < 1000; ++i) {
        const RegionTree tree = random_tree(rng, root, 4);
        const Region rect = random_rect(rng);
        const auto plan_parts = plan(*s, tree, rect);
        std::vector<Region> parts;
        for (const auto& a : plan_parts) {
            ASSERT_TRUE(a.leaf_region.contains(a.part));
            ASSERT_TRUE(intersect(rect, root).contains(a.part));
            parts.push_back(a.part);
        }
        ASSERT_TRUE(uncovered(intersect(rect, root), parts).empty()) << "case " << i;
    }
}

TEST(CandidateCheck, DropsValuesThatNoLongerMatch) {
    sim::Simulator sim;
    sim::Bus bus(sim, {});
    store::GeoStore st(sim, bus, geoidx::testing::student_schema(), 2);
    st.put(0, "Obj", Attrs{{"GPA", 1.0}, {"Major", std::string("A")}});
    st.put(1, "Obj", Attrs{{"GPA", 1.0}, {"Major", std::string("B")}});
    st.put(0, "Other", Attrs{{"GPA", 1.0}, {"Major", std::string("A")}});
    sim.run_until_quiescent();
    const auto& schema = st.schema();
    const auto q = query::parse("Major = \"A\"", schema);
    const auto r = candidate_check({"Obj", "Other", "Gone"}, q.expr, schema, st.replica(0));
    EXPECT_EQ(r.kept, (std::set<Key>{"Other"}));
    EXPECT_EQ(r.removed, 2u);
    const auto ok = candidate_check({"Other"}, q.expr, schema, st.replica(0));
    EXPECT_EQ(ok.removed, 0u);
}
