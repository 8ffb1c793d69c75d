#include <gtest/gtest.h>

#include <random>

#include "geoidx/query.hpp"
#include "world.hpp"

using namespace geoidx;
using namespace geoidx::query;
using geoidx::testing::student_schema;

namespace {

const char* kFig3 = R"((GPA > 2.0 AND GPA < 3.0) AND Major = "Computer Science" FRESHNESS snapshot)";

std::shared_ptr<const Schema> grid_schema() {
    return std::make_shared<const Schema>(std::vector<Attribute>{
        {"A", AttrKind::Numeric, 0.0, 6.0},
        {"B", AttrKind::Numeric, 0.0, 6.0},
    });
}

}  // namespace

TEST(Parser, Fig3QueryGivesOneRectangle) {
    const auto schema = student_schema();
    const Query q = parse(kFig3, *schema);
    EXPECT_EQ(q.level, StalenessLevel::snapshot());
    const auto rects = to_rectangles(q.expr, *schema);
    ASSERT_EQ(rects.size(), 1u);
    const Interval gpa = rects[0].region.axis(0);
    EXPECT_EQ(gpa, (Interval{2.0, 3.0, true, true}));
    EXPECT_TRUE(rects[0].region.axis(1).is_point());
    EXPECT_EQ(std::get<std::string>(rects[0].region.axis(1).lo), "Computer Science");
}

TEST(Parser, DefaultLevelIsAny) {
    EXPECT_EQ(parse("GPA >= 0", *student_schema()).level, StalenessLevel::any());
}

TEST(Parser, UniversalPredicateCoversRoot) {
    const auto schema = student_schema();
    const auto rects = to_rectangles(parse("GPA >= 0", *schema).expr, *schema);
    ASSERT_EQ(rects.size(), 1u);
    EXPECT_EQ(rects[0].region, Region::full(*schema));
}

TEST(Parser, Errors) {
    const auto schema = student_schema();
    auto kind_of = [&](const std::string& text) {
        try {
            parse(text, *schema);
        } catch (const ParseError& e) {
            return e.kind();
        }
        ADD_FAILURE() << "no error for " << text;
        return ParseError::Kind::Syntax;
    };
    EXPECT_EQ(kind_of("GPA >"), ParseError::Kind::Syntax);
    EXPECT_EQ(kind_of("(GPA > 1"), ParseError::Kind::Syntax);
    EXPECT_EQ(kind_of("Height > 1"), ParseError::Kind::UnknownAttribute);
    EXPECT_EQ(kind_of("GPA > 9"), ParseError::Kind::Domain);
    EXPECT_EQ(kind_of("GPA = \"x\""), ParseError::Kind::Domain);
    EXPECT_EQ(kind_of("GPA > 1 FRESHNESS bounded:x"), ParseError::Kind::Syntax);
}

TEST(Parser, PrintParseRoundTrip) {
    const auto schema = student_schema();
    QueryGenerator gen(*schema, {{0.0, 1.5, 2.0, 3.25, 4.0}, {std::string("A"), std::string("Computer Science"),
                                                               std::string("say \"hi\""), std::string("z")}});
    std::mt19937_64 rng(99);
    for (int i = 0; i < 1000; ++i) {
        const Query q = gen.query(rng, 3);
        const std::string text = print(q);
        const Query back = parse(text, *schema);
        ASSERT_EQ(back, q) << text;
        EXPECT_EQ(print(back), text);
    }
}

TEST(Rectangles, DisjunctionGivesDegenerateBoxes) {
    const auto schema = grid_schema();
    const auto rects = to_rectangles(parse("A = 1 OR A = 2", *schema).expr, *schema);
    ASSERT_EQ(rects.size(), 2u);
    EXPECT_TRUE(rects[0].region.axis(0).is_point());
    EXPECT_TRUE(rects[1].region.axis(0).is_point());
}

TEST(Rectangles, ContradictionIsDropped) {
    const auto schema = grid_schema();
    EXPECT_TRUE(to_rectangles(parse("A > 5 AND A < 3", *schema).expr, *schema).empty());
}

TEST(Rectangles, UnionMembershipMatchesEvaluationOnGrid) {
    const auto schema = grid_schema();
    std::vector<Value> pool;
    for (double v = 0; v <= 6; v += 1) pool.push_back(v);
    QueryGenerator gen(*schema, {pool, pool});
    std::mt19937_64 rng(5);
    for (int i = 0; i < 300; ++i) {
        const Expr e = gen.expr(rng, 3);
        const auto rects = to_rectangles(e, *schema);
        for (double a = 0; a <= 6; a += 0.5) {
            for (double b = 0; b <= 6; b += 0.5) {
                const Point p{a, b};
                bool in = false;
                for (const auto& r : rects) in = in || r.region.contains(p);
                ASSERT_EQ(in, evaluate(e, *schema, p)) << print(e) << " at " << a << "," << b;
            }
        }
    }
}

TEST(Dnf, ExpansionLimitThrows) {
    const auto schema = grid_schema();
    std::string text;
    for (int i = 0; i < 12; ++i) text += std::string(i ? " AND " : "") + "(A = 1 OR B = 2)";
    EXPECT_THROW(to_dnf(parse(text, *schema).expr, 1024), Error);
}
