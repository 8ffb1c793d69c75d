#pragma once

#include <random>
#include <string>
#include <vector>

#include "geoidx/clock.hpp"
#include "geoidx/region.hpp"
#include "geoidx/value.hpp"

namespace geoidx::query {

enum class Cmp { Eq, Lt, Le, Gt, Ge };

const char* to_string(Cmp c);

struct Predicate {
    std::string attr;
    Cmp cmp = Cmp::Eq;
    Value value;

    bool operator==(const Predicate&) const = default;
};

/// Boolean tree. And/Or nodes are n-ary; a parenthesized group stays its own
/// node so that printing and reparsing give back the same tree.
struct Expr {
    enum class Kind { Pred, And, Or };
    Kind kind = Kind::Pred;
    Predicate pred;
    std::vector<Expr> children;

    static Expr leaf(Predicate p) { return Expr{Kind::Pred, std::move(p), {}}; }
    static Expr all_of(std::vector<Expr> c) { return Expr{Kind::And, {}, std::move(c)}; }
    static Expr any_of(std::vector<Expr> c) { return Expr{Kind::Or, {}, std::move(c)}; }

    bool operator==(const Expr&) const = default;
};

struct Query {
    Expr expr;
    StalenessLevel level = StalenessLevel::any();
    DcId origin = 0;

    /// Compares expression and level; the origin DC is not part of the text.
    bool operator==(const Query& other) const { return expr == other.expr && level == other.level; }
};

class ParseError : public Error {
public:
    enum class Kind { Syntax, UnknownAttribute, Domain };

    ParseError(Kind kind, std::size_t offset, const std::string& message);

    Kind kind() const { return kind_; }
    std::size_t offset() const { return offset_; }

private:
    Kind kind_;
    std::size_t offset_;
};

/// Grammar:
///   query     := expr [ "FRESHNESS" level ]
///   expr      := term { "OR" term }
///   term      := factor { "AND" factor }
///   factor    := predicate | "(" expr ")"
///   predicate := IDENT cmp literal
///   level     := "strong" | "bounded:" INT | "snapshot" | "any"
Query parse(const std::string& text, const Schema& schema);

std::string print(const Expr& e);
/// Always emits the FRESHNESS clause.
std::string print(const Query& q);

bool evaluate(const Predicate& p, const Schema& schema, const Point& point);
bool evaluate(const Expr& e, const Schema& schema, const Point& point);

/// Disjunctive normal form as a list of conjunctions. Throws Error when the
/// expansion exceeds max_conjuncts.
std::vector<std::vector<Predicate>> to_dnf(const Expr& e, std::size_t max_conjuncts = 1024);

struct Rect {
    Region region;
    /// The conjunct the rectangle came from, with exact bounds.
    std::vector<Predicate> residual;
};

/// One rectangle per satisfiable conjunct; unconstrained axes span the whole
/// domain.
std::vector<Rect> to_rectangles(const Expr& e, const Schema& schema);

Interval predicate_interval(const Predicate& p, const Schema& schema);

/// Seeded random query generator. Values are drawn from per-axis pools so
/// that generated predicates hit real data and produce boundary ties.
class QueryGenerator {
public:
    explicit QueryGenerator(const Schema& schema, std::vector<std::vector<Value>> pools = {});

    Predicate predicate(std::mt19937_64& rng) const;
    Expr expr(std::mt19937_64& rng, int depth = 3) const;
    /// Random expression and random staleness level (bounded k in [0, 64]).
    Query query(std::mt19937_64& rng, int depth = 3) const;

private:
    const Schema& schema_;
    std::vector<std::vector<Value>> pools_;
};

}  // namespace geoidx::query
