#pragma once

#include <string>
#include <vector>

#include "geoidx/value.hpp"

namespace geoidx {

/// One axis of a rectangle. Each bound may be open or closed.
struct Interval {
    Value lo;
    Value hi;
    bool lo_open = false;
    bool hi_open = false;

    bool empty() const;
    bool contains(const Value& v) const;
    bool contains(const Interval& other) const;
    bool is_point() const;

    bool operator==(const Interval& other) const = default;
};

Interval intersect(const Interval& a, const Interval& b);

/// Parts of a not covered by b (at most two, possibly empty list).
std::vector<Interval> subtract(const Interval& a, const Interval& b);

/// Axis-aligned N-dimensional rectangle, one interval per schema axis. Both
/// QPU regions and query rectangles use this type.
class Region {
public:
    Region() = default;
    explicit Region(std::vector<Interval> axes) : axes_(std::move(axes)) {}

    /// The full domain product with closed bounds.
    static Region full(const Schema& schema);

    std::size_t dims() const { return axes_.size(); }
    const Interval& axis(std::size_t i) const { return axes_.at(i); }
    Interval& axis(std::size_t i) { return axes_.at(i); }
    const std::vector<Interval>& axes() const { return axes_; }

    bool empty() const;
    bool contains(const Point& p) const;
    bool contains(const Region& other) const;
    bool intersects(const Region& other) const;

    std::string to_string(const Schema& schema) const;

    bool operator==(const Region& other) const = default;

private:
    std::vector<Interval> axes_;
};

Region intersect(const Region& a, const Region& b);

/// Disjoint boxes covering a minus b.
std::vector<Region> subtract(const Region& a, const Region& b);

/// Boxes of `target` not covered by any of `covers`.
std::vector<Region> uncovered(const Region& target, const std::vector<Region>& covers);

/// Normalized length of an interval along an axis.
double extent(const Schema& schema, std::size_t axis, const Interval& iv);

/// Fraction of q's volume covered by part, computed per axis; axes where q is
/// degenerate contribute 1 when part is non-empty.
double covered_fraction(const Schema& schema, const Region& q, const Region& part);

/// Some point inside a non-empty region, used in diagnostics.
Point representative_point(const Region& r);

/// If a and b differ on exactly one axis and their intervals there are
/// adjacent without overlap, returns the union; otherwise nullopt.
std::optional<Region> rectangular_union(const Region& a, const Region& b);

}  // namespace geoidx
