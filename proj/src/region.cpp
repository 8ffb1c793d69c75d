#include "geoidx/region.hpp"

#include <algorithm>
#include <sstream>

namespace geoidx {

bool Interval::empty() const {
    const int c = compare(lo, hi);
    if (c > 0) return true;
    if (c == 0) return lo_open || hi_open;
    return false;
}

bool Interval::contains(const Value& v) const {
    const int l = compare(lo, v);
    if (l > 0 || (l == 0 && lo_open)) return false;
    const int h = compare(v, hi);
    if (h > 0 || (h == 0 && hi_open)) return false;
    return true;
}

bool Interval::contains(const Interval& o) const {
    if (o.empty()) return true;
    const int l = compare(lo, o.lo);
    if (l > 0 || (l == 0 && lo_open && !o.lo_open)) return false;
    const int h = compare(o.hi, hi);
    if (h > 0 || (h == 0 && hi_open && !o.hi_open)) return false;
    return true;
}

bool Interval::is_point() const { return !lo_open && !hi_open && compare(lo, hi) == 0; }

Interval intersect(const Interval& a, const Interval& b) {
    Interval out;
    const int l = compare(a.lo, b.lo);
    if (l > 0) {
        out.lo = a.lo;
        out.lo_open = a.lo_open;
    } else if (l < 0) {
        out.lo = b.lo;
        out.lo_open = b.lo_open;
    } else {
        out.lo = a.lo;
        out.lo_open = a.lo_open || b.lo_open;
    }
    const int h = compare(a.hi, b.hi);
    if (h < 0) {
        out.hi = a.hi;
        out.hi_open = a.hi_open;
    } else if (h > 0) {
        out.hi = b.hi;
        out.hi_open = b.hi_open;
    } else {
        out.hi = a.hi;
        out.hi_open = a.hi_open || b.hi_open;
    }
    return out;
}

std::vector<Interval> subtract(const Interval& a, const Interval& b) {
    std::vector<Interval> out;
    if (a.empty()) return out;
    const Interval inter = intersect(a, b);
    if (inter.empty()) {
        out.push_back(a);
        return out;
    }
    Interval left = intersect(a, Interval{a.lo, inter.lo, a.lo_open, !inter.lo_open});
    Interval right = intersect(a, Interval{inter.hi, a.hi, !inter.hi_open, a.hi_open});
    if (!left.empty()) out.push_back(std::move(left));
    if (!right.empty()) out.push_back(std::move(right));
    return out;
}

Region Region::full(const Schema& schema) {
    std::vector<Interval> axes;
    axes.reserve(schema.size());
    for (const auto& a : schema.attributes()) axes.push_back(Interval{a.min, a.max, false, false});
    return Region(std::move(axes));
}

bool Region::empty() const {
    if (axes_.empty()) return true;
    return std::any_of(axes_.begin(), axes_.end(), [](const Interval& i) { return i.empty(); });
}

bool Region::contains(const Point& p) const {
    if (p.size() != axes_.size()) return false;
    for (std::size_t i = 0; i < axes_.size(); ++i) {
        if (!axes_[i].contains(p[i])) return false;
    }
    return true;
}

bool Region::contains(const Region& other) const {
    if (other.empty()) return true;
    for (std::size_t i = 0; i < axes_.size(); ++i) {
        if (!axes_[i].contains(other.axes_.at(i))) return false;
    }
    return true;
}

bool Region::intersects(const Region& other) const { return !intersect(*this, other).empty(); }

std::string Region::to_string(const Schema& schema) const {
    std::ostringstream os;
    os << '{';
    for (std::size_t i = 0; i < axes_.size(); ++i) {
        const auto& iv = axes_[i];
        if (i) os << ' ';
        os << schema.at(i).name << ':';
        if (iv.is_point()) {
            os << '=' << format_value(iv.lo);
            continue;
        }
        os << (iv.lo_open ? '(' : '[') << format_value(iv.lo) << ',' << format_value(iv.hi)
           << (iv.hi_open ? ')' : ']');
    }
    os << '}';
    return os.str();
}

Region intersect(const Region& a, const Region& b) {
    std::vector<Interval> axes;
    axes.reserve(a.dims());
    for (std::size_t i = 0; i < a.dims(); ++i) axes.push_back(intersect(a.axis(i), b.axis(i)));
    return Region(std::move(axes));
}

std::vector<Region> subtract(const Region& a, const Region& b) {
    std::vector<Region> out;
    if (a.empty()) return out;
    const Region inter = intersect(a, b);
    if (inter.empty()) {
        out.push_back(a);
        return out;
    }
    Region rest = a;
    for (std::size_t i = 0; i < a.dims(); ++i) {
        for (auto& part : subtract(rest.axis(i), inter.axis(i))) {
            Region box = rest;
            box.axis(i) = std::move(part);
            out.push_back(std::move(box));
        }
        rest.axis(i) = inter.axis(i);
    }
    return out;
}

std::vector<Region> uncovered(const Region& target, const std::vector<Region>& covers) {
    std::vector<Region> remaining;
    if (!target.empty()) remaining.push_back(target);
    for (const auto& c : covers) {
        std::vector<Region> next;
        for (const auto& r : remaining) {
            for (auto& piece : subtract(r, c)) next.push_back(std::move(piece));
        }
        remaining = std::move(next);
        if (remaining.empty()) break;
    }
    return remaining;
}

double extent(const Schema& schema, std::size_t axis, const Interval& iv) {
    if (iv.empty()) return 0.0;
    return std::max(0.0, schema.normalize(axis, iv.hi) - schema.normalize(axis, iv.lo));
}

double covered_fraction(const Schema& schema, const Region& q, const Region& part) {
    const Region inter = intersect(q, part);
    if (inter.empty()) return 0.0;
    double f = 1.0;
    for (std::size_t i = 0; i < q.dims(); ++i) {
        const double ql = extent(schema, i, q.axis(i));
        if (ql <= 0.0) continue;
        f *= extent(schema, i, inter.axis(i)) / ql;
    }
    return f;
}

Point representative_point(const Region& r) {
    Point p;
    for (const auto& iv : r.axes()) {
        if (!iv.lo_open) {
            p.push_back(iv.lo);
        } else if (!iv.hi_open) {
            p.push_back(iv.hi);
        } else if (const auto* lo = std::get_if<double>(&iv.lo)) {
            p.push_back((*lo + std::get<double>(iv.hi)) / 2.0);
        } else {
            p.push_back(std::get<std::string>(iv.lo) + "!");
        }
    }
    return p;
}

std::optional<Region> rectangular_union(const Region& a, const Region& b) {
    if (a.dims() != b.dims()) return std::nullopt;
    std::optional<std::size_t> diff;
    for (std::size_t i = 0; i < a.dims(); ++i) {
        if (a.axis(i) == b.axis(i)) continue;
        if (diff) return std::nullopt;
        diff = i;
    }
    if (!diff) return a;
    const Interval& x = a.axis(*diff);
    const Interval& y = b.axis(*diff);
    auto adjacent = [](const Interval& l, const Interval& r) {
        return compare(l.hi, r.lo) == 0 && l.hi_open != r.lo_open;
    };
    Region out = a;
    if (adjacent(x, y)) {
        out.axis(*diff) = Interval{x.lo, y.hi, x.lo_open, y.hi_open};
    } else if (adjacent(y, x)) {
        out.axis(*diff) = Interval{y.lo, x.hi, y.lo_open, x.hi_open};
    } else {
        return std::nullopt;
    }
    return out;
}

}  // namespace geoidx
