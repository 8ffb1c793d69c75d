#include "geoidx/value.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

namespace geoidx {

int compare(const Value& a, const Value& b) {
    if (a.index() != b.index()) {
        throw std::invalid_argument("cannot compare numeric and text values");
    }
    if (const auto* x = std::get_if<double>(&a)) {
        const double y = std::get<double>(b);
        return *x < y ? -1 : (y < *x ? 1 : 0);
    }
    const int c = std::get<std::string>(a).compare(std::get<std::string>(b));
    return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

bool is_numeric(const Value& v) { return std::holds_alternative<double>(v); }

std::string format_value(const Value& v) {
    if (const auto* d = std::get_if<double>(&v)) {
        char buf[64];
        auto res = std::to_chars(buf, buf + sizeof buf, *d);
        return std::string(buf, res.ptr);
    }
    std::string out = "\"";
    for (char c : std::get<std::string>(v)) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

double text_position(const std::string& s) {
    constexpr int kDigits = 8;
    constexpr double kBase = 96.0;
    double pos = 0.0;
    double scale = 1.0;
    for (int i = 0; i < kDigits; ++i) {
        scale /= kBase;
        int digit = 0;
        if (i < static_cast<int>(s.size())) {
            const int c = static_cast<unsigned char>(s[i]);
            digit = std::clamp(c - 31, 1, 95);
        }
        pos += digit * scale;
    }
    return pos;
}

Schema::Schema(std::vector<Attribute> attributes) : attributes_(std::move(attributes)) {
    std::set<std::string> seen;
    for (const auto& a : attributes_) {
        if (a.name.empty()) throw SchemaError("attribute name must not be empty");
        if (!seen.insert(a.name).second) throw SchemaError("duplicate attribute '" + a.name + "'");
        const bool numeric = a.kind == AttrKind::Numeric;
        if (is_numeric(a.min) != numeric || is_numeric(a.max) != numeric) {
            throw SchemaError("domain bounds of '" + a.name + "' do not match its kind");
        }
        if (compare(a.min, a.max) > 0) {
            throw SchemaError("attribute '" + a.name + "' has min > max");
        }
    }
}

std::optional<std::size_t> Schema::find(const std::string& name) const {
    for (std::size_t i = 0; i < attributes_.size(); ++i) {
        if (attributes_[i].name == name) return i;
    }
    return std::nullopt;
}

std::size_t Schema::axis_of(const std::string& name) const {
    auto axis = find(name);
    if (!axis) throw SchemaError("unknown attribute '" + name + "'");
    return *axis;
}

bool Schema::conforms(std::size_t axis, const Value& v) const {
    const auto& a = attributes_.at(axis);
    if (is_numeric(v) != (a.kind == AttrKind::Numeric)) return false;
    return compare(a.min, v) <= 0 && compare(v, a.max) <= 0;
}

double Schema::normalize(std::size_t axis, const Value& v) const {
    const auto& a = attributes_.at(axis);
    if (a.kind == AttrKind::Numeric) {
        const double lo = std::get<double>(a.min);
        const double hi = std::get<double>(a.max);
        if (hi == lo) return 0.0;
        return (std::get<double>(v) - lo) / (hi - lo);
    }
    const double lo = text_position(std::get<std::string>(a.min));
    const double hi = text_position(std::get<std::string>(a.max));
    if (hi == lo) return 0.0;
    return (text_position(std::get<std::string>(v)) - lo) / (hi - lo);
}

Point Schema::to_point(const Attrs& attrs) const {
    for (const auto& [name, _] : attrs) axis_of(name);
    Point p;
    p.reserve(attributes_.size());
    for (std::size_t i = 0; i < attributes_.size(); ++i) {
        auto it = attrs.find(attributes_[i].name);
        if (it == attrs.end()) {
            throw SchemaError("missing attribute '" + attributes_[i].name + "'");
        }
        if (!conforms(i, it->second)) {
            throw SchemaError("value " + format_value(it->second) + " violates the domain of '" +
                              attributes_[i].name + "'");
        }
        p.push_back(it->second);
    }
    return p;
}

Attrs Schema::to_attrs(const Point& p) const {
    Attrs out;
    for (std::size_t i = 0; i < p.size() && i < attributes_.size(); ++i) {
        out.emplace(attributes_[i].name, p[i]);
    }
    return out;
}

std::string Schema::format_point(const Point& p) const {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i) os << ", ";
        os << attributes_.at(i).name << '=' << format_value(p[i]);
    }
    os << ')';
    return os.str();
}

bool Schema::operator==(const Schema& other) const {
    if (attributes_.size() != other.attributes_.size()) return false;
    for (std::size_t i = 0; i < attributes_.size(); ++i) {
        const auto& a = attributes_[i];
        const auto& b = other.attributes_[i];
        if (a.name != b.name || a.kind != b.kind || a.min != b.min || a.max != b.max) return false;
    }
    return true;
}

}  // namespace geoidx
