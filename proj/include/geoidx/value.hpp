#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace geoidx {

using Tick = std::uint64_t;
using Seq = std::uint64_t;
using DcId = std::uint32_t;
using Key = std::string;

/// Secondary attribute value: numeric or text.
using Value = std::variant<double, std::string>;

/// An object's secondary attributes in schema axis order.
using Point = std::vector<Value>;

/// Attribute values keyed by name, as supplied by clients.
using Attrs = std::map<std::string, Value>;

enum class AttrKind { Numeric, Text };

struct Attribute {
    std::string name;
    AttrKind kind = AttrKind::Numeric;
    Value min;
    Value max;
};

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

/// Three-way comparison of two values of the same kind. Mixed kinds throw.
int compare(const Value& a, const Value& b);

bool is_numeric(const Value& v);

/// Shortest round-trip text for numbers, quoted and escaped text for strings.
std::string format_value(const Value& v);

/// Monotone map of a text value into [0, 1] over printable ASCII. Used for
/// extents and split geometry of text axes.
double text_position(const std::string& s);

/// Static set of indexed attributes. Axis order is the declaration order.
class Schema {
public:
    Schema() = default;
    explicit Schema(std::vector<Attribute> attributes);

    std::size_t size() const { return attributes_.size(); }
    const Attribute& at(std::size_t axis) const { return attributes_.at(axis); }
    const std::vector<Attribute>& attributes() const { return attributes_; }

    std::optional<std::size_t> find(const std::string& name) const;
    /// Throws SchemaError for unknown names.
    std::size_t axis_of(const std::string& name) const;

    bool conforms(std::size_t axis, const Value& v) const;

    /// Position of v along the axis, scaled to [0, 1].
    double normalize(std::size_t axis, const Value& v) const;

    /// Converts named attributes to a point; every axis must be present and
    /// in domain, and no unknown names are allowed.
    Point to_point(const Attrs& attrs) const;
    Attrs to_attrs(const Point& p) const;

    std::string format_point(const Point& p) const;

    bool operator==(const Schema& other) const;

private:
    std::vector<Attribute> attributes_;
};

}  // namespace geoidx
