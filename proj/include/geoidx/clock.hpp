#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "geoidx/value.hpp"

namespace geoidx {

/// Per-origin-DC count of contiguously applied log entries. Absent entries
/// read as zero and zeros are never stored, so equality is structural.
class VectorClock {
public:
    VectorClock() = default;
    VectorClock(std::initializer_list<std::pair<const DcId, Seq>> init);

    Seq get(DcId dc) const;
    void set(DcId dc, Seq seq);
    void advance(DcId dc, Seq seq) {
        if (seq > get(dc)) set(dc, seq);
    }

    const std::map<DcId, Seq>& entries() const { return entries_; }
    bool is_zero() const { return entries_.empty(); }

    /// a >= b in every component.
    bool dominates(const VectorClock& other) const;
    /// Dominance restricted to the given components.
    bool dominates_on(const VectorClock& other, const std::set<DcId>& dcs) const;

    VectorClock restricted(const std::set<DcId>& dcs) const;

    /// "{DC1:3,DC2:5}" with 1-based DC names.
    std::string to_string() const;

    bool operator==(const VectorClock&) const = default;

private:
    std::map<DcId, Seq> entries_;
};

/// Pointwise maximum.
VectorClock merge_clock(const VectorClock& a, const VectorClock& b);

/// Pointwise minimum over the union of DC ids; throws std::invalid_argument
/// on an empty list.
VectorClock stable_snapshot(const std::vector<VectorClock>& clocks);

/// Display name of a DC index: 0 -> "DC1".
std::string dc_name(DcId dc);

struct StalenessLevel {
    enum class Kind { Strong, Bounded, Snapshot, Any };

    Kind kind = Kind::Any;
    std::uint64_t k = 0;

    static StalenessLevel strong() { return {Kind::Strong, 0}; }
    static StalenessLevel bounded(std::uint64_t k) { return {Kind::Bounded, k}; }
    static StalenessLevel snapshot() { return {Kind::Snapshot, 0}; }
    static StalenessLevel any() { return {Kind::Any, 0}; }

    /// "strong", "bounded:<k>", "snapshot" or "any".
    std::string to_string() const;
    static StalenessLevel parse(const std::string& text);

    bool operator==(const StalenessLevel&) const = default;
};

struct SnapshotReport {
    VectorClock stable;
    VectorClock heads;

    /// heads - stable per DC.
    std::map<DcId, Seq> lag() const;
};

VectorClock resolve_target(const StalenessLevel& level, const SnapshotReport& report);

}  // namespace geoidx
