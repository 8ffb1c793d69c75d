#include "geoidx/clock.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>
#include <stdexcept>

namespace geoidx {

VectorClock::VectorClock(std::initializer_list<std::pair<const DcId, Seq>> init) {
    for (const auto& [dc, seq] : init) set(dc, seq);
}

Seq VectorClock::get(DcId dc) const {
    auto it = entries_.find(dc);
    return it == entries_.end() ? 0 : it->second;
}

void VectorClock::set(DcId dc, Seq seq) {
    if (seq == 0) {
        entries_.erase(dc);
    } else {
        entries_[dc] = seq;
    }
}

bool VectorClock::dominates(const VectorClock& other) const {
    for (const auto& [dc, seq] : other.entries_) {
        if (get(dc) < seq) return false;
    }
    return true;
}

bool VectorClock::dominates_on(const VectorClock& other, const std::set<DcId>& dcs) const {
    for (DcId dc : dcs) {
        if (get(dc) < other.get(dc)) return false;
    }
    return true;
}

VectorClock VectorClock::restricted(const std::set<DcId>& dcs) const {
    VectorClock out;
    for (DcId dc : dcs) out.set(dc, get(dc));
    return out;
}

std::string VectorClock::to_string() const {
    std::ostringstream os;
    os << '{';
    bool first = true;
    for (const auto& [dc, seq] : entries_) {
        if (!first) os << ',';
        first = false;
        os << dc_name(dc) << ':' << seq;
    }
    os << '}';
    return os.str();
}

VectorClock merge_clock(const VectorClock& a, const VectorClock& b) {
    VectorClock out = a;
    for (const auto& [dc, seq] : b.entries()) out.advance(dc, seq);
    return out;
}

VectorClock stable_snapshot(const std::vector<VectorClock>& clocks) {
    if (clocks.empty()) throw std::invalid_argument("stable_snapshot of an empty clock set");
    std::set<DcId> dcs;
    for (const auto& c : clocks) {
        for (const auto& [dc, _] : c.entries()) dcs.insert(dc);
    }
    VectorClock out;
    for (DcId dc : dcs) {
        Seq lowest = clocks.front().get(dc);
        for (const auto& c : clocks) lowest = std::min(lowest, c.get(dc));
        out.set(dc, lowest);
    }
    return out;
}

std::string dc_name(DcId dc) { return "DC" + std::to_string(dc + 1); }

std::string StalenessLevel::to_string() const {
    switch (kind) {
        case Kind::Strong: return "strong";
        case Kind::Bounded: return "bounded:" + std::to_string(k);
        case Kind::Snapshot: return "snapshot";
        case Kind::Any: return "any";
    }
    return "any";
}

StalenessLevel StalenessLevel::parse(const std::string& text) {
    if (text == "strong") return strong();
    if (text == "snapshot") return snapshot();
    if (text == "any") return any();
    const std::string prefix = "bounded:";
    if (text.rfind(prefix, 0) == 0 && text.size() > prefix.size()) {
        std::uint64_t k = 0;
        const char* first = text.data() + prefix.size();
        const char* last = text.data() + text.size();
        auto [ptr, ec] = std::from_chars(first, last, k);
        if (ec == std::errc() && ptr == last) return bounded(k);
    }
    throw std::invalid_argument("unknown staleness level '" + text + "'");
}

std::map<DcId, Seq> SnapshotReport::lag() const {
    std::map<DcId, Seq> out;
    for (const auto& [dc, head] : heads.entries()) {
        const Seq s = stable.get(dc);
        out[dc] = head > s ? head - s : 0;
    }
    return out;
}

VectorClock resolve_target(const StalenessLevel& level, const SnapshotReport& report) {
    // Every level is clamped to the heads; the stable snapshot is already
    // applied everywhere, so bounded reads never ask for less than it.
    VectorClock stable;
    for (const auto& [dc, s] : report.stable.entries()) {
        stable.set(dc, std::min(s, report.heads.get(dc)));
    }
    switch (level.kind) {
        case StalenessLevel::Kind::Strong:
            return report.heads;
        case StalenessLevel::Kind::Bounded: {
            VectorClock out;
            for (const auto& [dc, head] : report.heads.entries()) {
                const Seq bounded = head > level.k ? head - level.k : 0;
                out.set(dc, std::max(bounded, stable.get(dc)));
            }
            return out;
        }
        case StalenessLevel::Kind::Snapshot:
            return stable;
        case StalenessLevel::Kind::Any:
            return {};
    }
    return {};
}

}  // namespace geoidx
