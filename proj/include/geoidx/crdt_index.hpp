#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "geoidx/clock.hpp"
#include "geoidx/region.hpp"
#include "geoidx/store.hpp"

namespace geoidx::index {

using store::Stamp;

/// Index entry key: an attribute and the bin of values it stands for. Exact
/// terms are degenerate single-value bins.
struct Term {
    std::size_t attr = 0;
    Value lo;
    Value hi;
    bool exact = true;
    bool hi_closed = false;

    Interval interval() const;

    /// Terms of one attribute never overlap, so (attr, lo) orders them.
    bool operator<(const Term& other) const;
    bool operator==(const Term& other) const;
};

struct AttrBinning {
    enum class Kind { None, EquiWidth };
    Kind kind = Kind::None;
    std::size_t bins = 64;

    bool operator==(const AttrBinning&) const = default;
};

/// Per-attribute binning policy. Equi-width bins split the attribute domain
/// into equal intervals; the last bin is closed at the domain maximum.
class Binning {
public:
    Binning() = default;
    Binning(const Schema& schema, const std::map<std::string, AttrBinning>& policies);

    static Binning none(const Schema& schema);

    Term term_for(const Schema& schema, std::size_t axis, const Value& v) const;
    AttrBinning at(std::size_t axis) const;
    bool binned(std::size_t axis) const { return at(axis).kind != AttrBinning::Kind::None; }

    bool operator==(const Binning&) const = default;

private:
    std::vector<AttrBinning> per_axis_;
};

struct Posting {
    Key key;
    Stamp tag;

    auto operator<=>(const Posting&) const = default;
};

/// A write as the index sees it: one posting per attribute, all sharing tag.
struct IndexedVersion {
    Key key;
    Stamp tag;
    Point point;

    bool operator==(const IndexedVersion&) const = default;
};

/// Tombstone for tag, effective for readers whose clock includes the entry
/// (effect_origin, effect_seq) that made the tagged version obsolete.
struct Removal {
    Stamp tag;
    DcId effect_origin = 0;
    Seq effect_seq = 0;

    bool operator==(const Removal&) const = default;
};

struct IndexDelta {
    std::vector<IndexedVersion> adds;
    std::vector<Removal> removes;

    bool empty() const { return adds.empty() && removes.empty(); }
};

/// Earliest obsoleting entry per origin DC.
using Effects = std::map<DcId, Seq>;

/// Which tombstones hide a posting.
struct Visibility {
    enum class Mode { All, Current, At };
    Mode mode = Mode::Current;
    VectorClock clock;

    /// Every posting ever added, tombstoned or not.
    static Visibility all() { return {Mode::All, {}}; }
    /// Hidden by any tombstone.
    static Visibility current() { return {Mode::Current, {}}; }
    /// Hidden only by tombstones whose effect entry is within clock.
    static Visibility at(VectorClock c) { return {Mode::At, std::move(c)}; }

    bool hides(const Effects& effects) const;
};

struct LookupResult {
    std::set<Stamp> exact;
    std::set<Stamp> candidates;
    std::set<Key> exact_keys;
    std::set<Key> candidate_keys;
    std::size_t touched_terms = 0;
};

using TermPostings = std::map<Term, std::set<Posting>>;

/// Replicated inverted index: per-term grow-only posting sets plus a tag
/// tombstone map. Postings carry unique write tags, so a concurrent add with a
/// new tag survives removal of an old one (add-wins). State merge is a union
/// with a pointwise minimum on tombstone effects.
class CrdtIndex {
public:
    CrdtIndex(std::shared_ptr<const Schema> schema, Binning binning);

    /// Folds one log entry into the index. With a region, adds happen only
    /// for points inside it. A put tombstones the version the writer
    /// overwrote; a delete tombstones every known older version of the key.
    /// Out-of-domain values are skipped and counted.
    IndexDelta apply_write(const store::LogEntry& entry, const Region* region = nullptr);

    /// Idempotent and order-insensitive.
    void apply(const IndexDelta& delta);

    /// In-place state merge. Throws std::logic_error on schema or binning
    /// mismatch.
    void merge(const CrdtIndex& other);

    /// Terms wholly inside q yield exact matches, partially overlapping bins
    /// yield candidates. Only terms intersecting q are touched.
    LookupResult lookup_range(std::size_t axis, const Interval& q,
                              const Visibility& vis = Visibility::current()) const;

    /// Tombstones every visible posting whose object's version at the local
    /// replica is newer or deleted. Returns how many were removed; the
    /// removals are appended to out when given.
    std::size_t scrub(const store::DcReplica& replica, std::vector<Removal>* out = nullptr);

    bool knows(const Stamp& tag) const { return versions_.count(tag) > 0; }
    bool visible(const Stamp& tag, const Visibility& vis = Visibility::current()) const;
    const Effects* effects(const Stamp& tag) const;

    /// Number of distinct keys with a visible posting.
    std::size_t object_count() const;
    std::set<Key> visible_keys() const;
    std::vector<const IndexedVersion*> visible_versions(const Visibility& vis = Visibility::current()) const;

    TermPostings visible_postings() const;
    std::string canonical() const;

    /// Copy holding the versions whose point lies in region and all
    /// tombstones.
    CrdtIndex restricted(const Region& region) const;

    const std::map<Stamp, IndexedVersion>& versions() const { return versions_; }
    const std::map<Stamp, Effects>& removed() const { return removed_; }
    const Schema& schema() const { return *schema_; }
    const Binning& binning() const { return binning_; }
    std::size_t skipped_writes() const { return skipped_; }

    /// Structural state equality (terms, versions, tombstones).
    bool operator==(const CrdtIndex& other) const;

private:
    void add(const IndexedVersion& v);
    void tombstone(const Removal& r);

    std::shared_ptr<const Schema> schema_;
    Binning binning_;
    std::map<Term, std::set<Posting>> terms_;
    std::map<Stamp, IndexedVersion> versions_;
    std::map<Key, std::set<Stamp>> by_key_;
    std::map<Stamp, Effects> removed_;
    std::size_t skipped_ = 0;
};

CrdtIndex merge(const CrdtIndex& a, const CrdtIndex& b);

/// Terms ascending, postings per term ascending by (key, tag).
std::string canonical_serialization(const Schema& schema, const TermPostings& postings);

}  // namespace geoidx::index
