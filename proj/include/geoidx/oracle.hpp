#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>

#include "geoidx/crdt_index.hpp"
#include "geoidx/query.hpp"
#include "geoidx/store.hpp"

namespace geoidx::oracle {

/// Objects reconstructed by folding a log prefix with LWW.
struct SnapshotState {
    std::map<Key, store::ObjectVersion> objects;

    std::optional<store::ObjectVersion> get(const Key& key) const;
};

/// Live keys of the replica matching expr, with exact bounds.
std::set<Key> scan(const store::DcReplica& replica, const Schema& schema, const query::Expr& expr);
std::set<Key> scan(const std::map<Key, store::ObjectVersion>& objects, const Schema& schema,
                   const query::Expr& expr);

/// Folds exactly the entries (d, s) with s <= target[d]. Throws Error if the
/// target is ahead of the replica heads.
SnapshotState replay_to(const store::DcReplica& replica, const VectorClock& target);

/// Postings a correct index over the replica's current state holds for the
/// region. With origins, only versions written at those DCs count.
index::TermPostings rebuild_postings(const store::DcReplica& replica, const Schema& schema,
                                     const Region& region, const index::Binning& binning,
                                     const std::optional<std::set<DcId>>& origins = std::nullopt);

/// Canonical serialization of rebuild_postings.
std::string rebuild_index(const store::DcReplica& replica, const Schema& schema, const Region& region,
                          const index::Binning& binning,
                          const std::optional<std::set<DcId>>& origins = std::nullopt);

}  // namespace geoidx::oracle
