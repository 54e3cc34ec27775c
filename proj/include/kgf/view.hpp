#pragma once

// Filtered training views and edge partitioning.
//
// build_view applies filters in a fixed order: allow/deny lists, then the
// literal drop, then the predicate frequency threshold (computed on what
// survived the earlier filters). partition_edges assigns entities to P
// partitions by seeded hash and groups edges into P*P buckets keyed by
// (head partition, tail partition) so training only ever needs two entity
// partitions resident.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "kgf/graph_store.hpp"
#include "kgf/types.hpp"

namespace kgf {

struct ViewSpec {
    bool drop_literal_facts = false;
    std::set<PredicateId> predicate_denylist;
    std::optional<std::set<PredicateId>> predicate_allowlist;
    std::uint64_t min_predicate_frequency = 10;
    std::uint64_t seed = 0;
};

struct GraphView {
    std::vector<Triple> edges;  // sorted by (head, predicate, tail)
    std::uint64_t entity_count = 0;
    std::uint64_t predicate_count = 0;
    ViewSpec spec;

    bool has_literal_edges() const;
};

struct EmptyViewError : InvalidArgument {
    using InvalidArgument::InvalidArgument;
};

GraphView build_view(const GraphStore& store, const ViewSpec& spec);

// Re-filters an existing view (filter idempotence path).
GraphView build_view(const GraphView& source, const ViewSpec& spec);

struct SplitRatios {
    double train, valid, test;
};

struct SplitResult {
    GraphView train, valid, test;
    // Test/valid edges with an entity that appears in no train edge bound
    // the attainable link-prediction metrics; reported, not dropped.
    std::uint64_t cold_entity_valid_edges = 0;
    std::uint64_t cold_entity_test_edges = 0;
};

SplitResult split_view(const GraphView& view, SplitRatios ratios,
                       std::uint64_t seed);

// Seeded partition assignment; oracle-checkable as hash(entity, seed) mod P.
std::uint32_t partition_of(EntityId entity, std::uint64_t seed, std::uint32_t p);

struct PartitionedView {
    std::uint32_t partition_count = 1;
    std::uint64_t seed = 0;
    std::uint64_t entity_count = 0;
    std::uint64_t predicate_count = 0;
    std::vector<std::uint32_t> entity_partition;       // by EntityId
    std::vector<std::vector<Triple>> buckets;          // index i*P + j
    std::vector<std::vector<EntityId>> members;        // ascending, by partition

    const std::vector<Triple>& bucket(std::uint32_t i, std::uint32_t j) const {
        return buckets[static_cast<std::size_t>(i) * partition_count + j];
    }
    std::uint64_t edge_count() const;
};

// Requires an entity-only view (no literal tails); P >= 1.
PartitionedView partition_edges(const GraphView& view, std::uint32_t partitions,
                                std::uint64_t seed);

// Binary edge list: magic KGVW, version, counts, then 3 u64 words per edge
// (head, predicate, packed tail) little-endian.
void save_view(const GraphView& view, const std::string& path);
GraphView load_view(const std::string& path);

}  // namespace kgf
