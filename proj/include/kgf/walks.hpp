#pragma once

// Random walk corpus and skip-gram style co-occurrence pairs for the
// related-entity embeddings. Walks are first-order and undirected: each step
// moves to a uniformly random neighbor over the deduplicated union of out-
// and in-neighbors. Every walk draws its randomness from
// (seed, start entity, walk index), so parallel and serial generation
// produce identical corpora.

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgf/view.hpp"

namespace kgf {

struct WalkConfig {
    std::uint32_t walk_length = 10;   // L >= 2
    std::uint32_t walks_per_node = 5; // n >= 1
    std::uint32_t window = 3;         // w >= 1, w < L
    std::uint64_t seed = 0;

    void validate() const;
};

struct WalkCorpus {
    std::vector<std::vector<EntityId>> walks;
};

struct PairKey {
    EntityId a, b;
    bool operator==(const PairKey&) const = default;
};

struct PairKeyHash {
    std::size_t operator()(const PairKey& k) const;
};

struct PairSet {
    std::unordered_map<PairKey, std::uint64_t, PairKeyHash> counts;

    std::uint64_t total() const;
    std::uint64_t count(EntityId a, EntityId b) const;
    std::vector<std::pair<PairKey, std::uint64_t>> sorted() const;
};

WalkCorpus sample_walks(const GraphView& view, const WalkConfig& cfg);

PairSet pairs_from_walks(const WalkCorpus& corpus, std::uint32_t window);

// Training view over the synthetic co-occurrence predicate; each pair
// appears once per observed count so frequent pairs get more SGD steps.
extern const char* const kCoOccursPredicate;
GraphView pairs_to_view(const PairSet& pairs, std::uint64_t entity_count);

// Pairs as triples TSV lines with predicate __co_occurs__, one line per
// count, sorted. Entity tokens come from the store.
void export_pairs_tsv(const PairSet& pairs, const GraphStore& store,
                      std::ostream& out);

// Binary walk corpus: magic KGWC, version, walk count, then each walk as a
// u64 length followed by u64 entity ids.
void save_corpus(const WalkCorpus& corpus, const std::string& path);
WalkCorpus load_corpus(const std::string& path);

}  // namespace kgf
