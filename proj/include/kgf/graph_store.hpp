#pragma once

// Dictionary-encoded triple store.
//
// Entities, predicates, literals and source tags each get their own
// dictionary; ids are dense, assigned in first-seen order. A triple is
// stored as three words: (head, predicate, packed tail). Duplicate means
// identical (head, predicate, tail) after whitespace trimming; provenance
// never splits duplicates.
//
// Lifecycle: ingest while unsealed, then seal() exactly once. Sealing builds
// the adjacency and name-lookup indexes; reads before sealing are rejected,
// writes after sealing are rejected.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kgf/types.hpp"

namespace kgf {

class Dictionary {
public:
    std::uint64_t get_or_create(std::string_view token);
    std::optional<std::uint64_t> find(std::string_view token) const;
    const std::string& token(std::uint64_t id) const;
    std::uint64_t size() const { return tokens_.size(); }

    void save(std::ostream& out) const;
    void load(std::istream& in, std::uint64_t base_offset);

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::uint64_t> index_;
};

struct EntityRecord {
    EntityId id = 0;
    std::string external_id;
    std::string canonical_name;  // defaults to external_id, never empty
    std::vector<std::string> aliases;
    TypeId entity_type = kNoType;
    double popularity = 0.0;
};

struct IngestReport {
    std::uint64_t unique = 0;
    std::uint64_t duplicates = 0;
    std::uint64_t rejected = 0;
    // (line number, reason) for every rejected line
    std::vector<std::pair<std::uint64_t, std::string>> rejects;
};

struct MetadataReport {
    std::uint64_t loaded = 0;
    std::uint64_t skipped_unnamed = 0;
    std::uint64_t rejected = 0;
};

struct PredicateStat {
    std::uint64_t frequency = 0;
    double literal_fraction = 0.0;
};

struct ResolveResult {
    std::optional<EntityId> id;
    bool ambiguous = false;
};

enum class Direction { Out, In, Both };

class GraphStore {
public:
    // --- ingestion (unsealed only) ---

    // Triples TSV: head<TAB>predicate<TAB>tail<TAB>tail_kind with an
    // optional fifth provenance column; '#' lines are comments. Malformed
    // lines are counted and reported, ingestion continues.
    IngestReport ingest_triples(const std::string& path);
    IngestReport ingest_triples(std::istream& in);

    // Entity metadata JSONL: {id, name, aliases, type, popularity} per line.
    MetadataReport load_entity_metadata(const std::string& path);
    MetadataReport load_entity_metadata(std::istream& in);

    void add_triple(std::string_view head, std::string_view predicate,
                    std::string_view tail, bool literal_tail,
                    std::string_view provenance = {});

    void seal();
    bool sealed() const { return sealed_; }

    // --- reads (sealed only) ---

    ResolveResult resolve_entity(std::string_view key) const;

    std::map<PredicateId, PredicateStat> predicate_stats() const;

    // Entity-entity triples incident to `entity`, sorted by (predicate,
    // neighbor), at most `limit`. Unknown entity throws NotFoundError.
    std::vector<Triple> get_neighbors(EntityId entity, Direction direction,
                                      std::uint64_t limit) const;

    // All triples (h, predicate, *) including literal tails.
    std::vector<Triple> triples_of(EntityId head, PredicateId predicate) const;

    const std::vector<Triple>& triples() const;

    // Deduplicated canonically sorted TSV; byte-stable for round trips.
    void export_tsv(std::ostream& out) const;

    const EntityRecord& entity(EntityId id) const;
    std::uint64_t entity_count() const { return entities_.size(); }
    std::uint64_t predicate_count() const { return predicate_dict_.size(); }
    std::uint64_t triple_count() const { return triples_.size(); }

    const std::string& entity_external_id(EntityId id) const;
    const std::string& predicate_name(PredicateId id) const;
    const std::string& literal_value(LiteralId id) const;
    const std::string& type_name(TypeId id) const;
    std::optional<PredicateId> find_predicate(std::string_view name) const;
    std::optional<TypeId> find_type(std::string_view name) const;
    std::uint64_t type_count() const;
    std::vector<TypeId> entity_types() const;  // indexed by EntityId

    // --- persistence ---
    void save(const std::string& path) const;
    static GraphStore load(const std::string& path);

private:
    void require_sealed() const;
    void require_unsealed() const;
    EntityId intern_entity(std::string_view token);
    std::string tsv_line(const Triple& t) const;

    Dictionary entity_dict_;     // external id tokens
    Dictionary predicate_dict_;
    Dictionary literal_dict_;
    Dictionary source_dict_;
    Dictionary type_dict_;

    std::vector<Triple> triples_;
    std::vector<std::uint32_t> triple_source_;  // parallel; 0 = none
    std::unordered_map<std::uint64_t, std::uint32_t> triple_set_;  // dedup

    std::vector<EntityRecord> entities_;

    bool sealed_ = false;

    // built by seal()
    std::vector<std::uint32_t> out_index_, in_index_;  // triple indexes
    std::vector<std::uint64_t> out_offsets_, in_offsets_;
    std::unordered_map<std::string, std::vector<EntityId>> folded_external_;
    std::unordered_map<std::string, std::vector<EntityId>> folded_name_;
};

}  // namespace kgf
