#pragma once

// k-nearest-neighbor retrieval over entity vectors: exact scan or an
// inverted-file (IVF) structure built by seeded k-means. The index is
// immutable after build; rebuilds replace it wholesale.
//
// Results are sorted by similarity descending with ties broken by ascending
// entity id, so permuting input order can never change an answer. For the
// euclidean metric the similarity is the negated distance.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kgf/model.hpp"

namespace kgf {

enum class Metric : std::uint8_t { Cosine = 0, Euclidean = 1 };
enum class IndexMode : std::uint8_t { Exact = 0, Ivf = 1 };

Metric metric_from_name(const std::string& name);
const char* metric_name(Metric m);

struct Neighbor {
    EntityId entity = 0;
    double similarity = 0.0;
    std::uint32_t rank = 0;

    bool operator==(const Neighbor&) const = default;
};

struct IvfParams {
    std::uint32_t n_clusters = 100;
    std::uint64_t seed = 0;
    std::uint32_t iterations = 25;
};

class KnnIndex {
public:
    // Copies the model's entity matrix; `types` (indexed by EntityId) is
    // optional and enables the type filter.
    static KnnIndex build(const EmbeddingModel& model, Metric metric,
                          IndexMode mode, const IvfParams& params = {},
                          std::vector<TypeId> types = {});

    std::vector<Neighbor> query(EntityId entity, std::uint32_t k,
                                std::uint32_t nprobe = 1,
                                std::optional<TypeId> type_filter = {}) const;
    std::vector<Neighbor> query(std::span<const float> vector, std::uint32_t k,
                                std::uint32_t nprobe = 1,
                                std::optional<TypeId> type_filter = {},
                                std::optional<EntityId> exclude = {}) const;

    Metric metric() const { return metric_; }
    IndexMode mode() const { return mode_; }
    std::uint32_t dim() const { return dim_; }
    std::uint64_t size() const { return count_; }
    std::uint32_t n_clusters() const { return static_cast<std::uint32_t>(postings_.size()); }
    const std::vector<std::uint32_t>& posting_list(std::uint32_t c) const {
        return postings_[c];
    }
    bool has_types() const { return !types_.empty(); }

    // Magic KGIX. The file stores centroids, postings and types but not the
    // vectors; load re-attaches the entity matrix and rejects on shape or
    // version mismatch.
    void save(const std::string& path) const;
    static KnnIndex load(const std::string& path, const EmbeddingModel& model);

private:
    Metric metric_ = Metric::Cosine;
    IndexMode mode_ = IndexMode::Exact;
    std::uint32_t dim_ = 0;
    std::uint64_t count_ = 0;
    std::vector<float> vectors_;    // raw entity rows
    std::vector<float> working_;    // normalized for cosine, = vectors_ otherwise
    std::vector<float> centroids_;  // ivf only, in working space
    std::vector<std::vector<std::uint32_t>> postings_;
    std::vector<TypeId> types_;

    void attach_vectors(const EmbeddingModel& model);
    std::vector<std::uint32_t> nearest_centroids(std::span<const float> q,
                                                 std::uint32_t nprobe) const;
    double similarity(std::span<const float> q, std::uint32_t id) const;
};

constexpr std::uint32_t kIndexFormatVersion = 1;

}  // namespace kgf
