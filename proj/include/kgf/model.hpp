#pragma once

// Shallow KG embedding model: an entity matrix and a predicate matrix with
// one of two scorer families.
//
//   translational:      score(h,r,t) = -||e_h + w_r - e_t||_2
//   semantic matching:  score(h,r,t) = sum_i e_h[i] * w_r[i] * e_t[i]
//
// Parameters are float32 (the on-disk precision); scoring accumulates in
// double. The scorer/loss kernels are templated on the scalar type so the
// gradient check can run the identical formulas in double precision.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "kgf/types.hpp"
#include "kgf/view.hpp"

namespace kgf {

enum class Scorer : std::uint8_t { Translational = 0, SemanticMatching = 1 };
enum class LossKind : std::uint8_t { MarginRanking = 0, Logistic = 1 };

const char* scorer_name(Scorer s);
Scorer scorer_from_name(const std::string& name);
const char* loss_name(LossKind l);
LossKind loss_from_name(const std::string& name);

struct ModelConfig {
    Scorer scorer = Scorer::Translational;
    std::uint32_t dim = 128;
};

class EmbeddingModel {
public:
    EmbeddingModel() = default;
    EmbeddingModel(Scorer scorer, std::uint32_t dim, std::uint64_t entity_count,
                   std::uint64_t predicate_count);

    Scorer scorer() const { return scorer_; }
    std::uint32_t dim() const { return dim_; }
    std::uint64_t entity_count() const { return entity_count_; }
    std::uint64_t predicate_count() const { return predicate_count_; }

    std::span<float> entity_row(EntityId e);
    std::span<const float> entity_row(EntityId e) const;
    std::span<float> predicate_row(PredicateId r);
    std::span<const float> predicate_row(PredicateId r) const;

    std::vector<float>& entity_matrix() { return entities_; }
    const std::vector<float>& entity_matrix() const { return entities_; }
    std::vector<float>& predicate_matrix() { return predicates_; }
    const std::vector<float>& predicate_matrix() const { return predicates_; }

    // Row vocabulary, persisted with the model. Entity names default to the
    // decimal id when no store vocabulary is attached.
    std::vector<std::string>& entity_names() { return entity_names_; }
    const std::vector<std::string>& entity_names() const { return entity_names_; }
    std::vector<std::string>& predicate_names() { return predicate_names_; }
    const std::vector<std::string>& predicate_names() const { return predicate_names_; }

    bool all_finite() const;

private:
    Scorer scorer_ = Scorer::Translational;
    std::uint32_t dim_ = 0;
    std::uint64_t entity_count_ = 0;
    std::uint64_t predicate_count_ = 0;
    std::vector<float> entities_;
    std::vector<float> predicates_;
    std::vector<std::string> entity_names_;
    std::vector<std::string> predicate_names_;
};

// Entries uniform in [-6/sqrt(d), +6/sqrt(d)]; translational entity rows are
// projected onto the unit ball. Each row draws from its own stream keyed by
// (seed, matrix tag, row), so rows can be regenerated independently.
EmbeddingModel init_model(const GraphView& view, const ModelConfig& cfg,
                          std::uint64_t seed);
EmbeddingModel init_model(std::uint64_t entity_count,
                          std::uint64_t predicate_count,
                          const ModelConfig& cfg, std::uint64_t seed);
void init_entity_row(float* row, std::uint32_t dim, Scorer scorer,
                     std::uint64_t seed, EntityId e);
void init_predicate_row(float* row, std::uint32_t dim, std::uint64_t seed,
                        PredicateId r);

double score_triple(const EmbeddingModel& model, EntityId h, PredicateId r,
                    EntityId t);

// --- scorer kernels ---

template <typename T>
T score_translational(const T* h, const T* r, const T* t, std::uint32_t d) {
    T sq = 0;
    for (std::uint32_t i = 0; i < d; ++i) {
        T v = h[i] + r[i] - t[i];
        sq += v * v;
    }
    return -std::sqrt(sq);
}

template <typename T>
T score_semantic(const T* h, const T* r, const T* t, std::uint32_t d) {
    T s = 0;
    for (std::uint32_t i = 0; i < d; ++i) s += h[i] * r[i] * t[i];
    return s;
}

template <typename T>
T score_kernel(Scorer scorer, const T* h, const T* r, const T* t,
               std::uint32_t d) {
    return scorer == Scorer::Translational ? score_translational(h, r, t, d)
                                           : score_semantic(h, r, t, d);
}

// Gradient of the score times an upstream factor, accumulated into gh/gr/gt.
// The translational gradient at the (measure-zero) point ||v|| = 0 is taken
// as zero.
template <typename T>
void accumulate_score_gradient(Scorer scorer, const T* h, const T* r,
                               const T* t, std::uint32_t d, T upstream, T* gh,
                               T* gr, T* gt) {
    if (scorer == Scorer::Translational) {
        T sq = 0;
        for (std::uint32_t i = 0; i < d; ++i) {
            T v = h[i] + r[i] - t[i];
            sq += v * v;
        }
        T norm = std::sqrt(sq);
        if (norm == T(0)) return;
        T scale = upstream / norm;
        for (std::uint32_t i = 0; i < d; ++i) {
            T v = h[i] + r[i] - t[i];
            gh[i] -= scale * v;
            gr[i] -= scale * v;
            gt[i] += scale * v;
        }
    } else {
        for (std::uint32_t i = 0; i < d; ++i) {
            gh[i] += upstream * r[i] * t[i];
            gr[i] += upstream * h[i] * t[i];
            gt[i] += upstream * h[i] * r[i];
        }
    }
}

// --- loss kernels ---

template <typename T>
T softplus(T x) {
    return x > T(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

template <typename T>
T sigmoid(T x) {
    return T(1) / (T(1) + std::exp(-x));
}

// Margin ranking: mean over negatives of max(0, gamma - s_pos + s_neg).
// Logistic: softplus(-s_pos) + mean_i softplus(s_neg_i).
// d_pos/d_neg receive dLoss/dscore.
template <typename T>
T contrastive_loss(LossKind kind, T gamma, T score_pos,
                   std::span<const T> scores_neg, T* d_pos, T* d_neg) {
    std::size_t k = scores_neg.size();
    T inv_k = k ? T(1) / static_cast<T>(k) : T(0);
    T loss = 0;
    T dp = 0;
    if (kind == LossKind::MarginRanking) {
        for (std::size_t i = 0; i < k; ++i) {
            T m = gamma - score_pos + scores_neg[i];
            if (m > T(0)) {
                loss += m * inv_k;
                dp -= inv_k;
                if (d_neg) d_neg[i] = inv_k;
            } else if (d_neg) {
                d_neg[i] = T(0);
            }
        }
    } else {
        loss = softplus(-score_pos);
        dp = -sigmoid(-score_pos);
        for (std::size_t i = 0; i < k; ++i) {
            loss += softplus(scores_neg[i]) * inv_k;
            if (d_neg) d_neg[i] = sigmoid(scores_neg[i]) * inv_k;
        }
    }
    if (d_pos) *d_pos = dp;
    return loss;
}

double loss_value(LossKind kind, double gamma, double score_pos,
                  std::span<const double> scores_neg);

// Scale a row to L2 norm <= 1 (translational constraint).
void project_to_unit_ball(float* row, std::uint32_t d);

}  // namespace kgf
