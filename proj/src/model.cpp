#include "kgf/model.hpp"

#include <algorithm>

#include "kgf/rng.hpp"

namespace kgf {

namespace {
constexpr std::uint64_t kEntityTag = 0xe17;
constexpr std::uint64_t kPredicateTag = 0x91d;
}  // namespace

const char* scorer_name(Scorer s) {
    return s == Scorer::Translational ? "translational" : "semantic_matching";
}

Scorer scorer_from_name(const std::string& name) {
    if (name == "translational") return Scorer::Translational;
    if (name == "semantic_matching" || name == "semantic-matching")
        return Scorer::SemanticMatching;
    throw InvalidArgument("unknown scorer '" + name +
                          "' (expected translational or semantic_matching)");
}

const char* loss_name(LossKind l) {
    return l == LossKind::MarginRanking ? "margin_ranking" : "logistic";
}

LossKind loss_from_name(const std::string& name) {
    if (name == "margin_ranking" || name == "margin-ranking")
        return LossKind::MarginRanking;
    if (name == "logistic") return LossKind::Logistic;
    throw InvalidArgument("unknown loss '" + name +
                          "' (expected margin_ranking or logistic)");
}

EmbeddingModel::EmbeddingModel(Scorer scorer, std::uint32_t dim,
                               std::uint64_t entity_count,
                               std::uint64_t predicate_count)
    : scorer_(scorer),
      dim_(dim),
      entity_count_(entity_count),
      predicate_count_(predicate_count) {
    if (dim == 0) throw InvalidArgument("embedding dim must be positive");
    if (entity_count == 0 || predicate_count == 0)
        throw InvalidArgument("model needs at least one entity and predicate");
    entities_.assign(entity_count * dim, 0.0f);
    predicates_.assign(predicate_count * dim, 0.0f);
    entity_names_.resize(entity_count);
    predicate_names_.resize(predicate_count);
    for (std::uint64_t e = 0; e < entity_count; ++e)
        entity_names_[e] = std::to_string(e);
    for (std::uint64_t r = 0; r < predicate_count; ++r)
        predicate_names_[r] = std::to_string(r);
}

std::span<float> EmbeddingModel::entity_row(EntityId e) {
    if (e >= entity_count_)
        throw NotFoundError("entity id out of range: " + std::to_string(e));
    return {entities_.data() + e * dim_, dim_};
}

std::span<const float> EmbeddingModel::entity_row(EntityId e) const {
    if (e >= entity_count_)
        throw NotFoundError("entity id out of range: " + std::to_string(e));
    return {entities_.data() + e * dim_, dim_};
}

std::span<float> EmbeddingModel::predicate_row(PredicateId r) {
    if (r >= predicate_count_)
        throw NotFoundError("predicate id out of range: " + std::to_string(r));
    return {predicates_.data() + r * dim_, dim_};
}

std::span<const float> EmbeddingModel::predicate_row(PredicateId r) const {
    if (r >= predicate_count_)
        throw NotFoundError("predicate id out of range: " + std::to_string(r));
    return {predicates_.data() + r * dim_, dim_};
}

bool EmbeddingModel::all_finite() const {
    auto ok = [](const std::vector<float>& m) {
        return std::all_of(m.begin(), m.end(),
                           [](float v) { return std::isfinite(v); });
    };
    return ok(entities_) && ok(predicates_);
}

void project_to_unit_ball(float* row, std::uint32_t d) {
    double sq = 0;
    for (std::uint32_t i = 0; i < d; ++i)
        sq += static_cast<double>(row[i]) * row[i];
    if (sq <= 1.0) return;
    float inv = static_cast<float>(1.0 / std::sqrt(sq));
    for (std::uint32_t i = 0; i < d; ++i) row[i] *= inv;
}

void init_entity_row(float* row, std::uint32_t dim, Scorer scorer,
                     std::uint64_t seed, EntityId e) {
    double bound = 6.0 / std::sqrt(static_cast<double>(dim));
    Rng rng(stream_seed({seed, kEntityTag, e}));
    for (std::uint32_t i = 0; i < dim; ++i)
        row[i] = static_cast<float>(rng.uniform(-bound, bound));
    if (scorer == Scorer::Translational) project_to_unit_ball(row, dim);
}

void init_predicate_row(float* row, std::uint32_t dim, std::uint64_t seed,
                        PredicateId r) {
    double bound = 6.0 / std::sqrt(static_cast<double>(dim));
    Rng rng(stream_seed({seed, kPredicateTag, r}));
    for (std::uint32_t i = 0; i < dim; ++i)
        row[i] = static_cast<float>(rng.uniform(-bound, bound));
}

EmbeddingModel init_model(std::uint64_t entity_count,
                          std::uint64_t predicate_count,
                          const ModelConfig& cfg, std::uint64_t seed) {
    EmbeddingModel model(cfg.scorer, cfg.dim, entity_count, predicate_count);
    for (EntityId e = 0; e < entity_count; ++e)
        init_entity_row(model.entity_row(e).data(), cfg.dim, cfg.scorer, seed, e);
    for (PredicateId r = 0; r < predicate_count; ++r)
        init_predicate_row(model.predicate_row(r).data(), cfg.dim, seed, r);
    return model;
}

EmbeddingModel init_model(const GraphView& view, const ModelConfig& cfg,
                          std::uint64_t seed) {
    if (view.edges.empty()) throw InvalidArgument("view is empty");
    return init_model(view.entity_count, view.predicate_count, cfg, seed);
}

double score_triple(const EmbeddingModel& model, EntityId h, PredicateId r,
                    EntityId t) {
    std::span<const float> eh = model.entity_row(h);
    std::span<const float> wr = model.predicate_row(r);
    std::span<const float> et = model.entity_row(t);
    std::uint32_t d = model.dim();
    if (model.scorer() == Scorer::Translational) {
        double sq = 0;
        for (std::uint32_t i = 0; i < d; ++i) {
            double v = static_cast<double>(eh[i]) + wr[i] - et[i];
            sq += v * v;
        }
        return -std::sqrt(sq);
    }
    double s = 0;
    for (std::uint32_t i = 0; i < d; ++i)
        s += static_cast<double>(eh[i]) * wr[i] * et[i];
    return s;
}

double loss_value(LossKind kind, double gamma, double score_pos,
                  std::span<const double> scores_neg) {
    return contrastive_loss<double>(kind, gamma, score_pos, scores_neg,
                                    nullptr, nullptr);
}

}  // namespace kgf
