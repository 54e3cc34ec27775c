#pragma once

// The three embedding-consuming applications: fact verification, fact
// ranking and related entities, plus threshold calibration for turning
// plausibility scores into accept/reject decisions.

#include <cstdint>
#include <optional>
#include <vector>

#include "kgf/graph_store.hpp"
#include "kgf/knn.hpp"
#include "kgf/model.hpp"

namespace kgf {

struct Verdict {
    EntityId head = 0;
    PredicateId predicate = 0;
    EntityId tail = 0;
    double score = 0.0;
    double tau = 0.0;
    bool accepted = false;  // score >= tau
};

Verdict verify_fact(const EmbeddingModel& model, EntityId h, PredicateId r,
                    EntityId t, double tau);

std::vector<Verdict> verify_batch(const EmbeddingModel& model,
                                  const std::vector<Triple>& triples,
                                  double tau);

struct LabeledScore {
    double score;
    bool positive;
};

struct Calibration {
    double tau = 0.0;
    double balanced_accuracy = 0.0;
    double auc = 0.0;
};

// tau maximizing balanced accuracy over the labeled scores, ties resolved
// toward the smaller tau; candidate thresholds are the distinct scores and
// the midpoints between adjacent distinct scores. Reports ROC-AUC (ties
// counted half). Requires both classes present.
Calibration calibrate_threshold(const std::vector<LabeledScore>& labeled);

struct RankedCandidate {
    EntityId entity = 0;
    double score = 0.0;
};

struct RankedFacts {
    EntityId subject = 0;
    PredicateId predicate = 0;
    std::vector<RankedCandidate> candidates;  // score desc, id asc on ties
};

// Candidates default to the distinct entity objects linked to the subject
// via the predicate in the store; literal objects cannot be scored and are
// ignored. popularity_weight (default 0) blends the store's popularity
// prior into the plausibility score as weight * log(1 + popularity).
RankedFacts rank_facts(const EmbeddingModel& model, const GraphStore& store,
                       EntityId subject, PredicateId predicate,
                       const std::optional<std::vector<EntityId>>& candidates = {},
                       double popularity_weight = 0.0);

std::vector<Neighbor> related_entities(const KnnIndex& index, EntityId entity,
                                       std::uint32_t k,
                                       std::optional<TypeId> type_filter = {},
                                       std::uint32_t nprobe = 10);

}  // namespace kgf
