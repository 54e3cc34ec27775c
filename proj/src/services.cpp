#include "kgf/services.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace kgf {

Verdict verify_fact(const EmbeddingModel& model, EntityId h, PredicateId r,
                    EntityId t, double tau) {
    if (h >= model.entity_count())
        throw NotFoundError("verify_fact: unknown head entity " + std::to_string(h));
    if (r >= model.predicate_count())
        throw NotFoundError("verify_fact: unknown predicate " + std::to_string(r));
    if (t >= model.entity_count())
        throw NotFoundError("verify_fact: unknown tail entity " + std::to_string(t));
    Verdict v;
    v.head = h;
    v.predicate = r;
    v.tail = t;
    v.score = score_triple(model, h, r, t);
    v.tau = tau;
    v.accepted = v.score >= tau;
    return v;
}

std::vector<Verdict> verify_batch(const EmbeddingModel& model,
                                  const std::vector<Triple>& triples,
                                  double tau) {
    std::vector<Verdict> out;
    out.reserve(triples.size());
    for (const Triple& t : triples) {
        if (!t.tail.is_entity())
            throw InvalidArgument("verify_batch: literal-tail triple cannot be scored");
        out.push_back(verify_fact(model, t.head, t.predicate, t.tail.id, tau));
    }
    return out;
}

Calibration calibrate_threshold(const std::vector<LabeledScore>& labeled) {
    std::uint64_t n_pos = 0, n_neg = 0;
    for (const auto& l : labeled) (l.positive ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw InvalidArgument(
            "calibration needs both positive and negative labels");

    // ROC-AUC by pairwise comparison, ties worth one half.
    std::vector<double> pos, neg;
    for (const auto& l : labeled)
        (l.positive ? pos : neg).push_back(l.score);
    std::sort(neg.begin(), neg.end());
    double auc_sum = 0;
    for (double s : pos) {
        auto lo = std::lower_bound(neg.begin(), neg.end(), s);
        auto hi = std::upper_bound(neg.begin(), neg.end(), s);
        auc_sum += static_cast<double>(lo - neg.begin()) +
                   0.5 * static_cast<double>(hi - lo);
    }

    // Candidate thresholds: every distinct score plus midpoints of adjacent
    // distinct scores.
    std::vector<double> distinct;
    for (const auto& l : labeled) distinct.push_back(l.score);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<double> candidates = distinct;
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i)
        candidates.push_back(0.5 * (distinct[i] + distinct[i + 1]));
    std::sort(candidates.begin(), candidates.end());

    Calibration best;
    best.balanced_accuracy = -1;
    for (double tau : candidates) {
        std::uint64_t tp = 0, tn = 0;
        for (const auto& l : labeled) {
            bool accept = l.score >= tau;
            if (l.positive && accept) ++tp;
            if (!l.positive && !accept) ++tn;
        }
        double ba = 0.5 * (static_cast<double>(tp) / static_cast<double>(n_pos) +
                           static_cast<double>(tn) / static_cast<double>(n_neg));
        if (ba > best.balanced_accuracy) {  // strict: ties keep the smaller tau
            best.balanced_accuracy = ba;
            best.tau = tau;
        }
    }
    best.auc = auc_sum / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
    return best;
}

RankedFacts rank_facts(const EmbeddingModel& model, const GraphStore& store,
                       EntityId subject, PredicateId predicate,
                       const std::optional<std::vector<EntityId>>& candidates,
                       double popularity_weight) {
    if (subject >= model.entity_count())
        throw NotFoundError("rank_facts: unknown subject " + std::to_string(subject));
    if (predicate >= model.predicate_count())
        throw NotFoundError("rank_facts: unknown predicate " + std::to_string(predicate));

    std::set<EntityId> distinct;
    if (candidates) {
        for (EntityId e : *candidates) {
            if (e >= model.entity_count())
                throw NotFoundError("rank_facts: unknown candidate " + std::to_string(e));
            distinct.insert(e);
        }
    } else {
        for (const Triple& t : store.triples_of(subject, predicate))
            if (t.tail.is_entity()) distinct.insert(t.tail.id);
    }

    RankedFacts out;
    out.subject = subject;
    out.predicate = predicate;
    for (EntityId e : distinct) {
        double score = score_triple(model, subject, predicate, e);
        if (popularity_weight != 0.0)
            score += popularity_weight * std::log1p(store.entity(e).popularity);
        out.candidates.push_back({e, score});
    }
    std::sort(out.candidates.begin(), out.candidates.end(),
              [](const RankedCandidate& a, const RankedCandidate& b) {
                  if (a.score != b.score) return a.score > b.score;
                  return a.entity < b.entity;
              });
    return out;
}

std::vector<Neighbor> related_entities(const KnnIndex& index, EntityId entity,
                                       std::uint32_t k,
                                       std::optional<TypeId> type_filter,
                                       std::uint32_t nprobe) {
    return index.query(entity, k, nprobe, type_filter);
}

}  // namespace kgf
