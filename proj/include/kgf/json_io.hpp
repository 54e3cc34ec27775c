#pragma once

// Stable JSON serialization shared by the CLI and the HTTP service, so an
// endpoint response is byte-equal to the corresponding library call. All
// output uses nlohmann::ordered_json with keys emitted in a fixed order.
// Entities and predicates appear as their external string tokens.

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "kgf/annotator.hpp"
#include "kgf/graph_store.hpp"
#include "kgf/knn.hpp"
#include "kgf/services.hpp"
#include "kgf/trainer.hpp"
#include "kgf/view.hpp"
#include "kgf/walks.hpp"

namespace kgf {

using OrderedJson = nlohmann::ordered_json;

// --- outputs ---

OrderedJson verdict_json(const Verdict& v, const GraphStore& store);
OrderedJson verdicts_json(const std::vector<Verdict>& vs, const GraphStore& store);
OrderedJson neighbor_json(const Neighbor& n, const GraphStore& store);
OrderedJson neighbors_json(const std::vector<Neighbor>& ns, const GraphStore& store);
OrderedJson ranked_facts_json(const RankedFacts& rf, const GraphStore& store);
OrderedJson annotation_json(const Annotation& ann, const GraphStore& store);
std::string annotation_line(const Annotation& ann, const GraphStore& store);
OrderedJson epoch_report_json(const EpochReport& r);
OrderedJson ingest_report_json(const IngestReport& r);
OrderedJson metrics_json(const LinkPredictionMetrics& m);

// --- configs ---

// Throws InvalidArgument naming the field on missing/invalid entries.
ViewSpec view_spec_from_json(const nlohmann::json& j, const GraphStore& store);
OrderedJson view_spec_json(const ViewSpec& spec, const GraphStore& store);
ModelConfig model_config_from_json(const nlohmann::json& j);
TrainConfig train_config_from_json(const nlohmann::json& j);
RerankWeights rerank_weights_from_json(const nlohmann::json& j);
WalkConfig walk_config_from_json(const nlohmann::json& j);

nlohmann::json load_json_file(const std::string& path);

// Resolves an entity key (external id or name) or throws NotFoundError with
// a message naming the key.
EntityId resolve_or_throw(const GraphStore& store, const std::string& key);
PredicateId resolve_predicate_or_throw(const GraphStore& store,
                                       const std::string& name);

}  // namespace kgf
