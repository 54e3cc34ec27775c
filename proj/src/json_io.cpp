#include "kgf/json_io.hpp"

#include <fstream>

#include "kgf/text.hpp"

namespace kgf {

namespace {

const nlohmann::json& require_field(const nlohmann::json& j,
                                    const std::string& field,
                                    const std::string& what) {
    if (!j.contains(field))
        throw InvalidArgument(what + " is missing required field '" + field + "'");
    return j.at(field);
}

template <typename T>
T get_or(const nlohmann::json& j, const std::string& field, T fallback,
         const std::string& what) {
    if (!j.contains(field)) return fallback;
    try {
        return j.at(field).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw InvalidArgument(what + " field '" + field + "' has the wrong type");
    }
}

}  // namespace

OrderedJson verdict_json(const Verdict& v, const GraphStore& store) {
    OrderedJson j;
    j["head"] = store.entity_external_id(v.head);
    j["predicate"] = store.predicate_name(v.predicate);
    j["tail"] = store.entity_external_id(v.tail);
    j["score"] = v.score;
    j["tau"] = v.tau;
    j["accepted"] = v.accepted;
    return j;
}

OrderedJson verdicts_json(const std::vector<Verdict>& vs, const GraphStore& store) {
    OrderedJson arr = OrderedJson::array();
    for (const Verdict& v : vs) arr.push_back(verdict_json(v, store));
    return arr;
}

OrderedJson neighbor_json(const Neighbor& n, const GraphStore& store) {
    OrderedJson j;
    j["entity"] = store.entity_external_id(n.entity);
    j["name"] = store.entity(n.entity).canonical_name;
    j["similarity"] = n.similarity;
    j["rank"] = n.rank;
    return j;
}

OrderedJson neighbors_json(const std::vector<Neighbor>& ns, const GraphStore& store) {
    OrderedJson arr = OrderedJson::array();
    for (const Neighbor& n : ns) arr.push_back(neighbor_json(n, store));
    return arr;
}

OrderedJson ranked_facts_json(const RankedFacts& rf, const GraphStore& store) {
    OrderedJson j;
    j["subject"] = store.entity_external_id(rf.subject);
    j["predicate"] = store.predicate_name(rf.predicate);
    OrderedJson arr = OrderedJson::array();
    for (const RankedCandidate& c : rf.candidates) {
        OrderedJson cj;
        cj["entity"] = store.entity_external_id(c.entity);
        cj["score"] = c.score;
        arr.push_back(cj);
    }
    j["candidates"] = arr;
    return j;
}

OrderedJson annotation_json(const Annotation& ann, const GraphStore& store) {
    OrderedJson j;
    j["doc_id"] = ann.doc_id;
    j["hash"] = to_hex64(ann.content_hash);
    OrderedJson arr = OrderedJson::array();
    for (const LinkedMention& m : ann.mentions) {
        OrderedJson mj;
        mj["start"] = m.start;
        mj["end"] = m.end;
        mj["surface"] = m.surface;
        mj["entity"] = store.entity_external_id(m.entity);
        mj["type"] = m.type == kNoType ? "" : store.type_name(m.type);
        mj["score"] = m.score;
        arr.push_back(mj);
    }
    j["mentions"] = arr;
    return j;
}

std::string annotation_line(const Annotation& ann, const GraphStore& store) {
    return annotation_json(ann, store).dump();
}

OrderedJson epoch_report_json(const EpochReport& r) {
    OrderedJson j;
    j["epoch"] = r.epoch;
    j["mean_loss"] = r.mean_loss;
    j["edges_processed"] = r.edges_processed;
    j["buckets_visited"] = r.buckets_visited;
    j["wall_seconds"] = r.wall_seconds;
    return j;
}

OrderedJson ingest_report_json(const IngestReport& r) {
    OrderedJson j;
    j["unique"] = r.unique;
    j["duplicates"] = r.duplicates;
    j["rejected"] = r.rejected;
    return j;
}

OrderedJson metrics_json(const LinkPredictionMetrics& m) {
    OrderedJson j;
    j["mrr"] = m.mrr;
    j["hits_at_1"] = m.hits_at_1;
    j["hits_at_10"] = m.hits_at_10;
    j["ranks_evaluated"] = m.ranks_evaluated;
    return j;
}

ViewSpec view_spec_from_json(const nlohmann::json& j, const GraphStore& store) {
    ViewSpec spec;
    spec.drop_literal_facts =
        get_or<bool>(j, "drop_literal_facts", false, "view spec");
    spec.min_predicate_frequency = get_or<std::uint64_t>(
        j, "min_predicate_frequency", 10, "view spec");
    spec.seed = get_or<std::uint64_t>(j, "seed", 0, "view spec");
    auto names_to_ids = [&](const nlohmann::json& arr, const char* field) {
        std::set<PredicateId> ids;
        if (!arr.is_array())
            throw InvalidArgument(std::string("view spec field '") + field +
                                  "' must be an array of predicate names");
        for (const auto& name : arr) {
            if (!name.is_string())
                throw InvalidArgument(std::string("view spec field '") + field +
                                      "' must contain strings");
            ids.insert(resolve_predicate_or_throw(store, name.get<std::string>()));
        }
        return ids;
    };
    if (j.contains("predicate_denylist"))
        spec.predicate_denylist = names_to_ids(j.at("predicate_denylist"),
                                               "predicate_denylist");
    if (j.contains("predicate_allowlist") && !j.at("predicate_allowlist").is_null())
        spec.predicate_allowlist = names_to_ids(j.at("predicate_allowlist"),
                                                "predicate_allowlist");
    return spec;
}

OrderedJson view_spec_json(const ViewSpec& spec, const GraphStore& store) {
    OrderedJson j;
    j["drop_literal_facts"] = spec.drop_literal_facts;
    OrderedJson deny = OrderedJson::array();
    for (PredicateId p : spec.predicate_denylist)
        deny.push_back(store.predicate_name(p));
    j["predicate_denylist"] = deny;
    if (spec.predicate_allowlist) {
        OrderedJson allow = OrderedJson::array();
        for (PredicateId p : *spec.predicate_allowlist)
            allow.push_back(store.predicate_name(p));
        j["predicate_allowlist"] = allow;
    } else {
        j["predicate_allowlist"] = nullptr;
    }
    j["min_predicate_frequency"] = spec.min_predicate_frequency;
    j["seed"] = spec.seed;
    return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig cfg;
    const auto& dim = require_field(j, "dim", "model config");
    if (!dim.is_number_unsigned() || dim.get<std::uint64_t>() == 0)
        throw InvalidArgument("model config field 'dim' must be a positive integer");
    cfg.dim = dim.get<std::uint32_t>();
    cfg.scorer = scorer_from_name(
        get_or<std::string>(j, "scorer", "translational", "model config"));
    return cfg;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig cfg;
    cfg.margin = get_or<double>(j, "margin", cfg.margin, "train config");
    cfg.negatives = get_or<std::uint32_t>(j, "negatives", cfg.negatives, "train config");
    cfg.learning_rate =
        get_or<double>(j, "learning_rate", cfg.learning_rate, "train config");
    cfg.epochs = get_or<std::uint32_t>(j, "epochs", cfg.epochs, "train config");
    cfg.batch_size =
        get_or<std::uint32_t>(j, "batch_size", cfg.batch_size, "train config");
    cfg.memory_budget_bytes = get_or<std::uint64_t>(
        j, "memory_budget_bytes", cfg.memory_budget_bytes, "train config");
    cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed, "train config");
    cfg.loss = loss_from_name(
        get_or<std::string>(j, "loss", loss_name(cfg.loss), "train config"));
    cfg.partitions =
        get_or<std::uint32_t>(j, "partitions", cfg.partitions, "train config");
    cfg.filtered_negatives = get_or<bool>(j, "filtered_negatives",
                                          cfg.filtered_negatives, "train config");
    std::string mode = get_or<std::string>(j, "mode", "in_memory", "train config");
    if (mode == "in_memory") cfg.mode = TrainMode::InMemory;
    else if (mode == "disk_backed") cfg.mode = TrainMode::DiskBacked;
    else throw InvalidArgument("train config field 'mode' must be in_memory or disk_backed");
    std::string sched = get_or<std::string>(j, "schedule", "latin", "train config");
    if (sched == "latin") cfg.schedule = ScheduleKind::Latin;
    else if (sched == "shuffled") cfg.schedule = ScheduleKind::Shuffled;
    else throw InvalidArgument("train config field 'schedule' must be latin or shuffled");
    cfg.scratch_dir = get_or<std::string>(j, "scratch_dir", "", "train config");
    cfg.checkpoint_dir =
        get_or<std::string>(j, "checkpoint_dir", "", "train config");
    return cfg;
}

RerankWeights rerank_weights_from_json(const nlohmann::json& j) {
    RerankWeights w;
    w.alpha = get_or<double>(j, "alpha", w.alpha, "rerank weights");
    w.beta = get_or<double>(j, "beta", w.beta, "rerank weights");
    w.delta = get_or<double>(j, "delta", w.delta, "rerank weights");
    w.validate();
    return w;
}

WalkConfig walk_config_from_json(const nlohmann::json& j) {
    WalkConfig cfg;
    cfg.walk_length =
        get_or<std::uint32_t>(j, "walk_length", cfg.walk_length, "walk config");
    cfg.walks_per_node = get_or<std::uint32_t>(j, "walks_per_node",
                                               cfg.walks_per_node, "walk config");
    cfg.window = get_or<std::uint32_t>(j, "window", cfg.window, "walk config");
    cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed, "walk config");
    cfg.validate();
    return cfg;
}

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded())
        throw InvalidArgument(path + " is not valid JSON");
    return j;
}

EntityId resolve_or_throw(const GraphStore& store, const std::string& key) {
    ResolveResult r = store.resolve_entity(key);
    if (r.id) return *r.id;
    if (r.ambiguous)
        throw NotFoundError("entity key '" + key +
                            "' is ambiguous; use the external id");
    throw NotFoundError("unknown entity '" + key + "'");
}

PredicateId resolve_predicate_or_throw(const GraphStore& store,
                                       const std::string& name) {
    auto id = store.find_predicate(name);
    if (!id) throw NotFoundError("unknown predicate '" + name + "'");
    return *id;
}

}  // namespace kgf
