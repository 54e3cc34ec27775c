// kgf command line: one subcommand per pipeline stage.
//
// Exit codes: 0 success, 1 usage/validation error, 2 runtime error.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "kgf/annotator.hpp"
#include "kgf/embed_io.hpp"
#include "kgf/graph_store.hpp"
#include "kgf/json_io.hpp"
#include "kgf/knn.hpp"
#include "kgf/service.hpp"
#include "kgf/services.hpp"
#include "kgf/trainer.hpp"
#include "kgf/view.hpp"
#include "kgf/walks.hpp"

namespace fs = std::filesystem;
using kgf::OrderedJson;

namespace {

kgf::KnowledgeService* g_service = nullptr;

void handle_signal(int) {
    if (g_service) g_service->stop();
}

kgf::SplitRatios parse_ratios(const std::string& s) {
    kgf::SplitRatios r{};
    if (std::sscanf(s.c_str(), "%lf,%lf,%lf", &r.train, &r.valid, &r.test) != 3)
        throw kgf::InvalidArgument("--split expects train,valid,test ratios");
    return r;
}

int run(CLI::App& app, int argc, char** argv) {
    std::string store_path, model_path, index_path, view_path, out_path;
    std::string triples_path, meta_path, spec_path, model_cfg_path,
        train_cfg_path, walk_cfg_path, input_path, corpus_dir, state_path,
        service_cfg_path, weights_path;
    std::string entity_key, subject_key, predicate_name, type_name, split_spec;
    std::vector<std::string> candidate_keys;
    std::string metric_name = "cosine", mode_name = "exact";

    std::uint32_t k = 10, nprobe = 10, clusters = 100, workers = 1;
    std::uint64_t seed = 0;
    double tau = 0.0;
    bool json_out = false, reset_state = false, do_export = false;

    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    auto* ingest = app.add_subcommand("ingest", "ingest triples into a store");
    ingest->add_option("--triples", triples_path, "triples TSV")->required();
    ingest->add_option("--meta", meta_path, "entity metadata JSONL");
    ingest->add_option("--out", out_path, "store output path")->required();
    ingest->add_flag("--json", json_out, "machine-readable report");

    auto* view = app.add_subcommand("view", "build a filtered training view");
    view->add_option("--store", store_path)->required();
    view->add_option("--spec", spec_path, "ViewSpec JSON file")->required();
    view->add_option("--out", out_path, "view output path")->required();
    view->add_option("--split", split_spec, "train,valid,test ratios");
    view->add_option("--seed", seed, "split seed");
    view->add_flag("--json", json_out);

    auto* trainc = app.add_subcommand("train", "train embeddings");
    trainc->add_option("--store", store_path);
    trainc->add_option("--view", view_path, "pre-built view (KGVW)");
    trainc->add_option("--spec", spec_path, "ViewSpec JSON (with --store)");
    trainc->add_option("--model-config", model_cfg_path)->required();
    trainc->add_option("--train-config", train_cfg_path)->required();
    trainc->add_option("--out", out_path, "model output path")->required();
    trainc->add_option("--reports", input_path, "EpochReport JSONL path");
    trainc->add_flag("--json", json_out);

    auto* walks = app.add_subcommand("walks", "random walks and pair export");
    walks->add_option("--view", view_path)->required();
    walks->add_option("--store", store_path)->required();
    walks->add_option("--config", walk_cfg_path, "WalkConfig JSON")->required();
    walks->add_option("--out", out_path, "pairs TSV output")->required();
    walks->add_option("--corpus-out", corpus_dir, "optional walk corpus path");
    walks->add_flag("--json", json_out);

    auto* index = app.add_subcommand("index", "build a kNN index");
    index->add_option("--model", model_path)->required();
    index->add_option("--store", store_path, "store (for the type table)");
    index->add_option("--metric", metric_name, "cosine|euclidean");
    index->add_option("--mode", mode_name, "exact|ivf");
    index->add_option("--clusters", clusters, "ivf cluster count");
    index->add_option("--seed", seed);
    index->add_option("--out", out_path)->required();
    index->add_flag("--json", json_out);

    auto* verify = app.add_subcommand("verify", "score candidate facts");
    verify->add_option("--store", store_path)->required();
    verify->add_option("--model", model_path)->required();
    verify->add_option("--input", input_path,
                       "JSONL of {head, predicate, tail}")->required();
    verify->add_option("--tau", tau, "acceptance threshold");
    verify->add_flag("--json", json_out);

    double popularity_weight = 0.0;
    auto* rank = app.add_subcommand("rank", "rank candidate objects");
    rank->add_option("--store", store_path)->required();
    rank->add_option("--model", model_path)->required();
    rank->add_option("--subject", subject_key)->required();
    rank->add_option("--predicate", predicate_name)->required();
    rank->add_option("--candidates", candidate_keys, "explicit candidates");
    rank->add_option("--popularity-weight", popularity_weight,
                     "blend log(1+popularity) into scores");
    rank->add_flag("--json", json_out);

    auto* related = app.add_subcommand("related", "nearest entities");
    related->add_option("--store", store_path)->required();
    related->add_option("--model", model_path)->required();
    related->add_option("--index", index_path, "KGIX index (exact scan if absent)");
    related->add_option("--entity", entity_key)->required();
    related->add_option("--k", k);
    related->add_option("--nprobe", nprobe);
    related->add_option("--type", type_name, "type filter");
    related->add_flag("--json", json_out);

    auto* annotate = app.add_subcommand("annotate", "annotate a corpus");
    annotate->add_option("--corpus", corpus_dir)->required();
    annotate->add_option("--state", state_path)->required();
    annotate->add_option("--out", out_path, "annotations JSONL")->required();
    annotate->add_option("--store", store_path)->required();
    annotate->add_option("--model", model_path)->required();
    annotate->add_option("--weights", weights_path, "RerankWeights JSON");
    annotate->add_option("--workers", workers);
    annotate->add_flag("--reset-state", reset_state,
                       "ignore a corrupt or stale state file");
    annotate->add_flag("--json", json_out);

    auto* serve = app.add_subcommand("serve", "run the HTTP service");
    serve->add_option("--config", service_cfg_path, "ServiceConfig JSON")->required();

    auto* export_cmd = app.add_subcommand("export", "canonical triples TSV");
    export_cmd->add_option("--store", store_path)->required();
    do_export = true;

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);  // CLI11 prints usage; non-zero on error
    }
    (void)do_export;

    if (ingest->parsed()) {
        kgf::GraphStore store;
        kgf::IngestReport report = store.ingest_triples(triples_path);
        if (!meta_path.empty()) store.load_entity_metadata(meta_path);
        store.seal();
        store.save(out_path);
        for (const auto& [line, why] : report.rejects)
            std::cerr << "line " << line << ": " << why << "\n";
        if (json_out) {
            std::cout << kgf::ingest_report_json(report).dump() << "\n";
        } else {
            std::cout << "unique " << report.unique << ", duplicates "
                      << report.duplicates << ", rejected " << report.rejected
                      << "\n";
        }
        return 0;
    }

    if (view->parsed()) {
        kgf::GraphStore store = kgf::GraphStore::load(store_path);
        kgf::ViewSpec spec =
            kgf::view_spec_from_json(kgf::load_json_file(spec_path), store);
        kgf::GraphView built = kgf::build_view(store, spec);
        OrderedJson j;
        j["edges"] = built.edges.size();
        if (split_spec.empty()) {
            kgf::save_view(built, out_path);
        } else {
            kgf::SplitResult split =
                kgf::split_view(built, parse_ratios(split_spec), seed);
            kgf::save_view(split.train, out_path + ".train");
            kgf::save_view(split.valid, out_path + ".valid");
            kgf::save_view(split.test, out_path + ".test");
            j["train_edges"] = split.train.edges.size();
            j["valid_edges"] = split.valid.edges.size();
            j["test_edges"] = split.test.edges.size();
            j["cold_entity_valid_edges"] = split.cold_entity_valid_edges;
            j["cold_entity_test_edges"] = split.cold_entity_test_edges;
        }
        if (json_out) std::cout << j.dump() << "\n";
        else std::cout << "view edges: " << built.edges.size() << "\n";
        return 0;
    }

    if (trainc->parsed()) {
        kgf::ModelConfig mcfg =
            kgf::model_config_from_json(kgf::load_json_file(model_cfg_path));
        kgf::TrainConfig tcfg =
            kgf::train_config_from_json(kgf::load_json_file(train_cfg_path));
        std::ofstream reports;
        if (!input_path.empty()) {
            reports.open(input_path, std::ios::app);
            if (!reports) throw kgf::IoError("cannot open reports file: " + input_path);
        }
        auto on_epoch = [&](const kgf::EpochReport& r) {
            std::string line = kgf::epoch_report_json(r).dump();
            if (reports.is_open()) reports << line << "\n" << std::flush;
            if (!json_out) std::cerr << line << "\n";
        };
        kgf::TrainResult result;
        if (!view_path.empty()) {
            kgf::GraphView v = kgf::load_view(view_path);
            result = kgf::train(v, mcfg, tcfg, on_epoch);
        } else {
            if (store_path.empty())
                throw kgf::InvalidArgument("train needs --view or --store with --spec");
            kgf::GraphStore store = kgf::GraphStore::load(store_path);
            kgf::ViewSpec spec;
            if (!spec_path.empty())
                spec = kgf::view_spec_from_json(kgf::load_json_file(spec_path), store);
            result = kgf::train(store, spec, mcfg, tcfg, on_epoch);
        }
        kgf::save_model(result.model, out_path);
        if (json_out) {
            OrderedJson j;
            j["epochs_run"] = result.reports.size();
            j["final_loss"] =
                result.reports.empty() ? 0.0 : result.reports.back().mean_loss;
            j["model"] = out_path;
            std::cout << j.dump() << "\n";
        }
        return 0;
    }

    if (walks->parsed()) {
        kgf::GraphView v = kgf::load_view(view_path);
        kgf::GraphStore store = kgf::GraphStore::load(store_path);
        kgf::WalkConfig cfg =
            kgf::walk_config_from_json(kgf::load_json_file(walk_cfg_path));
        kgf::WalkCorpus corpus = kgf::sample_walks(v, cfg);
        if (!corpus_dir.empty()) kgf::save_corpus(corpus, corpus_dir);
        kgf::PairSet pairs = kgf::pairs_from_walks(corpus, cfg.window);
        std::ofstream out(out_path);
        if (!out) throw kgf::IoError("cannot write " + out_path);
        kgf::export_pairs_tsv(pairs, store, out);
        if (json_out) {
            OrderedJson j;
            j["walks"] = corpus.walks.size();
            j["distinct_pairs"] = pairs.counts.size();
            j["total_pairs"] = pairs.total();
            std::cout << j.dump() << "\n";
        }
        return 0;
    }

    if (index->parsed()) {
        kgf::EmbeddingModel model = kgf::load_model(model_path);
        std::vector<kgf::TypeId> types;
        if (!store_path.empty())
            types = kgf::GraphStore::load(store_path).entity_types();
        kgf::Metric metric = kgf::metric_from_name(metric_name);
        kgf::IndexMode mode;
        if (mode_name == "exact") mode = kgf::IndexMode::Exact;
        else if (mode_name == "ivf") mode = kgf::IndexMode::Ivf;
        else throw kgf::InvalidArgument("--mode must be exact or ivf");
        kgf::IvfParams params;
        params.n_clusters = clusters;
        params.seed = seed;
        kgf::KnnIndex knn =
            kgf::KnnIndex::build(model, metric, mode, params, std::move(types));
        knn.save(out_path);
        if (json_out) {
            OrderedJson j;
            j["entities"] = knn.size();
            j["clusters"] = knn.n_clusters();
            std::cout << j.dump() << "\n";
        }
        return 0;
    }

    if (verify->parsed()) {
        kgf::GraphStore store = kgf::GraphStore::load(store_path);
        kgf::EmbeddingModel model = kgf::load_model(model_path);
        std::ifstream in(input_path);
        if (!in) throw kgf::IoError("cannot open " + input_path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            nlohmann::json j = nlohmann::json::parse(line);
            kgf::Triple t;
            t.head = kgf::resolve_or_throw(store, j.at("head").get<std::string>());
            t.predicate = kgf::resolve_predicate_or_throw(
                store, j.at("predicate").get<std::string>());
            t.tail = kgf::ObjectRef::entity(
                kgf::resolve_or_throw(store, j.at("tail").get<std::string>()));
            kgf::Verdict v =
                kgf::verify_fact(model, t.head, t.predicate, t.tail.id, tau);
            std::cout << kgf::verdict_json(v, store).dump() << "\n";
        }
        return 0;
    }

    if (rank->parsed()) {
        kgf::GraphStore store = kgf::GraphStore::load(store_path);
        kgf::EmbeddingModel model = kgf::load_model(model_path);
        kgf::EntityId subject = kgf::resolve_or_throw(store, subject_key);
        kgf::PredicateId predicate =
            kgf::resolve_predicate_or_throw(store, predicate_name);
        std::optional<std::vector<kgf::EntityId>> candidates;
        if (!candidate_keys.empty()) {
            candidates.emplace();
            for (const auto& c : candidate_keys)
                candidates->push_back(kgf::resolve_or_throw(store, c));
        }
        kgf::RankedFacts rf = kgf::rank_facts(model, store, subject, predicate,
                                              candidates, popularity_weight);
        std::cout << kgf::ranked_facts_json(rf, store).dump() << "\n";
        return 0;
    }

    if (related->parsed()) {
        kgf::GraphStore store = kgf::GraphStore::load(store_path);
        kgf::EmbeddingModel model = kgf::load_model(model_path);
        kgf::KnnIndex knn =
            index_path.empty()
                ? kgf::KnnIndex::build(model, kgf::Metric::Cosine,
                                       kgf::IndexMode::Exact, {},
                                       store.entity_types())
                : kgf::KnnIndex::load(index_path, model);
        kgf::EntityId entity = kgf::resolve_or_throw(store, entity_key);
        std::optional<kgf::TypeId> type_filter;
        if (!type_name.empty()) {
            auto t = store.find_type(type_name);
            if (!t) throw kgf::NotFoundError("unknown type '" + type_name + "'");
            type_filter = *t;
        }
        auto neighbors = kgf::related_entities(knn, entity, k, type_filter, nprobe);
        std::cout << kgf::neighbors_json(neighbors, store).dump() << "\n";
        return 0;
    }

    if (annotate->parsed()) {
        kgf::GraphStore store = kgf::GraphStore::load(store_path);
        kgf::EmbeddingModel model = kgf::load_model(model_path);
        kgf::AliasTable table = kgf::AliasTable::build(store);
        kgf::AnnotatorConfig cfg;
        if (!weights_path.empty())
            cfg.weights =
                kgf::rerank_weights_from_json(kgf::load_json_file(weights_path));
        kgf::CorpusReport report =
            kgf::annotate_corpus(corpus_dir, state_path, out_path, table, model,
                                 store, cfg, workers, reset_state);
        OrderedJson j;
        j["annotated"] = report.annotated;
        j["skipped"] = report.skipped;
        j["removed"] = report.removed;
        if (json_out) std::cout << j.dump() << "\n";
        else
            std::cout << "annotated " << report.annotated << ", skipped "
                      << report.skipped << ", removed " << report.removed << "\n";
        return 0;
    }

    if (serve->parsed()) {
        kgf::ServiceConfig cfg =
            kgf::ServiceConfig::from_json(kgf::load_json_file(service_cfg_path));
        cfg.apply_env_overrides();
        kgf::KnowledgeService service(cfg);
        g_service = &service;
        std::signal(SIGINT, handle_signal);
        std::signal(SIGTERM, handle_signal);
        service.run();
        g_service = nullptr;
        return 0;
    }

    if (export_cmd->parsed()) {
        kgf::GraphStore store = kgf::GraphStore::load(store_path);
        store.export_tsv(std::cout);
        return 0;
    }

    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"knowledge graph embedding and serving engine"};
    try {
        return run(app, argc, argv);
    } catch (const kgf::InvalidArgument& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    } catch (const kgf::NotFoundError& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 2;
    }
}
