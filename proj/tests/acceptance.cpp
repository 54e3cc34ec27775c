// Acceptance suite: end-to-end checks at desk scale, one pass/fail line per
// criterion. Exits non-zero if any criterion fails.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <thread>
#include <vector>

#include <httplib.h>

#include "kgf/annotator.hpp"
#include "kgf/embed_io.hpp"
#include "kgf/json_io.hpp"
#include "kgf/knn.hpp"
#include "kgf/rng.hpp"
#include "kgf/service.hpp"
#include "kgf/services.hpp"
#include "kgf/trainer.hpp"
#include "kgf/view.hpp"
#include "kgf/walks.hpp"
#include "gradcheck.hpp"
#include "synthetic_kg.hpp"
#include "test_util.hpp"

using namespace kgf;
using test::SyntheticKg;
using test::TempDir;
using test::make_synthetic_kg;

namespace {

int g_failures = 0;

void report(int n, const std::string& name, bool pass,
            const std::string& detail) {
    std::printf("criterion %2d [%s] %s (%s)\n", n, pass ? "PASS" : "FAIL",
                name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

TrainConfig synthetic_train_config(std::uint64_t seed) {
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.negatives = 10;
    cfg.learning_rate = 0.1;
    cfg.margin = 1.0;
    cfg.loss = LossKind::Logistic;
    cfg.batch_size = 200;
    cfg.seed = seed;
    return cfg;
}

// ---------------------------------------------------------------------------

void criterion_1_and_5() {
    auto t0 = std::chrono::steady_clock::now();
    double hits10_sum = 0, mrr_sum = 0;
    double auc_sum = 0;
    bool calib_matches = true;
    double worst_seed_seconds = 0;

    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        auto seed_t0 = std::chrono::steady_clock::now();
        SyntheticKg kg = make_synthetic_kg(seed);

        TrainResult trained = train(kg.split.train, {Scorer::Translational, 32},
                                    synthetic_train_config(seed));
        LinkPredictionMetrics m =
            evaluate_link_prediction(trained.model, kg.split.test, kg.full);
        hits10_sum += m.hits_at_10;
        mrr_sum += m.mrr;
        worst_seed_seconds = std::max(worst_seed_seconds, seconds_since(seed_t0));

        // criterion 5 piggybacks on the first trained model: held-out true
        // edges vs filtered corruptions
        if (seed == 1) {
            std::vector<LabeledScore> labeled;
            std::uint64_t idx = 0;
            for (const Triple& t : kg.split.test.edges) {
                labeled.push_back(
                    {score_triple(trained.model, t.head, t.predicate, t.tail.id),
                     true});
                auto negs = sample_negatives(kg.full, t, 1,
                                             stream_seed({seed, 0xac, idx++}));
                labeled.push_back(
                    {score_triple(trained.model, negs[0].head, negs[0].predicate,
                                  negs[0].tail.id),
                     false});
            }
            Calibration c = calibrate_threshold(labeled);
            auc_sum = c.auc;

            // exhaustive sweep oracle must agree exactly on balanced accuracy
            double best_ba = -1;
            std::vector<double> taus;
            for (const auto& l : labeled) taus.push_back(l.score);
            std::sort(taus.begin(), taus.end());
            std::vector<double> candidates = taus;
            for (std::size_t i = 0; i + 1 < taus.size(); ++i)
                candidates.push_back(0.5 * (taus[i] + taus[i + 1]));
            std::sort(candidates.begin(), candidates.end());
            std::uint64_t n_pos = labeled.size() / 2, n_neg = labeled.size() / 2;
            double best_tau = 0;
            for (double tau : candidates) {
                std::uint64_t tp = 0, tn = 0;
                for (const auto& l : labeled) {
                    if (l.positive && l.score >= tau) ++tp;
                    if (!l.positive && l.score < tau) ++tn;
                }
                double ba = 0.5 * (static_cast<double>(tp) / n_pos +
                                   static_cast<double>(tn) / n_neg);
                if (ba > best_ba) {
                    best_ba = ba;
                    best_tau = tau;
                }
            }
            calib_matches = (c.balanced_accuracy == best_ba) && (c.tau == best_tau);
        }
    }

    double hits10 = hits10_sum / 3, mrr = mrr_sum / 3;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "Hits@10=%.4f (>=0.90), MRR=%.4f (>=0.60), slowest seed %.1fs "
                  "(<=300s)",
                  hits10, mrr, worst_seed_seconds);
    report(1, "synthetic link prediction",
           hits10 >= 0.90 && mrr >= 0.60 && worst_seed_seconds <= 300.0, buf);

    std::snprintf(buf, sizeof(buf), "ROC-AUC=%.4f (>=0.95), sweep oracle %s",
                  auc_sum, calib_matches ? "exact" : "MISMATCH");
    report(5, "fact verification separation", auc_sum >= 0.95 && calib_matches,
           buf);
    (void)t0;
}

void criterion_2() {
    double worst = 0;
    for (Scorer scorer : {Scorer::Translational, Scorer::SemanticMatching})
        for (LossKind kind : {LossKind::MarginRanking, LossKind::Logistic})
            worst = std::max(worst, test::gradcheck_worst_error(scorer, kind,
                                                                100, 424242));
    char buf[96];
    std::snprintf(buf, sizeof(buf), "worst relative error %.2e (<1e-4)", worst);
    report(2, "gradient correctness", worst < 1e-4, buf);
}

void criterion_3() {
    SyntheticKg kg = make_synthetic_kg(11, 8000, 0.0);
    const GraphView& view = kg.split.train;

    ModelConfig mcfg{Scorer::Translational, 32};
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.negatives = 5;
    cfg.seed = 77;
    cfg.partitions = 4;

    // full training footprint: parameters plus adagrad state
    std::uint64_t row_bytes = 32 * 4;
    std::uint64_t full_footprint =
        2 * (view.entity_count + view.predicate_count) * row_bytes;
    cfg.memory_budget_bytes =
        static_cast<std::uint64_t>(0.39 * static_cast<double>(full_footprint));

    TrainResult in_memory = train(view, mcfg, cfg);

    TempDir scratch("ooc");
    TrainConfig disk_cfg = cfg;
    disk_cfg.mode = TrainMode::DiskBacked;
    disk_cfg.scratch_dir = scratch.file("parts");
    TrainResult disk = train(view, mcfg, disk_cfg);

    bool identical =
        in_memory.model.entity_matrix() == disk.model.entity_matrix() &&
        in_memory.model.predicate_matrix() == disk.model.predicate_matrix();
    bool under_budget =
        disk.peak_resident_embedding_bytes <= disk_cfg.memory_budget_bytes;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "bit-identical=%s, peak %llu <= budget %llu (= %.0f%% of full "
                  "%llu bytes)",
                  identical ? "yes" : "NO",
                  static_cast<unsigned long long>(disk.peak_resident_embedding_bytes),
                  static_cast<unsigned long long>(disk_cfg.memory_budget_bytes),
                  100.0 * static_cast<double>(disk_cfg.memory_budget_bytes) /
                      static_cast<double>(full_footprint),
                  static_cast<unsigned long long>(full_footprint));
    report(3, "out-of-core equivalence", identical && under_budget, buf);
}

void criterion_4() {
    auto t0 = std::chrono::steady_clock::now();
    constexpr std::uint64_t n = 10000;
    constexpr std::uint32_t d = 16;
    // random vectors with mild cluster structure, the shape real entity
    // embeddings take: 300 overlapping uniform blobs
    constexpr std::uint32_t kBlobs = 300;
    constexpr double kBlobRadius = 0.8;
    EmbeddingModel m(Scorer::SemanticMatching, d, n, 1);
    Rng rng(2024);
    std::vector<float> blob_centers(kBlobs * d);
    for (float& x : blob_centers) x = static_cast<float>(rng.uniform(-1, 1));
    for (std::uint64_t i = 0; i < n; ++i) {
        float* row = m.entity_matrix().data() + i * d;
        const float* c = blob_centers.data() + (i % kBlobs) * d;
        for (std::uint32_t j = 0; j < d; ++j)
            row[j] = c[j] + static_cast<float>(rng.uniform(-kBlobRadius, kBlobRadius));
    }

    bool exact_ok = true;
    for (Metric metric : {Metric::Cosine, Metric::Euclidean}) {
        KnnIndex exact = KnnIndex::build(m, metric, IndexMode::Exact);
        Rng qrng(5);
        for (int q = 0; q < 100 && exact_ok; ++q) {
            EntityId query = qrng.bounded(n);
            auto got = exact.query(query, 10);

            // brute-force oracle
            std::vector<std::pair<double, EntityId>> all;
            for (EntityId e = 0; e < n; ++e) {
                if (e == query) continue;
                double dot = 0, na = 0, nb = 0, dist = 0;
                for (std::uint32_t i = 0; i < d; ++i) {
                    double x = m.entity_row(query)[i], y = m.entity_row(e)[i];
                    dot += x * y;
                    na += x * x;
                    nb += y * y;
                    dist += (x - y) * (x - y);
                }
                double sim = metric == Metric::Euclidean
                                 ? -std::sqrt(dist)
                                 : (na == 0 || nb == 0
                                        ? 0.0
                                        : dot / (std::sqrt(na) * std::sqrt(nb)));
                all.emplace_back(sim, e);
            }
            std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second < b.second;
            });
            for (std::size_t i = 0; i < got.size(); ++i)
                if (got[i].entity != all[i].second) exact_ok = false;
        }
    }

    // IVF recall@10 against exact, cosine
    KnnIndex exact = KnnIndex::build(m, Metric::Cosine, IndexMode::Exact);
    IvfParams params;
    params.n_clusters = 100;
    params.seed = 7;
    KnnIndex ivf = KnnIndex::build(m, Metric::Cosine, IndexMode::Ivf, params);
    double recall_sum = 0;
    Rng qrng(9);
    constexpr int kQueries = 100;
    for (int q = 0; q < kQueries; ++q) {
        EntityId query = qrng.bounded(n);
        auto truth = exact.query(query, 10);
        auto approx = ivf.query(query, 10, 10);
        std::set<EntityId> truth_set;
        for (const Neighbor& nb : truth) truth_set.insert(nb.entity);
        int hit = 0;
        for (const Neighbor& nb : approx) hit += truth_set.count(nb.entity);
        recall_sum += static_cast<double>(hit) / static_cast<double>(truth.size());
    }
    double recall = recall_sum / kQueries;
    double secs = seconds_since(t0);
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "exact==bruteforce=%s, IVF recall@10=%.3f (>=0.90), %.1fs (<30s)",
                  exact_ok ? "yes" : "NO", recall, secs);
    report(4, "kNN correctness", exact_ok && recall >= 0.90 && secs < 30.0, buf);
}

void criterion_6() {
    // two communities of 200, intra-community edge probability 0.1, one
    // bridge edge
    double membership_sum = 0;
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
        Rng rng(stream_seed({seed, 0xc0}));
        GraphView graph;
        graph.entity_count = 400;
        graph.predicate_count = 1;
        for (EntityId block : {0ull, 200ull}) {
            for (EntityId i = 0; i < 200; ++i)
                for (EntityId j = i + 1; j < 200; ++j)
                    if (rng.uniform() < 0.1)
                        graph.edges.push_back(
                            {block + i, 0, ObjectRef::entity(block + j)});
        }
        graph.edges.push_back({0, 0, ObjectRef::entity(200)});  // bridge
        std::sort(graph.edges.begin(), graph.edges.end());

        WalkConfig wcfg;
        wcfg.walk_length = 8;
        wcfg.walks_per_node = 3;
        wcfg.window = 2;
        wcfg.seed = seed;
        PairSet pairs = pairs_from_walks(sample_walks(graph, wcfg), wcfg.window);
        GraphView pair_view = pairs_to_view(pairs, graph.entity_count);

        TrainConfig cfg;
        cfg.epochs = 3;
        cfg.negatives = 5;
        cfg.learning_rate = 0.1;
        cfg.seed = seed;
        cfg.loss = LossKind::Logistic;
        TrainResult trained = train(pair_view, {Scorer::SemanticMatching, 16}, cfg);

        KnnIndex index =
            KnnIndex::build(trained.model, Metric::Cosine, IndexMode::Exact);
        std::uint64_t same = 0, total = 0;
        for (EntityId e = 0; e < 400; ++e) {
            auto neighbors = related_entities(index, e, 5);
            for (const Neighbor& nb : neighbors) {
                same += (nb.entity < 200) == (e < 200);
                ++total;
            }
        }
        membership_sum += static_cast<double>(same) / static_cast<double>(total);
    }
    double membership = membership_sum / 5;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "same-community@5 = %.3f (>=0.80)",
                  membership);
    report(6, "related entities community structure", membership >= 0.80, buf);
}

// Disambiguation fixture: two Michael Jordans, 50 documents with
// distinguishing unambiguous co-mentions.
void criterion_7() {
    std::string meta =
        R"({"id":"mj_player","name":"Michael Jordan","type":"person","popularity":1000})" "\n"
        R"({"id":"mj_prof","name":"Michael Jordan","type":"person","popularity":50})" "\n"
        R"({"id":"bulls","name":"Chicago Bulls","type":"team","popularity":500})" "\n"
        R"({"id":"nba","name":"NBA","type":"league","popularity":800})" "\n"
        R"({"id":"pippen","name":"Scottie Pippen","type":"person","popularity":300})" "\n"
        R"({"id":"berkeley","name":"UC Berkeley","type":"university","popularity":400})" "\n"
        R"({"id":"ml","name":"machine learning","type":"field","popularity":350})" "\n"
        R"({"id":"stats","name":"statistics","type":"field","popularity":200})" "\n";
    std::string tsv =
        "mj_player\tplays_for\tbulls\tentity\n"
        "mj_player\tleague\tnba\tentity\n"
        "mj_player\tteammate\tpippen\tentity\n"
        "pippen\tplays_for\tbulls\tentity\n"
        "pippen\tleague\tnba\tentity\n"
        "bulls\tleague\tnba\tentity\n"
        "mj_prof\tworks_at\tberkeley\tentity\n"
        "mj_prof\tfield\tml\tentity\n"
        "mj_prof\tfield\tstats\tentity\n"
        "berkeley\tresearch\tml\tentity\n"
        "berkeley\tresearch\tstats\tentity\n"
        "ml\trelated\tstats\tentity\n";
    GraphStore store = test::store_from_tsv(tsv, meta);

    // The reranker context comes from the related-entity model: walk
    // co-occurrence pairs trained with the translational scorer, which puts
    // each connected component in its own spatial cluster.
    ViewSpec spec;
    spec.min_predicate_frequency = 0;
    GraphView kg_view = build_view(store, spec);
    WalkConfig wcfg;
    wcfg.walk_length = 6;
    wcfg.walks_per_node = 20;
    wcfg.window = 2;
    wcfg.seed = 13;
    PairSet pairs = pairs_from_walks(sample_walks(kg_view, wcfg), wcfg.window);
    GraphView pair_view = pairs_to_view(pairs, kg_view.entity_count);
    TrainConfig tcfg;
    tcfg.epochs = 30;
    tcfg.negatives = 4;
    tcfg.seed = 13;
    tcfg.loss = LossKind::Logistic;
    TrainResult trained = train(pair_view, {Scorer::Translational, 8}, tcfg);
    AliasTable table = AliasTable::build(store);

    std::vector<const char*> basketball_ctx{"Chicago Bulls", "NBA",
                                            "Scottie Pippen"};
    std::vector<const char*> academia_ctx{"UC Berkeley", "machine learning",
                                          "statistics"};
    struct Doc {
        Document doc;
        std::string want;
    };
    std::vector<Doc> docs;
    Rng rng(555);
    for (int i = 0; i < 50; ++i) {
        bool basketball = i % 2 == 0;
        const auto& ctx = basketball ? basketball_ctx : academia_ctx;
        std::string text = "Michael Jordan stats with " +
                           std::string(ctx[rng.bounded(3)]) + " and " +
                           std::string(ctx[rng.bounded(3)]);
        docs.push_back({{"doc" + std::to_string(i), text},
                        basketball ? "mj_player" : "mj_prof"});
    }

    auto accuracy = [&](const RerankWeights& weights) {
        AnnotatorConfig cfg;
        cfg.weights = weights;
        int correct = 0;
        for (const Doc& d : docs) {
            Annotation ann =
                annotate_document(d.doc, table, trained.model, store, cfg);
            for (const LinkedMention& m : ann.mentions) {
                if (m.surface == "Michael Jordan" &&
                    store.entity_external_id(m.entity) == d.want)
                    ++correct;
            }
        }
        return static_cast<double>(correct) / static_cast<double>(docs.size());
    };

    double contextual = accuracy({1.0, 0.3, 0.2});
    double popularity_only = accuracy({0.0, 1.0, 0.0});
    char buf[128];
    std::snprintf(buf, sizeof(buf),
                  "contextual=%.2f (>=0.90), popularity-only=%.2f (<=0.60)",
                  contextual, popularity_only);
    report(7, "contextual disambiguation",
           contextual >= 0.90 && popularity_only <= 0.60, buf);
}

void criterion_8() {
    TempDir dir("incr");
    std::string meta =
        R"({"id":"mj","name":"Michael Jordan","type":"person","popularity":10})" "\n"
        R"({"id":"bulls","name":"Chicago Bulls","type":"team","popularity":9})" "\n"
        R"({"id":"nba","name":"NBA","type":"league","popularity":8})" "\n";
    GraphStore store = test::store_from_tsv(
        "mj\tplays_for\tbulls\tentity\nbulls\tleague\tnba\tentity\n", meta);
    GraphView v = test::view_of(store);
    EmbeddingModel model = init_model(v, {Scorer::SemanticMatching, 8}, 3);
    AliasTable table = AliasTable::build(store);
    AnnotatorConfig cfg;

    auto corpus = dir.file("docs");
    std::filesystem::create_directories(corpus);
    for (int i = 0; i < 1000; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "d%04d.txt", i);
        test::write_file(corpus + "/" + name,
                         "Michael Jordan file " + std::to_string(i) +
                             " mentions the NBA");
    }
    std::string state = dir.file("state.json");
    std::string out = dir.file("ann.jsonl");

    CorpusReport first =
        annotate_corpus(corpus, state, out, table, model, store, cfg);
    std::string before = test::read_file(out);

    for (int i = 0; i < 10; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "d%04d.txt", i * 37);
        test::write_file(corpus + "/" + name,
                         "Chicago Bulls rewrite " + std::to_string(i));
    }
    CorpusReport second =
        annotate_corpus(corpus, state, out, table, model, store, cfg);
    std::string after = test::read_file(out);

    // unchanged annotation lines must be bit-identical
    std::map<std::string, std::string> before_lines, after_lines;
    auto index_lines = [](const std::string& body,
                          std::map<std::string, std::string>& into) {
        std::istringstream in(body);
        std::string line;
        while (std::getline(in, line)) {
            auto j = nlohmann::json::parse(line);
            into[j["doc_id"].get<std::string>()] = line;
        }
    };
    index_lines(before, before_lines);
    index_lines(after, after_lines);
    std::set<std::string> edited;
    for (int i = 0; i < 10; ++i) {
        char name[16];
        std::snprintf(name, sizeof(name), "d%04d", i * 37);
        edited.insert(name);
    }
    bool unchanged_identical = true;
    for (const auto& [id, line] : before_lines)
        if (!edited.count(id) && after_lines[id] != line)
            unchanged_identical = false;

    bool ok = first.annotated == 1000 && second.annotated == 10 &&
              second.skipped == 990 && second.removed == 0 &&
              second.documents_processed == 10 && unchanged_identical;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "run2 {annotated:%llu, skipped:%llu, removed:%llu}, processed "
                  "%llu (==10), unchanged bytes %s",
                  static_cast<unsigned long long>(second.annotated),
                  static_cast<unsigned long long>(second.skipped),
                  static_cast<unsigned long long>(second.removed),
                  static_cast<unsigned long long>(second.documents_processed),
                  unchanged_identical ? "identical" : "CHANGED");
    report(8, "incremental annotation", ok, buf);
}

void criterion_9() {
    TempDir dir("fmt");
    Rng rng(31337);
    bool round_trips = true;
    for (int trial = 0; trial < 1000 && round_trips; ++trial) {
        std::uint32_t d = 1 + static_cast<std::uint32_t>(rng.bounded(8));
        std::uint64_t ne = 1 + rng.bounded(20);
        std::uint64_t np = 1 + rng.bounded(4);
        Scorer scorer =
            rng.coin() ? Scorer::Translational : Scorer::SemanticMatching;
        EmbeddingModel m(scorer, d, ne, np);
        for (float& x : m.entity_matrix())
            x = static_cast<float>(rng.uniform(-2, 2));
        for (float& x : m.predicate_matrix())
            x = static_cast<float>(rng.uniform(-2, 2));
        std::string path = dir.file("m.kgem");
        save_model(m, path);
        EmbeddingModel back = load_model(path);
        std::string path2 = dir.file("m2.kgem");
        save_model(back, path2);
        if (test::read_file(path) != test::read_file(path2)) round_trips = false;
        if (back.entity_matrix() != m.entity_matrix()) round_trips = false;
        if (back.predicate_matrix() != m.predicate_matrix()) round_trips = false;

        // view round trip
        GraphView v;
        v.entity_count = ne;
        v.predicate_count = np;
        std::uint64_t n_edges = 1 + rng.bounded(40);
        for (std::uint64_t i = 0; i < n_edges; ++i)
            v.edges.push_back({rng.bounded(ne), rng.bounded(np),
                               rng.coin() ? ObjectRef::entity(rng.bounded(ne))
                                          : ObjectRef::literal(rng.bounded(10))});
        std::string vpath = dir.file("v.kgvw");
        save_view(v, vpath);
        GraphView vback = load_view(vpath);
        if (vback.edges != v.edges) round_trips = false;
        std::string vpath2 = dir.file("v2.kgvw");
        save_view(vback, vpath2);
        if (test::read_file(vpath) != test::read_file(vpath2))
            round_trips = false;
    }

    // corrupted headers are rejected with positioned errors
    bool rejects = true;
    EmbeddingModel m(Scorer::Translational, 4, 3, 2);
    std::string path = dir.file("c.kgem");
    save_model(m, path);
    std::string bytes = test::read_file(path);

    auto expect_format_error = [&](std::string corrupted,
                                   std::uint64_t expect_offset) {
        std::string p = dir.file("corrupt.bin");
        test::write_file(p, corrupted);
        try {
            load_model(p);
            return false;
        } catch (const FormatError& e) {
            return e.offset == expect_offset;
        } catch (...) {
            return false;
        }
    };
    {
        std::string bad = bytes;
        bad[1] = 'X';  // magic
        if (!expect_format_error(bad, 0)) rejects = false;
    }
    {
        std::string bad = bytes;
        bad[4] = 99;  // version
        if (!expect_format_error(bad, 4)) rejects = false;
    }
    {
        std::string bad = bytes;
        bad[8] = 0;
        bad[9] = 0;
        bad[10] = 0;
        bad[11] = 0;  // dim = 0
        if (!expect_format_error(bad, 8)) rejects = false;
    }
    {
        // zero entity count
        std::string bad = bytes;
        for (int i = 12; i < 20; ++i) bad[i] = 0;
        if (!expect_format_error(bad, 12)) rejects = false;
    }
    {
        // truncation mid-matrix: error offset at the end of the remains
        std::string bad = bytes.substr(0, 40);
        std::string p = dir.file("trunc.kgem");
        test::write_file(p, bad);
        try {
            load_model(p);
            rejects = false;
        } catch (const FormatError& e) {
            if (e.offset > bad.size()) rejects = false;
        } catch (...) {
            rejects = false;
        }
    }

    char buf[96];
    std::snprintf(buf, sizeof(buf), "1000 random round trips %s, corruption %s",
                  round_trips ? "bit-exact" : "FAILED",
                  rejects ? "rejected with offsets" : "NOT rejected");
    report(9, "format round trips", round_trips && rejects, buf);
}

void criterion_10() {
    TempDir dir("svc");
    std::string meta =
        R"({"id":"mj","name":"Michael Jordan","type":"person","popularity":100})" "\n"
        R"({"id":"bulls","name":"Chicago Bulls","type":"team","popularity":90})" "\n"
        R"({"id":"nba","name":"NBA","type":"league","popularity":80})" "\n"
        R"({"id":"pippen","name":"Scottie Pippen","type":"person","popularity":70})" "\n";
    std::string tsv =
        "mj\tplays_for\tbulls\tentity\n"
        "pippen\tplays_for\tbulls\tentity\n"
        "bulls\tleague\tnba\tentity\n"
        "mj\tteammate\tpippen\tentity\n";
    GraphStore store = test::store_from_tsv(tsv, meta);
    store.save(dir.file("store.kgs"));

    ViewSpec spec;
    spec.min_predicate_frequency = 0;
    TrainConfig tcfg;
    tcfg.epochs = 3;
    tcfg.negatives = 2;
    tcfg.seed = 5;
    save_model(train(store, spec, {Scorer::Translational, 8}, tcfg).model,
               dir.file("model_a.kgem"));
    tcfg.seed = 99;
    save_model(train(store, spec, {Scorer::Translational, 8}, tcfg).model,
               dir.file("model_b.kgem"));

    ServiceConfig cfg_a;
    cfg_a.store_path = dir.file("store.kgs");
    cfg_a.model_path = dir.file("model_a.kgem");
    cfg_a.snapshot_id = "A";
    cfg_a.port = 0;
    cfg_a.workers = 8;
    ServiceConfig cfg_b = cfg_a;
    cfg_b.model_path = dir.file("model_b.kgem");
    cfg_b.snapshot_id = "B";

    KnowledgeService service(cfg_a);
    int port = service.start_background();
    httplib::Client client("127.0.0.1", port);
    auto snap = service.snapshot();

    // golden equivalence on all four endpoints
    bool equiv = true;
    {
        auto res = client.Post(
            "/verify",
            R"({"triples":[{"head":"mj","predicate":"plays_for","tail":"bulls"}],"tau":0})",
            "application/json");
        std::vector<Triple> t{{*snap->store.resolve_entity("mj").id,
                               *snap->store.find_predicate("plays_for"),
                               ObjectRef::entity(*snap->store.resolve_entity("bulls").id)}};
        equiv &= res && res->status == 200 &&
                 res->body ==
                     verdicts_json(verify_batch(snap->model, t, 0), snap->store)
                         .dump();
    }
    {
        auto res = client.Get("/related/mj?k=3");
        auto lib = related_entities(snap->index,
                                    *snap->store.resolve_entity("mj").id, 3, {}, 10);
        equiv &= res && res->status == 200 &&
                 res->body == neighbors_json(lib, snap->store).dump();
    }
    {
        auto res = client.Post("/rank",
                               R"({"subject":"mj","predicate":"plays_for"})",
                               "application/json");
        RankedFacts rf =
            rank_facts(snap->model, snap->store,
                       *snap->store.resolve_entity("mj").id,
                       *snap->store.find_predicate("plays_for"), {});
        equiv &= res && res->status == 200 &&
                 res->body == ranked_facts_json(rf, snap->store).dump();
    }
    {
        auto res = client.Post("/annotate",
                               R"({"text":"Michael Jordan of the NBA","doc_id":"q"})",
                               "application/json");
        Annotation ann = annotate_document({"q", "Michael Jordan of the NBA"},
                                           snap->alias_table, snap->model,
                                           snap->store, snap->annotator);
        equiv &= res && res->status == 200 &&
                 res->body == annotation_json(ann, snap->store).dump();
    }

    // snapshot isolation under 100 concurrent in-flight requests
    auto response_for = [&](const ServiceConfig& cfg) {
        auto s = Snapshot::load(cfg);
        std::vector<Triple> t{{*s->store.resolve_entity("mj").id,
                               *s->store.find_predicate("teammate"),
                               ObjectRef::entity(*s->store.resolve_entity("pippen").id)}};
        return verdicts_json(verify_batch(s->model, t, 0), s->store).dump();
    };
    std::string expect_a = response_for(cfg_a);
    std::string expect_b = response_for(cfg_b);

    constexpr int kClients = 100;
    std::atomic<int> ok{0}, bad{0};
    std::atomic<bool> go{false};
    std::vector<std::thread> threads;
    std::string body =
        R"({"triples":[{"head":"mj","predicate":"teammate","tail":"pippen"}]})";
    for (int i = 0; i < kClients; ++i) {
        threads.emplace_back([&] {
            httplib::Client c("127.0.0.1", port);
            c.set_read_timeout(60, 0);
            c.set_connection_timeout(60, 0);
            while (!go.load()) std::this_thread::yield();
            auto res = c.Post("/verify", body, "application/json");
            if (res && res->status == 200 &&
                (res->body == expect_a || res->body == expect_b))
                ++ok;
            else
                ++bad;
        });
    }
    go = true;
    service.reload(cfg_b);
    for (auto& t : threads) t.join();
    service.stop();

    bool isolation = ok.load() == kClients && bad.load() == 0;
    char buf[128];
    std::snprintf(buf, sizeof(buf),
                  "endpoint equivalence=%s, %d/%d concurrent requests clean "
                  "across reload",
                  equiv ? "byte-exact" : "MISMATCH", ok.load(), kClients);
    report(10, "service equivalence and snapshot isolation", equiv && isolation,
           buf);
}

}  // namespace

int main() {
    std::printf("kgforge acceptance suite\n");
    auto t0 = std::chrono::steady_clock::now();
    criterion_1_and_5();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    std::printf("total %.1fs, %d failure(s)\n", seconds_since(t0), g_failures);
    return g_failures == 0 ? 0 : 1;
}
