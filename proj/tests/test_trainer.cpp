#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "kgf/embed_io.hpp"
#include "kgf/trainer.hpp"
#include "test_util.hpp"

using namespace kgf;

TEST_SUITE_BEGIN("trainer");

namespace {

GraphView ring_view(std::uint64_t entities, std::uint64_t predicates) {
    GraphView v;
    v.entity_count = entities;
    v.predicate_count = predicates;
    for (EntityId e = 0; e < entities; ++e) {
        v.edges.push_back({e, e % predicates, ObjectRef::entity((e + 1) % entities)});
        v.edges.push_back({e, (e + 1) % predicates,
                           ObjectRef::entity((e + 7) % entities)});
    }
    std::sort(v.edges.begin(), v.edges.end());
    v.edges.erase(std::unique(v.edges.begin(), v.edges.end()), v.edges.end());
    return v;
}

TrainConfig quick_config(std::uint64_t seed, std::uint32_t epochs = 2) {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.negatives = 4;
    cfg.seed = seed;
    cfg.batch_size = 64;
    return cfg;
}

}  // namespace

TEST_CASE("negative sampling stays out of the view") {
    GraphView v;
    v.entity_count = 2;
    v.predicate_count = 1;
    v.edges = {{0, 0, ObjectRef::entity(1)}};
    Triple pos = v.edges[0];
    auto negs = sample_negatives(v, pos, 1, 5);
    REQUIRE(negs.size() == 1);
    EdgeSet set = EdgeSet::from_view(v);
    CHECK(!set.contains(negs[0].head, negs[0].predicate, negs[0].tail.id));
}

TEST_CASE("k = 0 is rejected") {
    GraphView v;
    v.entity_count = 3;
    v.predicate_count = 1;
    v.edges = {{0, 0, ObjectRef::entity(1)}};
    CHECK_THROWS_AS(sample_negatives(v, v.edges[0], 0, 1), InvalidArgument);
}

TEST_CASE("negative sampling is deterministic per draw index") {
    GraphStore store = test::random_store(3, 50, 3, 200);
    GraphView v = test::view_of(store);
    Triple pos = v.edges[0];
    auto a = sample_negatives(v, pos, 5, 11);
    auto b = sample_negatives(v, pos, 5, 11);
    CHECK(a == b);
    auto c = sample_negatives(v, pos, 5, 12);
    CHECK(a != c);
}

TEST_CASE("corrupted slot is a fair coin within 3 sigma") {
    GraphStore store = test::random_store(7, 100, 2, 500);
    GraphView v = test::view_of(store);
    EdgeSet filter = EdgeSet::from_view(v);
    std::vector<EntityId> pool(v.entity_count);
    for (EntityId e = 0; e < v.entity_count; ++e) pool[e] = e;

    std::uint64_t head_corruptions = 0;
    std::uint64_t draws = 1000;
    std::map<EntityId, std::uint64_t> entity_counts;
    std::size_t edge = 0;
    for (std::uint64_t i = 0; i < draws; ++i) {
        const Triple& pos = v.edges[edge++ % v.edges.size()];
        auto negs = sample_negatives(&filter, pool, pool, pos, 1, i);
        if (negs[0].head != pos.head) ++head_corruptions;
        entity_counts[negs[0].head != pos.head ? negs[0].head
                                               : negs[0].tail.id]++;
    }
    double sigma = std::sqrt(0.25 * static_cast<double>(draws));
    CHECK(std::abs(static_cast<double>(head_corruptions) - 500.0) <= 3 * sigma);
    for (const auto& [e, c] : entity_counts)
        CHECK(c < draws / 20);  // no entity hoards the draws
}

TEST_CASE("degenerate complete bipartite case errors after bounded retries") {
    // complete graph over 2 entities and 1 predicate: every corruption of
    // either slot reproduces an existing edge
    GraphView v;
    v.entity_count = 2;
    v.predicate_count = 1;
    v.edges = {{0, 0, ObjectRef::entity(1)},
               {1, 0, ObjectRef::entity(0)},
               {0, 0, ObjectRef::entity(0)},
               {1, 0, ObjectRef::entity(1)}};
    CHECK_THROWS_AS(sample_negatives(v, v.edges[0], 1, 3), InvalidArgument);
}

TEST_CASE("latin schedule visits every bucket once, neighbors share <= 1") {
    for (std::uint32_t p : {1u, 2u, 4u, 7u}) {
        auto order = bucket_schedule(p);
        CHECK(order.size() == static_cast<std::size_t>(p) * p);
        std::set<std::pair<std::uint32_t, std::uint32_t>> seen(order.begin(),
                                                               order.end());
        CHECK(seen.size() == order.size());
        for (std::size_t i = 1; i < order.size(); ++i) {
            std::set<std::uint32_t> a{order[i - 1].first, order[i - 1].second};
            std::set<std::uint32_t> b{order[i].first, order[i].second};
            std::vector<std::uint32_t> shared;
            std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                                  std::back_inserter(shared));
            CHECK(shared.size() <= 1);
        }
    }
}

TEST_CASE("epoch report invariants") {
    GraphView v = ring_view(60, 3);
    ModelConfig mcfg{Scorer::Translational, 8};
    TrainConfig cfg = quick_config(5);
    cfg.partitions = 3;
    TrainResult r = train(v, mcfg, cfg);
    REQUIRE(r.reports.size() == cfg.epochs);
    for (const EpochReport& rep : r.reports) {
        CHECK(rep.buckets_visited == 9);
        CHECK(rep.edges_processed == v.edges.size());
        CHECK(rep.mean_loss >= 0.0);
    }
}

TEST_CASE("disk-backed training is bit-identical to in-memory") {
    GraphView v = ring_view(80, 4);
    ModelConfig mcfg{Scorer::Translational, 8};

    for (std::uint32_t partitions : {2u, 4u}) {
        test::TempDir scratch("scratch");
        TrainConfig mem_cfg = quick_config(21, 2);
        mem_cfg.partitions = partitions;
        TrainResult mem = train(v, mcfg, mem_cfg);

        TrainConfig disk_cfg = mem_cfg;
        disk_cfg.mode = TrainMode::DiskBacked;
        disk_cfg.scratch_dir = scratch.file("parts");
        TrainResult disk = train(v, mcfg, disk_cfg);

        CHECK(mem.model.entity_matrix() == disk.model.entity_matrix());
        CHECK(mem.model.predicate_matrix() == disk.model.predicate_matrix());
        REQUIRE(mem.reports.size() == disk.reports.size());
        for (std::size_t i = 0; i < mem.reports.size(); ++i)
            CHECK(mem.reports[i].mean_loss ==
                  doctest::Approx(disk.reports[i].mean_loss).epsilon(1e-12));
    }
}

TEST_CASE("disk-backed peak respects the budget gauge") {
    GraphView v = ring_view(100, 2);
    ModelConfig mcfg{Scorer::Translational, 16};
    test::TempDir scratch("scratch");
    TrainConfig cfg = quick_config(9, 1);
    cfg.partitions = 4;
    cfg.mode = TrainMode::DiskBacked;
    cfg.scratch_dir = scratch.file("parts");

    PartitionedView pv = partition_edges(v, cfg.partitions, 1);
    EmbeddingModel model = init_model(v, mcfg, cfg.seed);
    Trainer trainer(model, pv, v, cfg);
    trainer.run_epoch(0);
    CHECK(trainer.peak_resident_embedding_bytes() <= cfg.memory_budget_bytes);
    CHECK(trainer.peak_resident_embedding_bytes() >=
          trainer.required_resident_bytes() / 2);
    trainer.finish();
}

TEST_CASE("budget below two partitions plus predicates is rejected") {
    GraphView v = ring_view(100, 2);
    ModelConfig mcfg{Scorer::Translational, 16};
    TrainConfig cfg = quick_config(9, 1);
    cfg.partitions = 2;
    cfg.memory_budget_bytes = 64;  // absurdly small
    CHECK_THROWS_WITH_AS(train(v, mcfg, cfg),
                         doctest::Contains("memory_budget_bytes"),
                         InvalidArgument);
}

TEST_CASE("loss decreases over epochs in expectation") {
    double first_sum = 0, fifth_sum = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        GraphStore store = test::random_store(seed, 200, 4, 1200);
        GraphView v = test::view_of(store);
        ModelConfig mcfg{Scorer::Translational, 16};
        TrainConfig cfg = quick_config(seed, 5);
        TrainResult r = train(v, mcfg, cfg);
        first_sum += r.reports.front().mean_loss;
        fifth_sum += r.reports.back().mean_loss;
    }
    CHECK(fifth_sum / 5.0 < first_sum / 5.0);
}

TEST_CASE("same seed and config give a bit-identical model") {
    GraphView v = ring_view(50, 3);
    ModelConfig mcfg{Scorer::SemanticMatching, 8};
    TrainConfig cfg = quick_config(33, 2);
    TrainResult a = train(v, mcfg, cfg);
    TrainResult b = train(v, mcfg, cfg);
    CHECK(a.model.entity_matrix() == b.model.entity_matrix());
    CHECK(a.model.predicate_matrix() == b.model.predicate_matrix());
}

TEST_CASE("translational rows stay inside the unit ball through training") {
    GraphView v = ring_view(60, 2);
    ModelConfig mcfg{Scorer::Translational, 8};
    TrainResult r = train(v, mcfg, quick_config(3, 3));
    for (EntityId e = 0; e < r.model.entity_count(); ++e) {
        double sq = 0;
        for (float x : r.model.entity_row(e)) sq += static_cast<double>(x) * x;
        CHECK(std::sqrt(sq) <= 1.0 + 1e-7);
    }
    CHECK(r.model.all_finite());
}

TEST_CASE("resume from a checkpoint matches the uninterrupted run") {
    GraphView v = ring_view(40, 2);
    ModelConfig mcfg{Scorer::Translational, 8};

    TrainConfig full_cfg = quick_config(17, 6);
    TrainResult uninterrupted = train(v, mcfg, full_cfg);

    test::TempDir dir("ckpt");
    TrainConfig part1 = quick_config(17, 3);
    part1.checkpoint_dir = dir.file("cp");
    train(v, mcfg, part1);

    TrainConfig part2 = quick_config(17, 6);
    part2.checkpoint_dir = dir.file("cp");
    TrainResult resumed = train(v, mcfg, part2);
    CHECK(resumed.resumed_from_epoch == 3);
    CHECK(resumed.model.entity_matrix() == uninterrupted.model.entity_matrix());
    CHECK(resumed.model.predicate_matrix() ==
          uninterrupted.model.predicate_matrix());
}

TEST_CASE("checkpoint with different settings is refused") {
    GraphView v = ring_view(40, 2);
    ModelConfig mcfg{Scorer::Translational, 8};
    test::TempDir dir("ckpt");
    TrainConfig cfg = quick_config(17, 2);
    cfg.checkpoint_dir = dir.file("cp");
    train(v, mcfg, cfg);

    TrainConfig other = cfg;
    other.epochs = 4;
    other.learning_rate = 0.5;
    CHECK_THROWS_WITH_AS(train(v, mcfg, other),
                         doctest::Contains("learning_rate"), InvalidArgument);
}

TEST_CASE("shuffled schedule still visits every edge exactly once") {
    GraphView v = ring_view(60, 3);
    ModelConfig mcfg{Scorer::Translational, 8};
    TrainConfig cfg = quick_config(4, 2);
    cfg.partitions = 3;
    cfg.schedule = ScheduleKind::Shuffled;
    TrainResult r = train(v, mcfg, cfg);
    for (const EpochReport& rep : r.reports) {
        CHECK(rep.buckets_visited == 9);
        CHECK(rep.edges_processed == v.edges.size());
    }
    CHECK(r.model.all_finite());
}

TEST_CASE("empty view errors before any allocation") {
    GraphView v;
    v.entity_count = 10;
    v.predicate_count = 1;
    ModelConfig mcfg{Scorer::Translational, 8};
    CHECK_THROWS_AS(train(v, mcfg, quick_config(1)), EmptyViewError);
}

TEST_CASE("both scorers produce identically shaped models") {
    GraphView v = ring_view(30, 2);
    TrainConfig cfg = quick_config(2, 1);
    TrainResult a = train(v, {Scorer::Translational, 8}, cfg);
    TrainResult b = train(v, {Scorer::SemanticMatching, 8}, cfg);
    CHECK(a.model.entity_count() == b.model.entity_count());
    CHECK(a.model.predicate_count() == b.model.predicate_count());
    CHECK(a.model.dim() == b.model.dim());
}

TEST_CASE("evaluation: perfect model scores MRR 1") {
    // translational ground truth where each test tail is the unique argmax
    GraphView v;
    v.entity_count = 6;
    v.predicate_count = 1;
    v.edges = {{0, 0, ObjectRef::entity(1)}, {2, 0, ObjectRef::entity(3)}};
    EmbeddingModel m(Scorer::Translational, 2, 6, 1);
    // place entities on a line; predicate translates by +0.2
    for (EntityId e = 0; e < 6; ++e) {
        m.entity_row(e)[0] = 0.1f * static_cast<float>(e);
        m.entity_row(e)[1] = 0.0f;
    }
    m.predicate_row(0)[0] = 0.1f;
    LinkPredictionMetrics metrics = evaluate_link_prediction(m, v, v);
    CHECK(metrics.mrr == doctest::Approx(1.0));
    CHECK(metrics.hits_at_1 == doctest::Approx(1.0));
    CHECK(metrics.hits_at_10 == doctest::Approx(1.0));
    CHECK(metrics.ranks_evaluated == 4);
}

TEST_CASE("evaluation equals a brute-force ranking oracle") {
    GraphStore store = test::random_store(15, 5, 2, 12);
    GraphView full = test::view_of(store);
    GraphView test_view = full;
    test_view.edges.resize(2);

    EmbeddingModel m = init_model(full, {Scorer::SemanticMatching, 4}, 77);
    LinkPredictionMetrics metrics = evaluate_link_prediction(m, test_view, full);

    // oracle: exhaustive pessimistic filtered ranking via score_triple
    EdgeSet full_set = EdgeSet::from_view(full);
    double mrr = 0;
    std::uint64_t hits1 = 0, hits10 = 0, count = 0;
    for (const Triple& t : test_view.edges) {
        {
            double target = score_triple(m, t.head, t.predicate, t.tail.id);
            std::uint64_t rank = 1;
            for (EntityId e = 0; e < full.entity_count; ++e) {
                if (e == t.tail.id) continue;
                if (full_set.contains(t.head, t.predicate, e)) continue;
                if (score_triple(m, t.head, t.predicate, e) >= target) ++rank;
            }
            mrr += 1.0 / static_cast<double>(rank);
            hits1 += rank <= 1;
            hits10 += rank <= 10;
            ++count;
        }
        {
            double target = score_triple(m, t.head, t.predicate, t.tail.id);
            std::uint64_t rank = 1;
            for (EntityId e = 0; e < full.entity_count; ++e) {
                if (e == t.head) continue;
                if (full_set.contains(e, t.predicate, t.tail.id)) continue;
                if (score_triple(m, e, t.predicate, t.tail.id) >= target) ++rank;
            }
            mrr += 1.0 / static_cast<double>(rank);
            hits1 += rank <= 1;
            hits10 += rank <= 10;
            ++count;
        }
    }
    CHECK(metrics.mrr == doctest::Approx(mrr / static_cast<double>(count)));
    CHECK(metrics.hits_at_1 ==
          doctest::Approx(static_cast<double>(hits1) / count));
    CHECK(metrics.hits_at_10 ==
          doctest::Approx(static_cast<double>(hits10) / count));
}

TEST_CASE("all-zero embeddings rank pessimistically") {
    GraphView v;
    v.entity_count = 5;
    v.predicate_count = 1;
    v.edges = {{0, 0, ObjectRef::entity(1)}};
    EmbeddingModel m(Scorer::SemanticMatching, 3, 5, 1);  // zero-initialized
    LinkPredictionMetrics metrics = evaluate_link_prediction(m, v, v);
    // every candidate ties; pessimistic rank = candidate count = 5
    CHECK(metrics.mrr == doctest::Approx(1.0 / 5.0));
    CHECK(metrics.hits_at_1 == doctest::Approx(0.0));
    CHECK(metrics.hits_at_10 == doctest::Approx(1.0));  // 10 >= 5
}

TEST_CASE("optimizer state round trip") {
    test::TempDir dir("opt");
    OptimizerState st;
    st.dim = 4;
    st.entity_accum = {1.0f, 2.5f, 0.0f, -1.0f};
    st.predicate_accum = {0.25f};
    save_optimizer_state(st, dir.file("o.kgos"));
    OptimizerState back = load_optimizer_state(dir.file("o.kgos"));
    CHECK(back.dim == st.dim);
    CHECK(back.entity_accum == st.entity_accum);
    CHECK(back.predicate_accum == st.predicate_accum);
}

TEST_SUITE_END();
