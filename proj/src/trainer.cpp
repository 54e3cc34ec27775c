#include "kgf/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include <json.hpp>

#include "kgf/binary_io.hpp"
#include "kgf/rng.hpp"

namespace fs = std::filesystem;

namespace kgf {

namespace {
constexpr std::uint64_t kBucketTag = 0xb0c;
constexpr std::uint64_t kPartitionTag = 0x9a27;
constexpr double kAdagradEps = 1e-8;
}  // namespace

void TrainConfig::validate() const {
    if (margin <= 0) throw InvalidArgument("margin must be positive");
    if (negatives == 0) throw InvalidArgument("negatives must be positive");
    if (learning_rate <= 0) throw InvalidArgument("learning_rate must be positive");
    if (epochs == 0) throw InvalidArgument("epochs must be positive");
    if (batch_size == 0) throw InvalidArgument("batch_size must be positive");
    if (memory_budget_bytes == 0)
        throw InvalidArgument("memory_budget_bytes must be positive");
    if (partitions == 0) throw InvalidArgument("partitions must be positive");
    if (mode == TrainMode::DiskBacked && scratch_dir.empty())
        throw InvalidArgument("disk-backed training needs scratch_dir");
}

std::size_t EdgeKeyHash::operator()(const EdgeKey& k) const {
    return static_cast<std::size_t>(
        hash_combine(hash_combine(k.h, k.r), k.t));
}

EdgeSet EdgeSet::from_view(const GraphView& view) {
    EdgeSet s;
    s.set_.reserve(view.edges.size() * 2);
    for (const Triple& t : view.edges) {
        if (t.tail.is_literal())
            throw InvalidArgument("edge set requires an entity-only view");
        s.set_.insert({t.head, t.predicate, t.tail.id});
    }
    return s;
}

std::vector<Triple> sample_negatives(const EdgeSet* filter,
                                     std::span<const EntityId> head_pool,
                                     std::span<const EntityId> tail_pool,
                                     const Triple& positive, std::uint32_t k,
                                     std::uint64_t seed,
                                     std::uint32_t max_attempts) {
    if (k == 0) throw InvalidArgument("negatives per positive must be >= 1");
    if (!positive.tail.is_entity())
        throw InvalidArgument("cannot corrupt a literal-tail triple");
    std::vector<Triple> out;
    out.reserve(k);
    for (std::uint32_t draw = 0; draw < k; ++draw) {
        Rng rng(stream_seed({seed, positive.head, positive.predicate,
                             positive.tail.packed(), draw}));
        bool ok = false;
        for (std::uint32_t attempt = 0; attempt < max_attempts; ++attempt) {
            bool corrupt_head = rng.coin();
            const auto& pool = corrupt_head ? head_pool : tail_pool;
            if (pool.empty()) break;
            EntityId cand = pool[rng.bounded(pool.size())];
            Triple neg = positive;
            if (corrupt_head) {
                if (cand == positive.head) continue;
                neg.head = cand;
            } else {
                if (cand == positive.tail.id) continue;
                neg.tail = ObjectRef::entity(cand);
            }
            if (filter && filter->contains(neg.head, neg.predicate, neg.tail.id))
                continue;
            out.push_back(neg);
            ok = true;
            break;
        }
        if (!ok)
            throw InvalidArgument(
                "no valid corruption found for positive (" +
                std::to_string(positive.head) + "," +
                std::to_string(positive.predicate) + "," +
                std::to_string(positive.tail.id) + ") after bounded retries");
    }
    return out;
}

std::vector<Triple> sample_negatives(const GraphView& view,
                                     const Triple& positive, std::uint32_t k,
                                     std::uint64_t seed) {
    if (view.entity_count < 2)
        throw InvalidArgument("negative sampling needs at least 2 entities");
    std::vector<EntityId> all(view.entity_count);
    for (EntityId e = 0; e < view.entity_count; ++e) all[e] = e;
    EdgeSet filter = EdgeSet::from_view(view);
    return sample_negatives(&filter, all, all, positive, k, seed);
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> bucket_schedule(
    std::uint32_t partitions) {
    // Boustrophedon walk over the P x P bucket grid: within a head row the
    // tail index snakes back and forth, so consecutive buckets always share
    // exactly one partition and each step swaps exactly one.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> order;
    order.reserve(static_cast<std::size_t>(partitions) * partitions);
    for (std::uint32_t i = 0; i < partitions; ++i) {
        if (i % 2 == 0) {
            for (std::uint32_t j = 0; j < partitions; ++j) order.emplace_back(i, j);
        } else {
            for (std::uint32_t j = partitions; j-- > 0;) order.emplace_back(i, j);
        }
    }
    return order;
}

// --- partition storage -----------------------------------------------------
//
// Rows are float32; a partition block interleaves each member's d parameter
// floats with its d adagrad floats. The in-memory variant is a thin view
// over the model matrix plus a full accumulator vector; the disk variant
// keeps at most the two partitions of the current bucket resident.

class PartitionStorage {
public:
    virtual ~PartitionStorage() = default;
    virtual void acquire(std::uint32_t i, std::uint32_t j) = 0;
    virtual float* entity_row(EntityId e) = 0;
    virtual float* entity_accum(EntityId e) = 0;
    virtual void read_row(EntityId e, float* params, float* accum) const = 0;
    virtual void flush_to_model() = 0;
    virtual std::uint64_t peak_resident_bytes() const = 0;
};

namespace {

class InMemoryStorage final : public PartitionStorage {
public:
    InMemoryStorage(EmbeddingModel& model, const OptimizerState* resume)
        : model_(model) {
        accum_.assign(model.entity_matrix().size(), 0.0f);
        if (resume) {
            if (resume->entity_accum.size() != accum_.size())
                throw InvalidArgument("optimizer state shape mismatch");
            accum_ = resume->entity_accum;
        }
        resident_ = (model_.entity_matrix().size() +
                     model_.predicate_matrix().size()) * sizeof(float);
    }
    void acquire(std::uint32_t, std::uint32_t) override {}
    float* entity_row(EntityId e) override {
        return model_.entity_matrix().data() + e * model_.dim();
    }
    float* entity_accum(EntityId e) override {
        return accum_.data() + e * model_.dim();
    }
    void read_row(EntityId e, float* params, float* accum) const override {
        std::uint32_t d = model_.dim();
        const float* p = model_.entity_matrix().data() + e * d;
        std::copy_n(p, d, params);
        if (accum) std::copy_n(accum_.data() + e * d, d, accum);
    }
    void flush_to_model() override {}
    std::uint64_t peak_resident_bytes() const override { return resident_; }

private:
    EmbeddingModel& model_;
    std::vector<float> accum_;
    std::uint64_t resident_;
};

class DiskStorage final : public PartitionStorage {
public:
    DiskStorage(EmbeddingModel& model, const PartitionedView& pview,
                const std::string& scratch_dir, std::uint64_t budget,
                const OptimizerState* resume)
        : model_(model), pview_(pview), dir_(scratch_dir), budget_(budget) {
        fs::create_directories(dir_);
        d_ = model.dim();
        slot_.resize(pview.entity_count);
        for (std::uint32_t p = 0; p < pview.partition_count; ++p)
            for (std::size_t s = 0; s < pview.members[p].size(); ++s)
                slot_[pview.members[p][s]] = static_cast<std::uint32_t>(s);

        // Spill initial rows to partition files, then release the in-memory
        // matrix so only bucket partitions stay resident during epochs.
        for (std::uint32_t p = 0; p < pview.partition_count; ++p) {
            std::ofstream out(part_path(p), std::ios::binary);
            if (!out) throw IoError("cannot write scratch file: " + part_path(p));
            std::vector<float> row(d_), acc(d_, 0.0f);
            for (EntityId e : pview.members[p]) {
                std::copy_n(model.entity_matrix().data() + e * d_, d_, row.data());
                if (resume)
                    std::copy_n(resume->entity_accum.data() + e * d_, d_, acc.data());
                out.write(reinterpret_cast<const char*>(row.data()), d_ * 4);
                out.write(reinterpret_cast<const char*>(acc.data()), d_ * 4);
            }
            if (!out) throw IoError("short write to scratch file: " + part_path(p));
        }
        model_.entity_matrix().clear();
        model_.entity_matrix().shrink_to_fit();
        predicate_bytes_ = model_.predicate_matrix().size() * sizeof(float);
        resident_ = predicate_bytes_;
        peak_ = resident_;
    }

    void acquire(std::uint32_t i, std::uint32_t j) override {
        current_bucket_ = {i, j};
        // evict partitions the bucket does not need
        for (auto it = loaded_.begin(); it != loaded_.end();) {
            if (it->first != i && it->first != j) {
                write_back(it->first, it->second);
                resident_ -= param_bytes(it->first);
                it = loaded_.erase(it);
            } else {
                ++it;
            }
        }
        load(i);
        if (j != i) load(j);
    }

    float* entity_row(EntityId e) override {
        return block(e);
    }
    float* entity_accum(EntityId e) override {
        return block(e) + d_;
    }

    void read_row(EntityId e, float* params, float* accum) const override {
        std::uint32_t p = pview_.entity_partition[e];
        auto it = loaded_.find(p);
        if (it != loaded_.end()) {
            const float* b = it->second.data() +
                             static_cast<std::size_t>(slot_[e]) * 2 * d_;
            std::copy_n(b, d_, params);
            if (accum) std::copy_n(b + d_, d_, accum);
            return;
        }
        std::ifstream in(part_path(p), std::ios::binary);
        if (!in) throw IoError("cannot open scratch file: " + part_path(p));
        in.seekg(static_cast<std::streamoff>(slot_[e]) * 2 * d_ * 4);
        in.read(reinterpret_cast<char*>(params), d_ * 4);
        if (accum) in.read(reinterpret_cast<char*>(accum), d_ * 4);
        else in.ignore(d_ * 4);
        if (!in) throw IoError("short read from scratch file: " + part_path(p));
    }

    void flush_to_model() override {
        for (auto& [p, buf] : loaded_) write_back(p, buf);
        loaded_.clear();
        resident_ = predicate_bytes_;
        auto& matrix = model_.entity_matrix();
        matrix.assign(pview_.entity_count * d_, 0.0f);
        std::vector<float> row(d_);
        for (std::uint32_t p = 0; p < pview_.partition_count; ++p) {
            std::ifstream in(part_path(p), std::ios::binary);
            if (!in) throw IoError("cannot open scratch file: " + part_path(p));
            for (EntityId e : pview_.members[p]) {
                in.read(reinterpret_cast<char*>(row.data()), d_ * 4);
                in.ignore(d_ * 4);
                std::copy_n(row.data(), d_, matrix.data() + e * d_);
            }
            if (!in) throw IoError("short read from scratch file: " + part_path(p));
        }
    }

    std::uint64_t peak_resident_bytes() const override { return peak_; }

private:
    std::string part_path(std::uint32_t p) const {
        return (fs::path(dir_) / ("part_" + std::to_string(p) + ".bin")).string();
    }
    std::uint64_t param_bytes(std::uint32_t p) const {
        // parameter floats only; adagrad shadows are optimizer state and are
        // not counted against the embedding budget
        return pview_.members[p].size() * static_cast<std::uint64_t>(d_) * 4;
    }
    float* block(EntityId e) {
        std::uint32_t p = pview_.entity_partition[e];
        auto it = loaded_.find(p);
        if (it == loaded_.end())
            throw InvalidState("entity row accessed outside its bucket");
        return it->second.data() + static_cast<std::size_t>(slot_[e]) * 2 * d_;
    }
    void load(std::uint32_t p) {
        if (loaded_.count(p)) return;
        std::ifstream in(part_path(p), std::ios::binary);
        if (!in) throw IoError("cannot open scratch file: " + part_path(p));
        std::vector<float> buf(pview_.members[p].size() * 2 * d_);
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * 4));
        if (static_cast<std::size_t>(in.gcount()) != buf.size() * 4)
            throw IoError("short read from scratch file: " + part_path(p));
        resident_ += param_bytes(p);
        if (resident_ > budget_)
            throw InvalidArgument(
                "memory budget exceeded loading bucket (" +
                std::to_string(current_bucket_.first) + "," +
                std::to_string(current_bucket_.second) + "): resident " +
                std::to_string(resident_) + " bytes > budget " +
                std::to_string(budget_));
        peak_ = std::max(peak_, resident_);
        loaded_.emplace(p, std::move(buf));
    }
    void write_back(std::uint32_t p, const std::vector<float>& buf) {
        std::ofstream out(part_path(p), std::ios::binary);
        if (!out) throw IoError("cannot rewrite scratch file: " + part_path(p));
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * 4));
        if (!out) throw IoError("short write to scratch file: " + part_path(p));
    }

    EmbeddingModel& model_;
    const PartitionedView& pview_;
    std::string dir_;
    std::uint64_t budget_;
    std::uint32_t d_ = 0;
    std::vector<std::uint32_t> slot_;
    std::map<std::uint32_t, std::vector<float>> loaded_;
    std::pair<std::uint32_t, std::uint32_t> current_bucket_{0, 0};
    std::uint64_t predicate_bytes_ = 0;
    std::uint64_t resident_ = 0;
    std::uint64_t peak_ = 0;
};

double score_rows(Scorer scorer, const float* h, const float* r,
                  const float* t, std::uint32_t d) {
    if (scorer == Scorer::Translational) {
        double sq = 0;
        for (std::uint32_t i = 0; i < d; ++i) {
            double v = static_cast<double>(h[i]) + r[i] - t[i];
            sq += v * v;
        }
        return -std::sqrt(sq);
    }
    double s = 0;
    for (std::uint32_t i = 0; i < d; ++i)
        s += static_cast<double>(h[i]) * r[i] * t[i];
    return s;
}

void grad_rows(Scorer scorer, const float* h, const float* r, const float* t,
               std::uint32_t d, double upstream, double* gh, double* gr,
               double* gt) {
    if (scorer == Scorer::Translational) {
        double sq = 0;
        for (std::uint32_t i = 0; i < d; ++i) {
            double v = static_cast<double>(h[i]) + r[i] - t[i];
            sq += v * v;
        }
        double nrm = std::sqrt(sq);
        if (nrm == 0) return;
        double scale = upstream / nrm;
        for (std::uint32_t i = 0; i < d; ++i) {
            double v = static_cast<double>(h[i]) + r[i] - t[i];
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

void adagrad_apply(float* row, float* accum, const double* grad,
                   std::uint32_t d, double lr) {
    for (std::uint32_t i = 0; i < d; ++i) {
        double g = grad[i];
        if (g == 0) continue;
        double acc = static_cast<double>(accum[i]) + g * g;
        accum[i] = static_cast<float>(acc);
        row[i] = static_cast<float>(row[i] - lr * g / (std::sqrt(acc) + kAdagradEps));
    }
}

}  // namespace

// --- Trainer ---------------------------------------------------------------

Trainer::Trainer(EmbeddingModel& model, const PartitionedView& pview,
                 const GraphView& full_view, const TrainConfig& cfg,
                 const OptimizerState* resume_state)
    : model_(model), pview_(pview), cfg_(cfg) {
    cfg_.validate();
    if (model.entity_count() != pview.entity_count ||
        model.predicate_count() != pview.predicate_count)
        throw InvalidArgument("model shape does not match partitioned view");

    std::uint64_t required = required_resident_bytes();
    if (cfg_.memory_budget_bytes < required)
        throw InvalidArgument(
            "memory_budget_bytes " + std::to_string(cfg_.memory_budget_bytes) +
            " cannot hold two entity partitions plus the predicate matrix (" +
            std::to_string(required) + " bytes)");

    if (cfg_.filtered_negatives) edge_set_ = EdgeSet::from_view(full_view);

    predicate_accum_.assign(model.predicate_matrix().size(), 0.0f);
    if (resume_state) {
        if (resume_state->predicate_accum.size() != predicate_accum_.size())
            throw InvalidArgument("optimizer state shape mismatch");
        predicate_accum_ = resume_state->predicate_accum;
    }

    if (cfg_.mode == TrainMode::DiskBacked)
        storage_ = std::make_unique<DiskStorage>(model, pview, cfg_.scratch_dir,
                                                 cfg_.memory_budget_bytes,
                                                 resume_state);
    else
        storage_ = std::make_unique<InMemoryStorage>(model, resume_state);
}

Trainer::~Trainer() {
    try {
        finish();
    } catch (...) {
        // destructor must not throw; finish() can be called explicitly to
        // observe flush errors
    }
}

std::uint64_t Trainer::required_resident_bytes() const {
    std::vector<std::uint64_t> sizes;
    sizes.reserve(pview_.partition_count);
    for (const auto& m : pview_.members) sizes.push_back(m.size());
    std::sort(sizes.rbegin(), sizes.rend());
    std::uint64_t top_two = sizes[0] + (sizes.size() > 1 ? sizes[1] : 0);
    std::uint64_t row_bytes = static_cast<std::uint64_t>(model_.dim()) * 4;
    return top_two * row_bytes + model_.predicate_count() * row_bytes;
}

std::uint64_t Trainer::peak_resident_embedding_bytes() const {
    return storage_->peak_resident_bytes();
}

struct Trainer::RowGrad {
    std::vector<double> values;
};

void Trainer::process_batch(std::span<const Triple> edges,
                            std::uint32_t bucket_i, std::uint32_t bucket_j,
                            double& loss_sum) {
    std::uint32_t d = model_.dim();
    Scorer scorer = model_.scorer();
    std::span<const EntityId> head_pool{pview_.members[bucket_i]};
    std::span<const EntityId> tail_pool{pview_.members[bucket_j]};
    const EdgeSet* filter = cfg_.filtered_negatives ? &edge_set_ : nullptr;

    // Ordered gradient maps make the apply order independent of hashing.
    std::map<EntityId, RowGrad> ent_grads;
    std::map<PredicateId, RowGrad> pred_grads;
    auto ent_grad = [&](EntityId e) -> double* {
        RowGrad& g = ent_grads[e];
        if (g.values.empty()) g.values.assign(d, 0.0);
        return g.values.data();
    };
    auto pred_grad = [&](PredicateId r) -> double* {
        RowGrad& g = pred_grads[r];
        if (g.values.empty()) g.values.assign(d, 0.0);
        return g.values.data();
    };

    std::vector<double> neg_scores(cfg_.negatives);
    std::vector<double> neg_upstream(cfg_.negatives);

    for (const Triple& pos : edges) {
        const float* h = storage_->entity_row(pos.head);
        const float* r = model_.predicate_row(pos.predicate).data();
        const float* t = storage_->entity_row(pos.tail.id);
        double s_pos = score_rows(scorer, h, r, t, d);

        std::vector<Triple> negs =
            sample_negatives(filter, head_pool, tail_pool, pos, cfg_.negatives,
                             cfg_.seed);
        for (std::uint32_t i = 0; i < cfg_.negatives; ++i) {
            const Triple& n = negs[i];
            neg_scores[i] = score_rows(scorer, storage_->entity_row(n.head),
                                       model_.predicate_row(n.predicate).data(),
                                       storage_->entity_row(n.tail.id), d);
        }

        double d_pos = 0;
        double loss = contrastive_loss<double>(
            cfg_.loss, cfg_.margin, s_pos,
            std::span<const double>(neg_scores.data(), cfg_.negatives), &d_pos,
            neg_upstream.data());
        loss_sum += loss;

        if (d_pos != 0)
            grad_rows(scorer, h, r, t, d, d_pos, ent_grad(pos.head),
                      pred_grad(pos.predicate), ent_grad(pos.tail.id));
        for (std::uint32_t i = 0; i < cfg_.negatives; ++i) {
            if (neg_upstream[i] == 0) continue;
            const Triple& n = negs[i];
            grad_rows(scorer, storage_->entity_row(n.head),
                      model_.predicate_row(n.predicate).data(),
                      storage_->entity_row(n.tail.id), d, neg_upstream[i],
                      ent_grad(n.head), pred_grad(n.predicate),
                      ent_grad(n.tail.id));
        }
    }

    for (auto& [e, g] : ent_grads) {
        float* row = storage_->entity_row(e);
        adagrad_apply(row, storage_->entity_accum(e), g.values.data(), d,
                      cfg_.learning_rate);
        if (scorer == Scorer::Translational) project_to_unit_ball(row, d);
    }
    for (auto& [r, g] : pred_grads) {
        adagrad_apply(model_.predicate_row(r).data(),
                      predicate_accum_.data() + r * d, g.values.data(), d,
                      cfg_.learning_rate);
    }
}

EpochReport Trainer::run_epoch(std::uint32_t epoch_index) {
    if (finished_) throw InvalidState("trainer already finished");
    auto t0 = std::chrono::steady_clock::now();

    auto schedule = bucket_schedule(pview_.partition_count);
    if (cfg_.schedule == ScheduleKind::Shuffled) {
        std::random_device rd;
        Rng rng((static_cast<std::uint64_t>(rd()) << 32) ^ rd());
        rng.shuffle(schedule);
    }

    double loss_sum = 0;
    std::uint64_t edges_processed = 0;
    for (auto [i, j] : schedule) {
        storage_->acquire(i, j);
        std::vector<Triple> edges = pview_.bucket(i, j);
        Rng rng(stream_seed({cfg_.seed, kBucketTag, epoch_index, i, j}));
        rng.shuffle(edges);
        for (std::size_t at = 0; at < edges.size(); at += cfg_.batch_size) {
            std::size_t n = std::min<std::size_t>(cfg_.batch_size,
                                                  edges.size() - at);
            process_batch({edges.data() + at, n}, i, j, loss_sum);
        }
        edges_processed += edges.size();
    }

    EpochReport report;
    report.epoch = epoch_index;
    report.edges_processed = edges_processed;
    report.buckets_visited =
        static_cast<std::uint32_t>(pview_.partition_count * pview_.partition_count);
    report.mean_loss =
        edges_processed ? loss_sum / static_cast<double>(edges_processed) : 0.0;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return report;
}

void Trainer::finish() {
    if (finished_) return;
    storage_->flush_to_model();
    finished_ = true;
}

OptimizerState Trainer::optimizer_state() const {
    OptimizerState state;
    state.dim = model_.dim();
    state.entity_accum.resize(pview_.entity_count * model_.dim());
    std::vector<float> row(model_.dim());
    for (EntityId e = 0; e < pview_.entity_count; ++e)
        storage_->read_row(e, row.data(),
                           state.entity_accum.data() + e * model_.dim());
    state.predicate_accum = predicate_accum_;
    return state;
}

void Trainer::write_checkpoint_model(const std::string& path) const {
    std::uint32_t d = model_.dim();
    save_model_streaming(
        model_.scorer(), d, model_.entity_count(), model_.predicate_count(),
        [&](EntityId e, float* out) { storage_->read_row(e, out, nullptr); },
        model_.predicate_matrix(), model_.entity_names(),
        model_.predicate_names(), path);
}

// --- train pipeline ---------------------------------------------------------

namespace {

nlohmann::json checkpoint_descriptor(const ModelConfig& mcfg,
                                     const TrainConfig& cfg,
                                     std::uint64_t edge_count) {
    nlohmann::json j;
    j["seed"] = cfg.seed;
    j["dim"] = mcfg.dim;
    j["scorer"] = scorer_name(mcfg.scorer);
    j["loss"] = loss_name(cfg.loss);
    j["margin"] = cfg.margin;
    j["negatives"] = cfg.negatives;
    j["learning_rate"] = cfg.learning_rate;
    j["batch_size"] = cfg.batch_size;
    j["partitions"] = cfg.partitions;
    j["filtered_negatives"] = cfg.filtered_negatives;
    j["edge_count"] = edge_count;
    return j;
}

void atomic_write_text(const std::string& path, const std::string& body) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write " + tmp);
        out << body;
    }
    fs::rename(tmp, path);
}

}  // namespace

TrainResult train(const GraphView& view, const ModelConfig& mcfg,
                  const TrainConfig& cfg, const EpochCallback& on_epoch,
                  const std::vector<std::string>* entity_names,
                  const std::vector<std::string>* predicate_names) {
    cfg.validate();
    if (view.edges.empty())
        throw EmptyViewError("cannot train on an empty view");

    PartitionedView pview = partition_edges(
        view, cfg.partitions, stream_seed({cfg.seed, kPartitionTag}));

    TrainResult result;
    std::uint32_t start_epoch = 0;
    EmbeddingModel model;
    OptimizerState resume_state;
    bool resuming = false;

    fs::path ckpt_dir(cfg.checkpoint_dir);
    fs::path state_path = ckpt_dir / "state.json";
    fs::path model_path = ckpt_dir / "model.kgem";
    fs::path opt_path = ckpt_dir / "optimizer.kgos";

    if (!cfg.checkpoint_dir.empty() && fs::exists(state_path)) {
        std::ifstream in(state_path);
        nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
        if (j.is_discarded())
            throw FormatError("corrupt checkpoint state: " + state_path.string(), 0);
        nlohmann::json want = checkpoint_descriptor(mcfg, cfg, view.edges.size());
        for (auto& [key, value] : want.items()) {
            if (!j.contains(key) || j[key] != value)
                throw InvalidArgument(
                    "checkpoint was produced with different settings: field '" +
                    key + "'");
        }
        start_epoch = j["epoch_completed"].get<std::uint32_t>();
        model = load_model(model_path.string());
        resume_state = load_optimizer_state(opt_path.string());
        resuming = true;
        result.resumed_from_epoch = start_epoch;
    } else {
        model = init_model(view, mcfg, cfg.seed);
        if (entity_names) model.entity_names() = *entity_names;
        if (predicate_names) model.predicate_names() = *predicate_names;
    }

    if (start_epoch < cfg.epochs) {
        Trainer trainer(model, pview, view, cfg,
                        resuming ? &resume_state : nullptr);
        for (std::uint32_t epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
            EpochReport report = trainer.run_epoch(epoch);
            result.reports.push_back(report);
            if (on_epoch) on_epoch(report);
            if (!cfg.checkpoint_dir.empty()) {
                fs::create_directories(ckpt_dir);
                std::string tmp_model = model_path.string() + ".tmp";
                trainer.write_checkpoint_model(tmp_model);
                fs::rename(tmp_model, model_path);
                save_optimizer_state(trainer.optimizer_state(), opt_path.string());
                nlohmann::json j = checkpoint_descriptor(mcfg, cfg, view.edges.size());
                j["epoch_completed"] = epoch + 1;
                atomic_write_text(state_path.string(), j.dump(2) + "\n");
            }
        }
        trainer.finish();
        result.peak_resident_embedding_bytes =
            trainer.peak_resident_embedding_bytes();
    }

    result.model = std::move(model);
    if (!result.model.all_finite())
        throw InvalidState("model contains non-finite values after training");
    return result;
}

TrainResult train(const GraphStore& store, const ViewSpec& vspec,
                  const ModelConfig& mcfg, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
    GraphView view = build_view(store, vspec);
    if (view.has_literal_edges())
        throw InvalidArgument(
            "training view contains literal-tail edges; set drop_literal_facts");
    std::vector<std::string> entity_names(store.entity_count());
    for (EntityId e = 0; e < store.entity_count(); ++e)
        entity_names[e] = store.entity_external_id(e);
    std::vector<std::string> predicate_names(store.predicate_count());
    for (PredicateId p = 0; p < store.predicate_count(); ++p)
        predicate_names[p] = store.predicate_name(p);
    return train(view, mcfg, cfg, on_epoch, &entity_names, &predicate_names);
}

// --- evaluation --------------------------------------------------------------

LinkPredictionMetrics evaluate_link_prediction(const EmbeddingModel& model,
                                               const GraphView& test_view,
                                               const GraphView& full_view) {
    EdgeSet full = EdgeSet::from_view(full_view);
    std::uint32_t d = model.dim();
    std::uint64_t n = model.entity_count();
    Scorer scorer = model.scorer();

    std::vector<double> q(d);
    std::vector<double> scores(n);

    auto score_all_tails = [&](EntityId h, PredicateId r) {
        std::span<const float> eh = model.entity_row(h);
        std::span<const float> wr = model.predicate_row(r);
        if (scorer == Scorer::Translational) {
            for (std::uint32_t i = 0; i < d; ++i)
                q[i] = static_cast<double>(eh[i]) + wr[i];
            for (EntityId e = 0; e < n; ++e) {
                const float* v = model.entity_matrix().data() + e * d;
                double sq = 0;
                for (std::uint32_t i = 0; i < d; ++i) {
                    double x = q[i] - v[i];
                    sq += x * x;
                }
                scores[e] = -std::sqrt(sq);
            }
        } else {
            for (std::uint32_t i = 0; i < d; ++i)
                q[i] = static_cast<double>(eh[i]) * wr[i];
            for (EntityId e = 0; e < n; ++e) {
                const float* v = model.entity_matrix().data() + e * d;
                double s = 0;
                for (std::uint32_t i = 0; i < d; ++i) s += q[i] * v[i];
                scores[e] = s;
            }
        }
    };

    auto score_all_heads = [&](PredicateId r, EntityId t) {
        std::span<const float> wr = model.predicate_row(r);
        std::span<const float> et = model.entity_row(t);
        if (scorer == Scorer::Translational) {
            for (std::uint32_t i = 0; i < d; ++i)
                q[i] = static_cast<double>(wr[i]) - et[i];
            for (EntityId e = 0; e < n; ++e) {
                const float* v = model.entity_matrix().data() + e * d;
                double sq = 0;
                for (std::uint32_t i = 0; i < d; ++i) {
                    double x = v[i] + q[i];
                    sq += x * x;
                }
                scores[e] = -std::sqrt(sq);
            }
        } else {
            for (std::uint32_t i = 0; i < d; ++i)
                q[i] = static_cast<double>(wr[i]) * et[i];
            for (EntityId e = 0; e < n; ++e) {
                const float* v = model.entity_matrix().data() + e * d;
                double s = 0;
                for (std::uint32_t i = 0; i < d; ++i) s += v[i] * q[i];
                scores[e] = s;
            }
        }
    };

    LinkPredictionMetrics m;
    double mrr_sum = 0;
    std::uint64_t hits1 = 0, hits10 = 0, ranks = 0;

    for (const Triple& edge : test_view.edges) {
        if (!edge.tail.is_entity())
            throw InvalidArgument("test view contains literal-tail edges");
        EntityId h = edge.head, t = edge.tail.id;
        PredicateId r = edge.predicate;
        if (h >= n || t >= n)
            throw InvalidArgument("test edge entity missing from model");

        // Pessimistic filtered rank of the true entity in each direction:
        // equal scores count as ranked ahead; other known-true edges are
        // excluded from the competitor set.
        score_all_tails(h, r);
        double target = scores[t];
        std::uint64_t rank = 1;
        for (EntityId e = 0; e < n; ++e) {
            if (e == t || scores[e] < target) continue;
            if (full.contains(h, r, e)) continue;
            ++rank;
        }
        mrr_sum += 1.0 / static_cast<double>(rank);
        hits1 += rank <= 1;
        hits10 += rank <= 10;
        ++ranks;

        score_all_heads(r, t);
        target = scores[h];
        rank = 1;
        for (EntityId e = 0; e < n; ++e) {
            if (e == h || scores[e] < target) continue;
            if (full.contains(e, r, t)) continue;
            ++rank;
        }
        mrr_sum += 1.0 / static_cast<double>(rank);
        hits1 += rank <= 1;
        hits10 += rank <= 10;
        ++ranks;
    }

    if (ranks) {
        m.mrr = mrr_sum / static_cast<double>(ranks);
        m.hits_at_1 = static_cast<double>(hits1) / static_cast<double>(ranks);
        m.hits_at_10 = static_cast<double>(hits10) / static_cast<double>(ranks);
    }
    m.ranks_evaluated = ranks;
    return m;
}

}  // namespace kgf
