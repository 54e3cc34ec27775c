#pragma once

// Contrastive training over partition buckets.
//
// An epoch visits all P*P buckets exactly once in a fixed boustrophedon
// order over the (head partition, tail partition) grid, so consecutive
// buckets share at most one partition and a bucket step swaps at most one
// resident partition. Within a bucket, edges are shuffled by a stream
// keyed on (seed, epoch, bucket); every positive edge draws its negatives
// from a stream keyed on (seed, positive, draw index). Randomness therefore
// never depends on the storage mode: the disk-backed trainer, which keeps
// only the two bucket partitions resident, is bit-identical to the
// in-memory one under the same seed and schedule.
//
// Head corruptions are drawn from the bucket's head partition and tail
// corruptions from its tail partition, which keeps every touched row
// resident. With P = 1 this is plain uniform sampling over all entities.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "kgf/embed_io.hpp"
#include "kgf/model.hpp"
#include "kgf/view.hpp"

namespace kgf {

enum class TrainMode : std::uint8_t { InMemory = 0, DiskBacked = 1 };
enum class ScheduleKind : std::uint8_t { Latin = 0, Shuffled = 1 };

struct TrainConfig {
    double margin = 1.0;
    std::uint32_t negatives = 10;
    double learning_rate = 0.1;
    std::uint32_t epochs = 10;
    std::uint32_t batch_size = 1000;
    std::uint64_t memory_budget_bytes = 1ull << 30;
    std::uint64_t seed = 0;
    LossKind loss = LossKind::MarginRanking;

    std::uint32_t partitions = 1;
    bool filtered_negatives = true;
    TrainMode mode = TrainMode::InMemory;
    ScheduleKind schedule = ScheduleKind::Latin;
    std::string scratch_dir;      // disk-backed partition files
    std::string checkpoint_dir;   // empty = no checkpoints

    void validate() const;
};

struct EpochReport {
    std::uint32_t epoch = 0;
    double mean_loss = 0.0;
    std::uint64_t edges_processed = 0;
    std::uint32_t buckets_visited = 0;
    double wall_seconds = 0.0;
};

struct EdgeKey {
    std::uint64_t h, r, t;
    bool operator==(const EdgeKey&) const = default;
};
struct EdgeKeyHash {
    std::size_t operator()(const EdgeKey& k) const;
};

class EdgeSet {
public:
    static EdgeSet from_view(const GraphView& view);
    bool contains(EntityId h, PredicateId r, EntityId t) const {
        return set_.count({h, r, t}) != 0;
    }
    std::size_t size() const { return set_.size(); }

private:
    std::unordered_set<EdgeKey, EdgeKeyHash> set_;
};

// Corrupts head or tail (fair coin) with a uniform draw from the matching
// pool; redraws while the corruption is a known edge (filter != nullptr) or
// reproduces the original entity. Deterministic given (seed, positive,
// draw index). Throws after `max_attempts` redraws per negative.
std::vector<Triple> sample_negatives(const EdgeSet* filter,
                                     std::span<const EntityId> head_pool,
                                     std::span<const EntityId> tail_pool,
                                     const Triple& positive, std::uint32_t k,
                                     std::uint64_t seed,
                                     std::uint32_t max_attempts = 1000);

// Standalone form over a whole view (pool = all entities, filter = view).
std::vector<Triple> sample_negatives(const GraphView& view,
                                     const Triple& positive, std::uint32_t k,
                                     std::uint64_t seed);

// Fixed bucket order for P partitions: every bucket exactly once,
// consecutive buckets sharing at most one partition.
std::vector<std::pair<std::uint32_t, std::uint32_t>> bucket_schedule(
    std::uint32_t partitions);

class PartitionStorage;

class Trainer {
public:
    // The model is updated in place. In disk-backed mode its entity matrix
    // is spilled to scratch files for the duration of training and
    // re-gathered by finish(); the resident-bytes gauge covers the epochs.
    Trainer(EmbeddingModel& model, const PartitionedView& pview,
            const GraphView& full_view, const TrainConfig& cfg,
            const OptimizerState* resume_state = nullptr);
    ~Trainer();

    EpochReport run_epoch(std::uint32_t epoch_index);

    // Flushes partitions back into the model. Called automatically by the
    // destructor if not called explicitly.
    void finish();

    OptimizerState optimizer_state() const;

    // Checkpoint the current parameters without materializing the full
    // entity matrix (rows are streamed from partition storage).
    void write_checkpoint_model(const std::string& path) const;

    std::uint64_t peak_resident_embedding_bytes() const;
    std::uint64_t required_resident_bytes() const;

private:
    struct RowGrad;
    void process_batch(std::span<const Triple> edges, std::uint32_t bucket_i,
                       std::uint32_t bucket_j, double& loss_sum);

    EmbeddingModel& model_;
    const PartitionedView& pview_;
    TrainConfig cfg_;
    EdgeSet edge_set_;
    std::unique_ptr<PartitionStorage> storage_;
    std::vector<float> predicate_accum_;
    bool finished_ = false;
};

struct TrainResult {
    EmbeddingModel model;
    std::vector<EpochReport> reports;
    std::uint64_t peak_resident_embedding_bytes = 0;
    std::uint32_t resumed_from_epoch = 0;  // 0 = fresh run
};

using EpochCallback = std::function<void(const EpochReport&)>;

// Full pipeline: build_view -> partition_edges -> init_model -> epochs,
// checkpointing after each epoch when cfg.checkpoint_dir is set and
// resuming from an existing checkpoint transparently.
TrainResult train(const GraphStore& store, const ViewSpec& vspec,
                  const ModelConfig& mcfg, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});
TrainResult train(const GraphView& view, const ModelConfig& mcfg,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {},
                  const std::vector<std::string>* entity_names = nullptr,
                  const std::vector<std::string>* predicate_names = nullptr);

struct LinkPredictionMetrics {
    double mrr = 0.0;
    double hits_at_1 = 0.0;
    double hits_at_10 = 0.0;
    std::uint64_t ranks_evaluated = 0;
};

// Filtered protocol: for each test edge, the true tail (and separately the
// true head) is ranked against all entities, excluding other edges known
// true in full_view; ties are pessimistic. Metrics average both directions.
LinkPredictionMetrics evaluate_link_prediction(const EmbeddingModel& model,
                                               const GraphView& test_view,
                                               const GraphView& full_view);

}  // namespace kgf
