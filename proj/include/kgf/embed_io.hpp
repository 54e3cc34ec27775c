#pragma once

// Embedding binary format (KGEM):
//   magic "KGEM" | u32 version | u32 d | u64 entity_count |
//   u64 predicate_count | u8 scorer tag | entity matrix | predicate matrix |
//   entity names | predicate names
// Matrices are row-major IEEE-754 single precision little-endian; names are
// u32-length-prefixed UTF-8 (entity rows first, then predicate rows).
// Round trips are bit-exact. Truncation and header corruption are rejected
// with the byte offset of the first bad read.

#include <functional>
#include <string>

#include "kgf/model.hpp"

namespace kgf {

constexpr std::uint32_t kEmbeddingFormatVersion = 1;

void save_model(const EmbeddingModel& model, const std::string& path);
EmbeddingModel load_model(const std::string& path);

// Same format, entity rows supplied one at a time so out-of-core trainers
// can checkpoint without materializing the full matrix.
using EntityRowReader = std::function<void(EntityId, float*)>;
void save_model_streaming(Scorer scorer, std::uint32_t dim,
                          std::uint64_t entity_count,
                          std::uint64_t predicate_count,
                          const EntityRowReader& read_row,
                          const std::vector<float>& predicate_matrix,
                          const std::vector<std::string>& entity_names,
                          const std::vector<std::string>& predicate_names,
                          const std::string& path);

// Adagrad accumulators, checkpointed next to the model (magic KGOS, same
// matrix layout, no vocabulary).
struct OptimizerState {
    std::uint32_t dim = 0;
    std::vector<float> entity_accum;     // entity_count * dim
    std::vector<float> predicate_accum;  // predicate_count * dim
};

void save_optimizer_state(const OptimizerState& state, const std::string& path);
OptimizerState load_optimizer_state(const std::string& path);

}  // namespace kgf
