#include "kgf/embed_io.hpp"
#include <algorithm>

#include <fstream>

#include "kgf/binary_io.hpp"

namespace kgf {

void save_model_streaming(Scorer scorer, std::uint32_t dim,
                          std::uint64_t entity_count,
                          std::uint64_t predicate_count,
                          const EntityRowReader& read_row,
                          const std::vector<float>& predicate_matrix,
                          const std::vector<std::string>& entity_names,
                          const std::vector<std::string>& predicate_names,
                          const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write model file: " + path);
    BinaryWriter w(out);
    w.bytes("KGEM");
    w.u32(kEmbeddingFormatVersion);
    w.u32(dim);
    w.u64(entity_count);
    w.u64(predicate_count);
    w.u8(static_cast<std::uint8_t>(scorer));
    std::vector<float> row(dim);
    for (EntityId e = 0; e < entity_count; ++e) {
        read_row(e, row.data());
        w.f32_array(row);
    }
    w.f32_array(predicate_matrix);
    for (const auto& name : entity_names) w.str(name);
    for (const auto& name : predicate_names) w.str(name);
    if (!out) throw IoError("short write to model file: " + path);
}

void save_model(const EmbeddingModel& model, const std::string& path) {
    save_model_streaming(
        model.scorer(), model.dim(), model.entity_count(),
        model.predicate_count(),
        [&](EntityId e, float* out_row) {
            std::copy_n(model.entity_matrix().data() + e * model.dim(),
                        model.dim(), out_row);
        },
        model.predicate_matrix(), model.entity_names(),
        model.predicate_names(), path);
}

EmbeddingModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file: " + path);
    BinaryReader r(in, path);
    r.expect_magic("KGEM");

    std::uint64_t at = r.offset();
    if (std::uint32_t v = r.u32(); v != kEmbeddingFormatVersion)
        throw FormatError(path + ": unsupported format version " + std::to_string(v), at);

    at = r.offset();
    std::uint32_t dim = r.u32();
    if (dim == 0) throw FormatError(path + ": zero embedding dim", at);

    at = r.offset();
    std::uint64_t entity_count = r.u64();
    if (entity_count == 0) throw FormatError(path + ": zero entity count", at);

    at = r.offset();
    std::uint64_t predicate_count = r.u64();
    if (predicate_count == 0) throw FormatError(path + ": zero predicate count", at);

    at = r.offset();
    std::uint8_t tag = r.u8();
    if (tag > 1) throw FormatError(path + ": unknown scorer tag", at);

    EmbeddingModel model(static_cast<Scorer>(tag), dim, entity_count,
                         predicate_count);
    r.f32_array(model.entity_matrix(), entity_count * dim);
    r.f32_array(model.predicate_matrix(), predicate_count * dim);
    for (std::uint64_t e = 0; e < entity_count; ++e)
        model.entity_names()[e] = r.str();
    for (std::uint64_t p = 0; p < predicate_count; ++p)
        model.predicate_names()[p] = r.str();
    if (!r.at_eof())
        throw FormatError(path + ": trailing bytes after vocabulary", r.offset());
    return model;
}

void save_optimizer_state(const OptimizerState& state, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write optimizer state: " + path);
    BinaryWriter w(out);
    w.bytes("KGOS");
    w.u32(1);
    w.u32(state.dim);
    w.u64(state.entity_accum.size());
    w.u64(state.predicate_accum.size());
    w.f32_array(state.entity_accum);
    w.f32_array(state.predicate_accum);
    if (!out) throw IoError("short write to optimizer state: " + path);
}

OptimizerState load_optimizer_state(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open optimizer state: " + path);
    BinaryReader r(in, path);
    r.expect_magic("KGOS");
    std::uint64_t at = r.offset();
    if (std::uint32_t v = r.u32(); v != 1)
        throw FormatError(path + ": unsupported optimizer state version", at);
    OptimizerState state;
    state.dim = r.u32();
    std::uint64_t ne = r.u64();
    std::uint64_t np = r.u64();
    r.f32_array(state.entity_accum, ne);
    r.f32_array(state.predicate_accum, np);
    if (!r.at_eof())
        throw FormatError(path + ": trailing bytes", r.offset());
    return state;
}

}  // namespace kgf
