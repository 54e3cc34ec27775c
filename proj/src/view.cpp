#include "kgf/view.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <unordered_set>

#include "kgf/binary_io.hpp"
#include "kgf/rng.hpp"

namespace kgf {

bool GraphView::has_literal_edges() const {
    return std::any_of(edges.begin(), edges.end(),
                       [](const Triple& t) { return t.tail.is_literal(); });
}

namespace {

GraphView filter_edges(std::vector<Triple> edges, std::uint64_t entity_count,
                       std::uint64_t predicate_count, const ViewSpec& spec) {
    if (spec.predicate_allowlist) {
        for (PredicateId p : *spec.predicate_allowlist) {
            if (spec.predicate_denylist.count(p))
                throw InvalidArgument(
                    "predicate " + std::to_string(p) +
                    " appears in both allowlist and denylist");
        }
    }

    std::vector<Triple> kept;
    kept.reserve(edges.size());
    for (const Triple& t : edges) {
        if (spec.predicate_allowlist &&
            !spec.predicate_allowlist->count(t.predicate))
            continue;
        if (spec.predicate_denylist.count(t.predicate)) continue;
        if (spec.drop_literal_facts && t.tail.is_literal()) continue;
        kept.push_back(t);
    }

    // Frequency threshold on what survived the list and literal filters.
    std::map<PredicateId, std::uint64_t> freq;
    for (const Triple& t : kept) freq[t.predicate]++;
    std::vector<Triple> final_edges;
    final_edges.reserve(kept.size());
    for (const Triple& t : kept)
        if (freq[t.predicate] >= spec.min_predicate_frequency)
            final_edges.push_back(t);

    std::sort(final_edges.begin(), final_edges.end());

    if (final_edges.empty())
        throw EmptyViewError("view has zero edges after filtering");

    GraphView view;
    view.edges = std::move(final_edges);
    view.entity_count = entity_count;
    view.predicate_count = predicate_count;
    view.spec = spec;
    return view;
}

}  // namespace

GraphView build_view(const GraphStore& store, const ViewSpec& spec) {
    return filter_edges(store.triples(), store.entity_count(),
                        store.predicate_count(), spec);
}

GraphView build_view(const GraphView& source, const ViewSpec& spec) {
    return filter_edges(source.edges, source.entity_count,
                        source.predicate_count, spec);
}

SplitResult split_view(const GraphView& view, SplitRatios ratios,
                       std::uint64_t seed) {
    if (ratios.train <= 0 || ratios.valid <= 0 || ratios.test <= 0)
        throw InvalidArgument("split ratios must all be positive");
    if (std::abs(ratios.train + ratios.valid + ratios.test - 1.0) > 1e-9)
        throw InvalidArgument("split ratios must sum to 1");

    std::uint64_t n = view.edges.size();
    std::uint64_t n_train = static_cast<std::uint64_t>(
        std::floor(static_cast<double>(n) * ratios.train));
    std::uint64_t n_valid = static_cast<std::uint64_t>(
        std::floor(static_cast<double>(n) * ratios.valid));
    std::uint64_t n_test = n - n_train - n_valid;
    if (n_train == 0 || n_valid == 0 || n_test == 0)
        throw InvalidArgument("a split is empty at the requested ratios");

    std::vector<std::uint64_t> order(n);
    for (std::uint64_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(stream_seed({seed, 0x5eedu, n}));
    rng.shuffle(order);

    auto slice = [&](std::uint64_t from, std::uint64_t count) {
        GraphView v;
        v.entity_count = view.entity_count;
        v.predicate_count = view.predicate_count;
        v.spec = view.spec;
        v.edges.reserve(count);
        for (std::uint64_t i = from; i < from + count; ++i)
            v.edges.push_back(view.edges[order[i]]);
        std::sort(v.edges.begin(), v.edges.end());
        return v;
    };

    SplitResult result{slice(0, n_train), slice(n_train, n_valid),
                       slice(n_train + n_valid, n_test), 0, 0};

    std::unordered_set<EntityId> train_entities;
    for (const Triple& t : result.train.edges) {
        train_entities.insert(t.head);
        if (t.tail.is_entity()) train_entities.insert(t.tail.id);
    }
    auto cold = [&](const GraphView& v) {
        std::uint64_t c = 0;
        for (const Triple& t : v.edges) {
            bool miss = !train_entities.count(t.head) ||
                        (t.tail.is_entity() && !train_entities.count(t.tail.id));
            if (miss) ++c;
        }
        return c;
    };
    result.cold_entity_valid_edges = cold(result.valid);
    result.cold_entity_test_edges = cold(result.test);
    return result;
}

std::uint32_t partition_of(EntityId entity, std::uint64_t seed, std::uint32_t p) {
    return static_cast<std::uint32_t>(hash_combine(seed, entity) % p);
}

std::uint64_t PartitionedView::edge_count() const {
    std::uint64_t n = 0;
    for (const auto& b : buckets) n += b.size();
    return n;
}

PartitionedView partition_edges(const GraphView& view, std::uint32_t partitions,
                                std::uint64_t seed) {
    if (partitions < 1) throw InvalidArgument("partition count must be >= 1");
    if (view.has_literal_edges())
        throw InvalidArgument(
            "cannot partition a view with literal-tail edges; filter with "
            "drop_literal_facts first");

    PartitionedView pv;
    pv.partition_count = partitions;
    pv.seed = seed;
    pv.entity_count = view.entity_count;
    pv.predicate_count = view.predicate_count;
    pv.entity_partition.resize(view.entity_count);
    pv.members.resize(partitions);
    for (EntityId e = 0; e < view.entity_count; ++e) {
        std::uint32_t p = partition_of(e, seed, partitions);
        pv.entity_partition[e] = p;
        pv.members[p].push_back(e);
    }
    pv.buckets.assign(static_cast<std::size_t>(partitions) * partitions, {});
    for (const Triple& t : view.edges) {
        std::uint32_t i = pv.entity_partition[t.head];
        std::uint32_t j = pv.entity_partition[t.tail.id];
        pv.buckets[static_cast<std::size_t>(i) * partitions + j].push_back(t);
    }
    return pv;
}

void save_view(const GraphView& view, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write view file: " + path);
    BinaryWriter w(out);
    w.bytes("KGVW");
    w.u32(1);  // version
    w.u64(view.entity_count);
    w.u64(view.predicate_count);
    w.u64(view.edges.size());
    for (const Triple& t : view.edges) {
        w.u64(t.head);
        w.u64(t.predicate);
        w.u64(t.tail.packed());
    }
    if (!out) throw IoError("short write to view file: " + path);
}

GraphView load_view(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open view file: " + path);
    BinaryReader r(in, path);
    r.expect_magic("KGVW");
    std::uint64_t at = r.offset();
    if (std::uint32_t v = r.u32(); v != 1)
        throw FormatError(path + ": unsupported view version " + std::to_string(v), at);
    GraphView view;
    view.entity_count = r.u64();
    view.predicate_count = r.u64();
    std::uint64_t n = r.u64();
    view.edges.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        Triple t;
        t.head = r.u64();
        t.predicate = r.u64();
        t.tail = ObjectRef::unpack(r.u64());
        view.edges.push_back(t);
    }
    if (!r.at_eof())
        throw FormatError(path + ": trailing bytes after edge list", r.offset());
    return view;
}

}  // namespace kgf
