#include "kgf/walks.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include "kgf/binary_io.hpp"
#include "kgf/rng.hpp"

namespace kgf {

const char* const kCoOccursPredicate = "__co_occurs__";

void WalkConfig::validate() const {
    if (walk_length < 2) throw InvalidArgument("walk_length must be >= 2");
    if (walks_per_node < 1) throw InvalidArgument("walks_per_node must be >= 1");
    if (window < 1) throw InvalidArgument("window must be >= 1");
    if (window >= walk_length)
        throw InvalidArgument("window must be smaller than walk_length");
}

std::size_t PairKeyHash::operator()(const PairKey& k) const {
    return static_cast<std::size_t>(hash_combine(k.a, k.b));
}

std::uint64_t PairSet::total() const {
    std::uint64_t n = 0;
    for (const auto& [k, c] : counts) n += c;
    return n;
}

std::uint64_t PairSet::count(EntityId a, EntityId b) const {
    auto it = counts.find({a, b});
    return it == counts.end() ? 0 : it->second;
}

std::vector<std::pair<PairKey, std::uint64_t>> PairSet::sorted() const {
    std::vector<std::pair<PairKey, std::uint64_t>> out(counts.begin(),
                                                       counts.end());
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
        return std::tie(x.first.a, x.first.b) < std::tie(y.first.a, y.first.b);
    });
    return out;
}

WalkCorpus sample_walks(const GraphView& view, const WalkConfig& cfg) {
    cfg.validate();
    if (view.edges.empty()) throw InvalidArgument("view is empty");
    if (view.has_literal_edges())
        throw InvalidArgument("walks require an entity-only view");

    // Undirected adjacency, deduplicated and sorted per node.
    std::vector<std::vector<EntityId>> adj(view.entity_count);
    for (const Triple& t : view.edges) {
        adj[t.head].push_back(t.tail.id);
        adj[t.tail.id].push_back(t.head);
    }
    for (auto& nbrs : adj) {
        std::sort(nbrs.begin(), nbrs.end());
        nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
    }

    WalkCorpus corpus;
    for (EntityId start = 0; start < view.entity_count; ++start) {
        if (adj[start].empty()) continue;
        for (std::uint32_t wi = 0; wi < cfg.walks_per_node; ++wi) {
            Rng rng(stream_seed({cfg.seed, start, wi}));
            std::vector<EntityId> walk;
            walk.reserve(cfg.walk_length);
            walk.push_back(start);
            EntityId cur = start;
            for (std::uint32_t step = 1; step < cfg.walk_length; ++step) {
                const auto& nbrs = adj[cur];
                if (nbrs.empty()) break;  // dead end
                cur = nbrs[rng.bounded(nbrs.size())];
                walk.push_back(cur);
            }
            corpus.walks.push_back(std::move(walk));
        }
    }
    return corpus;
}

PairSet pairs_from_walks(const WalkCorpus& corpus, std::uint32_t window) {
    PairSet pairs;
    for (const auto& walk : corpus.walks) {
        std::size_t n = walk.size();
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t lo = i > window ? i - window : 0;
            std::size_t hi = std::min(n - 1, i + window);
            for (std::size_t j = lo; j <= hi; ++j) {
                if (j == i || walk[i] == walk[j]) continue;
                pairs.counts[{walk[i], walk[j]}]++;
            }
        }
    }
    return pairs;
}

GraphView pairs_to_view(const PairSet& pairs, std::uint64_t entity_count) {
    GraphView view;
    view.entity_count = entity_count;
    view.predicate_count = 1;
    for (const auto& [key, count] : pairs.sorted()) {
        Triple t{key.a, 0, ObjectRef::entity(key.b)};
        for (std::uint64_t c = 0; c < count; ++c) view.edges.push_back(t);
    }
    if (view.edges.empty())
        throw EmptyViewError("pair set is empty, no training view");
    return view;
}

void export_pairs_tsv(const PairSet& pairs, const GraphStore& store,
                      std::ostream& out) {
    for (const auto& [key, count] : pairs.sorted()) {
        for (std::uint64_t c = 0; c < count; ++c) {
            out << store.entity_external_id(key.a) << '\t'
                << kCoOccursPredicate << '\t'
                << store.entity_external_id(key.b) << "\tentity\n";
        }
    }
}

void save_corpus(const WalkCorpus& corpus, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write walk corpus: " + path);
    BinaryWriter w(out);
    w.bytes("KGWC");
    w.u32(1);
    w.u64(corpus.walks.size());
    for (const auto& walk : corpus.walks) {
        w.u64(walk.size());
        for (EntityId e : walk) w.u64(e);
    }
}

WalkCorpus load_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open walk corpus: " + path);
    BinaryReader r(in, path);
    r.expect_magic("KGWC");
    std::uint64_t at = r.offset();
    if (std::uint32_t v = r.u32(); v != 1)
        throw FormatError(path + ": unsupported corpus version", at);
    WalkCorpus corpus;
    std::uint64_t n = r.u64();
    corpus.walks.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        std::uint64_t len = r.u64();
        std::vector<EntityId> walk(len);
        for (auto& e : walk) e = r.u64();
        corpus.walks.push_back(std::move(walk));
    }
    if (!r.at_eof())
        throw FormatError(path + ": trailing bytes after walks", r.offset());
    return corpus;
}

}  // namespace kgf
