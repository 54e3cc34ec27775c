#include "kgf/graph_store.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "kgf/binary_io.hpp"
#include "kgf/rng.hpp"
#include "kgf/text.hpp"

namespace kgf {

namespace {

std::string_view trim(std::string_view s) {
    const char* ws = " \t\r\n\f\v";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::uint64_t triple_fingerprint(const Triple& t) {
    std::uint64_t h = hash_combine(t.head, t.predicate);
    return hash_combine(h, t.tail.packed());
}

}  // namespace

// ---- Dictionary ----

std::uint64_t Dictionary::get_or_create(std::string_view token) {
    auto it = index_.find(std::string(token));
    if (it != index_.end()) return it->second;
    std::uint64_t id = tokens_.size();
    tokens_.emplace_back(token);
    index_.emplace(tokens_.back(), id);
    return id;
}

std::optional<std::uint64_t> Dictionary::find(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

const std::string& Dictionary::token(std::uint64_t id) const {
    if (id >= tokens_.size())
        throw NotFoundError("dictionary id out of range: " + std::to_string(id));
    return tokens_[id];
}

void Dictionary::save(std::ostream& out) const {
    BinaryWriter w(out);
    w.u64(tokens_.size());
    for (const auto& t : tokens_) w.str(t);
}

void Dictionary::load(std::istream& in, std::uint64_t) {
    BinaryReader r(in, "dictionary");
    std::uint64_t n = r.u64();
    tokens_.clear();
    index_.clear();
    tokens_.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        tokens_.push_back(r.str());
        index_.emplace(tokens_.back(), i);
    }
}

// ---- GraphStore ----

void GraphStore::require_sealed() const {
    if (!sealed_) throw InvalidState("store is not sealed; reads are rejected");
}

void GraphStore::require_unsealed() const {
    if (sealed_) throw InvalidState("store is sealed; writes are rejected");
}

EntityId GraphStore::intern_entity(std::string_view token) {
    std::uint64_t before = entity_dict_.size();
    EntityId id = entity_dict_.get_or_create(token);
    if (id == before) {
        EntityRecord rec;
        rec.id = id;
        rec.external_id = std::string(token);
        rec.canonical_name = rec.external_id;
        entities_.push_back(std::move(rec));
    }
    return id;
}

void GraphStore::add_triple(std::string_view head, std::string_view predicate,
                            std::string_view tail, bool literal_tail,
                            std::string_view provenance) {
    require_unsealed();
    Triple t;
    t.head = intern_entity(trim(head));
    t.predicate = predicate_dict_.get_or_create(trim(predicate));
    std::string_view tail_tok = trim(tail);
    t.tail = literal_tail
                 ? ObjectRef::literal(literal_dict_.get_or_create(tail_tok))
                 : ObjectRef::entity(intern_entity(tail_tok));

    std::uint64_t fp = triple_fingerprint(t);
    auto it = triple_set_.find(fp);
    if (it != triple_set_.end() && triples_[it->second] == t) return;

    std::uint32_t src = 0;
    if (!provenance.empty())
        src = static_cast<std::uint32_t>(source_dict_.get_or_create(provenance)) + 1;
    triple_set_.emplace(fp, static_cast<std::uint32_t>(triples_.size()));
    triples_.push_back(t);
    triple_source_.push_back(src);
}

IngestReport GraphStore::ingest_triples(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open triples file: " + path);
    return ingest_triples(in);
}

IngestReport GraphStore::ingest_triples(std::istream& in) {
    require_unsealed();
    IngestReport report;
    std::string line;
    std::uint64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;

        std::vector<std::string_view> cols;
        std::string_view rest = line;
        while (true) {
            auto tab = rest.find('\t');
            if (tab == std::string_view::npos) {
                cols.push_back(rest);
                break;
            }
            cols.push_back(rest.substr(0, tab));
            rest.remove_prefix(tab + 1);
        }

        auto reject = [&](const std::string& why) {
            ++report.rejected;
            report.rejects.emplace_back(line_no, why);
        };

        if (cols.size() != 4 && cols.size() != 5) {
            reject("expected 4 or 5 tab-separated columns, got " +
                   std::to_string(cols.size()));
            continue;
        }
        std::string_view head = trim(cols[0]);
        std::string_view pred = trim(cols[1]);
        std::string_view tail = trim(cols[2]);
        std::string_view kind = trim(cols[3]);
        std::string_view prov = cols.size() == 5 ? trim(cols[4]) : std::string_view{};
        if (head.empty() || pred.empty() || tail.empty()) {
            reject("empty head, predicate or tail");
            continue;
        }
        bool literal_tail;
        if (kind == "entity") literal_tail = false;
        else if (kind == "literal") literal_tail = true;
        else {
            reject("tail_kind must be 'entity' or 'literal', got '" +
                   std::string(kind) + "'");
            continue;
        }

        std::uint64_t before = triples_.size();
        add_triple(head, pred, tail, literal_tail, prov);
        if (triples_.size() > before) ++report.unique;
        else ++report.duplicates;
    }
    return report;
}

MetadataReport GraphStore::load_entity_metadata(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open entity metadata file: " + path);
    return load_entity_metadata(in);
}

MetadataReport GraphStore::load_entity_metadata(std::istream& in) {
    require_unsealed();
    MetadataReport report;
    std::string line;
    while (std::getline(in, line)) {
        auto t = trim(line);
        if (t.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(t, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("id") ||
            !j["id"].is_string() || j["id"].get<std::string>().empty()) {
            ++report.rejected;
            continue;
        }
        double popularity = 0.0;
        if (j.contains("popularity")) {
            if (!j["popularity"].is_number() || j["popularity"].get<double>() < 0) {
                ++report.rejected;
                continue;
            }
            popularity = j["popularity"].get<double>();
        }

        EntityId id = intern_entity(j["id"].get<std::string>());
        EntityRecord& rec = entities_[id];
        rec.popularity = popularity;

        bool named = j.contains("name") && j["name"].is_string() &&
                     !j["name"].get<std::string>().empty();
        if (named) rec.canonical_name = j["name"].get<std::string>();
        else ++report.skipped_unnamed;

        if (j.contains("type") && j["type"].is_string() &&
            !j["type"].get<std::string>().empty()) {
            rec.entity_type = static_cast<TypeId>(
                type_dict_.get_or_create(j["type"].get<std::string>()));
        }

        // Aliases deduplicated after case folding; an alias equal to the
        // canonical name is dropped.
        rec.aliases.clear();
        if (j.contains("aliases") && j["aliases"].is_array()) {
            std::vector<std::string> seen;
            seen.push_back(fold_key(rec.canonical_name));
            for (const auto& a : j["aliases"]) {
                if (!a.is_string()) continue;
                std::string alias = a.get<std::string>();
                std::string folded = fold_key(alias);
                if (folded.empty()) continue;
                if (std::find(seen.begin(), seen.end(), folded) != seen.end())
                    continue;
                seen.push_back(folded);
                rec.aliases.push_back(std::move(alias));
            }
        }
        ++report.loaded;
    }
    return report;
}

void GraphStore::seal() {
    require_unsealed();
    sealed_ = true;

    // Out adjacency keyed by head (all triples, so triples_of sees literal
    // facts); in adjacency keyed by entity tails only.
    out_index_.clear();
    in_index_.clear();
    for (std::uint32_t i = 0; i < triples_.size(); ++i) out_index_.push_back(i);
    std::sort(out_index_.begin(), out_index_.end(),
              [&](std::uint32_t a, std::uint32_t b) {
                  const Triple& x = triples_[a];
                  const Triple& y = triples_[b];
                  return std::tie(x.head, x.predicate, x.tail) <
                         std::tie(y.head, y.predicate, y.tail);
              });
    out_offsets_.assign(entities_.size() + 1, 0);
    for (std::uint32_t i : out_index_) out_offsets_[triples_[i].head + 1]++;
    for (std::size_t e = 1; e < out_offsets_.size(); ++e)
        out_offsets_[e] += out_offsets_[e - 1];

    for (std::uint32_t i = 0; i < triples_.size(); ++i)
        if (triples_[i].tail.is_entity()) in_index_.push_back(i);
    std::sort(in_index_.begin(), in_index_.end(),
              [&](std::uint32_t a, std::uint32_t b) {
                  const Triple& x = triples_[a];
                  const Triple& y = triples_[b];
                  return std::tie(x.tail.id, x.predicate, x.head) <
                         std::tie(y.tail.id, y.predicate, y.head);
              });
    in_offsets_.assign(entities_.size() + 1, 0);
    for (std::uint32_t i : in_index_) in_offsets_[triples_[i].tail.id + 1]++;
    for (std::size_t e = 1; e < in_offsets_.size(); ++e)
        in_offsets_[e] += in_offsets_[e - 1];

    folded_external_.clear();
    folded_name_.clear();
    for (const EntityRecord& rec : entities_) {
        folded_external_[fold_key(rec.external_id)].push_back(rec.id);
        folded_name_[fold_key(rec.canonical_name)].push_back(rec.id);
    }
}

ResolveResult GraphStore::resolve_entity(std::string_view key) const {
    require_sealed();
    std::string folded = fold_key(key);
    if (auto it = folded_external_.find(folded); it != folded_external_.end()) {
        if (it->second.size() == 1) return {it->second.front(), false};
        return {std::nullopt, true};
    }
    if (auto it = folded_name_.find(folded); it != folded_name_.end()) {
        if (it->second.size() == 1) return {it->second.front(), false};
        return {std::nullopt, true};
    }
    return {std::nullopt, false};
}

std::map<PredicateId, PredicateStat> GraphStore::predicate_stats() const {
    require_sealed();
    std::map<PredicateId, PredicateStat> stats;
    std::map<PredicateId, std::uint64_t> literal_counts;
    for (const Triple& t : triples_) {
        stats[t.predicate].frequency++;
        if (t.tail.is_literal()) literal_counts[t.predicate]++;
    }
    for (auto& [p, s] : stats) {
        s.literal_fraction =
            static_cast<double>(literal_counts[p]) / static_cast<double>(s.frequency);
    }
    return stats;
}

std::vector<Triple> GraphStore::get_neighbors(EntityId entity,
                                              Direction direction,
                                              std::uint64_t limit) const {
    require_sealed();
    if (entity >= entities_.size())
        throw NotFoundError("unknown entity id: " + std::to_string(entity));

    struct Key {
        PredicateId pred;
        EntityId neighbor;
        Triple triple;
    };
    std::vector<Key> keys;
    if (direction == Direction::Out || direction == Direction::Both) {
        for (std::uint64_t i = out_offsets_[entity]; i < out_offsets_[entity + 1]; ++i) {
            const Triple& t = triples_[out_index_[i]];
            if (!t.tail.is_entity()) continue;
            keys.push_back({t.predicate, t.tail.id, t});
        }
    }
    if (direction == Direction::In || direction == Direction::Both) {
        for (std::uint64_t i = in_offsets_[entity]; i < in_offsets_[entity + 1]; ++i) {
            const Triple& t = triples_[in_index_[i]];
            keys.push_back({t.predicate, t.head, t});
        }
    }
    std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
        return std::tie(a.pred, a.neighbor, a.triple) <
               std::tie(b.pred, b.neighbor, b.triple);
    });
    std::vector<Triple> out;
    for (const Key& k : keys) {
        if (!out.empty() && out.back() == k.triple) continue;  // self loop once
        out.push_back(k.triple);
        if (out.size() == limit) break;
    }
    return out;
}

std::vector<Triple> GraphStore::triples_of(EntityId head,
                                           PredicateId predicate) const {
    require_sealed();
    if (head >= entities_.size())
        throw NotFoundError("unknown entity id: " + std::to_string(head));
    std::vector<Triple> out;
    for (std::uint64_t i = out_offsets_[head]; i < out_offsets_[head + 1]; ++i) {
        const Triple& t = triples_[out_index_[i]];
        if (t.predicate == predicate) out.push_back(t);
    }
    return out;
}

const std::vector<Triple>& GraphStore::triples() const {
    require_sealed();
    return triples_;
}

std::string GraphStore::tsv_line(const Triple& t) const {
    std::string line = entities_[t.head].external_id;
    line += '\t';
    line += predicate_dict_.token(t.predicate);
    line += '\t';
    if (t.tail.is_entity()) {
        line += entities_[t.tail.id].external_id;
        line += "\tentity";
    } else {
        line += literal_dict_.token(t.tail.id);
        line += "\tliteral";
    }
    return line;
}

void GraphStore::export_tsv(std::ostream& out) const {
    require_sealed();
    std::vector<std::string> lines;
    lines.reserve(triples_.size());
    for (const Triple& t : triples_) lines.push_back(tsv_line(t));
    std::sort(lines.begin(), lines.end());
    for (const std::string& l : lines) {
        out << l << '\n';
    }
}

const EntityRecord& GraphStore::entity(EntityId id) const {
    if (id >= entities_.size())
        throw NotFoundError("unknown entity id: " + std::to_string(id));
    return entities_[id];
}

const std::string& GraphStore::entity_external_id(EntityId id) const {
    return entity(id).external_id;
}

const std::string& GraphStore::predicate_name(PredicateId id) const {
    return predicate_dict_.token(id);
}

const std::string& GraphStore::literal_value(LiteralId id) const {
    return literal_dict_.token(id);
}

const std::string& GraphStore::type_name(TypeId id) const {
    return type_dict_.token(id);
}

std::optional<PredicateId> GraphStore::find_predicate(std::string_view name) const {
    return predicate_dict_.find(name);
}

std::optional<TypeId> GraphStore::find_type(std::string_view name) const {
    auto id = type_dict_.find(name);
    if (!id) return std::nullopt;
    return static_cast<TypeId>(*id);
}

std::uint64_t GraphStore::type_count() const { return type_dict_.size(); }

std::vector<TypeId> GraphStore::entity_types() const {
    std::vector<TypeId> types(entities_.size(), kNoType);
    for (const EntityRecord& rec : entities_) types[rec.id] = rec.entity_type;
    return types;
}

void GraphStore::save(const std::string& path) const {
    require_sealed();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write store file: " + path);
    BinaryWriter w(out);
    w.bytes("KGST");
    w.u32(1);  // version
    entity_dict_.save(out);
    predicate_dict_.save(out);
    literal_dict_.save(out);
    source_dict_.save(out);
    type_dict_.save(out);
    BinaryWriter w2(out);
    w2.u64(triples_.size());
    for (std::size_t i = 0; i < triples_.size(); ++i) {
        w2.u64(triples_[i].head);
        w2.u64(triples_[i].predicate);
        w2.u64(triples_[i].tail.packed());
        w2.u32(triple_source_[i]);
    }
    for (const EntityRecord& rec : entities_) {
        w2.str(rec.canonical_name);
        w2.u32(static_cast<std::uint32_t>(rec.aliases.size()));
        for (const auto& a : rec.aliases) w2.str(a);
        w2.u32(rec.entity_type);
        w2.f64(rec.popularity);
    }
    if (!out) throw IoError("short write to store file: " + path);
}

GraphStore GraphStore::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open store file: " + path);
    BinaryReader r(in, path);
    r.expect_magic("KGST");
    std::uint64_t version_at = r.offset();
    if (std::uint32_t v = r.u32(); v != 1)
        throw FormatError(path + ": unsupported store version " + std::to_string(v),
                          version_at);
    GraphStore store;
    store.entity_dict_.load(in, 0);
    store.predicate_dict_.load(in, 0);
    store.literal_dict_.load(in, 0);
    store.source_dict_.load(in, 0);
    store.type_dict_.load(in, 0);
    BinaryReader r2(in, path);
    std::uint64_t n = r2.u64();
    store.triples_.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        Triple t;
        t.head = r2.u64();
        t.predicate = r2.u64();
        t.tail = ObjectRef::unpack(r2.u64());
        store.triples_.push_back(t);
        store.triple_source_.push_back(r2.u32());
        store.triple_set_.emplace(triple_fingerprint(t),
                                  static_cast<std::uint32_t>(i));
    }
    store.entities_.resize(store.entity_dict_.size());
    for (std::uint64_t e = 0; e < store.entity_dict_.size(); ++e) {
        EntityRecord& rec = store.entities_[e];
        rec.id = e;
        rec.external_id = store.entity_dict_.token(e);
        rec.canonical_name = r2.str();
        std::uint32_t n_alias = r2.u32();
        for (std::uint32_t a = 0; a < n_alias; ++a) rec.aliases.push_back(r2.str());
        rec.entity_type = r2.u32();
        rec.popularity = r2.f64();
    }
    store.seal();
    return store;
}

}  // namespace kgf
