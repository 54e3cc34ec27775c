#include "kgf/annotator.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "kgf/json_io.hpp"
#include "kgf/text.hpp"

namespace fs = std::filesystem;

namespace kgf {

void RerankWeights::validate() const {
    if (alpha < 0 || beta < 0 || delta < 0)
        throw InvalidArgument("rerank weights must be non-negative");
    if (alpha + beta + delta <= 0)
        throw InvalidArgument("rerank weights must not all be zero");
}

// --- alias table -------------------------------------------------------------

namespace {

// Canonical key for a name or surface form: folded word tokens joined by
// single spaces. Detection, candidate generation and table construction all
// normalize through this, so punctuation and whitespace differences never
// break a match.
std::string alias_key(std::string_view text) {
    std::string key;
    for (const Token& tok : tokenize(text)) {
        if (!key.empty()) key.push_back(' ');
        key += tok.folded;
    }
    return key;
}

}  // namespace

AliasTable AliasTable::build(const GraphStore& store) {
    AliasTable table;
    for (EntityId e = 0; e < store.entity_count(); ++e) {
        const EntityRecord& rec = store.entity(e);
        std::vector<std::string> keys;
        keys.push_back(alias_key(rec.canonical_name));
        for (const auto& alias : rec.aliases) keys.push_back(alias_key(alias));
        bool any = false;
        for (auto& key : keys) {
            if (key.empty()) continue;
            auto& list = table.table_[key];
            bool dup = std::any_of(list.begin(), list.end(),
                                   [&](const AliasCandidate& c) {
                                       return c.entity == e;
                                   });
            if (!dup) list.push_back({e, rec.popularity});
            any = true;
        }
        if (!any) table.skipped_unnamed_++;
    }
    for (auto& [key, list] : table.table_) {
        std::sort(list.begin(), list.end(),
                  [](const AliasCandidate& a, const AliasCandidate& b) {
                      if (a.popularity != b.popularity)
                          return a.popularity > b.popularity;
                      return a.entity < b.entity;
                  });
        std::uint32_t tokens =
            1 + static_cast<std::uint32_t>(std::count(key.begin(), key.end(), ' '));
        table.max_alias_tokens_ = std::max(table.max_alias_tokens_, tokens);
    }
    return table;
}

const std::vector<AliasCandidate>* AliasTable::lookup(
    const std::string& folded_key) const {
    auto it = table_.find(folded_key);
    return it == table_.end() ? nullptr : &it->second;
}

// --- detection ---------------------------------------------------------------

std::vector<Mention> detect_mentions(const std::string& doc_id,
                                     const std::string& text,
                                     const AliasTable& table) {
    std::vector<Mention> mentions;
    std::vector<Token> tokens = tokenize(text);
    std::size_t n = tokens.size();
    std::size_t max_span = table.max_alias_tokens();

    std::size_t i = 0;
    while (i < n) {
        std::size_t longest = std::min(max_span, n - i);
        bool matched = false;
        // longest match first; the matched region is consumed
        for (std::size_t len = longest; len >= 1; --len) {
            std::string key = tokens[i].folded;
            for (std::size_t t = 1; t < len; ++t) {
                key.push_back(' ');
                key += tokens[i + t].folded;
            }
            if (table.lookup(key) == nullptr) continue;

            Mention m;
            m.doc_id = doc_id;
            m.start = tokens[i].cp_start;
            m.end = tokens[i + len - 1].cp_end;
            m.surface = text.substr(tokens[i].byte_start,
                                    tokens[i + len - 1].byte_end -
                                        tokens[i].byte_start);
            mentions.push_back(std::move(m));
            i += len;
            matched = true;
            break;
        }
        if (!matched) ++i;
    }
    return mentions;
}

void generate_candidates(Mention& mention, const AliasTable& table,
                         std::uint32_t max_c) {
    if (max_c == 0) throw InvalidArgument("max candidates must be >= 1");
    const auto* list = table.lookup(alias_key(mention.surface));
    if (list == nullptr)
        throw NotFoundError("mention surface '" + mention.surface +
                            "' is not in the alias table (stale mention)");
    mention.candidates.clear();
    for (const AliasCandidate& c : *list) {
        mention.candidates.push_back(c.entity);
        if (mention.candidates.size() == max_c) break;
    }
}

// --- reranking ---------------------------------------------------------------

std::vector<float> comention_context(const std::vector<Mention>& mentions,
                                     std::size_t mention_index,
                                     const EmbeddingModel& model) {
    std::vector<double> sum(model.dim(), 0.0);
    std::uint64_t n = 0;
    for (std::size_t j = 0; j < mentions.size(); ++j) {
        if (j == mention_index) continue;
        if (mentions[j].candidates.size() != 1) continue;
        EntityId e = mentions[j].candidates.front();
        if (e >= model.entity_count()) continue;
        std::span<const float> row = model.entity_row(e);
        for (std::uint32_t i = 0; i < model.dim(); ++i) sum[i] += row[i];
        ++n;
    }
    if (n == 0) return {};
    std::vector<float> ctx(model.dim());
    for (std::uint32_t i = 0; i < model.dim(); ++i)
        ctx[i] = static_cast<float>(sum[i] / static_cast<double>(n));
    return ctx;
}

namespace {

double cosine(const std::vector<float>& a, std::span<const float> b) {
    if (a.empty()) return 0.0;
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0 || nb == 0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

RerankResult rerank_candidates(const Mention& mention,
                               const std::vector<float>& context,
                               const EmbeddingModel& model,
                               const GraphStore& store,
                               const RerankWeights& weights) {
    weights.validate();
    if (mention.candidates.empty())
        throw InvalidArgument("mention has no candidates to rerank");
    if (!context.empty() && context.size() != model.dim())
        throw InvalidArgument("context vector has the wrong dimension");

    double max_pop = 0;
    for (EntityId e : mention.candidates) {
        if (e >= model.entity_count())
            throw InvalidArgument("embedding model does not cover candidate " +
                                  std::to_string(e));
        max_pop = std::max(max_pop, store.entity(e).popularity);
    }
    double pop_denom = max_pop > 0 ? std::log1p(max_pop) : 0.0;

    RerankResult best;
    bool first = true;
    for (EntityId e : mention.candidates) {
        const EntityRecord& rec = store.entity(e);
        double ctx_sim = cosine(context, model.entity_row(e));
        double pop_term =
            pop_denom > 0 ? std::log1p(rec.popularity) / pop_denom : 0.0;
        double lex = lexical_similarity(mention.surface, rec.canonical_name);
        double score = weights.alpha * ctx_sim + weights.beta * pop_term +
                       weights.delta * lex;
        if (first || score > best.score ||
            (score == best.score && e < best.entity)) {
            best.entity = e;
            best.score = score;
            first = false;
        }
    }
    return best;
}

// --- documents ---------------------------------------------------------------

Annotation annotate_document(const Document& doc, const AliasTable& table,
                             const EmbeddingModel& model,
                             const GraphStore& store,
                             const AnnotatorConfig& cfg) {
    Annotation ann;
    ann.doc_id = doc.id;
    ann.content_hash = fnv1a64(doc.text);

    std::vector<Mention> mentions = detect_mentions(doc.id, doc.text, table);
    std::vector<bool> usable(mentions.size(), true);
    for (std::size_t i = 0; i < mentions.size(); ++i) {
        try {
            generate_candidates(mentions[i], table, cfg.max_candidates);
        } catch (const std::exception& ex) {
            std::cerr << "annotator: doc " << doc.id << " mention '"
                      << mentions[i].surface << "': " << ex.what() << "\n";
            usable[i] = false;
        }
    }

    for (std::size_t i = 0; i < mentions.size(); ++i) {
        if (!usable[i] || mentions[i].candidates.empty()) continue;
        try {
            std::vector<float> ctx =
                cfg.context_fn ? cfg.context_fn(doc, mentions, i, model)
                               : comention_context(mentions, i, model);
            RerankResult r =
                rerank_candidates(mentions[i], ctx, model, store, cfg.weights);
            LinkedMention lm;
            lm.start = mentions[i].start;
            lm.end = mentions[i].end;
            lm.surface = mentions[i].surface;
            lm.entity = r.entity;
            lm.type = store.entity(r.entity).entity_type;
            lm.score = r.score;
            ann.mentions.push_back(std::move(lm));
        } catch (const std::exception& ex) {
            // per-mention failure: the document is still emitted with the
            // remaining mentions
            std::cerr << "annotator: doc " << doc.id << " mention '"
                      << mentions[i].surface << "': " << ex.what() << "\n";
        }
    }
    return ann;
}

// --- corpus ------------------------------------------------------------------

namespace {

std::string read_file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot open document: " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void atomic_write(const std::string& path, const std::string& body) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write " + tmp);
        out << body;
        if (!out) throw IoError("short write to " + tmp);
    }
    fs::rename(tmp, path);
}

}  // namespace

CorpusReport annotate_corpus(const std::string& corpus_dir,
                             const std::string& state_path,
                             const std::string& output_path,
                             const AliasTable& table,
                             const EmbeddingModel& model,
                             const GraphStore& store,
                             const AnnotatorConfig& cfg, std::uint32_t workers,
                             bool reset_state) {
    if (!fs::is_directory(corpus_dir))
        throw IoError("corpus directory does not exist: " + corpus_dir);

    // prior state: doc_id -> content hash
    std::map<std::string, std::uint64_t> state;
    if (!reset_state && fs::exists(state_path)) {
        std::ifstream in(state_path);
        nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
        bool ok = !j.is_discarded() && j.is_object();
        if (ok) {
            for (auto& [key, value] : j.items()) {
                std::uint64_t h;
                if (!value.is_string() || !from_hex64(value.get<std::string>(), h)) {
                    ok = false;
                    break;
                }
                state[key] = h;
            }
        }
        if (!ok)
            throw FormatError("annotation state file is corrupt (" + state_path +
                                  "); re-run with --reset-state",
                              0);
    }

    // previous output lines by doc_id, carried over for unchanged documents
    std::map<std::string, std::string> old_lines;
    if (fs::exists(output_path)) {
        std::ifstream in(output_path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.contains("doc_id")) continue;
            old_lines[j["doc_id"].get<std::string>()] = line;
        }
    }

    struct Entry {
        std::string doc_id;
        fs::path path;
        std::uint64_t hash;
        bool changed;
    };
    std::vector<Entry> docs;
    for (const auto& item : fs::directory_iterator(corpus_dir)) {
        if (!item.is_regular_file() || item.path().extension() != ".txt") continue;
        Entry e;
        e.doc_id = item.path().stem().string();
        e.path = item.path();
        docs.push_back(std::move(e));
    }
    std::sort(docs.begin(), docs.end(),
              [](const Entry& a, const Entry& b) { return a.doc_id < b.doc_id; });

    CorpusReport report;
    std::vector<std::size_t> work;  // indexes of docs to (re)annotate
    std::vector<std::string> texts(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        texts[i] = read_file_bytes(docs[i].path);
        docs[i].hash = fnv1a64(texts[i]);
        auto it = state.find(docs[i].doc_id);
        bool unchanged = it != state.end() && it->second == docs[i].hash &&
                         old_lines.count(docs[i].doc_id);
        docs[i].changed = !unchanged;
        if (unchanged) ++report.skipped;
        else work.push_back(i);
    }
    std::set<std::string> present;
    for (const Entry& e : docs) present.insert(e.doc_id);
    for (const auto& [doc_id, h] : state)
        if (!present.count(doc_id)) ++report.removed;

    // (re)annotate changed documents; documents are independent work units
    std::vector<std::string> new_lines(docs.size());
    auto run_range = [&](std::size_t from, std::size_t to) {
        for (std::size_t w = from; w < to; ++w) {
            std::size_t i = work[w];
            Document doc{docs[i].doc_id, texts[i]};
            Annotation ann = annotate_document(doc, table, model, store, cfg);
            new_lines[i] = annotation_line(ann, store);
        }
    };
    if (workers <= 1 || work.size() < 2) {
        run_range(0, work.size());
    } else {
        std::uint32_t n_threads =
            std::min<std::uint32_t>(workers, static_cast<std::uint32_t>(work.size()));
        std::vector<std::thread> pool;
        std::size_t chunk = (work.size() + n_threads - 1) / n_threads;
        for (std::uint32_t t = 0; t < n_threads; ++t) {
            std::size_t from = t * chunk;
            std::size_t to = std::min(work.size(), from + chunk);
            if (from < to) pool.emplace_back(run_range, from, to);
        }
        for (auto& th : pool) th.join();
    }
    report.annotated = work.size();
    report.documents_processed = work.size();

    // output sorted by doc_id: unchanged lines byte-identical, changed fresh
    std::string body;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        body += docs[i].changed ? new_lines[i] : old_lines[docs[i].doc_id];
        body += '\n';
    }
    atomic_write(output_path, body);

    // new state holds exactly the present documents
    OrderedJson st;
    for (const Entry& e : docs) st[e.doc_id] = to_hex64(e.hash);
    atomic_write(state_path, st.dump(2) + "\n");

    return report;
}

}  // namespace kgf
