#pragma once

// Mention detection, candidate generation and contextual reranking over a
// document corpus.
//
// Detection is a left-to-right longest-match scan over word tokens against
// the alias table; matching is case-insensitive on folded text while spans
// index code points of and surfaces slice the original document. Reranking
// scores each candidate as
//
//   alpha * cosine(context, e_cand)
//   + beta * log(1+pop) / log(1+max pop among candidates)
//   + delta * lexical(surface, canonical_name)
//
// where the context vector is the mean embedding of the document's
// unambiguous co-mentions (zero vector when there are none, and cosine with
// a zero vector is 0). The context computation is pluggable so a learned
// text encoder can replace co-mention averaging.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgf/graph_store.hpp"
#include "kgf/model.hpp"
#include "kgf/types.hpp"

namespace kgf {

struct AliasCandidate {
    EntityId entity = 0;
    double popularity = 0.0;
};

class AliasTable {
public:
    static AliasTable build(const GraphStore& store);

    // Candidates sorted popularity desc, entity id asc; nullptr when absent.
    const std::vector<AliasCandidate>* lookup(const std::string& folded_key) const;

    std::size_t size() const { return table_.size(); }
    std::uint32_t max_alias_tokens() const { return max_alias_tokens_; }
    std::uint64_t skipped_unnamed() const { return skipped_unnamed_; }

private:
    std::unordered_map<std::string, std::vector<AliasCandidate>> table_;
    std::uint32_t max_alias_tokens_ = 0;
    std::uint64_t skipped_unnamed_ = 0;
};

struct Mention {
    std::string doc_id;
    std::uint64_t start = 0, end = 0;  // code points, [start, end)
    std::string surface;               // exact document slice
    std::vector<EntityId> candidates;  // popularity order
};

struct LinkedMention {
    std::uint64_t start = 0, end = 0;
    std::string surface;
    EntityId entity = 0;
    TypeId type = kNoType;
    double score = 0.0;
};

struct Annotation {
    std::string doc_id;
    std::uint64_t content_hash = 0;
    std::vector<LinkedMention> mentions;
};

struct RerankWeights {
    double alpha = 1.0;
    double beta = 0.3;
    double delta = 0.2;

    void validate() const;
};

struct Document {
    std::string id;
    std::string text;
};

using ContextVectorFn = std::function<std::vector<float>(
    const Document& doc, const std::vector<Mention>& mentions,
    std::size_t mention_index, const EmbeddingModel& model)>;

struct AnnotatorConfig {
    RerankWeights weights;
    std::uint32_t max_candidates = 8;
    ContextVectorFn context_fn;  // empty = unambiguous co-mention mean
};

std::vector<Mention> detect_mentions(const std::string& doc_id,
                                     const std::string& text,
                                     const AliasTable& table);

// Fills mention.candidates with the top max_c alias entries.
void generate_candidates(Mention& mention, const AliasTable& table,
                         std::uint32_t max_c);

struct RerankResult {
    EntityId entity = 0;
    double score = 0.0;
};

RerankResult rerank_candidates(const Mention& mention,
                               const std::vector<float>& context,
                               const EmbeddingModel& model,
                               const GraphStore& store,
                               const RerankWeights& weights);

// The default context: mean embedding of unambiguous co-mentions (candidate
// list of size one), excluding the mention itself.
std::vector<float> comention_context(const std::vector<Mention>& mentions,
                                     std::size_t mention_index,
                                     const EmbeddingModel& model);

Annotation annotate_document(const Document& doc, const AliasTable& table,
                             const EmbeddingModel& model,
                             const GraphStore& store,
                             const AnnotatorConfig& cfg);

struct CorpusReport {
    std::uint64_t annotated = 0;
    std::uint64_t skipped = 0;
    std::uint64_t removed = 0;
    // Instrumented work counter: documents that went through the full
    // detection/reranking pipeline this run.
    std::uint64_t documents_processed = 0;
};

// Incremental annotation of a directory of .txt files (file stem = doc_id).
// Documents whose content hash matches the state file are skipped and their
// previous annotation lines carried over byte-identically; removed documents
// leave the state. Output is JSONL sorted by doc_id. A corrupt state file is
// an error unless reset_state is set.
CorpusReport annotate_corpus(const std::string& corpus_dir,
                             const std::string& state_path,
                             const std::string& output_path,
                             const AliasTable& table,
                             const EmbeddingModel& model,
                             const GraphStore& store,
                             const AnnotatorConfig& cfg,
                             std::uint32_t workers = 1,
                             bool reset_state = false);

}  // namespace kgf
