#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fraudlens/dataset.hpp"
#include "fraudlens/docstore.hpp"
#include "fraudlens/providers.hpp"

namespace fraudlens {

// ---------------------------------------------------------------------------
// Query expansion
// ---------------------------------------------------------------------------

struct QueryVariantSet {
    std::string subject_id;
    std::vector<std::string> variants;  // canonical surface form first
};

class QueryExpander {
public:
    virtual ~QueryExpander() = default;
    // Returns surface forms for the subject, canonical form first. May throw
    // (provider-backed expanders); expand_queries handles the fallback.
    virtual std::vector<std::string> expand(const SubjectInfo& subject) = 0;
};

// Offline default: reads the static domain lexicon.
class LexiconQueryExpander : public QueryExpander {
public:
    explicit LexiconQueryExpander(SubjectLexicon lexicon) : lexicon_(std::move(lexicon)) {}
    std::vector<std::string> expand(const SubjectInfo& subject) override;

private:
    SubjectLexicon lexicon_;
};

// Provider-backed synonym expansion; asks the chat provider for a JSON array
// of query variants.
class ProviderQueryExpander : public QueryExpander {
public:
    explicit ProviderQueryExpander(const ChatProvider& provider) : provider_(provider) {}
    std::vector<std::string> expand(const SubjectInfo& subject) override;

private:
    const ChatProvider& provider_;
};

// Canonical form plus up to max_variants expansions, case-insensitively
// deduplicated, order-stable. Expander failure falls back to the static
// lexicon (`fallback`, or the built-in one when null) and records a warning.
QueryVariantSet expand_queries(const SubjectInfo& subject, QueryExpander& expander,
                               std::size_t max_variants = 5,
                               const SubjectLexicon* fallback = nullptr,
                               std::vector<std::string>* warnings = nullptr);

// ---------------------------------------------------------------------------
// Chunk index
// ---------------------------------------------------------------------------

class ChunkIndex {
public:
    ChunkIndex() = default;

    const std::vector<Chunk>& chunks() const { return chunks_; }
    const Chunk* find_chunk(const std::string& chunk_id) const;
    // Distinct doc_ids in first-appearance order.
    const std::vector<std::string>& document_ids() const { return doc_ids_; }

    std::size_t dims() const { return dims_; }
    const std::string& provider_fingerprint() const { return fingerprint_; }
    // Row-major embedding matrix, chunks_.size() x dims_.
    const std::vector<float>& vectors() const { return vectors_; }

    const std::map<std::string, std::uint32_t>& document_frequency() const { return df_; }
    double average_length() const { return avg_len_; }
    const std::vector<std::map<std::string, std::uint32_t>>& term_counts() const {
        return term_counts_;
    }
    const std::vector<std::uint32_t>& lengths() const { return lengths_; }

private:
    friend ChunkIndex build_index(std::vector<Chunk> chunks, const EmbedProvider& provider);
    friend ChunkIndex load_index(const std::string& dir);

    void rebuild_lexical();
    void rebuild_doc_ids();

    std::vector<Chunk> chunks_;
    std::vector<std::string> doc_ids_;
    std::map<std::string, std::size_t> by_id_;
    std::vector<std::map<std::string, std::uint32_t>> term_counts_;
    std::vector<std::uint32_t> lengths_;
    std::map<std::string, std::uint32_t> df_;
    double avg_len_ = 0.0;
    std::vector<float> vectors_;
    std::size_t dims_ = 0;
    std::string fingerprint_;
};

ChunkIndex build_index(std::vector<Chunk> chunks, const EmbedProvider& provider);

// Directory layout: chunks.jsonl, lexical.json, vectors.bin (JSON header line
// with count/dims/fingerprint, then row-major little-endian float32).
void save_index(const std::string& dir, const ChunkIndex& index);
ChunkIndex load_index(const std::string& dir);

// ---------------------------------------------------------------------------
// Search
// ---------------------------------------------------------------------------

enum class Route { sparse, dense, fused };
std::string to_string(Route route);

struct ScoredChunk {
    std::string chunk_id;
    double score = 0.0;
    Route route = Route::fused;
    int rank = 0;  // 1-based within its result list
};

inline constexpr double kBm25K1 = 1.2;
inline constexpr double kBm25B = 0.75;

// BM25 over the index; zero-score chunks are filtered; ties broken by
// chunk_id. doc_filter restricts candidates to one document (corpus-level
// statistics still apply).
std::vector<ScoredChunk> sparse_search(const ChunkIndex& index, const std::string& query,
                                       std::size_t n, const std::string* doc_filter = nullptr);

// Cosine similarity between the query embedding and every chunk embedding;
// requires the provider fingerprint recorded at build time.
std::vector<ScoredChunk> dense_search(const ChunkIndex& index, const std::string& query,
                                      const EmbedProvider& provider, std::size_t n,
                                      const std::string* doc_filter = nullptr);

struct FuseParams {
    double k_rrf = 60.0;
    double notes_boost = 1.25;
};

// Reciprocal-rank fusion over the given result lists, then the notes-section
// boost for chunks tagged with subject_id. Rank-only: raw scores are ignored.
std::vector<ScoredChunk> fuse(const ChunkIndex& index, const std::string& subject_id,
                              const std::vector<std::vector<ScoredChunk>>& lists,
                              const FuseParams& params, std::size_t n);

// ---------------------------------------------------------------------------
// Subject-level retrieval
// ---------------------------------------------------------------------------

struct RetrievalConfig {
    std::size_t top_k_subjects = 15;
    std::size_t top_n = 8;          // per (subject, document)
    std::size_t route_depth = 20;   // per-route candidate depth
    std::size_t max_variants = 5;
    double notes_boost = 1.25;
    double k_rrf = 60.0;

    void validate() const;
};

struct RetrievedChunk {
    std::string chunk_id;
    std::string doc_id;
    double score = 0.0;  // fused
};

struct SubjectEvidence {
    std::string subject_id;
    std::vector<std::string> variants;
    // doc_id -> fused top-n, documents in index order.
    std::vector<std::pair<std::string, std::vector<RetrievedChunk>>> by_document;
};

struct EvidenceCorpus {
    std::string case_id;  // set by the pipeline when retrieval is case-scoped
    RetrievalConfig config;
    std::vector<SubjectEvidence> subjects;  // ordered by subject rank
    std::vector<std::string> warnings;

    std::string to_json() const;
    static EvidenceCorpus from_json(const std::string& text);
};

// subject_ids come ranked (rank_subjects output order). Per-subject failures
// isolate: the subject is skipped with a warning and the rest complete.
// doc_ids restricts retrieval to those documents (null = every indexed one).
EvidenceCorpus retrieve_for_subjects(const ChunkIndex& index,
                                     const std::vector<std::string>& subject_ids,
                                     const SubjectVocabulary& vocab, QueryExpander& expander,
                                     const EmbedProvider& embed_provider,
                                     const RetrievalConfig& cfg,
                                     const std::vector<std::string>* doc_ids = nullptr);

void save_corpus(const std::string& path, const EvidenceCorpus& corpus);
EvidenceCorpus load_corpus(const std::string& path);

}  // namespace fraudlens
