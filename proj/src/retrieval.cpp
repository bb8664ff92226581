#include "fraudlens/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "fraudlens/errors.hpp"
#include "fraudlens/text.hpp"

namespace fraudlens {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Query expansion
// ---------------------------------------------------------------------------

std::vector<std::string> LexiconQueryExpander::expand(const SubjectInfo& subject) {
    if (const auto* forms = lexicon_.forms(subject.id)) return *forms;
    return {subject.name};
}

std::vector<std::string> ProviderQueryExpander::expand(const SubjectInfo& subject) {
    ChatRequest req;
    req.messages.push_back(
        {"system",
         "You expand accounting subjects into retrieval query variants. Reply with a JSON "
         "array of short strings only."});
    req.messages.push_back({"user", "Subject: " + subject.name});
    const std::string response = provider_.chat(req);
    json j;
    try {
        j = json::parse(response);
    } catch (const json::exception& e) {
        throw ProviderError(std::string("expansion response is not JSON: ") + e.what());
    }
    if (!j.is_array()) throw ProviderError("expansion response is not a JSON array");
    std::vector<std::string> out{subject.name};
    for (const auto& v : j) {
        if (v.is_string()) out.push_back(v.get<std::string>());
    }
    return out;
}

QueryVariantSet expand_queries(const SubjectInfo& subject, QueryExpander& expander,
                               std::size_t max_variants, const SubjectLexicon* fallback,
                               std::vector<std::string>* warnings) {
    std::vector<std::string> raw;
    try {
        raw = expander.expand(subject);
    } catch (const std::exception& e) {
        if (warnings != nullptr) {
            warnings->push_back("query expansion for \"" + subject.id + "\" failed (" + e.what() +
                                "); using the static lexicon");
        }
        SubjectLexicon builtin;
        const SubjectLexicon* lex = fallback;
        if (lex == nullptr) {
            builtin = default_lexicon();
            lex = &builtin;
        }
        LexiconQueryExpander fallback_expander(*lex);
        raw = fallback_expander.expand(subject);
    }

    QueryVariantSet out;
    out.subject_id = subject.id;
    const std::string canonical = raw.empty() ? subject.name : raw.front();
    std::set<std::string> seen;
    auto push_unique = [&](const std::string& form) {
        if (out.variants.size() > max_variants) return;  // canonical + max_variants expansions
        const std::string key = to_lower_ascii(trim(form));
        if (key.empty() || !seen.insert(key).second) return;
        out.variants.push_back(trim(form));
    };
    push_unique(canonical);
    for (const auto& form : raw) push_unique(form);
    return out;
}

// ---------------------------------------------------------------------------
// ChunkIndex
// ---------------------------------------------------------------------------

const Chunk* ChunkIndex::find_chunk(const std::string& chunk_id) const {
    auto it = by_id_.find(chunk_id);
    if (it == by_id_.end()) return nullptr;
    return &chunks_[it->second];
}

void ChunkIndex::rebuild_lexical() {
    by_id_.clear();
    term_counts_.assign(chunks_.size(), {});
    lengths_.assign(chunks_.size(), 0);
    df_.clear();
    for (std::size_t i = 0; i < chunks_.size(); ++i) {
        if (!by_id_.emplace(chunks_[i].chunk_id, i).second) {
            throw ValidationError("duplicate chunk_id in index: " + chunks_[i].chunk_id);
        }
        const auto tokens = tokenize(chunks_[i].text);
        lengths_[i] = static_cast<std::uint32_t>(tokens.size());
        for (const auto& t : tokens) ++term_counts_[i][t];
        for (const auto& [term, count] : term_counts_[i]) ++df_[term];
    }
    std::uint64_t total = 0;
    for (auto len : lengths_) total += len;
    avg_len_ = chunks_.empty() ? 0.0 : static_cast<double>(total) / chunks_.size();
}

void ChunkIndex::rebuild_doc_ids() {
    doc_ids_.clear();
    std::set<std::string> seen;
    for (const auto& c : chunks_) {
        if (seen.insert(c.doc_id).second) doc_ids_.push_back(c.doc_id);
    }
}

ChunkIndex build_index(std::vector<Chunk> chunks, const EmbedProvider& provider) {
    ChunkIndex index;
    index.chunks_ = std::move(chunks);
    index.rebuild_lexical();
    index.rebuild_doc_ids();
    index.fingerprint_ = provider.fingerprint();
    index.dims_ = provider.dimensions();

    constexpr std::size_t kBatch = 64;
    for (std::size_t begin = 0; begin < index.chunks_.size(); begin += kBatch) {
        const std::size_t end = std::min(begin + kBatch, index.chunks_.size());
        std::vector<std::string> texts;
        texts.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i) texts.push_back(index.chunks_[i].text);
        const auto vectors = provider.embed(texts);
        for (const auto& v : vectors) {
            if (index.dims_ == 0) index.dims_ = v.size();
            if (v.size() != index.dims_) {
                throw ProviderError("embedding dimensionality mismatch across batches");
            }
            for (double x : v) index.vectors_.push_back(static_cast<float>(x));
        }
    }
    return index;
}

void save_index(const std::string& dir, const ChunkIndex& index) {
    fs::create_directories(dir);
    save_chunks((fs::path(dir) / "chunks.jsonl").string(), index.chunks());

    json lex{{"df", index.document_frequency()},
             {"avg_len", index.average_length()},
             {"n_chunks", index.chunks().size()}};
    std::ofstream lex_out(fs::path(dir) / "lexical.json");
    if (!lex_out) throw ValidationError("cannot write lexical.json in " + dir);
    lex_out << lex.dump(2) << "\n";

    std::ofstream vec_out(fs::path(dir) / "vectors.bin", std::ios::binary);
    if (!vec_out) throw ValidationError("cannot write vectors.bin in " + dir);
    json header{{"count", index.chunks().size()},
                {"dims", index.dims()},
                {"fingerprint", index.provider_fingerprint()}};
    vec_out << header.dump() << "\n";
    static_assert(sizeof(float) == 4);
    if (!index.vectors().empty()) {
        vec_out.write(reinterpret_cast<const char*>(index.vectors().data()),
                      static_cast<std::streamsize>(index.vectors().size() * sizeof(float)));
    }
}

ChunkIndex load_index(const std::string& dir) {
    ChunkIndex index;
    index.chunks_ = load_chunks((fs::path(dir) / "chunks.jsonl").string());
    index.rebuild_lexical();
    index.rebuild_doc_ids();

    std::ifstream lex_in(fs::path(dir) / "lexical.json");
    if (!lex_in) throw ValidationError("cannot open lexical.json in " + dir);
    json lex;
    try {
        lex_in >> lex;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed lexical.json: ") + e.what());
    }
    const auto df = lex.at("df").get<std::map<std::string, std::uint32_t>>();
    if (df != index.df_) {
        throw ValidationError("lexical.json df table is inconsistent with chunk texts in " + dir);
    }

    std::ifstream vec_in(fs::path(dir) / "vectors.bin", std::ios::binary);
    if (!vec_in) throw ValidationError("cannot open vectors.bin in " + dir);
    std::string header_line;
    if (!std::getline(vec_in, header_line)) throw ParseError("vectors.bin missing header line");
    json header;
    try {
        header = json::parse(header_line);
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed vectors.bin header: ") + e.what());
    }
    const auto count = header.at("count").get<std::size_t>();
    index.dims_ = header.at("dims").get<std::size_t>();
    index.fingerprint_ = header.at("fingerprint").get<std::string>();
    if (count != index.chunks_.size()) {
        throw ValidationError("vectors.bin count does not match chunks.jsonl");
    }
    index.vectors_.resize(count * index.dims_);
    if (!index.vectors_.empty()) {
        vec_in.read(reinterpret_cast<char*>(index.vectors_.data()),
                    static_cast<std::streamsize>(index.vectors_.size() * sizeof(float)));
        if (vec_in.gcount() !=
            static_cast<std::streamsize>(index.vectors_.size() * sizeof(float))) {
            throw ParseError("vectors.bin truncated");
        }
    }
    return index;
}

// ---------------------------------------------------------------------------
// Search
// ---------------------------------------------------------------------------

std::string to_string(Route route) {
    switch (route) {
        case Route::sparse: return "sparse";
        case Route::dense: return "dense";
        case Route::fused: return "fused";
    }
    throw ValidationError("unknown route");
}

namespace {

// Sort by score descending, ties by chunk_id ascending; truncate; assign
// 1-based ranks.
void finalize_results(std::vector<ScoredChunk>& results, std::size_t n) {
    std::sort(results.begin(), results.end(), [](const ScoredChunk& a, const ScoredChunk& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.chunk_id < b.chunk_id;
    });
    if (results.size() > n) results.resize(n);
    for (std::size_t i = 0; i < results.size(); ++i) results[i].rank = static_cast<int>(i + 1);
}

}  // namespace

std::vector<ScoredChunk> sparse_search(const ChunkIndex& index, const std::string& query,
                                       std::size_t n, const std::string* doc_filter) {
    if (n < 1) throw ValidationError("sparse_search: n must be >= 1");
    // Unique query terms in first-occurrence order.
    std::vector<std::string> terms;
    std::set<std::string> seen;
    for (const auto& t : tokenize(query)) {
        if (seen.insert(t).second) terms.push_back(t);
    }

    const double n_chunks = static_cast<double>(index.chunks().size());
    const double avg_len = index.average_length();
    std::vector<ScoredChunk> results;
    for (std::size_t i = 0; i < index.chunks().size(); ++i) {
        const Chunk& chunk = index.chunks()[i];
        if (doc_filter != nullptr && chunk.doc_id != *doc_filter) continue;
        const auto& counts = index.term_counts()[i];
        double score = 0.0;
        for (const auto& term : terms) {
            auto it = counts.find(term);
            if (it == counts.end()) continue;
            const double f = it->second;
            const auto df_it = index.document_frequency().find(term);
            const double df = df_it == index.document_frequency().end() ? 0.0 : df_it->second;
            const double idf = std::log((n_chunks - df + 0.5) / (df + 0.5) + 1.0);
            const double norm_len = avg_len > 0.0 ? index.lengths()[i] / avg_len : 1.0;
            score += idf * f * (kBm25K1 + 1.0) / (f + kBm25K1 * (1.0 - kBm25B + kBm25B * norm_len));
        }
        if (score > 0.0) results.push_back({chunk.chunk_id, score, Route::sparse, 0});
    }
    finalize_results(results, n);
    return results;
}

std::vector<ScoredChunk> dense_search(const ChunkIndex& index, const std::string& query,
                                      const EmbedProvider& provider, std::size_t n,
                                      const std::string* doc_filter) {
    if (n < 1) throw ValidationError("dense_search: n must be >= 1");
    if (provider.fingerprint() != index.provider_fingerprint()) {
        throw ConfigError("embedding provider fingerprint " + provider.fingerprint() +
                          " does not match index fingerprint " + index.provider_fingerprint());
    }
    if (index.chunks().empty()) return {};
    const auto query_vec = provider.embed({query}).front();
    if (query_vec.size() != index.dims()) {
        throw ProviderError("query embedding dimensionality does not match index");
    }

    double q_norm = 0.0;
    for (double x : query_vec) q_norm += x * x;
    q_norm = std::sqrt(q_norm);

    std::vector<ScoredChunk> results;
    for (std::size_t i = 0; i < index.chunks().size(); ++i) {
        const Chunk& chunk = index.chunks()[i];
        if (doc_filter != nullptr && chunk.doc_id != *doc_filter) continue;
        const float* row = index.vectors().data() + i * index.dims();
        double dot = 0.0, c_norm = 0.0;
        for (std::size_t d = 0; d < index.dims(); ++d) {
            dot += query_vec[d] * row[d];
            c_norm += static_cast<double>(row[d]) * row[d];
        }
        c_norm = std::sqrt(c_norm);
        const double sim = (q_norm == 0.0 || c_norm == 0.0) ? 0.0 : dot / (q_norm * c_norm);
        results.push_back({chunk.chunk_id, sim, Route::dense, 0});
    }
    finalize_results(results, n);
    return results;
}

std::vector<ScoredChunk> fuse(const ChunkIndex& index, const std::string& subject_id,
                              const std::vector<std::vector<ScoredChunk>>& lists,
                              const FuseParams& params, std::size_t n) {
    if (n < 1) throw ValidationError("fuse: n must be >= 1");
    std::map<std::string, double> fused;
    for (const auto& list : lists) {
        for (const auto& sc : list) {
            fused[sc.chunk_id] += 1.0 / (params.k_rrf + sc.rank);
        }
    }
    std::vector<ScoredChunk> results;
    results.reserve(fused.size());
    for (const auto& [chunk_id, score] : fused) {
        double final_score = score;
        const Chunk* chunk = index.find_chunk(chunk_id);
        if (chunk != nullptr && chunk->notes_flag &&
            std::find(chunk->subject_tags.begin(), chunk->subject_tags.end(), subject_id) !=
                chunk->subject_tags.end()) {
            final_score *= params.notes_boost;
        }
        results.push_back({chunk_id, final_score, Route::fused, 0});
    }
    finalize_results(results, n);
    return results;
}

// ---------------------------------------------------------------------------
// Subject-level retrieval
// ---------------------------------------------------------------------------

void RetrievalConfig::validate() const {
    if (top_k_subjects < 1) throw ValidationError("top_k_subjects must be >= 1");
    if (top_n < 1) throw ValidationError("top_n must be >= 1");
    if (route_depth < 1) throw ValidationError("route_depth must be >= 1");
    if (!(notes_boost > 0.0)) throw ValidationError("notes_boost must be positive");
    if (!(k_rrf > 0.0)) throw ValidationError("k_rrf must be positive");
}

EvidenceCorpus retrieve_for_subjects(const ChunkIndex& index,
                                     const std::vector<std::string>& subject_ids,
                                     const SubjectVocabulary& vocab, QueryExpander& expander,
                                     const EmbedProvider& embed_provider,
                                     const RetrievalConfig& cfg,
                                     const std::vector<std::string>* doc_ids) {
    cfg.validate();
    EvidenceCorpus corpus;
    corpus.config = cfg;
    const FuseParams fuse_params{cfg.k_rrf, cfg.notes_boost};
    const std::vector<std::string>& documents =
        doc_ids != nullptr ? *doc_ids : index.document_ids();

    for (const auto& subject_id : subject_ids) {
        try {
            const auto idx = vocab.index_of(subject_id);
            if (!idx) throw ValidationError("unknown subject id \"" + subject_id + "\"");
            const SubjectInfo& subject = vocab.at(*idx);

            SubjectEvidence evidence;
            evidence.subject_id = subject_id;
            const QueryVariantSet variants = expand_queries(subject, expander, cfg.max_variants,
                                                            nullptr, &corpus.warnings);
            evidence.variants = variants.variants;

            for (const auto& doc_id : documents) {
                std::vector<std::vector<ScoredChunk>> lists;
                for (const auto& variant : variants.variants) {
                    auto sparse = sparse_search(index, variant, cfg.route_depth, &doc_id);
                    if (!sparse.empty()) lists.push_back(std::move(sparse));
                    auto dense = dense_search(index, variant, embed_provider, cfg.route_depth,
                                              &doc_id);
                    if (!dense.empty()) lists.push_back(std::move(dense));
                }
                const auto fused = fuse(index, subject_id, lists, fuse_params,
                                        std::max(cfg.top_n, std::size_t{1}));
                std::vector<RetrievedChunk> chunks;
                for (const auto& sc : fused) {
                    if (chunks.size() >= cfg.top_n) break;
                    chunks.push_back({sc.chunk_id, doc_id, sc.score});
                }
                evidence.by_document.emplace_back(doc_id, std::move(chunks));
            }
            corpus.subjects.push_back(std::move(evidence));
        } catch (const std::exception& e) {
            corpus.warnings.push_back("retrieval for subject \"" + subject_id +
                                      "\" failed: " + e.what());
        }
    }
    return corpus;
}

// ---------------------------------------------------------------------------
// EvidenceCorpus persistence
// ---------------------------------------------------------------------------

std::string EvidenceCorpus::to_json() const {
    json subjects_json = json::array();
    for (const auto& s : subjects) {
        json docs = json::array();
        for (const auto& [doc_id, chunks] : s.by_document) {
            json rows = json::array();
            for (const auto& c : chunks) {
                rows.push_back(json{{"chunk_id", c.chunk_id}, {"score", c.score}});
            }
            docs.push_back(json{{"doc_id", doc_id}, {"chunks", rows}});
        }
        subjects_json.push_back(json{
            {"subject_id", s.subject_id}, {"variants", s.variants}, {"documents", docs}});
    }
    json j{{"case_id", case_id},
           {"config",
            {{"top_k_subjects", config.top_k_subjects},
             {"top_n", config.top_n},
             {"route_depth", config.route_depth},
             {"max_variants", config.max_variants},
             {"notes_boost", config.notes_boost},
             {"k_rrf", config.k_rrf}}},
           {"subjects", subjects_json},
           {"warnings", warnings}};
    return j.dump(2);
}

EvidenceCorpus EvidenceCorpus::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed evidence corpus JSON: ") + e.what());
    }
    EvidenceCorpus corpus;
    try {
        corpus.case_id = j.value("case_id", std::string());
        const auto& cfg = j.at("config");
        corpus.config.top_k_subjects = cfg.at("top_k_subjects").get<std::size_t>();
        corpus.config.top_n = cfg.at("top_n").get<std::size_t>();
        corpus.config.route_depth = cfg.at("route_depth").get<std::size_t>();
        corpus.config.max_variants = cfg.at("max_variants").get<std::size_t>();
        corpus.config.notes_boost = cfg.at("notes_boost").get<double>();
        corpus.config.k_rrf = cfg.at("k_rrf").get<double>();
        for (const auto& s : j.at("subjects")) {
            SubjectEvidence evidence;
            evidence.subject_id = s.at("subject_id").get<std::string>();
            evidence.variants = s.at("variants").get<std::vector<std::string>>();
            for (const auto& d : s.at("documents")) {
                std::vector<RetrievedChunk> chunks;
                for (const auto& c : d.at("chunks")) {
                    chunks.push_back({c.at("chunk_id").get<std::string>(),
                                      d.at("doc_id").get<std::string>(),
                                      c.at("score").get<double>()});
                }
                evidence.by_document.emplace_back(d.at("doc_id").get<std::string>(),
                                                  std::move(chunks));
            }
            corpus.subjects.push_back(std::move(evidence));
        }
        corpus.warnings = j.value("warnings", std::vector<std::string>{});
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid evidence corpus JSON: ") + e.what());
    }
    return corpus;
}

void save_corpus(const std::string& path, const EvidenceCorpus& corpus) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write evidence corpus: " + path);
    out << corpus.to_json() << "\n";
}

EvidenceCorpus load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open evidence corpus: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return EvidenceCorpus::from_json(text);
}

}  // namespace fraudlens
