#pragma once

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fraudlens/dataset.hpp"
#include "fraudlens/providers.hpp"
#include "fraudlens/retrieval.hpp"

namespace fraudlens {

// ---------------------------------------------------------------------------
// Findings
// ---------------------------------------------------------------------------

struct SingleDocFinding {
    std::string subject;
    std::string risk_signal;
    std::vector<std::string> cited_chunk_ids;
};

struct SingleDocFindings {
    std::string doc_id;
    std::vector<SingleDocFinding> findings;
    bool failed = false;
};

struct PeriodObservation {
    std::string period_label;
    std::string metric_observations;
};

struct TrendFindings {
    std::string subject;
    std::vector<PeriodObservation> period_series;  // period key ascending
    std::string anomaly_notes;
    bool failed = false;
};

struct CrossCorrelation {
    std::vector<std::string> subjects;
    std::vector<std::string> periods;
    std::string rationale;
    std::vector<std::string> cited_chunk_ids;
};

struct CrossDocFindings {
    std::vector<CrossCorrelation> correlations;
};

struct EvidenceEntry {
    std::string text;
    std::vector<std::string> chunk_ids;
    bool unanchored = false;  // set when no citation survived resolution
};

struct InferredIssue {
    std::vector<std::string> report_ids;
    std::string summary;
    std::vector<EvidenceEntry> evidence;
};

struct ProvenanceRecord {
    std::string expert;   // "single_doc" | "subject_trend" | "cross_doc" | "synthesize"
    std::string target;   // doc_id or subject_id; empty for phase-2 experts
    std::string prompt_digest;
    std::string response;  // raw response, or empty on provider failure
    bool ok = false;
    std::string error;
};

struct InferredIssueSet {
    std::string case_id;
    std::vector<InferredIssue> issues;
    std::vector<ProvenanceRecord> provenance;
    std::vector<std::string> warnings;

    std::string to_json() const;
    static InferredIssueSet from_json(const std::string& text);
};

// One InferredIssueSet JSON per line.
void save_issue_sets(const std::string& path, const std::vector<InferredIssueSet>& sets);
std::vector<InferredIssueSet> load_issue_sets(const std::string& path);

// ---------------------------------------------------------------------------
// Prompt templates
// ---------------------------------------------------------------------------

// User-message templates with {{subject_list}}, {{chunks}}, {{period_series}},
// {{findings}} placeholders. The shipped prompts/ files mirror the built-in
// strings; a unit test keeps them in sync.
struct PromptTemplates {
    std::string single_doc;
    std::string subject_trend;
    std::string cross_doc;
    std::string synthesize;
    std::string repair;

    static PromptTemplates builtin();
    static PromptTemplates load(const std::string& dir);
};

inline constexpr const char* kExpertSystemPrompt =
    "You are a meticulous financial-fraud forensics expert. Always reply with a single JSON "
    "value and nothing else.";

// ---------------------------------------------------------------------------
// Prompt builders (pure; shared with the script generator)
// ---------------------------------------------------------------------------

struct AnalysisInputs {
    const CaseRecord* case_record = nullptr;
    const SubjectVocabulary* vocab = nullptr;
    const EvidenceCorpus* corpus = nullptr;
    const ChunkIndex* index = nullptr;

    void validate() const;
};

// Distinct retrieved chunk ids for one document, subjects in rank order.
std::vector<std::string> evidence_slice_for_document(const EvidenceCorpus& corpus,
                                                     const std::string& doc_id);
// All retrieved chunk ids for the case.
std::vector<std::string> evidence_chunk_ids(const EvidenceCorpus& corpus);
// Documents of the case sorted chronologically by period label.
std::vector<DocumentRef> documents_in_period_order(const CaseRecord& rec);

ChatRequest build_single_doc_request(const PromptTemplates& templates, const AnalysisInputs& in,
                                     const std::string& doc_id);
ChatRequest build_trend_request(const PromptTemplates& templates, const AnalysisInputs& in,
                                const std::string& subject_id);
ChatRequest build_cross_doc_request(const PromptTemplates& templates,
                                    const std::vector<TrendFindings>& trends);
ChatRequest build_synthesize_request(const PromptTemplates& templates,
                                     const std::vector<SingleDocFindings>& singles,
                                     const CrossDocFindings& cross);
// Original exchange plus the repair instruction.
ChatRequest build_repair_request(const PromptTemplates& templates, const ChatRequest& original,
                                 const std::string& bad_response);

// ---------------------------------------------------------------------------
// Structured-output parsing
// ---------------------------------------------------------------------------

// Extracts the first embedded JSON value (object or array) accepted by
// schema_ok, tolerating code fences and surrounding prose. Candidates are
// tried in start-position order; nested values are considered.
nlohmann::json parse_structured_output(const std::string& text,
                                       const std::function<bool(const nlohmann::json&)>& schema_ok);

bool single_doc_schema_ok(const nlohmann::json& j);
bool trend_schema_ok(const nlohmann::json& j);
bool cross_doc_schema_ok(const nlohmann::json& j);
bool issues_schema_ok(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Orchestration
// ---------------------------------------------------------------------------

struct ExpertOptions {
    int parallelism = 4;        // phase-1 bound
    int max_repair_retries = 1;

    void validate() const;
};

struct Phase1Job {
    enum class Kind { single_doc, subject_trend };
    Kind kind;
    std::string target;  // doc_id or subject_id
    ChatRequest request;
};

// The deterministic phase-1 workload: one single-doc job per case document
// with a non-empty evidence slice (case order), then one trend job per subject
// with evidence in at least one period (rank order). Failure injection and
// script generation key off this order.
std::vector<Phase1Job> plan_phase1(const AnalysisInputs& in, const PromptTemplates& templates);

// Two-phase orchestration. Phase 1 runs concurrently under opts.parallelism
// with order-stable collection; phase 2 (cross-doc aggregate, then synthesis)
// is sequential. Any subset of experts failing still yields a well-formed
// result.
InferredIssueSet analyze_case(const AnalysisInputs& in, const PromptTemplates& templates,
                              const ChatBackend& chat, const ExpertOptions& opts);

}  // namespace fraudlens
