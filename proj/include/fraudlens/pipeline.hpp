#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fraudlens/dataset.hpp"
#include "fraudlens/experts.hpp"
#include "fraudlens/metrics.hpp"
#include "fraudlens/prior.hpp"
#include "fraudlens/providers.hpp"
#include "fraudlens/retrieval.hpp"
#include "fraudlens/scriptgen.hpp"
#include "fraudlens/synth.hpp"

namespace fraudlens {

// Everything a stage needs, loadable from a JSON file and overridable by CLI
// flags. Empty path fields fall back to the out_dir artifact written by the
// producing stage, so chained subcommands work with only --out-dir.
struct PipelineConfig {
    std::uint64_t seed = 42;
    std::string out_dir = "out";

    std::string cases_path;    // cases.ndjson (gold cases + document refs)
    std::string docs_dir;      // overrides per-document relative paths
    std::string vocab_path;    // subject vocabulary (empty = built-in)
    std::string index_dir;     // persisted chunk index
    std::string prior_path;    // fitted prior estimates
    std::string prompts_dir;   // expert prompt templates (empty = built-in)
    std::string scripts_path;  // scripted chat responses

    SynthSpec synth;
    Hyperparams prior;
    FitOptions fit;
    RetrievalConfig retrieval;
    ExpertOptions experts;
    ProviderConfig chat_provider;   // default: scripted
    ProviderConfig embed_provider;  // default: hashed_embed
    MatcherConfig matcher;

    bool no_prior = false;      // retrieve over the full vocabulary
    bool offline = false;       // reject http provider kinds
    double fail_fraction = 0.0; // make-scripts failure injection

    PipelineConfig() { embed_provider.kind = ProviderKind::hashed_embed; }

    static PipelineConfig load(const std::string& path);
    std::string to_json() const;
    void validate() const;

    // Effective artifact locations after the out_dir fallback.
    std::string cases_file() const;
    std::string prior_file() const;
    std::string index_directory() const;
    std::string corpus_directory() const;
    std::string scripts_file() const;
    std::string issues_file() const;
    std::string report_file() const;
};

// Writes config.resolved.json under cfg.out_dir; every stage calls this so
// each output directory records how it was produced.
void write_config_snapshot(const PipelineConfig& cfg);

// Stage entry points. Each validates, loads its inputs, writes its artifacts
// under cfg.out_dir, and logs a one-line summary.
SynthResult run_synth(const PipelineConfig& cfg, std::ostream& log);
PriorEstimates run_fit_prior(const PipelineConfig& cfg, std::ostream& log);
void run_rank_subjects(const PipelineConfig& cfg, std::size_t top_k, std::size_t top_m,
                       std::ostream& log);
ChunkIndex run_index(const PipelineConfig& cfg, std::ostream& log);
std::vector<EvidenceCorpus> run_retrieve(const PipelineConfig& cfg, std::ostream& log);
GeneratedScripts run_make_scripts(const PipelineConfig& cfg, std::ostream& log);
std::vector<InferredIssueSet> run_analyze(const PipelineConfig& cfg, std::ostream& log);
RecallReport run_evaluate(const PipelineConfig& cfg, std::ostream& log);
RecallReport run_all(const PipelineConfig& cfg, std::ostream& log);

}  // namespace fraudlens
