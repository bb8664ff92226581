#pragma once

#include <cstddef>
#include <map>
#include <mutex>
#include <set>
#include <string>

#include "fraudlens/experts.hpp"
#include "fraudlens/providers.hpp"

namespace fraudlens {

// Deterministic stand-in for a live chat model. It answers each expert prompt
// from the case's gold annotations (grounded in the retrieved chunks) and
// records every exchange as digest -> response, so a later run can replay the
// conversation through a scripted provider. Thread-safe: analyze_case calls
// chat() from its phase-1 worker pool.
class OracleBackend : public ChatBackend {
public:
    // `failing_digests` simulates provider outages: chat() throws a
    // ProviderError for those requests and records nothing, which matches a
    // scripted replay where the digest is simply absent from the store.
    OracleBackend(const AnalysisInputs& in, const PromptTemplates& templates,
                  std::set<std::string> failing_digests = {});

    std::string chat(const ChatRequest& req) const override;

    // Everything answered so far, keyed by request digest.
    std::map<std::string, std::string> recorded() const;

private:
    std::string respond(const ChatRequest& req, const std::string& digest) const;
    std::string answer_single_doc(const std::string& doc_id) const;
    std::string answer_trend(const std::string& subject_id) const;

    const AnalysisInputs& in_;
    const PromptTemplates& templates_;
    std::set<std::string> failing_;
    std::map<std::string, Phase1Job> phase1_by_digest_;
    std::string cross_doc_prefix_;
    std::string synthesize_prefix_;

    mutable std::mutex mu_;
    mutable std::map<std::string, std::string> recorded_;
};

struct ScriptGenOptions {
    // Fraction of phase-1 jobs (spread evenly over the plan) answered with a
    // provider failure instead of a response.
    double fail_fraction = 0.0;

    void validate() const;
};

struct GeneratedScripts {
    ScriptStore store;
    std::size_t n_phase1_jobs = 0;
    std::size_t n_failed = 0;
};

// Runs the full two-phase analysis against an OracleBackend and returns the
// recorded script for one case. Merging stores across cases is safe: digests
// embed the full prompt, so distinct cases never collide.
GeneratedScripts generate_scripts(const AnalysisInputs& in, const PromptTemplates& templates,
                                  const ExpertOptions& opts, const ScriptGenOptions& gen);

}  // namespace fraudlens
