#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fraudlens/dataset.hpp"
#include "fraudlens/experts.hpp"
#include "fraudlens/providers.hpp"

namespace fraudlens {

// ---------------------------------------------------------------------------
// Matchers
// ---------------------------------------------------------------------------

enum class MatcherKind { exact, overlap, judge };

std::string to_string(MatcherKind kind);
MatcherKind matcher_kind_from_string(const std::string& text);

struct MatcherConfig {
    MatcherKind kind = MatcherKind::exact;
    double tau = 0.5;        // overlap threshold, in (0, 1]
    ProviderConfig provider;  // judge kind only

    void validate() const;
};

// Semantic-equivalence predicate. exact and overlap are pure; judge may
// record warnings (provider failures never abort evaluation).
class Matcher {
public:
    explicit Matcher(MatcherConfig cfg);

    bool is_equivalent(const std::string& a, const std::string& b);
    const MatcherConfig& config() const { return cfg_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

private:
    MatcherConfig cfg_;
    std::unique_ptr<ChatProvider> judge_;
    std::vector<std::string> warnings_;
};

bool is_equivalent(Matcher& matcher, const std::string& a, const std::string& b);

// ---------------------------------------------------------------------------
// Recall
// ---------------------------------------------------------------------------

struct IssueTrace {
    int matched_pred = -1;             // selected s-hat-star index, or -1
    std::vector<int> evidence_matches;  // per gold evidence point: pred index or -1
};

struct MatchTrace {
    std::vector<IssueTrace> issues;  // one per gold issue, in gold order
};

// r_I: fraction of gold issues with at least one matching predicted summary.
std::pair<double, MatchTrace> issue_recall(const std::vector<FraudIssue>& gold,
                                           const InferredIssueSet& pred, Matcher& matcher);

// r_E: per gold issue, evidence coverage against the selected s-hat-star
// (the matching predicted issue maximizing that issue's evidence recall, ties
// by prediction order); unmatched issues contribute 0; matched issues with no
// gold evidence contribute 1.
std::pair<double, MatchTrace> evidence_recall(const std::vector<FraudIssue>& gold,
                                              const InferredIssueSet& pred, Matcher& issue_matcher,
                                              Matcher& evidence_matcher);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct CaseRow {
    std::string case_id;
    double r_i = 0.0;
    double r_e = 0.0;
    std::size_t n_gold = 0;
    std::size_t n_pred = 0;
    MatchTrace trace;
};

struct RecallReport {
    double r_i = 0.0;  // aggregate R_I
    double r_e = 0.0;  // aggregate R_E
    std::size_t n_cases = 0;
    std::size_t n_skipped = 0;
    std::vector<CaseRow> per_case;      // included cases, case-id order
    std::vector<std::string> skipped;   // case ids with zero gold issues
    MatcherConfig matcher;
    std::vector<std::string> warnings;

    std::string to_json() const;
};

// Aggregates are unweighted means over cases with >= 1 gold issue; missing
// predictions count as empty sets; duplicate case ids in preds error out.
RecallReport evaluate(const CaseSet& golds, const std::vector<InferredIssueSet>& preds,
                      const MatcherConfig& matcher_cfg);

void save_report(const std::string& path, const RecallReport& report);

}  // namespace fraudlens
