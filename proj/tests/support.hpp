#pragma once

// Shared fixtures and independent re-implementations used to cross-check the
// library: a Gibbs sampler for planted incidence matrices, Spearman rank
// correlation, a brute-force recall enumerator, and a construction that
// realizes an arbitrary binary match matrix as texts under the overlap
// matcher.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fraudlens/dataset.hpp"
#include "fraudlens/experts.hpp"
#include "fraudlens/metrics.hpp"
#include "fraudlens/providers.hpp"

namespace testsupport {

// Samples an N x H binary matrix from the conditional model
// P(X_ih = 1 | rest) = sigmoid(theta_h + sum_j w_hj X_ij) by Gibbs sweeps.
// `w_upper` is the strict upper triangle in (0,1),(0,2),...,(H-2,H-1) order;
// pass an empty vector for W = 0.
fraudlens::IncidenceMatrix gibbs_incidence(const std::vector<double>& theta,
                                           const std::vector<double>& w_upper, std::size_t n_cases,
                                           std::uint64_t seed, int sweeps = 30);

// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

// A chat backend driven by a plain function, for orchestration tests.
class StubBackend : public fraudlens::ChatBackend {
public:
    explicit StubBackend(std::function<std::string(const fraudlens::ChatRequest&)> fn)
        : fn_(std::move(fn)) {}
    std::string chat(const fraudlens::ChatRequest& req) const override { return fn_(req); }

private:
    std::function<std::string(const fraudlens::ChatRequest&)> fn_;
};

// ---------------------------------------------------------------------------
// Brute-force recall oracle
// ---------------------------------------------------------------------------

// One test instance described purely by binary match relations.
struct MatchInstance {
    // issue_match[i][j]: gold issue i matches predicted issue j.
    std::vector<std::vector<int>> issue_match;
    // evidence_match[i][j][g][e]: gold evidence g of issue i matches predicted
    // evidence e of issue j. Dimensions follow gold_evidence_counts[i] and
    // pred_evidence_counts[j].
    std::vector<std::vector<std::vector<std::vector<int>>>> evidence_match;
    std::vector<std::size_t> gold_evidence_counts;
    std::vector<std::size_t> pred_evidence_counts;
};

struct BruteForceResult {
    double r_i = 0.0;
    double r_e = 0.0;
    std::vector<int> matched_pred;  // selected candidate per gold issue, -1 if none
};

// Direct evaluation of the instance from its matrices: a gold issue counts
// when any predicted issue matches; its evidence recall is the maximum over
// matching candidates (earliest candidate wins ties) of the fraction of gold
// evidence points matched by any predicted evidence entry.
BruteForceResult brute_force_recall(const MatchInstance& instance);

// Realizes the instance as concrete gold issues and an InferredIssueSet whose
// pairwise token overlaps reproduce exactly the instance's match matrices
// under the overlap matcher with a small tau: matched pairs share one
// pair-specific token, unmatched pairs share nothing.
struct RealizedInstance {
    std::vector<fraudlens::FraudIssue> gold;
    fraudlens::InferredIssueSet pred;
};
RealizedInstance realize_instance(const MatchInstance& instance);

// Matcher configuration under which realize_instance is faithful.
fraudlens::MatcherConfig overlap_tau_config();

}  // namespace testsupport
