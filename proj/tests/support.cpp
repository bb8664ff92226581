#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fraudlens/prior.hpp"
#include "fraudlens/rng.hpp"

namespace testsupport {

using namespace fraudlens;

IncidenceMatrix gibbs_incidence(const std::vector<double>& theta,
                                const std::vector<double>& w_upper, std::size_t n_cases,
                                std::uint64_t seed, int sweeps) {
    const std::size_t h_count = theta.size();
    const PairwiseWeights w = w_upper.empty()
                                  ? PairwiseWeights(h_count)
                                  : PairwiseWeights(h_count, w_upper);
    Rng rng(seed);
    IncidenceMatrix x(n_cases, h_count);
    for (std::size_t i = 0; i < n_cases; ++i) {
        for (std::size_t h = 0; h < h_count; ++h) x.set(i, h, rng.next_bernoulli(0.5));
    }
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        for (std::size_t i = 0; i < n_cases; ++i) {
            for (std::size_t h = 0; h < h_count; ++h) {
                double z = theta[h];
                for (std::size_t j = 0; j < h_count; ++j) {
                    if (j != h && x.at(i, j)) z += w.at(h, j);
                }
                const double p = 1.0 / (1.0 + std::exp(-z));
                x.set(i, h, rng.next_bernoulli(p));
            }
        }
    }
    return x;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty()) {
        throw std::invalid_argument("spearman needs two equal non-empty vectors");
    }
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) return 0.0;
    return cov / std::sqrt(va * vb);
}

BruteForceResult brute_force_recall(const MatchInstance& instance) {
    BruteForceResult out;
    const std::size_t n_gold = instance.issue_match.size();
    if (n_gold == 0) return out;
    const std::size_t n_pred = instance.pred_evidence_counts.size();

    double issue_hits = 0.0;
    double evidence_sum = 0.0;
    for (std::size_t i = 0; i < n_gold; ++i) {
        int chosen = -1;
        double best = -1.0;
        for (std::size_t j = 0; j < n_pred; ++j) {
            if (!instance.issue_match[i][j]) continue;
            const std::size_t n_ev = instance.gold_evidence_counts[i];
            double inner;
            if (n_ev == 0) {
                inner = 1.0;
            } else {
                std::size_t hits = 0;
                for (std::size_t g = 0; g < n_ev; ++g) {
                    for (std::size_t e = 0; e < instance.pred_evidence_counts[j]; ++e) {
                        if (instance.evidence_match[i][j][g][e]) {
                            ++hits;
                            break;
                        }
                    }
                }
                inner = static_cast<double>(hits) / static_cast<double>(n_ev);
            }
            if (inner > best) {
                best = inner;
                chosen = static_cast<int>(j);
            }
        }
        out.matched_pred.push_back(chosen);
        if (chosen >= 0) {
            issue_hits += 1.0;
            evidence_sum += best;
        }
    }
    out.r_i = issue_hits / static_cast<double>(n_gold);
    out.r_e = evidence_sum / static_cast<double>(n_gold);
    return out;
}

RealizedInstance realize_instance(const MatchInstance& instance) {
    RealizedInstance out;
    const std::size_t n_gold = instance.issue_match.size();
    const std::size_t n_pred = instance.pred_evidence_counts.size();

    // Summaries: private token per issue plus one pair token per matched pair.
    std::vector<std::string> gold_summary(n_gold), pred_summary(n_pred);
    for (std::size_t i = 0; i < n_gold; ++i) gold_summary[i] = "goldissue" + std::to_string(i);
    for (std::size_t j = 0; j < n_pred; ++j) pred_summary[j] = "predissue" + std::to_string(j);
    for (std::size_t i = 0; i < n_gold; ++i) {
        for (std::size_t j = 0; j < n_pred; ++j) {
            if (instance.issue_match[i][j]) {
                const std::string tok = " pairtok" + std::to_string(i) + "x" + std::to_string(j);
                gold_summary[i] += tok;
                pred_summary[j] += tok;
            }
        }
    }

    // Evidence: private token per point plus one token per matched
    // (gold issue, pred issue, gold point, pred point) quadruple.
    std::vector<std::vector<std::string>> gold_ev(n_gold), pred_ev(n_pred);
    for (std::size_t i = 0; i < n_gold; ++i) {
        gold_ev[i].resize(instance.gold_evidence_counts[i]);
        for (std::size_t g = 0; g < gold_ev[i].size(); ++g) {
            gold_ev[i][g] = "goldev" + std::to_string(i) + "p" + std::to_string(g);
        }
    }
    for (std::size_t j = 0; j < n_pred; ++j) {
        pred_ev[j].resize(instance.pred_evidence_counts[j]);
        for (std::size_t e = 0; e < pred_ev[j].size(); ++e) {
            pred_ev[j][e] = "predev" + std::to_string(j) + "p" + std::to_string(e);
        }
    }
    for (std::size_t i = 0; i < n_gold; ++i) {
        for (std::size_t j = 0; j < n_pred; ++j) {
            for (std::size_t g = 0; g < instance.gold_evidence_counts[i]; ++g) {
                for (std::size_t e = 0; e < instance.pred_evidence_counts[j]; ++e) {
                    if (instance.evidence_match[i][j][g][e]) {
                        const std::string tok = " evtok" + std::to_string(i) + "j" +
                                                std::to_string(j) + "g" + std::to_string(g) + "e" +
                                                std::to_string(e);
                        gold_ev[i][g] += tok;
                        pred_ev[j][e] += tok;
                    }
                }
            }
        }
    }

    for (std::size_t i = 0; i < n_gold; ++i) {
        FraudIssue issue;
        issue.report_ids = {"D1"};
        issue.summary = gold_summary[i];
        issue.evidence = gold_ev[i];
        out.gold.push_back(std::move(issue));
    }
    out.pred.case_id = "CASE";
    for (std::size_t j = 0; j < n_pred; ++j) {
        InferredIssue issue;
        issue.report_ids = {"D1"};
        issue.summary = pred_summary[j];
        for (auto& text : pred_ev[j]) {
            EvidenceEntry entry;
            entry.text = std::move(text);
            entry.unanchored = true;
            issue.evidence.push_back(std::move(entry));
        }
        out.pred.issues.push_back(std::move(issue));
    }
    return out;
}

MatcherConfig overlap_tau_config() {
    MatcherConfig cfg;
    cfg.kind = MatcherKind::overlap;
    // Small enough that any shared token matches; pair tokens are unique, so
    // disjoint pairs have Jaccard 0 and matched pairs are strictly positive.
    cfg.tau = 0.01;
    return cfg;
}

}  // namespace testsupport
