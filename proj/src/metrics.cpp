#include "fraudlens/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "fraudlens/errors.hpp"
#include "fraudlens/text.hpp"

namespace fraudlens {

using nlohmann::json;

std::string to_string(MatcherKind kind) {
    switch (kind) {
        case MatcherKind::exact: return "exact";
        case MatcherKind::overlap: return "overlap";
        case MatcherKind::judge: return "judge";
    }
    throw ConfigError("unknown matcher kind");
}

MatcherKind matcher_kind_from_string(const std::string& text) {
    if (text == "exact") return MatcherKind::exact;
    if (text == "overlap") return MatcherKind::overlap;
    if (text == "judge") return MatcherKind::judge;
    throw ConfigError("unknown matcher kind: \"" + text + "\"");
}

void MatcherConfig::validate() const {
    if (!(tau > 0.0) || tau > 1.0) throw ConfigError("matcher tau must be in (0, 1]");
}

Matcher::Matcher(MatcherConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    if (cfg_.kind == MatcherKind::judge) {
        judge_ = std::make_unique<ChatProvider>(cfg_.provider);
    }
}

namespace {

double jaccard(const std::string& a, const std::string& b) {
    const auto ta = tokenize(a);
    const auto tb = tokenize(b);
    const std::set<std::string> sa(ta.begin(), ta.end());
    const std::set<std::string> sb(tb.begin(), tb.end());
    if (sa.empty() && sb.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& t : sa) inter += sb.count(t);
    const std::size_t uni = sa.size() + sb.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace

bool Matcher::is_equivalent(const std::string& a, const std::string& b) {
    switch (cfg_.kind) {
        case MatcherKind::exact:
            return normalize_for_match(a) == normalize_for_match(b);
        case MatcherKind::overlap:
            return jaccard(a, b) >= cfg_.tau;
        case MatcherKind::judge: {
            ChatRequest req;
            req.messages.push_back(
                {"system",
                 "You judge whether two statements describe the same fact. Reply with JSON only: "
                 "{\"equivalent\": true} or {\"equivalent\": false}."});
            req.messages.push_back({"user", "Statement A: " + a + "\nStatement B: " + b});
            std::string response;
            try {
                response = judge_->chat(req);
            } catch (const std::exception& e) {
                warnings_.push_back(std::string("judge matcher provider failure: ") + e.what());
                return false;
            }
            try {
                const json verdict = parse_structured_output(response, [](const json& j) {
                    return j.is_object() && j.contains("equivalent") &&
                           j["equivalent"].is_boolean();
                });
                return verdict["equivalent"].get<bool>();
            } catch (const ParseError&) {
                return false;  // unparseable verdict
            }
        }
    }
    throw ConfigError("unknown matcher kind");
}

bool is_equivalent(Matcher& matcher, const std::string& a, const std::string& b) {
    return matcher.is_equivalent(a, b);
}

// ---------------------------------------------------------------------------
// Recall core
// ---------------------------------------------------------------------------

namespace {

struct CaseEvaluation {
    double r_i = 0.0;
    double r_e = 0.0;
    MatchTrace trace;
};

// Single pass computing r_I, r_E, and the trace so the two public ops always
// agree on the selected s-hat-star.
CaseEvaluation evaluate_case(const std::vector<FraudIssue>& gold, const InferredIssueSet& pred,
                             Matcher& issue_matcher, Matcher& evidence_matcher) {
    CaseEvaluation out;
    if (gold.empty()) return out;

    double issue_hits = 0.0;
    double evidence_sum = 0.0;
    for (const auto& gold_issue : gold) {
        IssueTrace trace;

        // Candidate predicted issues matching at the issue level.
        std::vector<std::size_t> candidates;
        for (std::size_t p = 0; p < pred.issues.size(); ++p) {
            if (issue_matcher.is_equivalent(gold_issue.summary, pred.issues[p].summary)) {
                candidates.push_back(p);
            }
        }
        if (candidates.empty()) {
            trace.evidence_matches.assign(gold_issue.evidence.size(), -1);
            out.trace.issues.push_back(std::move(trace));
            continue;
        }
        issue_hits += 1.0;

        // s-hat-star: candidate maximizing this issue's evidence recall,
        // ties by prediction order.
        double best_inner = -1.0;
        std::size_t best = candidates.front();
        std::vector<int> best_matches;
        for (const std::size_t p : candidates) {
            const auto& pred_evidence = pred.issues[p].evidence;
            std::vector<int> matches(gold_issue.evidence.size(), -1);
            double hits = 0.0;
            for (std::size_t g = 0; g < gold_issue.evidence.size(); ++g) {
                for (std::size_t e = 0; e < pred_evidence.size(); ++e) {
                    if (evidence_matcher.is_equivalent(gold_issue.evidence[g],
                                                       pred_evidence[e].text)) {
                        matches[g] = static_cast<int>(e);
                        hits += 1.0;
                        break;
                    }
                }
            }
            const double inner = gold_issue.evidence.empty()
                                     ? 1.0
                                     : hits / static_cast<double>(gold_issue.evidence.size());
            if (inner > best_inner) {
                best_inner = inner;
                best = p;
                best_matches = std::move(matches);
            }
        }
        evidence_sum += best_inner;
        trace.matched_pred = static_cast<int>(best);
        trace.evidence_matches = std::move(best_matches);
        out.trace.issues.push_back(std::move(trace));
    }
    out.r_i = issue_hits / static_cast<double>(gold.size());
    out.r_e = evidence_sum / static_cast<double>(gold.size());
    return out;
}

}  // namespace

std::pair<double, MatchTrace> issue_recall(const std::vector<FraudIssue>& gold,
                                           const InferredIssueSet& pred, Matcher& matcher) {
    auto eval = evaluate_case(gold, pred, matcher, matcher);
    return {eval.r_i, std::move(eval.trace)};
}

std::pair<double, MatchTrace> evidence_recall(const std::vector<FraudIssue>& gold,
                                              const InferredIssueSet& pred, Matcher& issue_matcher,
                                              Matcher& evidence_matcher) {
    auto eval = evaluate_case(gold, pred, issue_matcher, evidence_matcher);
    return {eval.r_e, std::move(eval.trace)};
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

RecallReport evaluate(const CaseSet& golds, const std::vector<InferredIssueSet>& preds,
                      const MatcherConfig& matcher_cfg) {
    matcher_cfg.validate();
    RecallReport report;
    report.matcher = matcher_cfg;

    std::map<std::string, const InferredIssueSet*> by_case;
    for (const auto& p : preds) {
        if (!by_case.emplace(p.case_id, &p).second) {
            throw ValidationError("duplicate case_id in predictions: " + p.case_id);
        }
    }
    std::set<std::string> gold_ids;
    for (const auto& c : golds.cases) gold_ids.insert(c.case_id);
    for (const auto& [case_id, _] : by_case) {
        if (gold_ids.count(case_id) == 0) {
            report.warnings.push_back("prediction for unknown case \"" + case_id + "\" ignored");
        }
    }

    Matcher matcher(matcher_cfg);
    const InferredIssueSet empty_pred;

    std::vector<const CaseRecord*> ordered;
    for (const auto& c : golds.cases) ordered.push_back(&c);
    std::sort(ordered.begin(), ordered.end(),
              [](const CaseRecord* a, const CaseRecord* b) { return a->case_id < b->case_id; });

    double r_i_sum = 0.0, r_e_sum = 0.0;
    for (const CaseRecord* rec : ordered) {
        if (rec->issues.empty()) {
            report.skipped.push_back(rec->case_id);
            continue;
        }
        const auto it = by_case.find(rec->case_id);
        const InferredIssueSet& pred = it == by_case.end() ? empty_pred : *it->second;
        CaseEvaluation eval = evaluate_case(rec->issues, pred, matcher, matcher);
        r_i_sum += eval.r_i;
        r_e_sum += eval.r_e;
        CaseRow row;
        row.case_id = rec->case_id;
        row.r_i = eval.r_i;
        row.r_e = eval.r_e;
        row.n_gold = rec->issues.size();
        row.n_pred = pred.issues.size();
        row.trace = std::move(eval.trace);
        report.per_case.push_back(std::move(row));
    }
    report.n_cases = report.per_case.size();
    report.n_skipped = report.skipped.size();
    if (report.n_cases > 0) {
        report.r_i = r_i_sum / static_cast<double>(report.n_cases);
        report.r_e = r_e_sum / static_cast<double>(report.n_cases);
    }
    for (const auto& w : matcher.warnings()) report.warnings.push_back(w);
    return report;
}

void save_report(const std::string& path, const RecallReport& report) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write report: " + path);
    out << report.to_json() << "\n";
}

std::string RecallReport::to_json() const {
    json per_case_json = json::array();
    json traces = json::object();
    for (const auto& row : per_case) {
        per_case_json.push_back(json{{"case_id", row.case_id},
                                     {"r_I", row.r_i},
                                     {"r_E", row.r_e},
                                     {"n_gold_issues", row.n_gold},
                                     {"n_predicted_issues", row.n_pred}});
        json issues = json::array();
        for (const auto& t : row.trace.issues) {
            issues.push_back(
                json{{"matched_pred", t.matched_pred}, {"evidence_matches", t.evidence_matches}});
        }
        traces[row.case_id] = json{{"issues", issues}};
    }
    json matcher_json{{"kind", to_string(matcher.kind)}, {"tau", matcher.tau}};
    if (matcher.kind == MatcherKind::judge) {
        matcher_json["provider_fingerprint"] = matcher.provider.fingerprint();
    }
    return json{{"aggregate",
                 {{"R_I", r_i}, {"R_E", r_e}, {"n_cases", n_cases}, {"n_skipped", n_skipped}}},
                {"per_case", per_case_json},
                {"matcher", matcher_json},
                {"traces", traces},
                {"skipped", skipped},
                {"warnings", warnings}}
        .dump(2);
}

}  // namespace fraudlens
