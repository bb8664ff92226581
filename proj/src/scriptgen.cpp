#include "fraudlens/scriptgen.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "fraudlens/errors.hpp"

namespace fraudlens {

using nlohmann::json;

namespace {

std::string template_prefix(const std::string& tmpl) {
    const auto pos = tmpl.find("{{");
    return pos == std::string::npos ? tmpl : tmpl.substr(0, pos);
}

const std::string* first_user_message(const ChatRequest& req) {
    for (const auto& m : req.messages) {
        if (m.role == "user") return &m.content;
    }
    return nullptr;
}

bool chunk_contains(const ChunkIndex& index, const std::string& chunk_id,
                    const std::string& sentence) {
    const Chunk* chunk = index.find_chunk(chunk_id);
    return chunk != nullptr && chunk->text.find(sentence) != std::string::npos;
}

std::string issue_subject(const FraudIssue& issue) {
    return issue.subjects.empty() ? std::string("unknown") : issue.subjects.front();
}

}  // namespace

OracleBackend::OracleBackend(const AnalysisInputs& in, const PromptTemplates& templates,
                             std::set<std::string> failing_digests)
    : in_(in), templates_(templates), failing_(std::move(failing_digests)) {
    in_.validate();
    for (auto& job : plan_phase1(in_, templates_)) {
        const std::string digest = chat_request_digest(job.request);
        phase1_by_digest_.emplace(digest, std::move(job));
    }
    cross_doc_prefix_ = template_prefix(templates_.cross_doc);
    synthesize_prefix_ = template_prefix(templates_.synthesize);
    if (cross_doc_prefix_.empty() || synthesize_prefix_.empty() ||
        cross_doc_prefix_ == synthesize_prefix_) {
        throw ConfigError("cross_doc and synthesize templates need distinct non-empty prefixes "
                          "for script generation");
    }
}

std::string OracleBackend::chat(const ChatRequest& req) const {
    const std::string digest = chat_request_digest(req);
    if (failing_.count(digest) > 0) {
        throw ProviderError("no scripted response for digest " + digest);
    }
    std::string response = respond(req, digest);
    {
        std::lock_guard<std::mutex> lock(mu_);
        recorded_[digest] = response;
    }
    return response;
}

std::map<std::string, std::string> OracleBackend::recorded() const {
    std::lock_guard<std::mutex> lock(mu_);
    return recorded_;
}

std::string OracleBackend::respond(const ChatRequest& req, const std::string& digest) const {
    const auto it = phase1_by_digest_.find(digest);
    if (it != phase1_by_digest_.end()) {
        const Phase1Job& job = it->second;
        return job.kind == Phase1Job::Kind::single_doc ? answer_single_doc(job.target)
                                                       : answer_trend(job.target);
    }
    const std::string* user = first_user_message(req);
    if (user != nullptr) {
        if (user->rfind(cross_doc_prefix_, 0) == 0) {
            return json{{"correlations", json::array()}}.dump();
        }
        if (user->rfind(synthesize_prefix_, 0) == 0) {
            const auto case_ids = evidence_chunk_ids(*in_.corpus);
            json issues = json::array();
            for (const auto& issue : in_.case_record->issues) {
                json evidence = json::array();
                for (const auto& sentence : issue.evidence) {
                    json chunk_ids = json::array();
                    for (const auto& id : case_ids) {
                        if (chunk_contains(*in_.index, id, sentence)) chunk_ids.push_back(id);
                    }
                    evidence.push_back(json{{"text", sentence}, {"chunk_ids", chunk_ids}});
                }
                std::vector<std::string> report_ids = issue.report_ids;
                if (report_ids.empty()) {
                    for (const auto& doc : in_.case_record->documents) {
                        report_ids.push_back(doc.doc_id);
                    }
                }
                issues.push_back(json{{"report_ids", report_ids},
                                      {"summary", issue.summary},
                                      {"evidence", evidence}});
            }
            return json{{"issues", issues}}.dump();
        }
    }
    throw Error("oracle backend cannot identify request with digest " + digest);
}

std::string OracleBackend::answer_single_doc(const std::string& doc_id) const {
    const auto slice = evidence_slice_for_document(*in_.corpus, doc_id);
    json findings = json::array();
    for (const auto& issue : in_.case_record->issues) {
        json cited = json::array();
        for (const auto& chunk_id : slice) {
            for (const auto& sentence : issue.evidence) {
                if (chunk_contains(*in_.index, chunk_id, sentence)) {
                    cited.push_back(chunk_id);
                    break;
                }
            }
        }
        if (cited.empty()) continue;
        findings.push_back(json{{"subject", issue_subject(issue)},
                                {"risk_signal", issue.summary},
                                {"cited_chunk_ids", cited}});
    }
    return json{{"findings", findings}}.dump();
}

std::string OracleBackend::answer_trend(const std::string& subject_id) const {
    const SubjectEvidence* evidence = nullptr;
    for (const auto& s : in_.corpus->subjects) {
        if (s.subject_id == subject_id) {
            evidence = &s;
            break;
        }
    }

    // Sentinel sentences for this subject that actually surfaced in retrieval.
    std::vector<std::string> anomalies;
    json series = json::array();
    for (const auto& doc : documents_in_period_order(*in_.case_record)) {
        const std::vector<RetrievedChunk>* chunks = nullptr;
        if (evidence != nullptr) {
            for (const auto& [d, list] : evidence->by_document) {
                if (d == doc.doc_id) {
                    chunks = &list;
                    break;
                }
            }
        }
        std::string obs;
        if (chunks == nullptr || chunks->empty()) {
            obs = "no evidence retrieved for this period";
        } else {
            bool flagged = false;
            for (const auto& issue : in_.case_record->issues) {
                if (issue_subject(issue) != subject_id) continue;
                for (const auto& sentence : issue.evidence) {
                    for (const auto& c : *chunks) {
                        if (!chunk_contains(*in_.index, c.chunk_id, sentence)) continue;
                        flagged = true;
                        if (std::find(anomalies.begin(), anomalies.end(), sentence) ==
                            anomalies.end()) {
                            anomalies.push_back(sentence);
                        }
                    }
                }
            }
            obs = std::to_string(chunks->size()) +
                  (chunks->size() == 1 ? " excerpt" : " excerpts") + " reviewed; " +
                  (flagged ? "figures conflict with the cited audit references"
                           : "movements consistent with ordinary operating activity");
        }
        series.push_back(json{{"period_label", doc.period_label}, {"metric_observations", obs}});
    }

    std::string notes;
    for (const auto& a : anomalies) {
        if (!notes.empty()) notes += "; ";
        notes += a;
    }
    return json{{"subject", subject_id}, {"period_series", series}, {"anomaly_notes", notes}}
        .dump();
}

void ScriptGenOptions::validate() const {
    if (!(fail_fraction >= 0.0 && fail_fraction <= 1.0)) {
        throw ValidationError("fail_fraction must be within [0, 1]");
    }
}

GeneratedScripts generate_scripts(const AnalysisInputs& in, const PromptTemplates& templates,
                                  const ExpertOptions& opts, const ScriptGenOptions& gen) {
    gen.validate();
    opts.validate();

    const auto jobs = plan_phase1(in, templates);
    const std::size_t n = jobs.size();
    const auto k = static_cast<std::size_t>(std::llround(gen.fail_fraction * static_cast<double>(n)));

    // Spread the k failures evenly over the plan so no single expert kind
    // absorbs them all.
    std::set<std::string> failing;
    std::size_t err = 0;
    for (const auto& job : jobs) {
        err += k;
        if (err >= n) {
            err -= n;
            failing.insert(chat_request_digest(job.request));
        }
    }

    OracleBackend oracle(in, templates, failing);
    analyze_case(in, templates, oracle, opts);

    GeneratedScripts out;
    out.n_phase1_jobs = n;
    out.n_failed = failing.size();
    for (const auto& [digest, response] : oracle.recorded()) out.store.add(digest, response);
    return out;
}

}  // namespace fraudlens
