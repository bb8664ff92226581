#include "fraudlens/experts.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "fraudlens/errors.hpp"
#include "fraudlens/text.hpp"

namespace fraudlens {

using nlohmann::json;

void AnalysisInputs::validate() const {
    if (case_record == nullptr || vocab == nullptr || corpus == nullptr || index == nullptr) {
        throw ValidationError("analysis inputs are incomplete");
    }
}

void ExpertOptions::validate() const {
    if (parallelism < 1) throw ValidationError("parallelism must be >= 1");
    if (max_repair_retries < 0) throw ValidationError("max_repair_retries must be >= 0");
}

// ---------------------------------------------------------------------------
// Evidence plumbing
// ---------------------------------------------------------------------------

std::vector<std::string> evidence_slice_for_document(const EvidenceCorpus& corpus,
                                                     const std::string& doc_id) {
    std::vector<std::string> ids;
    std::set<std::string> seen;
    for (const auto& subject : corpus.subjects) {
        for (const auto& [d, chunks] : subject.by_document) {
            if (d != doc_id) continue;
            for (const auto& c : chunks) {
                if (seen.insert(c.chunk_id).second) ids.push_back(c.chunk_id);
            }
        }
    }
    return ids;
}

std::vector<std::string> evidence_chunk_ids(const EvidenceCorpus& corpus) {
    std::vector<std::string> ids;
    std::set<std::string> seen;
    for (const auto& subject : corpus.subjects) {
        for (const auto& [d, chunks] : subject.by_document) {
            for (const auto& c : chunks) {
                if (seen.insert(c.chunk_id).second) ids.push_back(c.chunk_id);
            }
        }
    }
    return ids;
}

namespace {

std::optional<PeriodKey> try_period_key(const std::string& label) {
    try {
        return parse_period_key(label);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace

std::vector<DocumentRef> documents_in_period_order(const CaseRecord& rec) {
    std::vector<DocumentRef> docs = rec.documents;
    std::stable_sort(docs.begin(), docs.end(), [](const DocumentRef& a, const DocumentRef& b) {
        const auto ka = try_period_key(a.period_label);
        const auto kb = try_period_key(b.period_label);
        if (ka.has_value() != kb.has_value()) return !ka.has_value();  // unparseable first
        if (!ka.has_value()) return false;                             // stable among themselves
        return *ka < *kb;
    });
    return docs;
}

// ---------------------------------------------------------------------------
// Prompt builders
// ---------------------------------------------------------------------------

namespace {

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i > 0) out += sep;
        out += parts[i];
    }
    return out;
}

std::string subject_display(const SubjectVocabulary& vocab, const std::string& subject_id) {
    if (const auto idx = vocab.index_of(subject_id)) return vocab.at(*idx).name;
    return subject_id;
}

std::string render_chunk(const ChunkIndex& index, const std::string& chunk_id) {
    const Chunk* chunk = index.find_chunk(chunk_id);
    if (chunk == nullptr) return "[" + chunk_id + "] (chunk not found)";
    std::string out = "[" + chunk_id + "] section: " + join(chunk->section_path, " > ");
    if (!chunk->subject_tags.empty()) out += " | subjects: " + join(chunk->subject_tags, ", ");
    out += "\n" + chunk->text;
    return out;
}

ChatRequest make_request(const std::string& user_content) {
    ChatRequest req;
    req.messages.push_back({"system", kExpertSystemPrompt});
    req.messages.push_back({"user", user_content});
    return req;
}

}  // namespace

ChatRequest build_single_doc_request(const PromptTemplates& templates, const AnalysisInputs& in,
                                     const std::string& doc_id) {
    in.validate();
    std::string subject_list;
    for (const auto& subject : in.corpus->subjects) {
        subject_list +=
            "- " + subject.subject_id + ": " + subject_display(*in.vocab, subject.subject_id) + "\n";
    }
    std::string chunks;
    for (const auto& chunk_id : evidence_slice_for_document(*in.corpus, doc_id)) {
        chunks += render_chunk(*in.index, chunk_id) + "\n\n";
    }
    return make_request(render_template(
        templates.single_doc, {{"subject_list", subject_list}, {"chunks", chunks}}));
}

ChatRequest build_trend_request(const PromptTemplates& templates, const AnalysisInputs& in,
                                const std::string& subject_id) {
    in.validate();
    const SubjectEvidence* evidence = nullptr;
    for (const auto& s : in.corpus->subjects) {
        if (s.subject_id == subject_id) {
            evidence = &s;
            break;
        }
    }
    if (evidence == nullptr) {
        throw ValidationError("subject \"" + subject_id + "\" is not in the evidence corpus");
    }
    const std::string subject_list =
        "- " + subject_id + ": " + subject_display(*in.vocab, subject_id) + "\n";

    std::string period_series;
    for (const auto& doc : documents_in_period_order(*in.case_record)) {
        period_series += "== " + doc.period_label + " (" + doc.doc_id + ") ==\n";
        const std::vector<RetrievedChunk>* chunks = nullptr;
        for (const auto& [d, list] : evidence->by_document) {
            if (d == doc.doc_id) {
                chunks = &list;
                break;
            }
        }
        if (chunks == nullptr || chunks->empty()) {
            period_series += "(no evidence retrieved)\n\n";
            continue;
        }
        for (const auto& c : *chunks) period_series += render_chunk(*in.index, c.chunk_id) + "\n\n";
    }
    return make_request(render_template(
        templates.subject_trend, {{"subject_list", subject_list}, {"period_series", period_series}}));
}

ChatRequest build_cross_doc_request(const PromptTemplates& templates,
                                    const std::vector<TrendFindings>& trends) {
    std::string findings;
    for (const auto& t : trends) {
        findings += "## " + t.subject + "\n";
        if (t.period_series.empty()) {
            findings += "(no observations)\n";
        }
        for (const auto& p : t.period_series) {
            findings += "- " + p.period_label + ": " + p.metric_observations + "\n";
        }
        findings += "anomaly_notes: " + t.anomaly_notes + "\n\n";
    }
    return make_request(render_template(templates.cross_doc, {{"findings", findings}}));
}

ChatRequest build_synthesize_request(const PromptTemplates& templates,
                                     const std::vector<SingleDocFindings>& singles,
                                     const CrossDocFindings& cross) {
    std::string findings = "# Single-document findings\n";
    for (const auto& s : singles) {
        findings += "## " + s.doc_id + "\n";
        if (s.findings.empty()) findings += "(none)\n";
        for (const auto& f : s.findings) {
            findings += "- subject=" + f.subject + " risk_signal=" + f.risk_signal + " cited=[" +
                        join(f.cited_chunk_ids, ", ") + "]\n";
        }
    }
    findings += "\n# Cross-document correlations\n";
    if (cross.correlations.empty()) findings += "(none)\n";
    for (const auto& c : cross.correlations) {
        findings += "- subjects=[" + join(c.subjects, ", ") + "] periods=[" +
                    join(c.periods, ", ") + "] rationale=" + c.rationale + " cited=[" +
                    join(c.cited_chunk_ids, ", ") + "]\n";
    }
    return make_request(render_template(templates.synthesize, {{"findings", findings}}));
}

ChatRequest build_repair_request(const PromptTemplates& templates, const ChatRequest& original,
                                 const std::string& bad_response) {
    ChatRequest req = original;
    req.messages.push_back({"assistant", bad_response});
    req.messages.push_back({"user", templates.repair});
    return req;
}

// ---------------------------------------------------------------------------
// Structured-output parsing
// ---------------------------------------------------------------------------

json parse_structured_output(const std::string& text,
                             const std::function<bool(const json&)>& schema_ok) {
    for (std::size_t start = 0; start < text.size(); ++start) {
        const char open = text[start];
        if (open != '{' && open != '[') continue;
        int depth = 0;
        bool in_string = false, escaped = false;
        std::size_t end = std::string::npos;
        for (std::size_t i = start; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                } else if (c == '\\') {
                    escaped = true;
                } else if (c == '"') {
                    in_string = false;
                }
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{' || c == '[') {
                ++depth;
            } else if (c == '}' || c == ']') {
                if (--depth == 0) {
                    end = i;
                    break;
                }
            }
        }
        if (end == std::string::npos) continue;
        const json candidate = json::parse(text.substr(start, end - start + 1), nullptr, false);
        if (candidate.is_discarded() || !schema_ok(candidate)) continue;
        return candidate;
    }
    throw ParseError("no schema-valid JSON value found in response");
}

namespace {

bool is_string_array(const json& j) {
    if (!j.is_array()) return false;
    for (const auto& v : j) {
        if (!v.is_string()) return false;
    }
    return true;
}

}  // namespace

bool single_doc_schema_ok(const json& j) {
    if (!j.is_object() || !j.contains("findings") || !j["findings"].is_array()) return false;
    for (const auto& f : j["findings"]) {
        if (!f.is_object()) return false;
        if (!f.contains("subject") || !f["subject"].is_string()) return false;
        if (!f.contains("risk_signal") || !f["risk_signal"].is_string()) return false;
        if (!f.contains("cited_chunk_ids") || !is_string_array(f["cited_chunk_ids"])) return false;
    }
    return true;
}

bool trend_schema_ok(const json& j) {
    if (!j.is_object() || !j.contains("subject") || !j["subject"].is_string()) return false;
    if (!j.contains("period_series") || !j["period_series"].is_array()) return false;
    for (const auto& p : j["period_series"]) {
        if (!p.is_object()) return false;
        if (!p.contains("period_label") || !p["period_label"].is_string()) return false;
        if (!p.contains("metric_observations") || !p["metric_observations"].is_string()) return false;
    }
    if (j.contains("anomaly_notes") && !j["anomaly_notes"].is_string()) return false;
    return true;
}

bool cross_doc_schema_ok(const json& j) {
    if (!j.is_object() || !j.contains("correlations") || !j["correlations"].is_array()) return false;
    for (const auto& c : j["correlations"]) {
        if (!c.is_object()) return false;
        if (!c.contains("subjects") || !is_string_array(c["subjects"]) || c["subjects"].empty()) {
            return false;
        }
        if (!c.contains("rationale") || !c["rationale"].is_string()) return false;
        if (c.contains("periods") && !is_string_array(c["periods"])) return false;
        if (c.contains("cited_chunk_ids") && !is_string_array(c["cited_chunk_ids"])) return false;
    }
    return true;
}

bool issues_schema_ok(const json& j) {
    if (!j.is_object() || !j.contains("issues") || !j["issues"].is_array()) return false;
    for (const auto& issue : j["issues"]) {
        if (!issue.is_object()) return false;
        if (!issue.contains("report_ids") || !is_string_array(issue["report_ids"]) ||
            issue["report_ids"].empty()) {
            return false;
        }
        if (!issue.contains("summary") || !issue["summary"].is_string()) return false;
        if (!issue.contains("evidence") || !issue["evidence"].is_array()) return false;
        for (const auto& e : issue["evidence"]) {
            if (!e.is_object()) return false;
            if (!e.contains("text") || !e["text"].is_string()) return false;
            if (!e.contains("chunk_ids") || !is_string_array(e["chunk_ids"])) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Orchestration
// ---------------------------------------------------------------------------

std::vector<Phase1Job> plan_phase1(const AnalysisInputs& in, const PromptTemplates& templates) {
    in.validate();
    std::vector<Phase1Job> jobs;
    for (const auto& doc : in.case_record->documents) {
        if (evidence_slice_for_document(*in.corpus, doc.doc_id).empty()) continue;
        jobs.push_back({Phase1Job::Kind::single_doc, doc.doc_id,
                        build_single_doc_request(templates, in, doc.doc_id)});
    }
    for (const auto& subject : in.corpus->subjects) {
        bool any = false;
        for (const auto& [doc_id, chunks] : subject.by_document) {
            if (!chunks.empty()) {
                any = true;
                break;
            }
        }
        if (!any) continue;
        jobs.push_back({Phase1Job::Kind::subject_trend, subject.subject_id,
                        build_trend_request(templates, in, subject.subject_id)});
    }
    return jobs;
}

namespace {

struct CallOutcome {
    json parsed;
    bool parsed_ok = false;
    bool provider_failed = false;
    std::vector<ProvenanceRecord> provenance;
    std::vector<std::string> warnings;
};

CallOutcome chat_and_parse(ChatRequest req, const std::function<bool(const json&)>& schema_ok,
                           const ChatBackend& chat, const PromptTemplates& templates,
                           int max_repair_retries, const std::string& expert,
                           const std::string& target) {
    CallOutcome out;
    const std::string label = target.empty() ? expert : expert + " for \"" + target + "\"";
    std::string raw;
    for (int attempt = 0;; ++attempt) {
        ProvenanceRecord rec{expert, target, chat_request_digest(req), "", false, ""};
        try {
            raw = chat.chat(req);
            rec.response = raw;
        } catch (const std::exception& e) {
            rec.error = e.what();
            out.provenance.push_back(std::move(rec));
            out.warnings.push_back(label + " failed: " + std::string(e.what()));
            out.provider_failed = true;
            return out;
        }
        try {
            out.parsed = parse_structured_output(raw, schema_ok);
            rec.ok = true;
            out.provenance.push_back(std::move(rec));
            out.parsed_ok = true;
            return out;
        } catch (const ParseError& e) {
            rec.error = e.what();
            out.provenance.push_back(std::move(rec));
            if (attempt >= max_repair_retries) {
                out.warnings.push_back(label + ": unparseable output after " +
                                       std::to_string(attempt + 1) + " attempt(s)");
                return out;
            }
            req = build_repair_request(templates, req, raw);
        }
    }
}

// Drops ids not present in `valid`, deduplicating while preserving order.
std::vector<std::string> resolve_citations(const std::vector<std::string>& ids,
                                           const std::set<std::string>& valid,
                                           std::vector<std::string>& dropped) {
    std::vector<std::string> kept;
    std::set<std::string> seen;
    for (const auto& id : ids) {
        if (!seen.insert(id).second) continue;
        if (valid.count(id) > 0) {
            kept.push_back(id);
        } else {
            dropped.push_back(id);
        }
    }
    return kept;
}

struct Phase1Result {
    SingleDocFindings single;
    TrendFindings trend;
    std::vector<ProvenanceRecord> provenance;
    std::vector<std::string> warnings;
};

void run_phase1_job(const Phase1Job& job, const AnalysisInputs& in,
                    const PromptTemplates& templates, const ChatBackend& chat,
                    const ExpertOptions& opts, Phase1Result& result) {
    const bool is_single = job.kind == Phase1Job::Kind::single_doc;
    const std::string expert = is_single ? "single_doc" : "subject_trend";
    CallOutcome outcome =
        chat_and_parse(job.request, is_single ? single_doc_schema_ok : trend_schema_ok, chat,
                       templates, opts.max_repair_retries, expert, job.target);
    result.provenance = std::move(outcome.provenance);
    result.warnings = std::move(outcome.warnings);

    if (is_single) {
        result.single.doc_id = job.target;
        result.single.failed = outcome.provider_failed;
        if (!outcome.parsed_ok) return;  // failed, or empty findings after repair
        const auto slice = evidence_slice_for_document(*in.corpus, job.target);
        const std::set<std::string> valid(slice.begin(), slice.end());
        for (const auto& f : outcome.parsed["findings"]) {
            SingleDocFinding finding;
            finding.subject = f["subject"].get<std::string>();
            finding.risk_signal = f["risk_signal"].get<std::string>();
            std::vector<std::string> dropped;
            finding.cited_chunk_ids = resolve_citations(
                f["cited_chunk_ids"].get<std::vector<std::string>>(), valid, dropped);
            for (const auto& id : dropped) {
                result.warnings.push_back("single_doc for \"" + job.target +
                                          "\": dropped unresolvable citation \"" + id +
                                          "\" (unanchored)");
            }
            result.single.findings.push_back(std::move(finding));
        }
    } else {
        result.trend.subject = job.target;
        result.trend.failed = outcome.provider_failed;
        if (!outcome.parsed_ok) return;
        for (const auto& p : outcome.parsed["period_series"]) {
            result.trend.period_series.push_back({p["period_label"].get<std::string>(),
                                                  p["metric_observations"].get<std::string>()});
        }
        std::stable_sort(result.trend.period_series.begin(), result.trend.period_series.end(),
                         [](const PeriodObservation& a, const PeriodObservation& b) {
                             const auto ka = try_period_key(a.period_label);
                             const auto kb = try_period_key(b.period_label);
                             if (ka.has_value() != kb.has_value()) return !ka.has_value();
                             if (!ka.has_value()) return false;
                             return *ka < *kb;
                         });
        result.trend.anomaly_notes = outcome.parsed.value("anomaly_notes", std::string());
    }
}

}  // namespace

InferredIssueSet analyze_case(const AnalysisInputs& in, const PromptTemplates& templates,
                              const ChatBackend& chat, const ExpertOptions& opts) {
    in.validate();
    opts.validate();
    InferredIssueSet out;
    out.case_id = in.case_record->case_id;

    // Phase 1: concurrent experts, order-stable collection.
    const std::vector<Phase1Job> jobs = plan_phase1(in, templates);
    std::vector<Phase1Result> results(jobs.size());
    {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= jobs.size()) break;
                run_phase1_job(jobs[i], in, templates, chat, opts, results[i]);
            }
        };
        const std::size_t n_threads =
            std::min<std::size_t>(static_cast<std::size_t>(opts.parallelism), jobs.size());
        std::vector<std::thread> threads;
        for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();  // phase barrier
    }

    std::vector<SingleDocFindings> singles;
    std::vector<TrendFindings> trends;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        for (auto& rec : results[i].provenance) out.provenance.push_back(std::move(rec));
        for (auto& w : results[i].warnings) out.warnings.push_back(std::move(w));
        if (jobs[i].kind == Phase1Job::Kind::single_doc) {
            if (!results[i].single.failed) singles.push_back(std::move(results[i].single));
        } else {
            if (!results[i].trend.failed) trends.push_back(std::move(results[i].trend));
        }
    }

    const auto all_ids = evidence_chunk_ids(*in.corpus);
    const std::set<std::string> case_chunk_ids(all_ids.begin(), all_ids.end());

    // Phase 2a: cross-document aggregation (skipped outright with no findings).
    CrossDocFindings cross;
    if (!trends.empty()) {
        CallOutcome outcome = chat_and_parse(build_cross_doc_request(templates, trends),
                                             cross_doc_schema_ok, chat, templates,
                                             opts.max_repair_retries, "cross_doc", "");
        for (auto& rec : outcome.provenance) out.provenance.push_back(std::move(rec));
        for (auto& w : outcome.warnings) out.warnings.push_back(std::move(w));
        if (outcome.parsed_ok) {
            for (const auto& c : outcome.parsed["correlations"]) {
                CrossCorrelation corr;
                corr.subjects = c["subjects"].get<std::vector<std::string>>();
                corr.periods = c.value("periods", std::vector<std::string>{});
                corr.rationale = c["rationale"].get<std::string>();
                std::vector<std::string> dropped;
                corr.cited_chunk_ids =
                    resolve_citations(c.value("cited_chunk_ids", std::vector<std::string>{}),
                                      case_chunk_ids, dropped);
                for (const auto& id : dropped) {
                    out.warnings.push_back("cross_doc: dropped unresolvable citation \"" + id +
                                           "\" (unanchored)");
                }
                cross.correlations.push_back(std::move(corr));
            }
        }
    }

    // Phase 2b: synthesis.
    CallOutcome outcome = chat_and_parse(build_synthesize_request(templates, singles, cross),
                                         issues_schema_ok, chat, templates,
                                         opts.max_repair_retries, "synthesize", "");
    for (auto& rec : outcome.provenance) out.provenance.push_back(std::move(rec));
    for (auto& w : outcome.warnings) out.warnings.push_back(std::move(w));
    if (outcome.parsed_ok) {
        std::set<std::string> dedup_keys;
        for (const auto& item : outcome.parsed["issues"]) {
            InferredIssue issue;
            issue.report_ids = item["report_ids"].get<std::vector<std::string>>();
            issue.summary = item["summary"].get<std::string>();
            std::vector<std::string> sorted_reports = issue.report_ids;
            std::sort(sorted_reports.begin(), sorted_reports.end());
            const std::string key = issue.summary + "\x1f" + join(sorted_reports, "\x1f");
            if (!dedup_keys.insert(key).second) {
                out.warnings.push_back("synthesize: dropped duplicate issue \"" + issue.summary +
                                       "\"");
                continue;
            }
            for (const auto& e : item["evidence"]) {
                EvidenceEntry entry;
                entry.text = e["text"].get<std::string>();
                std::vector<std::string> dropped;
                entry.chunk_ids = resolve_citations(e["chunk_ids"].get<std::vector<std::string>>(),
                                                    case_chunk_ids, dropped);
                for (const auto& id : dropped) {
                    out.warnings.push_back("synthesize: dropped unresolvable citation \"" + id +
                                           "\" (unanchored)");
                }
                if (entry.chunk_ids.empty()) {
                    entry.unanchored = true;
                    if (dropped.empty()) {
                        out.warnings.push_back("synthesize: evidence entry without citations in \"" +
                                               issue.summary + "\" (unanchored)");
                    }
                }
                issue.evidence.push_back(std::move(entry));
            }
            out.issues.push_back(std::move(issue));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// InferredIssueSet persistence
// ---------------------------------------------------------------------------

std::string InferredIssueSet::to_json() const {
    json issues_json = json::array();
    for (const auto& issue : issues) {
        json evidence = json::array();
        for (const auto& e : issue.evidence) {
            evidence.push_back(json{
                {"text", e.text}, {"chunk_ids", e.chunk_ids}, {"unanchored", e.unanchored}});
        }
        issues_json.push_back(json{{"report_ids", issue.report_ids},
                                   {"summary", issue.summary},
                                   {"evidence", evidence}});
    }
    json provenance_json = json::array();
    for (const auto& rec : provenance) {
        provenance_json.push_back(json{{"expert", rec.expert},
                                       {"target", rec.target},
                                       {"prompt_digest", rec.prompt_digest},
                                       {"response", rec.response},
                                       {"ok", rec.ok},
                                       {"error", rec.error}});
    }
    return json{{"case_id", case_id},
                {"issues", issues_json},
                {"provenance", provenance_json},
                {"warnings", warnings}}
        .dump();
}

InferredIssueSet InferredIssueSet::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed inferred issue set JSON: ") + e.what());
    }
    InferredIssueSet out;
    try {
        out.case_id = j.at("case_id").get<std::string>();
        for (const auto& item : j.at("issues")) {
            InferredIssue issue;
            issue.report_ids = item.at("report_ids").get<std::vector<std::string>>();
            issue.summary = item.at("summary").get<std::string>();
            for (const auto& e : item.value("evidence", json::array())) {
                EvidenceEntry entry;
                entry.text = e.at("text").get<std::string>();
                entry.chunk_ids = e.value("chunk_ids", std::vector<std::string>{});
                entry.unanchored = e.value("unanchored", false);
                issue.evidence.push_back(std::move(entry));
            }
            out.issues.push_back(std::move(issue));
        }
        for (const auto& p : j.value("provenance", json::array())) {
            out.provenance.push_back(ProvenanceRecord{
                p.at("expert").get<std::string>(), p.value("target", std::string()),
                p.at("prompt_digest").get<std::string>(), p.value("response", std::string()),
                p.value("ok", false), p.value("error", std::string())});
        }
        out.warnings = j.value("warnings", std::vector<std::string>{});
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid inferred issue set JSON: ") + e.what());
    }
    return out;
}

void save_issue_sets(const std::string& path, const std::vector<InferredIssueSet>& sets) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write issue sets: " + path);
    for (const auto& s : sets) out << s.to_json() << "\n";
}

std::vector<InferredIssueSet> load_issue_sets(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open issue sets: " + path);
    std::vector<InferredIssueSet> sets;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            sets.push_back(InferredIssueSet::from_json(line));
        } catch (const ParseError& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return sets;
}

}  // namespace fraudlens
