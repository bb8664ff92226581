#include "fraudlens/dataset.hpp"

#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "fraudlens/errors.hpp"
#include "fraudlens/text.hpp"

namespace fraudlens {

using nlohmann::json;

PeriodKey parse_period_key(const std::string& period_label) {
    // Year: first run of exactly four digits.
    int year = -1;
    for (std::size_t i = 0; i + 4 <= period_label.size(); ++i) {
        if (i > 0 && std::isdigit(static_cast<unsigned char>(period_label[i - 1]))) continue;
        bool four = true;
        for (std::size_t k = 0; k < 4; ++k) {
            if (!std::isdigit(static_cast<unsigned char>(period_label[i + k]))) {
                four = false;
                break;
            }
        }
        if (four && (i + 4 == period_label.size() ||
                     !std::isdigit(static_cast<unsigned char>(period_label[i + 4])))) {
            year = std::stoi(period_label.substr(i, 4));
            break;
        }
    }
    if (year < 0) {
        throw ValidationError("period label has no four-digit year: \"" + period_label + "\"");
    }
    const std::string lower = to_lower_ascii(period_label);
    int seq = 4;  // annual unless a shorter period is named
    if (lower.find("semi") != std::string::npos || lower.find("interim") != std::string::npos ||
        lower.find("h1") != std::string::npos) {
        seq = 2;
    } else if (lower.find("q1") != std::string::npos || lower.find("first quarter") != std::string::npos) {
        seq = 1;
    } else if (lower.find("q3") != std::string::npos || lower.find("third quarter") != std::string::npos) {
        seq = 3;
    }
    return PeriodKey{year, seq};
}

const DocumentRef* CaseRecord::find_document(const std::string& doc_id) const {
    for (const auto& doc : documents) {
        if (doc.doc_id == doc_id) return &doc;
    }
    return nullptr;
}

const CaseRecord* CaseSet::find_case(const std::string& case_id) const {
    for (const auto& c : cases) {
        if (c.case_id == case_id) return &c;
    }
    return nullptr;
}

SubjectVocabulary::SubjectVocabulary(std::vector<SubjectInfo> subjects) : subjects_(std::move(subjects)) {
    std::unordered_set<std::string> seen;
    for (const auto& s : subjects_) {
        if (s.id.empty()) throw ValidationError("subject with empty id");
        if (!seen.insert(s.id).second) {
            throw ValidationError("duplicate subject id in vocabulary: " + s.id);
        }
    }
}

std::optional<std::size_t> SubjectVocabulary::index_of(const std::string& id) const {
    for (std::size_t i = 0; i < subjects_.size(); ++i) {
        if (subjects_[i].id == id) return i;
    }
    return std::nullopt;
}

IncidenceMatrix::IncidenceMatrix(std::size_t n_cases, std::size_t n_subjects)
    : n_cases_(n_cases), n_subjects_(n_subjects), cells_(n_cases * n_subjects, 0) {}

void IncidenceMatrix::validate() const {
    if (n_cases_ < 1) throw ValidationError("incidence matrix needs at least one case");
    if (n_subjects_ < 2) throw ValidationError("incidence matrix needs at least two subjects");
}

namespace {

json issue_to_json(const FraudIssue& issue) {
    json j{{"report_ids", issue.report_ids},
           {"summary", issue.summary},
           {"evidence", issue.evidence},
           {"subjects", issue.subjects}};
    if (issue.subjects_unannotated) j["subjects_unannotated"] = true;
    return j;
}

FraudIssue issue_from_json(const json& j, const std::string& where) {
    FraudIssue issue;
    issue.report_ids = j.at("report_ids").get<std::vector<std::string>>();
    issue.summary = j.at("summary").get<std::string>();
    if (j.contains("evidence")) issue.evidence = j.at("evidence").get<std::vector<std::string>>();
    if (j.contains("subjects")) issue.subjects = j.at("subjects").get<std::vector<std::string>>();
    issue.subjects_unannotated = j.value("subjects_unannotated", false);
    if (issue.report_ids.empty()) {
        throw ValidationError(where + ": issue has empty report_ids");
    }
    if (issue.summary.empty()) {
        throw ValidationError(where + ": issue has empty summary");
    }
    if (issue.subjects.empty() && !issue.subjects_unannotated) {
        throw ValidationError(where + ": issue has no subjects and is not marked subjects_unannotated");
    }
    return issue;
}

void validate_case(const CaseRecord& rec) {
    std::unordered_set<std::string> doc_ids;
    for (const auto& doc : rec.documents) {
        if (!doc_ids.insert(doc.doc_id).second) {
            throw ValidationError("case " + rec.case_id + ": duplicate doc_id " + doc.doc_id);
        }
        parse_period_key(doc.period_label);  // must be parseable
    }
    for (const auto& issue : rec.issues) {
        for (const auto& rid : issue.report_ids) {
            if (!doc_ids.count(rid)) {
                throw ValidationError("case " + rec.case_id + ": issue references unknown document \"" +
                                      rid + "\"");
            }
        }
    }
}

}  // namespace

CaseSet load_cases(const std::string& path, const LoadOptions& opts) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open case file: " + path);

    CaseSet result;
    std::unordered_set<std::string> case_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": malformed JSON: " + e.what());
        }
        CaseRecord rec;
        try {
            rec.case_id = j.at("case_id").get<std::string>();
            for (const auto& dj : j.at("documents")) {
                rec.documents.push_back(DocumentRef{dj.at("doc_id").get<std::string>(),
                                                    dj.at("period_label").get<std::string>(),
                                                    dj.at("path").get<std::string>()});
            }
            for (const auto& ij : j.value("issues", json::array())) {
                rec.issues.push_back(issue_from_json(ij, "case " + rec.case_id));
            }
        } catch (const json::exception& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        validate_case(rec);
        if (!case_ids.insert(rec.case_id).second) {
            throw ValidationError(path + ":" + std::to_string(line_no) + ": duplicate case_id " +
                                  rec.case_id);
        }
        result.cases.push_back(std::move(rec));
    }
    if (result.cases.empty() && opts.warnings) {
        opts.warnings->push_back("case file is empty: " + path);
    }
    return result;
}

void save_cases(const std::string& path, const CaseSet& cases) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write case file: " + path);
    for (const auto& rec : cases.cases) {
        json docs = json::array();
        for (const auto& doc : rec.documents) {
            docs.push_back({{"doc_id", doc.doc_id},
                            {"period_label", doc.period_label},
                            {"path", doc.path}});
        }
        json issues = json::array();
        for (const auto& issue : rec.issues) issues.push_back(issue_to_json(issue));
        out << json{{"case_id", rec.case_id}, {"documents", docs}, {"issues", issues}}.dump()
            << "\n";
    }
}

SubjectVocabulary load_vocabulary(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open vocabulary file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(path + ": malformed JSON: " + e.what());
    }
    std::vector<SubjectInfo> subjects;
    for (const auto& sj : j) {
        subjects.push_back(SubjectInfo{sj.at("id").get<std::string>(), sj.at("name").get<std::string>(),
                                       sj.value("level", "secondary")});
    }
    return SubjectVocabulary(std::move(subjects));
}

void save_vocabulary(const std::string& path, const SubjectVocabulary& vocab) {
    json j = json::array();
    for (const auto& s : vocab.subjects()) {
        j.push_back({{"id", s.id}, {"name", s.name}, {"level", s.level}});
    }
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write vocabulary file: " + path);
    out << j.dump(2) << "\n";
}

SubjectVocabulary default_vocabulary() {
    return SubjectVocabulary({
        {"current_assets", "Current Assets", "primary"},
        {"non_current_assets", "Non-current Assets", "primary"},
        {"current_liabilities", "Current Liabilities", "primary"},
        {"non_current_liabilities", "Non-current Liabilities", "primary"},
        {"shareholders_equity", "Shareholders' Equity", "primary"},
        {"operating_results", "Operating Results", "primary"},
        {"monetary_funds", "Monetary Funds", "secondary"},
        {"accounts_receivable", "Accounts Receivable", "secondary"},
        {"other_receivables", "Other Receivables", "secondary"},
        {"prepayments", "Prepayments", "secondary"},
        {"inventory", "Inventory", "secondary"},
        {"fixed_assets", "Fixed Assets", "secondary"},
        {"construction_in_progress", "Construction in Progress", "secondary"},
        {"intangible_assets", "Intangible Assets", "secondary"},
        {"goodwill", "Goodwill", "secondary"},
        {"long_term_equity_investments", "Long-term Equity Investments", "secondary"},
        {"accounts_payable", "Accounts Payable", "secondary"},
        {"other_payables", "Other Payables", "secondary"},
        {"deferred_revenue", "Deferred Revenue", "secondary"},
        {"short_term_borrowings", "Short-term Borrowings", "secondary"},
        {"operating_revenue", "Operating Revenue", "secondary"},
        {"operating_costs", "Operating Costs", "secondary"},
        {"selling_expenses", "Selling Expenses", "secondary"},
        {"rd_expenses", "R&D Expenses", "secondary"},
        {"operating_cash_flow", "Operating Cash Flow", "secondary"},
        {"related_party_transactions", "Related-Party Transactions", "secondary"},
    });
}

IncidenceMatrix build_incidence_matrix(const CaseSet& cases, const SubjectVocabulary& vocab,
                                       bool allow_unannotated) {
    IncidenceMatrix x(cases.cases.size(), vocab.size());
    for (std::size_t i = 0; i < cases.cases.size(); ++i) {
        const auto& rec = cases.cases[i];
        for (const auto& issue : rec.issues) {
            if (issue.subjects.empty()) {
                if (!allow_unannotated) {
                    throw ValidationError("case " + rec.case_id +
                                          ": issue without subject annotations (\"" + issue.summary +
                                          "\")");
                }
                continue;
            }
            for (const auto& sid : issue.subjects) {
                const auto idx = vocab.index_of(sid);
                if (!idx) {
                    throw ValidationError("case " + rec.case_id + ": subject \"" + sid +
                                          "\" is not in the vocabulary");
                }
                x.set(i, *idx, true);
            }
        }
    }
    return x;
}

}  // namespace fraudlens
