#include "fraudlens/synth.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "fraudlens/errors.hpp"
#include "fraudlens/docstore.hpp"
#include "fraudlens/rng.hpp"
#include "fraudlens/text.hpp"

namespace fraudlens {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct FraudTemplate {
    std::string subject_id;
    std::string ref_prefix;
    std::string summary;                 // {{amount}}, {{pct}}, {{counterparty}}
    std::vector<std::string> evidence;   // + {{year}}, {{ref}}, {{amount2}}, {{ref2}}
    bool fixed_pct_50 = false;           // revenue template: +50% against flat cash flow
};

const std::vector<FraudTemplate>& fraud_templates() {
    static const std::vector<FraudTemplate> templates = {
        {"monetary_funds", "MF",
         "Overstated monetary funds by presenting {{amount}} million yuan of pledged deposits as "
         "unrestricted",
         {"Bank deposits of {{amount}} million yuan held at {{counterparty}} were pledged as loan "
          "collateral but reported as freely available monetary funds (audit ref {{ref}})",
          "Interest income implied by the declared cash balance fell short by {{amount2}} million "
          "yuan in {{year}} (audit ref {{ref2}})"}},
        {"accounts_receivable", "AR",
         "Inflated accounts receivable by recognizing {{amount}} million yuan of fictitious "
         "credit sales",
         {"Accounts receivable due from {{counterparty}} grew {{pct}} percent during {{year}} "
          "with no matching delivery records (audit ref {{ref}})",
          "Confirmation letters covering {{amount2}} million yuan of receivables were returned "
          "undeliverable (audit ref {{ref2}})"}},
        {"prepayments", "PP",
         "Diverted {{amount}} million yuan through prepayments to shell suppliers",
         {"Prepayments of {{amount}} million yuan to {{counterparty}} made in {{year}} never "
          "converted into deliveries (audit ref {{ref}})",
          "The prepayment aging schedule shows {{pct}} percent outstanding beyond one year with "
          "no recovery action (audit ref {{ref2}})"}},
        {"inventory", "INV",
         "Overstated inventory by {{amount}} million yuan through fictitious finished goods "
         "balances",
         {"Finished goods of {{amount}} million yuan recorded at the end of {{year}} lacked "
          "corresponding warehouse receipts (audit ref {{ref}})",
          "Provision for inventory depreciation was reversed without support, adding {{amount2}} "
          "million yuan to reported profit (audit ref {{ref2}})"}},
        {"construction_in_progress", "CIP",
         "Parked {{amount}} million yuan of completed-facility costs in construction in progress "
         "to defer depreciation",
         {"Construction in progress for the {{counterparty}} facility stood at {{amount}} million "
          "yuan in {{year}} although the facility reached working condition a year earlier "
          "(audit ref {{ref}})",
          "Transfers from construction in progress to fixed assets were withheld, understating "
          "depreciation by {{amount2}} million yuan (audit ref {{ref2}})"}},
        {"goodwill", "GW",
         "Avoided impairment of the {{counterparty}} acquisition goodwill despite sustained "
         "losses",
         {"Goodwill of {{amount}} million yuan from the {{counterparty}} acquisition was not "
          "tested for impairment although the unit missed every {{year}} earnings target "
          "(audit ref {{ref}})",
          "The recoverable amount supporting goodwill assumed revenue growth of {{pct}} percent "
          "that was never achieved (audit ref {{ref2}})"}},
        {"operating_revenue", "REV",
         "Inflated operating revenue by {{pct}} percent through round-trip transactions",
         {"Operating revenue rose {{pct}} percent in {{year}} while operating cash flow stayed "
          "flat at {{amount}} million yuan (audit ref {{ref}})",
          "Round-trip sales of {{amount2}} million yuan were booked through {{counterparty}} and "
          "reversed shortly after period end (audit ref {{ref2}})"},
         true},
        {"related_party_transactions", "RPT",
         "Concealed related party transactions of {{amount}} million yuan with {{counterparty}}",
         {"Sales of {{amount}} million yuan to {{counterparty}}, an entity controlled by the "
          "chairman, were not disclosed as related party transactions in {{year}} "
          "(audit ref {{ref}})",
          "Fund transfers of {{amount2}} million yuan to {{counterparty}} were routed through a "
          "third-party settlement account (audit ref {{ref2}})"}},
    };
    return templates;
}

const FraudTemplate* find_template(const std::string& subject_id) {
    for (const auto& t : fraud_templates()) {
        if (t.subject_id == subject_id) return &t;
    }
    return nullptr;
}

const std::vector<std::string>& counterparties() {
    static const std::vector<std::string> names = {"Huaxin Trading", "Lanhai Industrial",
                                                   "Jinrui Holdings", "Tianyu Materials",
                                                   "Zhongda Logistics"};
    return names;
}

std::string company_name(Rng& rng) {
    static const std::vector<std::string> cities = {"Hangzhou", "Chengdu", "Qingdao", "Suzhou",
                                                    "Xiamen"};
    static const std::vector<std::string> lines = {"Photonics", "Agritech", "Marine Engineering",
                                                   "New Materials", "Pharmaceutical"};
    return cities[rng.next_below(cities.size())] + " " + lines[rng.next_below(lines.size())] +
           " Group";
}

std::string amount_str(Rng& rng) {
    return std::to_string(rng.next_int(40, 900)) + "." + std::to_string(rng.next_int(0, 9));
}

std::string ref_code(const std::string& prefix, Rng& rng) {
    static const char* hex = "0123456789ABCDEF";
    std::string code;
    for (int i = 0; i < 6; ++i) code.push_back(hex[rng.next_below(16)]);
    return prefix + "-" + code;
}

}  // namespace

void SynthSpec::validate(const SubjectVocabulary& vocab) const {
    if (n_cases < 0) throw ValidationError("n_cases must be >= 0");
    if (periods_per_case < 1) throw ValidationError("periods_per_case must be >= 1");
    if (min_subjects_per_case < 1 || max_subjects_per_case < min_subjects_per_case) {
        throw ValidationError("invalid subjects-per-case range");
    }
    if (static_cast<std::size_t>(max_subjects_per_case) > vocab.size()) {
        throw ValidationError("spec requests more subjects per case than the vocabulary holds");
    }
    std::set<std::string> pool(subject_pool.begin(), subject_pool.end());
    if (pool.size() != subject_pool.size()) {
        throw ValidationError("subject_pool contains duplicates");
    }
    for (const auto& id : subject_pool) {
        if (!vocab.index_of(id)) throw ValidationError("subject_pool id not in vocabulary: " + id);
        if (find_template(id) == nullptr) {
            throw ValidationError("no fraud template for subject: " + id);
        }
    }
    const std::size_t pool_size =
        subject_pool.empty() ? fraud_templates().size() : subject_pool.size();
    if (static_cast<std::size_t>(max_subjects_per_case) > pool_size) {
        throw ValidationError("max_subjects_per_case exceeds the subject pool");
    }
}

std::string issue_key(const std::string& case_id, std::size_t issue_index) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%02zu", issue_index);
    return case_id + "/" + buf;
}

std::vector<std::string> templated_subjects() {
    std::vector<std::string> ids;
    for (const auto& t : fraud_templates()) ids.push_back(t.subject_id);
    return ids;
}

SynthResult synthesize_corpus(const SynthSpec& spec, std::uint64_t seed,
                              const SubjectVocabulary& vocab) {
    spec.validate(vocab);
    Rng rng(seed);
    SynthResult result;

    const std::vector<std::string> pool =
        spec.subject_pool.empty() ? templated_subjects() : spec.subject_pool;

    for (int c = 0; c < spec.n_cases; ++c) {
        CaseRecord rec;
        char case_buf[16];
        std::snprintf(case_buf, sizeof(case_buf), "C%03d", c + 1);
        rec.case_id = case_buf;
        const std::string company = company_name(rng);

        for (int p = 0; p < spec.periods_per_case; ++p) {
            const int year = spec.start_year + p;
            DocumentRef doc;
            doc.doc_id = rec.case_id + "-FY" + std::to_string(year);
            doc.period_label = std::to_string(year) + " Annual Report";
            doc.path = "docs/" + doc.doc_id + ".txt";
            rec.documents.push_back(std::move(doc));
        }

        // Pick the planted subjects: deterministic partial shuffle, then
        // restored to pool order so issue order is stable.
        const int k = rng.next_int(spec.min_subjects_per_case, spec.max_subjects_per_case);
        std::vector<std::string> shuffled = pool;
        for (std::size_t i = 0; i + 1 < shuffled.size(); ++i) {
            const std::size_t j = i + rng.next_below(shuffled.size() - i);
            std::swap(shuffled[i], shuffled[j]);
        }
        std::vector<std::string> chosen(shuffled.begin(), shuffled.begin() + k);
        std::sort(chosen.begin(), chosen.end(), [&](const std::string& a, const std::string& b) {
            return std::find(pool.begin(), pool.end(), a) < std::find(pool.begin(), pool.end(), b);
        });

        // Planted sentences per (doc_id, subject_id), appended to the notes
        // subsection when documents are rendered.
        std::map<std::string, std::map<std::string, std::vector<std::string>>> planted;

        for (const auto& subject_id : chosen) {
            const FraudTemplate* tmpl = find_template(subject_id);
            const std::string counterparty = counterparties()[rng.next_below(counterparties().size())];
            const std::string amount = amount_str(rng);
            const std::string amount2 = amount_str(rng);
            const std::string pct =
                tmpl->fixed_pct_50 ? "50" : std::to_string(rng.next_int(15, 85));
            const std::string ref = ref_code(tmpl->ref_prefix, rng);
            const std::string ref2 = ref_code(tmpl->ref_prefix, rng);

            // The issue manifests in the most recent m reports.
            const int m = rng.next_int(1, spec.periods_per_case);
            std::vector<std::string> report_ids;
            for (int p = spec.periods_per_case - m; p < spec.periods_per_case; ++p) {
                report_ids.push_back(rec.documents[p].doc_id);
            }
            const int first_year = spec.start_year + spec.periods_per_case - m;

            const std::vector<std::pair<std::string, std::string>> values = {
                {"amount", amount},           {"amount2", amount2},
                {"pct", pct},                 {"counterparty", counterparty},
                {"year", std::to_string(first_year)}, {"ref", ref},
                {"ref2", ref2}};

            FraudIssue issue;
            issue.summary = render_template(tmpl->summary, values);
            for (const auto& pattern : tmpl->evidence) {
                issue.evidence.push_back(render_template(pattern, values));
            }
            issue.subjects = {subject_id};
            issue.report_ids = report_ids;
            for (const auto& doc_id : report_ids) {
                for (const auto& sentence : issue.evidence) {
                    planted[doc_id][subject_id].push_back(sentence);
                }
            }
            rec.issues.push_back(std::move(issue));
        }

        // Render one report per period.
        for (int p = 0; p < spec.periods_per_case; ++p) {
            const DocumentRef& doc = rec.documents[p];
            const int year = spec.start_year + p;
            const std::string title =
                std::to_string(year) + " Annual Report of " + company;

            std::string text = "# " + title + "\n\n";
            text += "## Management Discussion and Analysis\n\n";
            text += company + " continued to operate across its established business lines in " +
                    std::to_string(year) + ". Management attributes the reported movements to "
                    "ordinary market conditions. The board reviewed and approved this report in "
                    "full.\n\n";

            text += "## Consolidated Balance Sheet\n\n";
            for (const auto& s : vocab.subjects()) {
                if (s.level != "primary") continue;
                text += s.name + " totaled " + amount_str(rng) + " million yuan (prior year " +
                        amount_str(rng) + " million yuan).\n";
            }
            text += "\n## Consolidated Income Statement\n\n";
            text += "Operating revenue reached " + amount_str(rng) +
                    " million yuan for the year; operating costs were " + amount_str(rng) +
                    " million yuan.\n";
            text += "\n## Consolidated Cash Flow Statement\n\n";
            text += "Net cash flow from operating activities was " + amount_str(rng) +
                    " million yuan.\n";

            text += "\n## " + std::string(kNotesSectionTitle) + "\n\n";
            for (const auto& s : vocab.subjects()) {
                if (s.level == "primary") continue;  // notes detail the secondary subjects
                text += "### " + s.name + "\n\n";
                text += "The balance of " + s.name + " was " + amount_str(rng) +
                        " million yuan at period end (prior year " + amount_str(rng) +
                        " million yuan). Movement during the year reflected ordinary operating "
                        "activity.\n";
                const auto doc_it = planted.find(doc.doc_id);
                if (doc_it != planted.end()) {
                    const auto subj_it = doc_it->second.find(s.id);
                    if (subj_it != doc_it->second.end()) {
                        for (const auto& sentence : subj_it->second) {
                            text += sentence + ".\n";
                        }
                        const std::vector<std::string> section_path = {
                            title, kNotesSectionTitle, s.name};
                        // Record the plan entries in issue order.
                        for (std::size_t ii = 0; ii < rec.issues.size(); ++ii) {
                            const FraudIssue& issue = rec.issues[ii];
                            if (issue.subjects.front() != s.id) continue;
                            if (std::find(issue.report_ids.begin(), issue.report_ids.end(),
                                          doc.doc_id) == issue.report_ids.end()) {
                                continue;
                            }
                            for (const auto& sentence : issue.evidence) {
                                result.plan[issue_key(rec.case_id, ii)].push_back(
                                    PlantingRecord{doc.doc_id, section_path, sentence});
                            }
                        }
                    }
                }
                text += "\n";
            }
            result.documents[doc.doc_id] = std::move(text);
        }
        result.cases.cases.push_back(std::move(rec));
    }
    return result;
}

void write_synth_output(const SynthResult& result, const std::string& out_dir) {
    fs::create_directories(fs::path(out_dir) / "docs");
    save_cases((fs::path(out_dir) / "cases.ndjson").string(), result.cases);
    save_plan((fs::path(out_dir) / "plan.json").string(), result.plan);
    for (const auto& [doc_id, text] : result.documents) {
        std::ofstream out(fs::path(out_dir) / "docs" / (doc_id + ".txt"));
        if (!out) throw ValidationError("cannot write document " + doc_id);
        out << text;
    }
}

void save_plan(const std::string& path, const PlantingPlan& plan) {
    json j = json::object();
    for (const auto& [key, records] : plan) {
        json rows = json::array();
        for (const auto& r : records) {
            rows.push_back(json{{"doc_id", r.doc_id},
                                {"section_path", r.section_path},
                                {"sentence", r.sentence}});
        }
        j[key] = rows;
    }
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write planting plan: " + path);
    out << j.dump(2) << "\n";
}

PlantingPlan load_plan(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open planting plan: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("malformed planting plan " + path + ": " + e.what());
    }
    PlantingPlan plan;
    for (const auto& [key, rows] : j.items()) {
        plan[key];  // keys with zero records round-trip too
        for (const auto& r : rows) {
            plan[key].push_back(PlantingRecord{
                r.at("doc_id").get<std::string>(),
                r.at("section_path").get<std::vector<std::string>>(),
                r.at("sentence").get<std::string>()});
        }
    }
    return plan;
}

}  // namespace fraudlens
