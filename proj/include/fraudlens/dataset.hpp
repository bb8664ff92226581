#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fraudlens {

// Totally ordered key parsed from a period label such as
// "2022 Semi-Annual Report". Within a year: Q1 < semi-annual < Q3 < annual.
struct PeriodKey {
    int year = 0;
    int seq = 0;

    friend auto operator<=>(const PeriodKey&, const PeriodKey&) = default;
};

PeriodKey parse_period_key(const std::string& period_label);

struct DocumentRef {
    std::string doc_id;
    std::string period_label;
    std::string path;  // locator of the extracted text, relative to the case file's directory
};

struct FraudIssue {
    std::vector<std::string> report_ids;
    std::string summary;
    std::vector<std::string> evidence;  // atomic fact statements
    std::vector<std::string> subjects;  // implicated accounting-subject ids
    bool subjects_unannotated = false;
};

struct CaseRecord {
    std::string case_id;
    std::vector<DocumentRef> documents;
    std::vector<FraudIssue> issues;

    const DocumentRef* find_document(const std::string& doc_id) const;
};

struct CaseSet {
    std::vector<CaseRecord> cases;

    const CaseRecord* find_case(const std::string& case_id) const;
};

struct SubjectInfo {
    std::string id;
    std::string name;
    std::string level;  // "primary" | "secondary"
};

class SubjectVocabulary {
public:
    SubjectVocabulary() = default;
    explicit SubjectVocabulary(std::vector<SubjectInfo> subjects);

    std::size_t size() const { return subjects_.size(); }
    const SubjectInfo& at(std::size_t index) const { return subjects_.at(index); }
    const std::vector<SubjectInfo>& subjects() const { return subjects_; }
    std::optional<std::size_t> index_of(const std::string& id) const;

private:
    std::vector<SubjectInfo> subjects_;
};

// Binary case-by-subject observation matrix.
class IncidenceMatrix {
public:
    IncidenceMatrix() = default;
    IncidenceMatrix(std::size_t n_cases, std::size_t n_subjects);

    std::size_t n_cases() const { return n_cases_; }
    std::size_t n_subjects() const { return n_subjects_; }
    std::uint8_t at(std::size_t i, std::size_t h) const { return cells_[i * n_subjects_ + h]; }
    void set(std::size_t i, std::size_t h, bool value) { cells_[i * n_subjects_ + h] = value ? 1 : 0; }
    const std::uint8_t* row(std::size_t i) const { return cells_.data() + i * n_subjects_; }

    // N >= 1, H >= 2.
    void validate() const;

private:
    std::size_t n_cases_ = 0;
    std::size_t n_subjects_ = 0;
    std::vector<std::uint8_t> cells_;
};

struct LoadOptions {
    std::vector<std::string>* warnings = nullptr;  // optional sink
};

// Newline-delimited JSON, one CaseRecord per line. Cross-references are
// validated; an empty file yields an empty CaseSet plus a warning.
CaseSet load_cases(const std::string& path, const LoadOptions& opts = {});
void save_cases(const std::string& path, const CaseSet& cases);

SubjectVocabulary load_vocabulary(const std::string& path);
void save_vocabulary(const std::string& path, const SubjectVocabulary& vocab);

// The built-in accounting-subject vocabulary used by the synthetic corpus.
SubjectVocabulary default_vocabulary();

IncidenceMatrix build_incidence_matrix(const CaseSet& cases, const SubjectVocabulary& vocab,
                                       bool allow_unannotated = true);

}  // namespace fraudlens
