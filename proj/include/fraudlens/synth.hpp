#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fraudlens/dataset.hpp"

namespace fraudlens {

struct SynthSpec {
    int n_cases = 5;
    int periods_per_case = 3;
    int min_subjects_per_case = 1;
    int max_subjects_per_case = 3;
    int start_year = 2020;
    // Subjects eligible for planting; empty means every subject with a
    // built-in fraud template.
    std::vector<std::string> subject_pool;

    void validate(const SubjectVocabulary& vocab) const;
};

struct PlantingRecord {
    std::string doc_id;
    std::vector<std::string> section_path;
    std::string sentence;  // planted verbatim
};

// issue key -> exact locations of every planted evidence sentence.
using PlantingPlan = std::map<std::string, std::vector<PlantingRecord>>;

std::string issue_key(const std::string& case_id, std::size_t issue_index);

void save_plan(const std::string& path, const PlantingPlan& plan);
PlantingPlan load_plan(const std::string& path);

struct SynthResult {
    CaseSet cases;
    PlantingPlan plan;
    std::map<std::string, std::string> documents;  // doc_id -> full text
};

// Ids of the subjects with built-in fraud templates, in vocabulary order.
std::vector<std::string> templated_subjects();

// Pure function of (spec, seed): templated annual reports with hierarchical
// headings, one notes subsection per vocabulary subject, and sentinel
// evidence sentences planted verbatim in exactly the documents each issue's
// report_ids name.
SynthResult synthesize_corpus(const SynthSpec& spec, std::uint64_t seed,
                              const SubjectVocabulary& vocab);

// Writes cases.ndjson, plan.json, and docs/<doc_id>.txt under out_dir.
void write_synth_output(const SynthResult& result, const std::string& out_dir);

}  // namespace fraudlens
