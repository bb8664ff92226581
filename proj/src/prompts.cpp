#include <filesystem>
#include <fstream>

#include "fraudlens/errors.hpp"
#include "fraudlens/experts.hpp"

namespace fraudlens {

namespace {

constexpr const char* kSingleDoc =
    R"(You are reviewing one financial report for signs of accounting fraud.

Subjects under review:
{{subject_list}}

Document excerpts (each begins with its chunk id in brackets):
{{chunks}}

Identify contradictions and risk signals in this report. Reply with JSON only, matching:
{"findings": [{"subject": "<subject id>", "risk_signal": "<short description>", "cited_chunk_ids": ["<chunk id>"]}]}
Cite only chunk ids that appear above. Use an empty findings list if nothing is suspicious.
)";

constexpr const char* kSubjectTrend =
    R"(You are analyzing one accounting subject across consecutive reporting periods.

Subject:
{{subject_list}}

Evidence by period, in chronological order:
{{period_series}}

Describe what each period shows for this subject and flag any anomalous trend. Reply with JSON only, matching:
{"subject": "<subject id>", "period_series": [{"period_label": "<label>", "metric_observations": "<text>"}], "anomaly_notes": "<text, empty string if none>"}
)";

constexpr const char* kCrossDoc =
    R"(You are correlating per-subject trend findings across an entire case.

Trend findings by subject, in priority order:
{{findings}}

Identify suspicious cross-subject correlations. Reply with JSON only, matching:
{"correlations": [{"subjects": ["<subject id>"], "periods": ["<label>"], "rationale": "<text>", "cited_chunk_ids": ["<chunk id>"]}]}
Use an empty correlations list if nothing correlates.
)";

constexpr const char* kSynthesize =
    R"(You are the synthesis expert for a fraud investigation. Merge the findings below into distinct fraud issues.

{{findings}}

Merge overlapping alerts into one issue each, drop alerts contradicted by other findings, and emit one entry per distinct issue. Reply with JSON only, matching:
{"issues": [{"report_ids": ["<doc id>"], "summary": "<one sentence>", "evidence": [{"text": "<supporting fact>", "chunk_ids": ["<chunk id>"]}]}]}
report_ids must name the documents the issue manifests in; never emit an issue without report_ids.
)";

constexpr const char* kRepair =
    R"(Your previous reply could not be parsed as the required JSON. Respond again with only a single valid JSON value matching the requested schema - no prose, no code fences.
)";

std::string read_template(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open prompt template: " + path.string());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

PromptTemplates PromptTemplates::builtin() {
    return PromptTemplates{kSingleDoc, kSubjectTrend, kCrossDoc, kSynthesize, kRepair};
}

PromptTemplates PromptTemplates::load(const std::string& dir) {
    const std::filesystem::path base(dir);
    return PromptTemplates{read_template(base / "single_doc.txt"),
                           read_template(base / "subject_trend.txt"),
                           read_template(base / "cross_doc.txt"),
                           read_template(base / "synthesize.txt"),
                           read_template(base / "repair.txt")};
}

}  // namespace fraudlens
