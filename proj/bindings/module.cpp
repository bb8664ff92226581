// Python bindings for the pipeline's main operations. Each wrapper takes
// paths and plain options, runs the corresponding stage (or library call),
// and returns plain dicts/lists so the Python side needs no mirrored types.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fraudlens/dataset.hpp"
#include "fraudlens/errors.hpp"
#include "fraudlens/metrics.hpp"
#include "fraudlens/pipeline.hpp"
#include "fraudlens/prior.hpp"
#include "fraudlens/providers.hpp"
#include "fraudlens/retrieval.hpp"

namespace py = pybind11;
using namespace fraudlens;

namespace {

MatcherConfig make_matcher(const std::string& kind, double tau) {
    MatcherConfig cfg;
    cfg.kind = matcher_kind_from_string(kind);
    cfg.tau = tau;
    cfg.validate();
    return cfg;
}

py::dict report_to_dict(const RecallReport& report) {
    py::dict out;
    out["R_I"] = report.r_i;
    out["R_E"] = report.r_e;
    out["n_cases"] = report.n_cases;
    out["n_skipped"] = report.n_skipped;
    py::dict per_case;
    for (const auto& row : report.per_case) {
        py::dict entry;
        entry["R_I"] = row.r_i;
        entry["R_E"] = row.r_e;
        entry["n_gold"] = row.n_gold;
        entry["n_pred"] = row.n_pred;
        per_case[py::str(row.case_id)] = std::move(entry);
    }
    out["per_case"] = std::move(per_case);
    out["warnings"] = report.warnings;
    return out;
}

py::dict py_synth(const std::string& out_dir, int n_cases, int periods, int min_subjects,
                  int max_subjects, int start_year, std::uint64_t seed) {
    PipelineConfig cfg;
    cfg.out_dir = out_dir;
    cfg.seed = seed;
    cfg.synth.n_cases = n_cases;
    cfg.synth.periods_per_case = periods;
    cfg.synth.min_subjects_per_case = min_subjects;
    cfg.synth.max_subjects_per_case = max_subjects;
    cfg.synth.start_year = start_year;
    std::ostringstream log;
    const SynthResult result = run_synth(cfg, log);
    py::dict out;
    out["n_cases"] = result.cases.cases.size();
    out["n_documents"] = result.documents.size();
    out["n_planted_issues"] = result.plan.size();
    out["cases_path"] = cfg.cases_file();
    return out;
}

py::dict py_fit_prior(const std::string& cases, const std::string& out_dir, int epochs,
                      double learning_rate, int mc_samples, std::uint64_t seed, double alpha,
                      double beta, const std::string& vocab) {
    PipelineConfig cfg;
    cfg.out_dir = out_dir;
    cfg.cases_path = cases;
    cfg.vocab_path = vocab;
    cfg.fit.epochs = epochs;
    cfg.fit.learning_rate = learning_rate;
    cfg.fit.mc_samples = mc_samples;
    cfg.fit.seed = seed;
    cfg.prior.alpha = alpha;
    cfg.prior.beta = beta;
    std::ostringstream log;
    PriorEstimates est;
    {
        py::gil_scoped_release release;
        est = run_fit_prior(cfg, log);
    }
    py::dict out;
    out["n_subjects"] = est.vocab_ids.size();
    out["final_elbo"] = est.meta.final_elbo;
    out["prior_path"] = cfg.prior_file();
    return out;
}

std::vector<std::pair<std::string, double>> py_rank_subjects(const std::string& prior_path,
                                                             std::size_t k) {
    const PriorEstimates est = load_prior(prior_path);
    std::vector<std::pair<std::string, double>> out;
    for (const auto& r : rank_subjects(est, k)) out.emplace_back(r.subject_id, r.score);
    return out;
}

std::vector<std::tuple<std::string, std::string, double>> py_top_associations(
    const std::string& prior_path, std::size_t m) {
    const PriorEstimates est = load_prior(prior_path);
    std::vector<std::tuple<std::string, std::string, double>> out;
    for (const auto& a : top_associations(est, m)) {
        out.emplace_back(a.subject_a, a.subject_b, a.weight);
    }
    return out;
}

py::dict py_build_index(const std::string& cases, const std::string& out_dir,
                        const std::string& docs_dir) {
    PipelineConfig cfg;
    cfg.out_dir = out_dir;
    cfg.cases_path = cases;
    cfg.docs_dir = docs_dir;
    std::ostringstream log;
    ChunkIndex index;
    {
        py::gil_scoped_release release;
        index = run_index(cfg, log);
    }
    py::dict out;
    out["n_chunks"] = index.chunks().size();
    out["n_documents"] = index.document_ids().size();
    out["index_dir"] = cfg.index_directory();
    return out;
}

std::vector<std::pair<std::string, double>> py_search(const std::string& index_dir,
                                                      const std::string& query, std::size_t n,
                                                      const std::string& route,
                                                      const std::optional<std::string>& doc_id) {
    const ChunkIndex index = load_index(index_dir);
    const std::string* filter = doc_id ? &*doc_id : nullptr;
    std::vector<ScoredChunk> hits;
    if (route == "sparse") {
        hits = sparse_search(index, query, n, filter);
    } else if (route == "dense") {
        ProviderConfig embed_cfg;
        embed_cfg.kind = ProviderKind::hashed_embed;
        hits = dense_search(index, query, EmbedProvider(embed_cfg), n, filter);
    } else {
        throw ValidationError("unknown search route \"" + route + "\" (use sparse or dense)");
    }
    std::vector<std::pair<std::string, double>> out;
    for (const auto& hit : hits) out.emplace_back(hit.chunk_id, hit.score);
    return out;
}

py::dict py_evaluate(const std::string& cases, const std::string& issues,
                     const std::string& matcher, double tau) {
    const CaseSet golds = load_cases(cases);
    const std::vector<InferredIssueSet> preds = load_issue_sets(issues);
    const RecallReport report = evaluate(golds, preds, make_matcher(matcher, tau));
    return report_to_dict(report);
}

py::dict py_run_all(const std::string& out_dir, std::uint64_t seed, int n_cases, int periods,
                    const std::string& matcher, double tau, bool no_prior, bool offline,
                    double fail_fraction, const std::string& cases, std::size_t top_k_subjects,
                    std::size_t top_n) {
    PipelineConfig cfg;
    cfg.out_dir = out_dir;
    cfg.seed = seed;
    cfg.synth.n_cases = n_cases;
    cfg.synth.periods_per_case = periods;
    cfg.cases_path = cases;
    cfg.matcher = make_matcher(matcher, tau);
    cfg.no_prior = no_prior;
    cfg.offline = offline;
    cfg.fail_fraction = fail_fraction;
    cfg.retrieval.top_k_subjects = top_k_subjects;
    cfg.retrieval.top_n = top_n;
    std::ostringstream log;
    RecallReport report;
    {
        py::gil_scoped_release release;
        report = run_all(cfg, log);
    }
    py::dict out = report_to_dict(report);
    out["report_path"] = cfg.report_file();
    out["issues_path"] = cfg.issues_file();
    return out;
}

double py_pseudo_log_likelihood(const std::vector<std::vector<int>>& rows,
                                const std::vector<double>& theta,
                                const std::vector<double>& w_upper) {
    if (rows.empty()) throw ValidationError("incidence matrix needs at least one row");
    const std::size_t h = theta.size();
    IncidenceMatrix x(rows.size(), h);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != h) {
            throw ValidationError("incidence row " + std::to_string(i) +
                                  " length does not match theta");
        }
        for (std::size_t k = 0; k < h; ++k) x.set(i, k, rows[i][k] != 0);
    }
    PairwiseWeights w(h);
    if (!w_upper.empty()) {
        if (w_upper.size() != PairwiseWeights::pair_count(h)) {
            throw ValidationError("w_upper must hold the strict upper triangle (" +
                                  std::to_string(PairwiseWeights::pair_count(h)) + " values)");
        }
        w = PairwiseWeights(h, w_upper);
    }
    return pseudo_log_likelihood(x, theta, w);
}

std::vector<std::string> py_default_vocabulary() {
    const SubjectVocabulary vocab = default_vocabulary();
    std::vector<std::string> ids;
    for (const auto& s : vocab.subjects()) ids.push_back(s.id);
    return ids;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Fraud-evidence discovery pipeline: prior fitting, retrieval, "
              "expert orchestration, and recall evaluation.";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<ProviderError>(m, "ProviderError", PyExc_RuntimeError);

    m.def("synth", &py_synth, py::arg("out_dir"), py::arg("n_cases") = 5,
          py::arg("periods") = 3, py::arg("min_subjects") = 1, py::arg("max_subjects") = 3,
          py::arg("start_year") = 2020, py::arg("seed") = 42,
          "Generate a synthetic case set with planted evidence under out_dir.");

    m.def("fit_prior", &py_fit_prior, py::arg("cases"), py::arg("out_dir"),
          py::arg("epochs") = 500, py::arg("learning_rate") = 0.05, py::arg("mc_samples") = 8,
          py::arg("seed") = 0, py::arg("alpha") = 1.0, py::arg("beta") = 4.0,
          py::arg("vocab") = std::string(),
          "Fit the variational subject prior on a case file; writes prior.json.");

    m.def("rank_subjects", &py_rank_subjects, py::arg("prior"), py::arg("k") = 15,
          "Top-k (subject_id, score) pairs from a fitted prior file.");

    m.def("top_associations", &py_top_associations, py::arg("prior"), py::arg("m") = 10,
          "Strongest positive (subject_a, subject_b, weight) couplings.");

    m.def("build_index", &py_build_index, py::arg("cases"), py::arg("out_dir"),
          py::arg("docs_dir") = std::string(),
          "Chunk, tag, and embed every case document into a persisted index.");

    m.def("search", &py_search, py::arg("index_dir"), py::arg("query"), py::arg("n") = 10,
          py::arg("route") = "sparse", py::arg("doc_id") = std::nullopt,
          "Query a persisted index; route is \"sparse\" (BM25) or \"dense\" (cosine).");

    m.def("evaluate", &py_evaluate, py::arg("cases"), py::arg("issues"),
          py::arg("matcher") = "exact", py::arg("tau") = 0.5,
          "Issue/evidence recall of an inferred-issue file against gold cases.");

    m.def("run_all", &py_run_all, py::arg("out_dir"), py::arg("seed") = 42,
          py::arg("n_cases") = 5, py::arg("periods") = 3, py::arg("matcher") = "exact",
          py::arg("tau") = 0.5, py::arg("no_prior") = false, py::arg("offline") = true,
          py::arg("fail_fraction") = 0.0, py::arg("cases") = std::string(),
          py::arg("top_k_subjects") = 15, py::arg("top_n") = 8,
          "Run the whole pipeline into out_dir and return the recall report.");

    m.def("pseudo_log_likelihood", &py_pseudo_log_likelihood, py::arg("rows"), py::arg("theta"),
          py::arg("w_upper") = std::vector<double>{},
          "Pseudo-log-likelihood of a binary incidence matrix under (theta, W).");

    m.def("default_vocabulary", &py_default_vocabulary,
          "Ids of the built-in accounting-subject vocabulary.");
}
