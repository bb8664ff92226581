#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fraudlens/errors.hpp"
#include "fraudlens/pipeline.hpp"

namespace {

using fraudlens::PipelineConfig;

// Every config field a flag can override. One instance is shared across
// subcommands; only the parsed subcommand reads it, and only flags the user
// actually passed (option count > 0) are applied on top of the config file.
struct Overrides {
    std::string config;

    std::string out_dir;
    std::uint64_t seed = 0;
    bool no_prior = false;
    bool offline = false;

    std::string cases, docs_dir, vocab, index_dir, prior, prompts_dir, scripts;

    std::size_t top_k_subjects = 0, top_n = 0, route_depth = 0, max_variants = 0;
    double notes_boost = 0.0, k_rrf = 0.0;
    int parallelism = 0, max_repair_retries = 0;

    int n_cases = 0, periods = 0, min_subjects = 0, max_subjects = 0, start_year = 0;
    int epochs = 0, mc_samples = 0;
    double learning_rate = 0.0;

    std::string matcher;
    double tau = 0.0;
    double fail_fraction = 0.0;

    std::size_t top_k = 15, top_m = 10;
};

void add_common_flags(CLI::App* sub, Overrides& o) {
    sub->add_option("--config", o.config, "JSON config file; flags override its fields");
    sub->add_option("--out-dir", o.out_dir, "output directory (default: out)");
    sub->add_option("--seed", o.seed, "deterministic seed for every stage");
    sub->add_flag("--no-prior", o.no_prior, "ablation: retrieve over the full vocabulary");
    sub->add_flag("--offline", o.offline, "reject http provider kinds");
    sub->add_option("--cases", o.cases, "gold cases ndjson");
    sub->add_option("--docs-dir", o.docs_dir, "directory holding <doc_id>.txt reports");
    sub->add_option("--vocab", o.vocab, "subject vocabulary JSON (default: built-in)");
    sub->add_option("--index-dir", o.index_dir, "chunk index directory");
    sub->add_option("--prior", o.prior, "fitted prior JSON");
    sub->add_option("--prompts-dir", o.prompts_dir, "prompt template directory (default: built-in)");
    sub->add_option("--scripts", o.scripts, "scripted chat responses JSON");
    sub->add_option("--top-k-subjects", o.top_k_subjects, "subjects retrieved per case");
    sub->add_option("--top-n", o.top_n, "chunks kept per (subject, document)");
    sub->add_option("--route-depth", o.route_depth, "candidates per retrieval route");
    sub->add_option("--max-variants", o.max_variants, "query variants per subject");
    sub->add_option("--notes-boost", o.notes_boost, "fused-score boost for notes chunks");
    sub->add_option("--k-rrf", o.k_rrf, "reciprocal-rank-fusion constant");
    sub->add_option("--parallelism", o.parallelism, "phase-1 expert thread bound");
    sub->add_option("--max-repair-retries", o.max_repair_retries,
                    "repair attempts per unparseable expert reply");
}

void add_synth_flags(CLI::App* sub, Overrides& o) {
    sub->add_option("--n-cases", o.n_cases, "synthetic cases to generate");
    sub->add_option("--periods", o.periods, "reporting periods per case");
    sub->add_option("--min-subjects", o.min_subjects, "min planted subjects per case");
    sub->add_option("--max-subjects", o.max_subjects, "max planted subjects per case");
    sub->add_option("--start-year", o.start_year, "first reporting year");
}

void add_fit_flags(CLI::App* sub, Overrides& o) {
    sub->add_option("--epochs", o.epochs, "optimization epochs");
    sub->add_option("--learning-rate", o.learning_rate, "Adam step size");
    sub->add_option("--mc-samples", o.mc_samples, "Monte Carlo samples per ELBO estimate");
}

void add_matcher_flags(CLI::App* sub, Overrides& o) {
    sub->add_option("--matcher", o.matcher, "equivalence matcher: exact | overlap | judge");
    sub->add_option("--tau", o.tau, "token-overlap threshold for the overlap matcher");
}

bool given(const CLI::App* sub, const std::string& name) {
    const CLI::Option* opt = sub->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
}

PipelineConfig build_config(const CLI::App* sub, const Overrides& o) {
    PipelineConfig cfg =
        o.config.empty() ? PipelineConfig{} : PipelineConfig::load(o.config);

    if (given(sub, "--out-dir")) cfg.out_dir = o.out_dir;
    if (given(sub, "--seed")) cfg.seed = o.seed;
    if (given(sub, "--no-prior")) cfg.no_prior = o.no_prior;
    if (given(sub, "--offline")) cfg.offline = o.offline;
    if (given(sub, "--cases")) cfg.cases_path = o.cases;
    if (given(sub, "--docs-dir")) cfg.docs_dir = o.docs_dir;
    if (given(sub, "--vocab")) cfg.vocab_path = o.vocab;
    if (given(sub, "--index-dir")) cfg.index_dir = o.index_dir;
    if (given(sub, "--prior")) cfg.prior_path = o.prior;
    if (given(sub, "--prompts-dir")) cfg.prompts_dir = o.prompts_dir;
    if (given(sub, "--scripts")) cfg.scripts_path = o.scripts;
    if (given(sub, "--top-k-subjects")) cfg.retrieval.top_k_subjects = o.top_k_subjects;
    if (given(sub, "--top-n")) cfg.retrieval.top_n = o.top_n;
    if (given(sub, "--route-depth")) cfg.retrieval.route_depth = o.route_depth;
    if (given(sub, "--max-variants")) cfg.retrieval.max_variants = o.max_variants;
    if (given(sub, "--notes-boost")) cfg.retrieval.notes_boost = o.notes_boost;
    if (given(sub, "--k-rrf")) cfg.retrieval.k_rrf = o.k_rrf;
    if (given(sub, "--parallelism")) cfg.experts.parallelism = o.parallelism;
    if (given(sub, "--max-repair-retries")) cfg.experts.max_repair_retries = o.max_repair_retries;

    if (given(sub, "--n-cases")) cfg.synth.n_cases = o.n_cases;
    if (given(sub, "--periods")) cfg.synth.periods_per_case = o.periods;
    if (given(sub, "--min-subjects")) cfg.synth.min_subjects_per_case = o.min_subjects;
    if (given(sub, "--max-subjects")) cfg.synth.max_subjects_per_case = o.max_subjects;
    if (given(sub, "--start-year")) cfg.synth.start_year = o.start_year;

    if (given(sub, "--epochs")) cfg.fit.epochs = o.epochs;
    if (given(sub, "--learning-rate")) cfg.fit.learning_rate = o.learning_rate;
    if (given(sub, "--mc-samples")) cfg.fit.mc_samples = o.mc_samples;

    if (given(sub, "--matcher")) cfg.matcher.kind = fraudlens::matcher_kind_from_string(o.matcher);
    if (given(sub, "--tau")) cfg.matcher.tau = o.tau;
    if (given(sub, "--fail-fraction")) cfg.fail_fraction = o.fail_fraction;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Expert-guided fraud-evidence discovery pipeline"};
    app.require_subcommand(1);
    Overrides o;
    std::string stage;

    CLI::App* synth = app.add_subcommand("synth", "Generate a planted synthetic corpus");
    add_common_flags(synth, o);
    add_synth_flags(synth, o);
    synth->callback([&] {
        stage = "synth";
        fraudlens::run_synth(build_config(synth, o), std::cout);
    });

    CLI::App* fit = app.add_subcommand("fit-prior", "Fit the subject fraud prior");
    add_common_flags(fit, o);
    add_fit_flags(fit, o);
    fit->callback([&] {
        stage = "fit-prior";
        fraudlens::run_fit_prior(build_config(fit, o), std::cout);
    });

    CLI::App* rank = app.add_subcommand("rank-subjects",
                                        "Print and save top subjects and associations");
    add_common_flags(rank, o);
    rank->add_option("--top-k", o.top_k, "subjects to list");
    rank->add_option("--top-m", o.top_m, "associations to list");
    rank->callback([&] {
        stage = "rank-subjects";
        fraudlens::run_rank_subjects(build_config(rank, o), o.top_k, o.top_m, std::cout);
    });

    CLI::App* index = app.add_subcommand("index", "Chunk, tag, and embed case documents");
    add_common_flags(index, o);
    index->callback([&] {
        stage = "index";
        fraudlens::run_index(build_config(index, o), std::cout);
    });

    CLI::App* retrieve = app.add_subcommand("retrieve",
                                            "Build per-case evidence corpora via hybrid search");
    add_common_flags(retrieve, o);
    retrieve->callback([&] {
        stage = "retrieve";
        fraudlens::run_retrieve(build_config(retrieve, o), std::cout);
    });

    CLI::App* scripts = app.add_subcommand(
        "make-scripts", "Record scripted chat responses for offline expert replay");
    add_common_flags(scripts, o);
    scripts->add_option("--fail-fraction", o.fail_fraction,
                        "fraction of phase-1 experts answered with a provider failure");
    scripts->callback([&] {
        stage = "make-scripts";
        fraudlens::run_make_scripts(build_config(scripts, o), std::cout);
    });

    CLI::App* analyze = app.add_subcommand("analyze", "Run the two-phase expert analysis");
    add_common_flags(analyze, o);
    analyze->callback([&] {
        stage = "analyze";
        fraudlens::run_analyze(build_config(analyze, o), std::cout);
    });

    CLI::App* evaluate = app.add_subcommand("evaluate", "Score inferred issues against gold");
    add_common_flags(evaluate, o);
    add_matcher_flags(evaluate, o);
    evaluate->callback([&] {
        stage = "evaluate";
        fraudlens::run_evaluate(build_config(evaluate, o), std::cout);
    });

    CLI::App* all = app.add_subcommand("run-all", "Synth/load, fit, index, retrieve, analyze, "
                                                  "evaluate in one pass");
    add_common_flags(all, o);
    add_synth_flags(all, o);
    add_fit_flags(all, o);
    add_matcher_flags(all, o);
    all->add_option("--fail-fraction", o.fail_fraction,
                    "fraction of phase-1 experts answered with a provider failure");
    all->callback([&] {
        stage = "run-all";
        fraudlens::run_all(build_config(all, o), std::cout);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const fraudlens::ProviderError& e) {
        std::cerr << "error in stage " << stage << ": " << e.what() << "\n";
        return 4;
    } catch (const fraudlens::ValidationError& e) {
        std::cerr << "error in stage " << (stage.empty() ? "config" : stage) << ": " << e.what()
                  << "\n";
        return 3;
    } catch (const fraudlens::ParseError& e) {
        std::cerr << "error in stage " << (stage.empty() ? "config" : stage) << ": " << e.what()
                  << "\n";
        return 3;
    } catch (const fraudlens::ConfigError& e) {
        std::cerr << "error in stage " << (stage.empty() ? "config" : stage) << ": " << e.what()
                  << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error in stage " << stage << ": " << e.what() << "\n";
        return 5;
    }
    return 0;
}
