#include "fraudlens/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fraudlens/docstore.hpp"
#include "fraudlens/errors.hpp"

namespace fraudlens {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string fallback(const std::string& configured, const fs::path& default_path) {
    return configured.empty() ? default_path.string() : configured;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

SubjectVocabulary load_vocab(const PipelineConfig& cfg) {
    return cfg.vocab_path.empty() ? default_vocabulary() : load_vocabulary(cfg.vocab_path);
}

PromptTemplates load_templates(const PipelineConfig& cfg) {
    return cfg.prompts_dir.empty() ? PromptTemplates::builtin()
                                   : PromptTemplates::load(cfg.prompts_dir);
}

fs::path document_path(const PipelineConfig& cfg, const std::string& cases_file,
                       const DocumentRef& doc) {
    if (!cfg.docs_dir.empty()) return fs::path(cfg.docs_dir) / (doc.doc_id + ".txt");
    const fs::path declared(doc.path);
    if (declared.is_absolute()) return declared;
    return fs::path(cases_file).parent_path() / declared;
}

// Subjects to retrieve for: the prior's top-k ranking, or the whole
// vocabulary under --no-prior.
std::vector<std::string> subjects_to_retrieve(const PipelineConfig& cfg,
                                              const SubjectVocabulary& vocab, std::ostream& log) {
    std::vector<std::string> ids;
    if (cfg.no_prior) {
        for (const auto& s : vocab.subjects()) ids.push_back(s.id);
        log << "retrieve: no-prior ablation, using all " << ids.size() << " subjects\n";
        return ids;
    }
    const PriorEstimates est = load_prior(cfg.prior_file());
    const std::size_t k = std::min(cfg.retrieval.top_k_subjects, est.vocab_ids.size());
    for (const auto& r : rank_subjects(est, k)) ids.push_back(r.subject_id);
    log << "retrieve: top " << ids.size() << " subjects by prior propensity\n";
    return ids;
}

// Shared by retrieve and run-all: one EvidenceCorpus per case over a common
// index, each restricted to the case's own documents.
std::vector<EvidenceCorpus> retrieve_corpora(const PipelineConfig& cfg, const CaseSet& cases,
                                             const SubjectVocabulary& vocab,
                                             const ChunkIndex& index,
                                             const std::vector<std::string>& subject_ids) {
    const EmbedProvider embed(cfg.embed_provider);
    LexiconQueryExpander expander(default_lexicon());
    std::vector<EvidenceCorpus> corpora;
    for (const auto& rec : cases.cases) {
        std::vector<std::string> doc_ids;
        for (const auto& doc : rec.documents) doc_ids.push_back(doc.doc_id);
        EvidenceCorpus corpus = retrieve_for_subjects(index, subject_ids, vocab, expander, embed,
                                                      cfg.retrieval, &doc_ids);
        corpus.case_id = rec.case_id;
        corpora.push_back(std::move(corpus));
    }
    return corpora;
}

void save_corpora(const PipelineConfig& cfg, const std::vector<EvidenceCorpus>& corpora) {
    const fs::path dir(cfg.corpus_directory());
    fs::create_directories(dir);
    for (const auto& corpus : corpora) {
        save_corpus((dir / (corpus.case_id + ".json")).string(), corpus);
    }
}

std::vector<EvidenceCorpus> load_corpora(const PipelineConfig& cfg, const CaseSet& cases) {
    std::vector<EvidenceCorpus> corpora;
    for (const auto& rec : cases.cases) {
        const fs::path path = fs::path(cfg.corpus_directory()) / (rec.case_id + ".json");
        if (!fs::exists(path)) {
            throw ValidationError("no evidence corpus for case " + rec.case_id + " at " +
                                  path.string() + " (run the retrieve stage first)");
        }
        corpora.push_back(load_corpus(path.string()));
    }
    return corpora;
}

std::vector<InferredIssueSet> analyze_cases(const PipelineConfig& cfg, const CaseSet& cases,
                                            const SubjectVocabulary& vocab,
                                            const ChunkIndex& index,
                                            const std::vector<EvidenceCorpus>& corpora,
                                            const ChatBackend& chat) {
    const PromptTemplates templates = load_templates(cfg);
    std::vector<InferredIssueSet> sets;
    for (std::size_t i = 0; i < cases.cases.size(); ++i) {
        const AnalysisInputs in{&cases.cases[i], &vocab, &corpora[i], &index};
        sets.push_back(analyze_case(in, templates, chat, cfg.experts));
    }
    return sets;
}

GeneratedScripts generate_all_scripts(const PipelineConfig& cfg, const CaseSet& cases,
                                      const SubjectVocabulary& vocab, const ChunkIndex& index,
                                      const std::vector<EvidenceCorpus>& corpora) {
    const PromptTemplates templates = load_templates(cfg);
    const ScriptGenOptions gen{cfg.fail_fraction};
    GeneratedScripts all;
    for (std::size_t i = 0; i < cases.cases.size(); ++i) {
        const AnalysisInputs in{&cases.cases[i], &vocab, &corpora[i], &index};
        GeneratedScripts one = generate_scripts(in, templates, cfg.experts, gen);
        all.n_phase1_jobs += one.n_phase1_jobs;
        all.n_failed += one.n_failed;
        for (const auto& [digest, response] : one.store.responses()) {
            all.store.add(digest, response);
        }
    }
    return all;
}

}  // namespace

// ---------------------------------------------------------------------------
// PipelineConfig
// ---------------------------------------------------------------------------

std::string PipelineConfig::cases_file() const {
    return fallback(cases_path, fs::path(out_dir) / "cases.ndjson");
}
std::string PipelineConfig::prior_file() const {
    return fallback(prior_path, fs::path(out_dir) / "prior.json");
}
std::string PipelineConfig::index_directory() const {
    return fallback(index_dir, fs::path(out_dir) / "index");
}
std::string PipelineConfig::corpus_directory() const {
    return (fs::path(out_dir) / "corpus").string();
}
std::string PipelineConfig::scripts_file() const {
    return fallback(scripts_path, fs::path(out_dir) / "scripts.json");
}
std::string PipelineConfig::issues_file() const {
    return (fs::path(out_dir) / "issues.ndjson").string();
}
std::string PipelineConfig::report_file() const {
    return (fs::path(out_dir) / "report.json").string();
}

void PipelineConfig::validate() const {
    if (out_dir.empty()) throw ValidationError("out_dir must not be empty");
    prior.validate();
    fit.validate();
    retrieval.validate();
    experts.validate();
    chat_provider.validate();
    embed_provider.validate();
    matcher.validate();
    if (!(fail_fraction >= 0.0 && fail_fraction <= 1.0)) {
        throw ValidationError("fail_fraction must be within [0, 1]");
    }
    if (offline) {
        if (chat_provider.kind == ProviderKind::http_chat ||
            embed_provider.kind == ProviderKind::http_embed ||
            (matcher.kind == MatcherKind::judge &&
             matcher.provider.kind == ProviderKind::http_chat)) {
            throw ConfigError("--offline forbids http provider kinds");
        }
    }
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ParseError("malformed config " + path + ": " + e.what());
    }
    if (!j.is_object()) throw ParseError("config must be a JSON object: " + path);

    PipelineConfig cfg;
    try {
        cfg.seed = j.value("seed", cfg.seed);
        cfg.out_dir = j.value("out_dir", cfg.out_dir);
        if (j.contains("paths")) {
            const json& p = j["paths"];
            cfg.cases_path = p.value("cases", cfg.cases_path);
            cfg.docs_dir = p.value("docs_dir", cfg.docs_dir);
            cfg.vocab_path = p.value("vocab", cfg.vocab_path);
            cfg.index_dir = p.value("index_dir", cfg.index_dir);
            cfg.prior_path = p.value("prior", cfg.prior_path);
            cfg.prompts_dir = p.value("prompts_dir", cfg.prompts_dir);
            cfg.scripts_path = p.value("scripts", cfg.scripts_path);
        }
        if (j.contains("synth")) {
            const json& s = j["synth"];
            cfg.synth.n_cases = s.value("n_cases", cfg.synth.n_cases);
            cfg.synth.periods_per_case = s.value("periods_per_case", cfg.synth.periods_per_case);
            cfg.synth.min_subjects_per_case =
                s.value("min_subjects_per_case", cfg.synth.min_subjects_per_case);
            cfg.synth.max_subjects_per_case =
                s.value("max_subjects_per_case", cfg.synth.max_subjects_per_case);
            cfg.synth.start_year = s.value("start_year", cfg.synth.start_year);
            cfg.synth.subject_pool = s.value("subject_pool", cfg.synth.subject_pool);
        }
        if (j.contains("prior")) {
            cfg.prior.alpha = j["prior"].value("alpha", cfg.prior.alpha);
            cfg.prior.beta = j["prior"].value("beta", cfg.prior.beta);
        }
        if (j.contains("fit")) {
            const json& f = j["fit"];
            cfg.fit.epochs = f.value("epochs", cfg.fit.epochs);
            cfg.fit.learning_rate = f.value("learning_rate", cfg.fit.learning_rate);
            cfg.fit.mc_samples = f.value("mc_samples", cfg.fit.mc_samples);
            cfg.fit.fixed_noise = f.value("fixed_noise", cfg.fit.fixed_noise);
        }
        if (j.contains("retrieval")) {
            const json& r = j["retrieval"];
            cfg.retrieval.top_k_subjects = r.value("top_k_subjects", cfg.retrieval.top_k_subjects);
            cfg.retrieval.top_n = r.value("top_n", cfg.retrieval.top_n);
            cfg.retrieval.route_depth = r.value("route_depth", cfg.retrieval.route_depth);
            cfg.retrieval.max_variants = r.value("max_variants", cfg.retrieval.max_variants);
            cfg.retrieval.notes_boost = r.value("notes_boost", cfg.retrieval.notes_boost);
            cfg.retrieval.k_rrf = r.value("k_rrf", cfg.retrieval.k_rrf);
        }
        if (j.contains("experts")) {
            const json& e = j["experts"];
            cfg.experts.parallelism = e.value("parallelism", cfg.experts.parallelism);
            cfg.experts.max_repair_retries =
                e.value("max_repair_retries", cfg.experts.max_repair_retries);
        }
        if (j.contains("chat_provider")) {
            cfg.chat_provider = ProviderConfig::from_json_text(j["chat_provider"].dump());
        }
        if (j.contains("embed_provider")) {
            cfg.embed_provider = ProviderConfig::from_json_text(j["embed_provider"].dump());
        }
        if (j.contains("matcher")) {
            const json& m = j["matcher"];
            if (m.contains("kind")) {
                cfg.matcher.kind = matcher_kind_from_string(m["kind"].get<std::string>());
            }
            cfg.matcher.tau = m.value("tau", cfg.matcher.tau);
            if (m.contains("provider")) {
                cfg.matcher.provider = ProviderConfig::from_json_text(m["provider"].dump());
            }
        }
        cfg.no_prior = j.value("no_prior", cfg.no_prior);
        cfg.offline = j.value("offline", cfg.offline);
        cfg.fail_fraction = j.value("fail_fraction", cfg.fail_fraction);
    } catch (const json::exception& e) {
        throw ParseError("bad field in config " + path + ": " + e.what());
    }
    return cfg;
}

std::string PipelineConfig::to_json() const {
    json j{
        {"seed", seed},
        {"out_dir", out_dir},
        {"paths",
         {{"cases", cases_path},
          {"docs_dir", docs_dir},
          {"vocab", vocab_path},
          {"index_dir", index_dir},
          {"prior", prior_path},
          {"prompts_dir", prompts_dir},
          {"scripts", scripts_path}}},
        {"synth",
         {{"n_cases", synth.n_cases},
          {"periods_per_case", synth.periods_per_case},
          {"min_subjects_per_case", synth.min_subjects_per_case},
          {"max_subjects_per_case", synth.max_subjects_per_case},
          {"start_year", synth.start_year},
          {"subject_pool", synth.subject_pool}}},
        {"prior", {{"alpha", prior.alpha}, {"beta", prior.beta}}},
        {"fit",
         {{"epochs", fit.epochs},
          {"learning_rate", fit.learning_rate},
          {"mc_samples", fit.mc_samples},
          {"fixed_noise", fit.fixed_noise}}},
        {"retrieval",
         {{"top_k_subjects", retrieval.top_k_subjects},
          {"top_n", retrieval.top_n},
          {"route_depth", retrieval.route_depth},
          {"max_variants", retrieval.max_variants},
          {"notes_boost", retrieval.notes_boost},
          {"k_rrf", retrieval.k_rrf}}},
        {"experts",
         {{"parallelism", experts.parallelism},
          {"max_repair_retries", experts.max_repair_retries}}},
        {"chat_provider", json::parse(chat_provider.to_json_text())},
        {"embed_provider", json::parse(embed_provider.to_json_text())},
        {"matcher",
         {{"kind", to_string(matcher.kind)},
          {"tau", matcher.tau},
          {"provider", json::parse(matcher.provider.to_json_text())}}},
        {"no_prior", no_prior},
        {"offline", offline},
        {"fail_fraction", fail_fraction},
    };
    return j.dump(2);
}

void write_config_snapshot(const PipelineConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    std::ofstream out(fs::path(cfg.out_dir) / "config.resolved.json");
    if (!out) throw ValidationError("cannot write config snapshot under " + cfg.out_dir);
    out << cfg.to_json() << "\n";
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

SynthResult run_synth(const PipelineConfig& cfg, std::ostream& log) {
    cfg.validate();
    write_config_snapshot(cfg);
    const SubjectVocabulary vocab = load_vocab(cfg);
    SynthResult result = synthesize_corpus(cfg.synth, cfg.seed, vocab);
    write_synth_output(result, cfg.out_dir);
    std::size_t n_issues = 0;
    for (const auto& rec : result.cases.cases) n_issues += rec.issues.size();
    log << "synth: " << result.cases.cases.size() << " cases, " << result.documents.size()
        << " documents, " << n_issues << " planted issues -> " << cfg.out_dir << "\n";
    return result;
}

PriorEstimates run_fit_prior(const PipelineConfig& cfg, std::ostream& log) {
    cfg.validate();
    write_config_snapshot(cfg);
    const SubjectVocabulary vocab = load_vocab(cfg);
    const CaseSet cases = load_cases(cfg.cases_file());
    const IncidenceMatrix x = build_incidence_matrix(cases, vocab);
    FitOptions opts = cfg.fit;
    opts.seed = cfg.seed;
    const PriorEstimates est = fit(x, vocab, cfg.prior, opts);
    save_prior(cfg.prior_file(), est);
    log << "fit-prior: " << x.n_cases() << "x" << x.n_subjects() << " incidence, final ELBO "
        << est.meta.final_elbo << " -> " << cfg.prior_file() << "\n";
    return est;
}

void run_rank_subjects(const PipelineConfig& cfg, std::size_t top_k, std::size_t top_m,
                       std::ostream& log) {
    cfg.validate();
    write_config_snapshot(cfg);
    const PriorEstimates est = load_prior(cfg.prior_file());
    const std::size_t k = std::min(top_k, est.vocab_ids.size());
    const auto ranked = rank_subjects(est, k);
    const auto associations = top_associations(est, top_m);

    json rows = json::array();
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        rows.push_back(json{{"rank", i + 1},
                            {"subject_id", ranked[i].subject_id},
                            {"propensity", ranked[i].score}});
        log << (i + 1) << ". " << ranked[i].subject_id << "  " << ranked[i].score << "\n";
    }
    json assoc = json::array();
    for (const auto& a : associations) {
        assoc.push_back(json{{"subject_a", a.subject_a},
                             {"subject_b", a.subject_b},
                             {"weight", a.weight}});
    }
    fs::create_directories(cfg.out_dir);
    const fs::path path = fs::path(cfg.out_dir) / "subjects.json";
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << json{{"ranked", rows}, {"associations", assoc}}.dump(2) << "\n";
    log << "rank-subjects: " << ranked.size() << " subjects, " << associations.size()
        << " associations -> " << path.string() << "\n";
}

namespace {

// Chunk, tag, embed, and persist every document of the case set.
ChunkIndex index_case_documents(const PipelineConfig& cfg, const std::string& cases_file,
                                const CaseSet& cases, const SubjectVocabulary& vocab,
                                std::ostream& log) {
    const SubjectLexicon lexicon = default_lexicon();
    std::vector<Chunk> all_chunks;
    std::size_t n_docs = 0;
    for (const auto& rec : cases.cases) {
        for (const auto& doc : rec.documents) {
            const fs::path path = document_path(cfg, cases_file, doc);
            const SectionTree tree = parse_structure(read_file(path));
            std::vector<Chunk> chunks = chunk_document(tree, doc.doc_id, ChunkParams{});
            tag_chunks(chunks, vocab, lexicon);
            for (auto& c : chunks) all_chunks.push_back(std::move(c));
            ++n_docs;
        }
    }
    const EmbedProvider embed(cfg.embed_provider);
    ChunkIndex index = build_index(std::move(all_chunks), embed);
    save_index(cfg.index_directory(), index);
    log << "index: " << n_docs << " documents, " << index.chunks().size() << " chunks -> "
        << cfg.index_directory() << "\n";
    return index;
}

}  // namespace

ChunkIndex run_index(const PipelineConfig& cfg, std::ostream& log) {
    cfg.validate();
    write_config_snapshot(cfg);
    const SubjectVocabulary vocab = load_vocab(cfg);
    const std::string cases_file = cfg.cases_file();
    const CaseSet cases = load_cases(cases_file);
    return index_case_documents(cfg, cases_file, cases, vocab, log);
}

std::vector<EvidenceCorpus> run_retrieve(const PipelineConfig& cfg, std::ostream& log) {
    cfg.validate();
    write_config_snapshot(cfg);
    const SubjectVocabulary vocab = load_vocab(cfg);
    const CaseSet cases = load_cases(cfg.cases_file());
    const ChunkIndex index = load_index(cfg.index_directory());
    const auto subject_ids = subjects_to_retrieve(cfg, vocab, log);
    const auto corpora = retrieve_corpora(cfg, cases, vocab, index, subject_ids);
    save_corpora(cfg, corpora);
    log << "retrieve: " << corpora.size() << " case corpora -> " << cfg.corpus_directory()
        << "\n";
    return corpora;
}

GeneratedScripts run_make_scripts(const PipelineConfig& cfg, std::ostream& log) {
    cfg.validate();
    write_config_snapshot(cfg);
    const SubjectVocabulary vocab = load_vocab(cfg);
    const CaseSet cases = load_cases(cfg.cases_file());
    const ChunkIndex index = load_index(cfg.index_directory());
    const auto corpora = load_corpora(cfg, cases);
    GeneratedScripts scripts = generate_all_scripts(cfg, cases, vocab, index, corpora);
    scripts.store.save(cfg.scripts_file());
    log << "make-scripts: " << scripts.store.size() << " responses ("
        << scripts.n_failed << "/" << scripts.n_phase1_jobs << " phase-1 failures injected) -> "
        << cfg.scripts_file() << "\n";
    return scripts;
}

std::vector<InferredIssueSet> run_analyze(const PipelineConfig& cfg, std::ostream& log) {
    cfg.validate();
    write_config_snapshot(cfg);
    const SubjectVocabulary vocab = load_vocab(cfg);
    const CaseSet cases = load_cases(cfg.cases_file());
    const ChunkIndex index = load_index(cfg.index_directory());
    const auto corpora = load_corpora(cfg, cases);

    ProviderConfig chat_cfg = cfg.chat_provider;
    if (chat_cfg.kind == ProviderKind::scripted && chat_cfg.endpoint.empty()) {
        chat_cfg.endpoint = cfg.scripts_file();
    }
    const ChatProvider chat(chat_cfg);
    const auto sets = analyze_cases(cfg, cases, vocab, index, corpora, chat);
    save_issue_sets(cfg.issues_file(), sets);
    std::size_t n_issues = 0;
    for (const auto& s : sets) n_issues += s.issues.size();
    log << "analyze: " << sets.size() << " cases, " << n_issues << " inferred issues -> "
        << cfg.issues_file() << "\n";
    return sets;
}

RecallReport run_evaluate(const PipelineConfig& cfg, std::ostream& log) {
    cfg.validate();
    write_config_snapshot(cfg);
    const CaseSet cases = load_cases(cfg.cases_file());
    const auto sets = load_issue_sets(cfg.issues_file());
    const RecallReport report = evaluate(cases, sets, cfg.matcher);
    save_report(cfg.report_file(), report);
    log << "evaluate: R_I=" << report.r_i << " R_E=" << report.r_e << " over " << report.n_cases
        << " cases (" << report.n_skipped << " skipped) -> " << cfg.report_file() << "\n";
    return report;
}

RecallReport run_all(const PipelineConfig& cfg, std::ostream& log) {
    cfg.validate();
    write_config_snapshot(cfg);
    const SubjectVocabulary vocab = load_vocab(cfg);

    // Corpus: synthesize unless the config points at existing cases.
    CaseSet cases;
    std::string cases_file;
    if (!cfg.cases_path.empty()) {
        cases_file = cfg.cases_path;
        cases = load_cases(cases_file);
        log << "run-all: loaded " << cases.cases.size() << " cases from " << cases_file << "\n";
    } else {
        const SynthResult synth = run_synth(cfg, log);
        cases = synth.cases;
        cases_file = cfg.cases_file();
    }

    // Prior (skipped by the ablation).
    if (!cfg.no_prior) run_fit_prior(cfg, log);

    // Index all case documents.
    const ChunkIndex index = index_case_documents(cfg, cases_file, cases, vocab, log);

    // Per-case retrieval.
    const auto subject_ids = subjects_to_retrieve(cfg, vocab, log);
    const auto corpora = retrieve_corpora(cfg, cases, vocab, index, subject_ids);
    save_corpora(cfg, corpora);
    log << "retrieve: " << corpora.size() << " case corpora -> " << cfg.corpus_directory()
        << "\n";

    // Chat provider: a scripted provider without a store records one first
    // with the oracle backend, so the analysis below replays canned
    // responses end to end.
    ProviderConfig chat_cfg = cfg.chat_provider;
    if (chat_cfg.kind == ProviderKind::scripted) {
        if (chat_cfg.endpoint.empty()) {
            GeneratedScripts scripts = generate_all_scripts(cfg, cases, vocab, index, corpora);
            scripts.store.save(cfg.scripts_file());
            chat_cfg.endpoint = cfg.scripts_file();
            log << "run-all: generated " << scripts.store.size() << " scripted responses -> "
                << cfg.scripts_file() << "\n";
        }
    }
    const ChatProvider chat(chat_cfg);
    const auto sets = analyze_cases(cfg, cases, vocab, index, corpora, chat);
    save_issue_sets(cfg.issues_file(), sets);
    std::size_t n_issues = 0;
    for (const auto& s : sets) n_issues += s.issues.size();
    log << "analyze: " << sets.size() << " cases, " << n_issues << " inferred issues -> "
        << cfg.issues_file() << "\n";

    const RecallReport report = evaluate(cases, sets, cfg.matcher);
    save_report(cfg.report_file(), report);
    log << "evaluate: R_I=" << report.r_i << " R_E=" << report.r_e << " over " << report.n_cases
        << " cases (" << report.n_skipped << " skipped) -> " << cfg.report_file() << "\n";
    return report;
}

}  // namespace fraudlens
