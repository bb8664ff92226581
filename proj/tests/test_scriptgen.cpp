#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fraudlens/docstore.hpp"
#include "fraudlens/errors.hpp"
#include "fraudlens/retrieval.hpp"
#include "fraudlens/scriptgen.hpp"
#include "fraudlens/synth.hpp"

using namespace fraudlens;

namespace {

// End-to-end offline fixture: synthesized corpus, chunk index, per-case
// retrieval, ready for orchestration against the oracle backend.
struct OracleFixture {
    SubjectVocabulary vocab = default_vocabulary();
    PromptTemplates templates = PromptTemplates::builtin();
    SynthResult synth;
    ChunkIndex index;
    std::vector<EvidenceCorpus> corpora;

    OracleFixture() {
        SynthSpec spec;
        spec.n_cases = 2;
        spec.periods_per_case = 2;
        synth = synthesize_corpus(spec, 5, vocab);

        ProviderConfig embed_cfg;
        embed_cfg.kind = ProviderKind::hashed_embed;
        const EmbedProvider embed(embed_cfg);

        std::vector<Chunk> all_chunks;
        for (const auto& rec : synth.cases.cases) {
            for (const auto& doc : rec.documents) {
                const SectionTree tree = parse_structure(synth.documents.at(doc.doc_id));
                auto chunks = chunk_document(tree, doc.doc_id);
                tag_chunks(chunks, vocab, default_lexicon());
                for (auto& c : chunks) all_chunks.push_back(std::move(c));
            }
        }
        index = build_index(std::move(all_chunks), embed);

        LexiconQueryExpander expander(default_lexicon());
        std::vector<std::string> subject_ids;
        for (const auto& s : vocab.subjects()) subject_ids.push_back(s.id);
        for (const auto& rec : synth.cases.cases) {
            std::vector<std::string> doc_ids;
            for (const auto& doc : rec.documents) doc_ids.push_back(doc.doc_id);
            EvidenceCorpus corpus = retrieve_for_subjects(index, subject_ids, vocab, expander,
                                                          embed, RetrievalConfig{}, &doc_ids);
            corpus.case_id = rec.case_id;
            corpora.push_back(std::move(corpus));
        }
    }

    AnalysisInputs inputs(std::size_t case_idx) const {
        return AnalysisInputs{&synth.cases.cases.at(case_idx), &vocab, &corpora.at(case_idx),
                              &index};
    }
};

std::size_t count_failed_phase1(const InferredIssueSet& out) {
    std::size_t n = 0;
    for (const auto& rec : out.provenance) {
        if (!rec.ok && (rec.expert == "single_doc" || rec.expert == "subject_trend")) ++n;
    }
    return n;
}

}  // namespace

TEST_CASE("generate_scripts covers the full deterministic workload") {
    const OracleFixture fx;
    const AnalysisInputs in = fx.inputs(0);
    const ExpertOptions opts;

    const GeneratedScripts gen = generate_scripts(in, fx.templates, opts, ScriptGenOptions{});
    const auto jobs = plan_phase1(in, fx.templates);
    CHECK(gen.n_phase1_jobs == jobs.size());
    CHECK(gen.n_failed == 0);
    // Every phase-1 request has a scripted answer, under its exact digest.
    for (const auto& job : jobs) {
        CHECK(gen.store.contains(chat_request_digest(job.request)));
    }
    // Phase 2 adds cross-doc (trends exist here) and synthesis.
    CHECK(gen.store.size() == jobs.size() + 2);
}

TEST_CASE("scripted replay reproduces the oracle pass byte for byte") {
    const OracleFixture fx;
    ExpertOptions opts;
    opts.parallelism = 3;

    for (std::size_t case_idx = 0; case_idx < fx.corpora.size(); ++case_idx) {
        const AnalysisInputs in = fx.inputs(case_idx);
        const GeneratedScripts gen =
            generate_scripts(in, fx.templates, opts, ScriptGenOptions{});

        const OracleBackend oracle(in, fx.templates);
        const InferredIssueSet direct = analyze_case(in, fx.templates, oracle, opts);

        ProviderConfig cfg;
        cfg.kind = ProviderKind::scripted;
        const ChatProvider scripted(cfg, gen.store);
        const InferredIssueSet replayed = analyze_case(in, fx.templates, scripted, opts);

        CHECK(direct.to_json() == replayed.to_json());
    }
}

TEST_CASE("oracle answers reconstruct the planted gold issues") {
    const OracleFixture fx;
    const AnalysisInputs in = fx.inputs(0);
    const GeneratedScripts gen =
        generate_scripts(in, fx.templates, ExpertOptions{}, ScriptGenOptions{});
    ProviderConfig cfg;
    cfg.kind = ProviderKind::scripted;
    const ChatProvider scripted(cfg, gen.store);
    const InferredIssueSet out = analyze_case(in, fx.templates, scripted, ExpertOptions{});

    const CaseRecord& rec = fx.synth.cases.cases[0];
    REQUIRE(!rec.issues.empty());
    CHECK(out.issues.size() == rec.issues.size());
    for (const auto& gold : rec.issues) {
        const auto it = std::find_if(out.issues.begin(), out.issues.end(),
                                     [&](const InferredIssue& p) {
                                         return p.summary == gold.summary;
                                     });
        REQUIRE(it != out.issues.end());
        CHECK(it->report_ids == gold.report_ids);
        REQUIRE(it->evidence.size() == gold.evidence.size());
        for (std::size_t g = 0; g < gold.evidence.size(); ++g) {
            CHECK(it->evidence[g].text == gold.evidence[g]);
            // Planted sentences are indexed, so the citation anchors somewhere.
            CHECK(!it->evidence[g].chunk_ids.empty());
            for (const auto& cid : it->evidence[g].chunk_ids) {
                const Chunk* chunk = fx.index.find_chunk(cid);
                REQUIRE(chunk != nullptr);
                CHECK(chunk->text.find(gold.evidence[g]) != std::string::npos);
            }
        }
    }
}

TEST_CASE("failure injection drops a deterministic spread of phase-1 scripts") {
    const OracleFixture fx;
    const AnalysisInputs in = fx.inputs(0);
    const ExpertOptions opts;
    ScriptGenOptions gen_opts;
    gen_opts.fail_fraction = 0.3;

    const GeneratedScripts gen = generate_scripts(in, fx.templates, opts, gen_opts);
    const auto jobs = plan_phase1(in, fx.templates);
    const auto expected_failures =
        static_cast<std::size_t>(std::llround(gen_opts.fail_fraction * jobs.size()));
    CHECK(gen.n_phase1_jobs == jobs.size());
    CHECK(gen.n_failed == expected_failures);
    REQUIRE(expected_failures > 0);

    std::size_t missing = 0;
    for (const auto& job : jobs) {
        if (!gen.store.contains(chat_request_digest(job.request))) ++missing;
    }
    CHECK(missing == expected_failures);

    // Determinism: the same options fail the same jobs.
    const GeneratedScripts again = generate_scripts(in, fx.templates, opts, gen_opts);
    CHECK(again.store.responses() == gen.store.responses());

    // Replay completes and stays schema-valid despite the failures.
    ProviderConfig cfg;
    cfg.kind = ProviderKind::scripted;
    const ChatProvider scripted(cfg, gen.store);
    const InferredIssueSet out = analyze_case(in, fx.templates, scripted, opts);
    CHECK(count_failed_phase1(out) == expected_failures);
    bool warned = false;
    for (const auto& w : out.warnings) {
        if (w.find("failed") != std::string::npos) warned = true;
    }
    CHECK(warned);
    // Synthesis still produced a well-formed issue list.
    const InferredIssueSet round = InferredIssueSet::from_json(out.to_json());
    CHECK(round.case_id == out.case_id);
    CHECK(round.issues.size() == out.issues.size());
}

TEST_CASE("script generation options validate the failure fraction") {
    ScriptGenOptions bad;
    bad.fail_fraction = -0.1;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad.fail_fraction = 1.5;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad.fail_fraction = 1.0;
    CHECK_NOTHROW(bad.validate());
}

TEST_CASE("the oracle rejects requests it cannot identify") {
    const OracleFixture fx;
    const AnalysisInputs in = fx.inputs(0);
    const OracleBackend oracle(in, fx.templates);

    ChatRequest req;
    req.messages.push_back({"system", kExpertSystemPrompt});
    req.messages.push_back({"user", "tell me a story"});
    CHECK_THROWS_WITH_AS(static_cast<void>(oracle.chat(req)),
                         doctest::Contains("cannot identify"), Error);
}
