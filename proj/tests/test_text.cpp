#include <doctest.h>

#include "fraudlens/text.hpp"

using namespace fraudlens;

TEST_CASE("tokenize lowercases Latin runs and splits on punctuation") {
    CHECK(tokenize("Accounts Receivable, 2020!") ==
          std::vector<std::string>{"accounts", "receivable", "2020"});
    CHECK(tokenize("") == std::vector<std::string>{});
    CHECK(tokenize("  --  ") == std::vector<std::string>{});
    CHECK(tokenize("a1b2") == std::vector<std::string>{"a1b2"});
}

TEST_CASE("tokenize emits CJK character bigrams") {
    // Four CJK chars -> three overlapping bigrams.
    CHECK(tokenize("货币资金") == std::vector<std::string>{"货币", "币资", "资金"});
    // A lone CJK char stays a unigram.
    CHECK(tokenize("金") == std::vector<std::string>{"金"});
    // Mixed script: Latin run, then bigrams.
    CHECK(tokenize("abc货币") == std::vector<std::string>{"abc", "货币"});
}

TEST_CASE("normalize_for_match folds case, whitespace, and terminal punctuation") {
    CHECK(normalize_for_match("  The  Quick\tBrown.  ") == "the quick brown");
    CHECK(normalize_for_match("Same text") == normalize_for_match("same   TEXT"));
    CHECK(normalize_for_match("") == "");
}

TEST_CASE("sentence_starts splits on terminators followed by whitespace") {
    const std::string text = "First sentence. Second one! Third?";
    const auto starts = sentence_starts(text);
    REQUIRE(starts.size() == 3);
    CHECK(starts[0] == 0);
    CHECK(text.substr(starts[1], 6) == "Second");
    CHECK(text.substr(starts[2], 5) == "Third");
}

TEST_CASE("sentence_starts keeps decimals together") {
    // "123.4" has no whitespace after the period, so no split.
    const auto starts = sentence_starts("Revenue was 123.4 million yuan.");
    CHECK(starts == std::vector<std::size_t>{0});
    CHECK(sentence_starts("").empty());
}

TEST_CASE("render_template substitutes known placeholders only") {
    const std::string out =
        render_template("Hello {{name}}, {{name}} again; {{unknown}} stays.",
                        {{"name", "world"}});
    CHECK(out == "Hello world, world again; {{unknown}} stays.");
}

TEST_CASE("misc string helpers") {
    CHECK(to_lower_ascii("AbC1") == "abc1");
    CHECK(contains_ci("Notes To Consolidated", "notes to"));
    CHECK_FALSE(contains_ci("goodwill", "receivable"));
    CHECK(trim("  x  ") == "x");
}
