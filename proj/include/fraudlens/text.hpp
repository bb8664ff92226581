#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fraudlens {

// Shared text utilities: the sparse-route tokenizer, exact-match
// normalization, and sentence segmentation. Retrieval and metrics must
// tokenize identically, so both go through here.

// Decodes one UTF-8 code point starting at `pos`; advances `pos` past it.
// Malformed bytes decode as U+FFFD one byte at a time.
char32_t utf8_next(std::string_view text, std::size_t& pos);

bool is_cjk(char32_t cp);

// Lowercase Latin alphanumeric runs split on everything else; CJK runs
// become character bigrams (a lone CJK char stays a unigram).
std::vector<std::string> tokenize(std::string_view text);

// Casefold (ASCII), collapse whitespace runs to single spaces, trim, and
// strip terminal punctuation. Used by the exact matcher.
std::string normalize_for_match(std::string_view text);

// Offsets (into `text`) where a new sentence starts. Always includes 0 for
// non-empty input. ASCII terminators (. ! ?) split when followed by
// whitespace; full-width terminators split unconditionally.
std::vector<std::size_t> sentence_starts(std::string_view text);

// "{{name}}" placeholder substitution for prompt templates. Unknown
// placeholders are left verbatim.
std::string render_template(std::string_view tmpl,
                            const std::vector<std::pair<std::string, std::string>>& values);

std::string to_lower_ascii(std::string_view text);

// Case-insensitive (ASCII) substring test.
bool contains_ci(std::string_view haystack, std::string_view needle);

std::string trim(std::string_view text);

}  // namespace fraudlens
