#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fraudlens/dataset.hpp"

namespace fraudlens {

inline constexpr const char* kNotesSectionTitle = "Notes to Consolidated Financial Statements";

struct SectionNode {
    std::string title;
    int depth = 0;                          // root = 0
    std::vector<std::string> path;          // ancestor titles, root excluded, self included
    std::size_t body_begin = 0;             // direct body span (heading lines excluded)
    std::size_t body_end = 0;
    std::vector<std::size_t> children;      // indices into SectionTree::nodes
};

struct SectionTree {
    std::string source;                     // the parsed document text
    std::vector<SectionNode> nodes;         // nodes[0] is the root

    // Indices of nodes that own a non-empty body span, in document order.
    std::vector<std::size_t> leaves() const;
    const SectionNode* find_by_title(const std::string& title) const;
};

struct HeadingRules {
    // Markdown-style "#"-prefixed headings and decimal-numbered headings
    // ("1.", "1.1", "1.1.1") are recognized by default.
    bool markdown_hashes = true;
    bool decimal_numbering = true;
};

struct ChunkParams {
    std::size_t max_chunk_chars = 1200;
    std::size_t overlap_chars = 120;
};

struct Chunk {
    std::string chunk_id;
    std::string doc_id;
    std::vector<std::string> section_path;
    std::string text;
    std::size_t char_begin = 0;             // offsets into the source document
    std::size_t char_end = 0;
    std::vector<std::string> subject_tags;
    bool notes_flag = false;
};

// Maps a subject id to the surface forms used for tagging and query
// expansion. The first form is the canonical one.
class SubjectLexicon {
public:
    SubjectLexicon() = default;

    void add(const std::string& subject_id, std::vector<std::string> forms);
    const std::vector<std::string>* forms(const std::string& subject_id) const;
    const std::map<std::string, std::vector<std::string>>& entries() const { return entries_; }

private:
    std::map<std::string, std::vector<std::string>> entries_;
};

// Canonical form = vocabulary display name; expansions cover the common
// manipulation-adjacent phrasings for each subject.
SubjectLexicon default_lexicon();
SubjectLexicon load_lexicon(const std::string& path);

SectionTree parse_structure(const std::string& text, const HeadingRules& rules = {});

std::vector<Chunk> chunk_document(const SectionTree& tree, const std::string& doc_id,
                                  const ChunkParams& params = {});

void tag_chunks(std::vector<Chunk>& chunks, const SubjectVocabulary& vocab,
                const SubjectLexicon& lexicon,
                const std::string& notes_title = kNotesSectionTitle);

std::vector<Chunk> load_chunks(const std::string& path);
void save_chunks(const std::string& path, const std::vector<Chunk>& chunks);

}  // namespace fraudlens
