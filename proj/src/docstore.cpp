#include "fraudlens/docstore.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fraudlens/errors.hpp"
#include "fraudlens/text.hpp"

namespace fraudlens {

using nlohmann::json;

std::vector<std::size_t> SectionTree::leaves() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].body_end > nodes[i].body_begin) out.push_back(i);
    }
    return out;
}

const SectionNode* SectionTree::find_by_title(const std::string& title) const {
    for (const auto& node : nodes) {
        if (node.title == title) return &node;
    }
    return nullptr;
}

namespace {

struct HeadingMatch {
    int depth = 0;
    std::string title;
};

// A heading line is either "#"-prefixed or decimal-numbered ("1.", "1.1",
// "1.1.1"). Bare numbers above 99 are not headings, so years in body text
// don't split sections.
std::optional<HeadingMatch> match_heading(std::string_view line, const HeadingRules& rules) {
    std::string_view rest = line;
    while (!rest.empty() && (rest.front() == ' ' || rest.front() == '\t')) rest.remove_prefix(1);
    if (rest.empty()) return std::nullopt;

    if (rules.markdown_hashes && rest.front() == '#') {
        int level = 0;
        while (level < static_cast<int>(rest.size()) && rest[level] == '#') ++level;
        if (level <= 6 && level < static_cast<int>(rest.size()) && rest[level] == ' ') {
            return HeadingMatch{level, trim(rest.substr(level + 1))};
        }
        return std::nullopt;
    }

    if (rules.decimal_numbering && std::isdigit(static_cast<unsigned char>(rest.front()))) {
        std::size_t pos = 0;
        int components = 0;
        int first_component = 0;
        while (pos < rest.size() && std::isdigit(static_cast<unsigned char>(rest[pos]))) {
            std::size_t num_end = pos;
            int value = 0;
            while (num_end < rest.size() && std::isdigit(static_cast<unsigned char>(rest[num_end]))) {
                value = value * 10 + (rest[num_end] - '0');
                ++num_end;
            }
            ++components;
            if (components == 1) first_component = value;
            pos = num_end;
            if (pos < rest.size() && rest[pos] == '.') {
                ++pos;
                continue;
            }
            break;
        }
        const bool dotted = pos > 0 && rest[pos - 1] == '.';
        if (components == 1 && !dotted) return std::nullopt;  // "1 thing" is body text
        if (first_component > 99) return std::nullopt;
        if (pos >= rest.size() || rest[pos] != ' ') return std::nullopt;
        const std::string title = trim(rest.substr(pos + 1));
        if (title.empty()) return std::nullopt;
        return HeadingMatch{components, title};
    }
    return std::nullopt;
}

// Shrinks [begin, end) to exclude surrounding whitespace.
void trim_span(const std::string& text, std::size_t& begin, std::size_t& end) {
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
}

}  // namespace

SectionTree parse_structure(const std::string& text, const HeadingRules& rules) {
    SectionTree tree;
    tree.source = text;
    tree.nodes.push_back(SectionNode{});  // root

    std::vector<std::size_t> stack{0};  // open nodes, root first
    std::size_t open_body_begin = 0;    // start of the body run owned by stack.back()

    const auto close_body = [&](std::size_t end) {
        SectionNode& node = tree.nodes[stack.back()];
        std::size_t b = open_body_begin;
        std::size_t e = end;
        trim_span(text, b, e);
        node.body_begin = b;
        node.body_end = e;
    };

    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = std::min(text.find('\n', pos), text.size());
        const std::string_view line(text.data() + pos, eol - pos);
        if (const auto heading = match_heading(line, rules)) {
            close_body(pos);
            while (stack.size() > 1 && tree.nodes[stack.back()].depth >= heading->depth) {
                stack.pop_back();
            }
            SectionNode node;
            node.title = heading->title;
            node.depth = heading->depth;
            node.path = tree.nodes[stack.back()].path;
            node.path.push_back(heading->title);
            const std::size_t index = tree.nodes.size();
            tree.nodes[stack.back()].children.push_back(index);
            tree.nodes.push_back(std::move(node));
            stack.push_back(index);
            open_body_begin = eol + 1 <= text.size() ? eol + 1 : text.size();
        }
        if (eol >= text.size()) break;
        pos = eol + 1;
    }
    close_body(text.size());
    return tree;
}

std::vector<Chunk> chunk_document(const SectionTree& tree, const std::string& doc_id,
                                  const ChunkParams& params) {
    if (params.max_chunk_chars < 100) {
        throw ConfigError("max_chunk_chars must be at least 100 (got " +
                          std::to_string(params.max_chunk_chars) + ")");
    }

    std::vector<Chunk> chunks;
    std::size_t ordinal = 0;
    const auto emit = [&](const SectionNode& node, std::size_t begin, std::size_t end) {
        Chunk c;
        char suffix[16];
        std::snprintf(suffix, sizeof suffix, "#%04zu", ordinal++);
        c.chunk_id = doc_id + suffix;
        c.doc_id = doc_id;
        c.section_path = node.path.empty() ? std::vector<std::string>{"(document)"} : node.path;
        c.text = tree.source.substr(begin, end - begin);
        c.char_begin = begin;
        c.char_end = end;
        chunks.push_back(std::move(c));
    };

    for (const std::size_t leaf : tree.leaves()) {
        const SectionNode& node = tree.nodes[leaf];
        const std::size_t body_len = node.body_end - node.body_begin;
        if (body_len <= params.max_chunk_chars) {
            emit(node, node.body_begin, node.body_end);
            continue;
        }

        const std::string_view body(tree.source.data() + node.body_begin, body_len);
        std::vector<std::size_t> starts = sentence_starts(body);
        starts.push_back(body_len);  // sentinel: end of the last sentence

        std::size_t i = 0;
        while (i + 1 < starts.size()) {
            std::size_t j = i;
            while (j + 2 < starts.size() && starts[j + 2] - starts[i] <= params.max_chunk_chars) {
                ++j;
            }
            if (starts[j + 1] - starts[i] > params.max_chunk_chars) {
                // A single sentence exceeding the cap is sliced flat.
                std::size_t at = starts[i];
                while (starts[j + 1] - at > params.max_chunk_chars) {
                    emit(node, node.body_begin + at, node.body_begin + at + params.max_chunk_chars);
                    at += params.max_chunk_chars;
                }
                emit(node, node.body_begin + at, node.body_begin + starts[j + 1]);
                i = j + 1;
                continue;
            }
            const std::size_t chunk_end = starts[j + 1];
            emit(node, node.body_begin + starts[i], node.body_begin + chunk_end);
            if (j + 2 >= starts.size()) break;
            // Next chunk re-enters at the earliest sentence inside the
            // overlap window; falls back to no overlap when the tail
            // sentence alone is too long.
            std::size_t k = j + 1;
            for (std::size_t cand = i + 1; cand <= j + 1; ++cand) {
                if (chunk_end - starts[cand] <= params.overlap_chars) {
                    k = cand;
                    break;
                }
            }
            i = k;
        }
    }
    return chunks;
}

void SubjectLexicon::add(const std::string& subject_id, std::vector<std::string> forms) {
    entries_[subject_id] = std::move(forms);
}

const std::vector<std::string>* SubjectLexicon::forms(const std::string& subject_id) const {
    const auto it = entries_.find(subject_id);
    return it == entries_.end() ? nullptr : &it->second;
}

SubjectLexicon default_lexicon() {
    SubjectLexicon lex;
    lex.add("monetary_funds", {"Monetary Funds", "Cash and cash equivalents", "Restricted cash"});
    lex.add("accounts_receivable",
            {"Accounts Receivable", "Trade receivables", "Bad debt provision", "Receivables aging"});
    lex.add("other_receivables", {"Other Receivables", "Receivables from related parties"});
    lex.add("prepayments", {"Prepayments", "Advances to suppliers", "Prepaid expenses"});
    lex.add("inventory",
            {"Inventory", "Provision for inventory depreciation", "Inventory impairment loss",
             "Finished goods"});
    lex.add("fixed_assets", {"Fixed Assets", "Property plant and equipment", "Accumulated depreciation"});
    lex.add("construction_in_progress",
            {"Construction in Progress", "Capitalized construction costs", "Projects under construction"});
    lex.add("intangible_assets", {"Intangible Assets", "Land use rights", "Amortization of intangibles"});
    lex.add("goodwill", {"Goodwill", "Goodwill impairment", "Acquisition premium"});
    lex.add("long_term_equity_investments",
            {"Long-term Equity Investments", "Investments in associates", "Equity method investments"});
    lex.add("accounts_payable", {"Accounts Payable", "Trade payables"});
    lex.add("other_payables", {"Other Payables", "Payables to related parties"});
    lex.add("deferred_revenue", {"Deferred Revenue", "Contract liabilities", "Advances from customers"});
    lex.add("short_term_borrowings", {"Short-term Borrowings", "Bank loans due within one year"});
    lex.add("operating_revenue", {"Operating Revenue", "Revenue recognition", "Sales revenue"});
    lex.add("operating_costs", {"Operating Costs", "Cost of goods sold"});
    lex.add("selling_expenses", {"Selling Expenses", "Distribution costs"});
    lex.add("rd_expenses", {"R&D Expenses", "Research and development expenditure", "Capitalized development costs"});
    lex.add("operating_cash_flow",
            {"Operating Cash Flow", "Cash flow from operating activities", "Net operating cash"});
    lex.add("related_party_transactions",
            {"Related-Party Transactions", "Related party dealings", "Transactions with affiliates"});
    return lex;
}

SubjectLexicon load_lexicon(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open lexicon file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(path + ": malformed JSON: " + e.what());
    }
    SubjectLexicon lex;
    for (const auto& [subject, forms] : j.items()) {
        lex.add(subject, forms.get<std::vector<std::string>>());
    }
    return lex;
}

void tag_chunks(std::vector<Chunk>& chunks, const SubjectVocabulary& vocab,
                const SubjectLexicon& lexicon, const std::string& notes_title) {
    for (auto& chunk : chunks) {
        std::string joined_path;
        for (const auto& part : chunk.section_path) {
            joined_path += part;
            joined_path += " / ";
        }
        chunk.subject_tags.clear();
        for (const auto& subject : vocab.subjects()) {
            const std::vector<std::string>* forms = lexicon.forms(subject.id);
            const std::vector<std::string> fallback{subject.name};
            const auto& surface = forms ? *forms : fallback;
            for (const auto& form : surface) {
                if (contains_ci(joined_path, form) || contains_ci(chunk.text, form)) {
                    chunk.subject_tags.push_back(subject.id);
                    break;
                }
            }
        }
        chunk.notes_flag = false;
        for (const auto& part : chunk.section_path) {
            if (to_lower_ascii(part) == to_lower_ascii(notes_title)) {
                chunk.notes_flag = true;
                break;
            }
        }
    }
}

std::vector<Chunk> load_chunks(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open chunk store: " + path);
    std::vector<Chunk> chunks;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": malformed JSON: " + e.what());
        }
        Chunk c;
        c.chunk_id = j.at("chunk_id").get<std::string>();
        c.doc_id = j.at("doc_id").get<std::string>();
        c.section_path = j.at("section_path").get<std::vector<std::string>>();
        c.text = j.at("text").get<std::string>();
        c.char_begin = j.at("char_range")[0].get<std::size_t>();
        c.char_end = j.at("char_range")[1].get<std::size_t>();
        c.subject_tags = j.value("subject_tags", std::vector<std::string>{});
        c.notes_flag = j.value("notes_flag", false);
        chunks.push_back(std::move(c));
    }
    return chunks;
}

void save_chunks(const std::string& path, const std::vector<Chunk>& chunks) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write chunk store: " + path);
    for (const auto& c : chunks) {
        out << json{{"chunk_id", c.chunk_id},
                    {"doc_id", c.doc_id},
                    {"section_path", c.section_path},
                    {"text", c.text},
                    {"char_range", {c.char_begin, c.char_end}},
                    {"subject_tags", c.subject_tags},
                    {"notes_flag", c.notes_flag}}
                   .dump()
            << "\n";
    }
}

}  // namespace fraudlens
