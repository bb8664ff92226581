#include "fraudlens/text.hpp"

#include <algorithm>
#include <cctype>

namespace fraudlens {

char32_t utf8_next(std::string_view text, std::size_t& pos) {
    const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(text[i]); };
    const unsigned char b0 = byte(pos);
    if (b0 < 0x80) {
        ++pos;
        return b0;
    }
    int len = 0;
    char32_t cp = 0;
    if ((b0 & 0xe0) == 0xc0) {
        len = 2;
        cp = b0 & 0x1f;
    } else if ((b0 & 0xf0) == 0xe0) {
        len = 3;
        cp = b0 & 0x0f;
    } else if ((b0 & 0xf8) == 0xf0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        ++pos;
        return 0xfffd;
    }
    if (pos + len > text.size()) {
        ++pos;
        return 0xfffd;
    }
    for (int i = 1; i < len; ++i) {
        const unsigned char bi = byte(pos + i);
        if ((bi & 0xc0) != 0x80) {
            ++pos;
            return 0xfffd;
        }
        cp = (cp << 6) | (bi & 0x3f);
    }
    pos += len;
    return cp;
}

bool is_cjk(char32_t cp) {
    return (cp >= 0x4e00 && cp <= 0x9fff) ||   // unified ideographs
           (cp >= 0x3400 && cp <= 0x4dbf) ||   // extension A
           (cp >= 0xf900 && cp <= 0xfaff);     // compatibility
}

namespace {

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
        out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
}

bool is_latin_token_char(char32_t cp) {
    return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string latin;
    std::vector<char32_t> cjk_run;

    const auto flush_latin = [&] {
        if (!latin.empty()) {
            tokens.push_back(latin);
            latin.clear();
        }
    };
    const auto flush_cjk = [&] {
        if (cjk_run.size() == 1) {
            std::string t;
            append_utf8(t, cjk_run[0]);
            tokens.push_back(std::move(t));
        } else {
            for (std::size_t i = 0; i + 1 < cjk_run.size(); ++i) {
                std::string t;
                append_utf8(t, cjk_run[i]);
                append_utf8(t, cjk_run[i + 1]);
                tokens.push_back(std::move(t));
            }
        }
        cjk_run.clear();
    };

    std::size_t pos = 0;
    while (pos < text.size()) {
        const char32_t cp = utf8_next(text, pos);
        if (is_latin_token_char(cp)) {
            if (!cjk_run.empty()) flush_cjk();
            latin.push_back(static_cast<char>(cp >= 'A' && cp <= 'Z' ? cp - 'A' + 'a' : cp));
        } else if (is_cjk(cp)) {
            flush_latin();
            cjk_run.push_back(cp);
        } else {
            flush_latin();
            if (!cjk_run.empty()) flush_cjk();
        }
    }
    flush_latin();
    if (!cjk_run.empty()) flush_cjk();
    return tokens;
}

std::string normalize_for_match(std::string_view text) {
    std::string collapsed;
    collapsed.reserve(text.size());
    bool pending_space = false;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t start = pos;
        const char32_t cp = utf8_next(text, pos);
        const bool ws = cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == 0x3000;
        if (ws) {
            pending_space = !collapsed.empty();
            continue;
        }
        if (pending_space) {
            collapsed.push_back(' ');
            pending_space = false;
        }
        if (cp < 0x80) {
            collapsed.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(cp))));
        } else {
            collapsed.append(text.substr(start, pos - start));
        }
    }
    // Strip trailing terminal punctuation (ASCII and full-width).
    const auto ends_with = [&](std::string_view suffix) {
        return collapsed.size() >= suffix.size() &&
               std::string_view(collapsed).substr(collapsed.size() - suffix.size()) == suffix;
    };
    for (;;) {
        if (!collapsed.empty() && (collapsed.back() == '.' || collapsed.back() == '!' ||
                                   collapsed.back() == '?' || collapsed.back() == ' ')) {
            collapsed.pop_back();
            continue;
        }
        bool stripped = false;
        for (std::string_view p : {"。", "！", "？", "；"}) {
            if (ends_with(p)) {
                collapsed.resize(collapsed.size() - p.size());
                stripped = true;
                break;
            }
        }
        if (!stripped) break;
    }
    return collapsed;
}

std::vector<std::size_t> sentence_starts(std::string_view text) {
    std::vector<std::size_t> starts;
    if (text.empty()) return starts;
    starts.push_back(0);
    std::size_t pos = 0;
    while (pos < text.size()) {
        const char32_t cp = utf8_next(text, pos);
        if (cp == '.' || cp == '!' || cp == '?') {
            if (pos < text.size()) {
                const char next = text[pos];
                if (next == ' ' || next == '\t' || next == '\n' || next == '\r') {
                    // The following sentence starts after the whitespace run.
                    std::size_t ws = pos;
                    while (ws < text.size() && (text[ws] == ' ' || text[ws] == '\t' ||
                                                text[ws] == '\n' || text[ws] == '\r')) {
                        ++ws;
                    }
                    if (ws < text.size()) starts.push_back(ws);
                }
            }
        } else if (cp == 0x3002 || cp == 0xff01 || cp == 0xff1f || cp == 0xff1b) {
            if (pos < text.size()) starts.push_back(pos);
        }
    }
    starts.erase(std::unique(starts.begin(), starts.end()), starts.end());
    return starts;
}

std::string render_template(std::string_view tmpl,
                            const std::vector<std::pair<std::string, std::string>>& values) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const std::size_t open = tmpl.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        const std::size_t close = tmpl.find("}}", open + 2);
        if (close == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        out.append(tmpl.substr(pos, open - pos));
        const std::string_view name = tmpl.substr(open + 2, close - open - 2);
        bool replaced = false;
        for (const auto& [key, value] : values) {
            if (key == name) {
                out.append(value);
                replaced = true;
                break;
            }
        }
        if (!replaced) out.append(tmpl.substr(open, close + 2 - open));
        pos = close + 2;
    }
    return out;
}

std::string to_lower_ascii(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return true;
    const std::string h = to_lower_ascii(haystack);
    const std::string n = to_lower_ascii(needle);
    return h.find(n) != std::string::npos;
}

std::string trim(std::string_view text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
    return std::string(text.substr(begin, end - begin));
}

}  // namespace fraudlens
