#include "hsd/textproc.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "hsd/embedded_data.hpp"

namespace hsd {

namespace {

#include "textproc_tables.inc"

bool in_ranges(char32_t cp, const CpRange* ranges, std::size_t n) {
    std::size_t lo = 0, hi = n;
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (cp < ranges[mid].lo)
            hi = mid;
        else if (cp > ranges[mid].hi)
            lo = mid + 1;
        else
            return true;
    }
    return false;
}

char32_t to_lower_cp(char32_t cp) {
    if (cp < 0x80) {
        if (cp >= U'A' && cp <= U'Z') return cp + 32;
        return cp;
    }
    std::size_t lo = 0, hi = std::size(kLowerPairs);
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (kLowerPairs[mid].from < cp)
            lo = mid + 1;
        else if (kLowerPairs[mid].from > cp)
            hi = mid;
        else
            return kLowerPairs[mid].to;
    }
    return cp;
}

}  // namespace

bool is_punct_cp(char32_t cp) {
    // The full ASCII punctuation block, including $+<=>^`|~ which Unicode
    // files under symbols rather than P*.
    if (cp < 0x80) {
        return (cp >= 0x21 && cp <= 0x2f) || (cp >= 0x3a && cp <= 0x40) ||
               (cp >= 0x5b && cp <= 0x60) || (cp >= 0x7b && cp <= 0x7e);
    }
    return in_ranges(cp, kPunctRanges, std::size(kPunctRanges));
}

bool is_space_cp(char32_t cp) {
    for (char32_t ws : kWhitespace)
        if (cp == ws) return true;
    return false;
}

std::vector<char32_t> utf8_decode(const std::string& s) {
    std::vector<char32_t> out;
    out.reserve(s.size());
    std::size_t i = 0;
    const std::size_t n = s.size();
    while (i < n) {
        const unsigned char b0 = static_cast<unsigned char>(s[i]);
        std::size_t len = 0;
        char32_t cp = 0;
        if (b0 < 0x80) {
            cp = b0;
            len = 1;
        } else if ((b0 & 0xe0) == 0xc0) {
            cp = b0 & 0x1f;
            len = 2;
        } else if ((b0 & 0xf0) == 0xe0) {
            cp = b0 & 0x0f;
            len = 3;
        } else if ((b0 & 0xf8) == 0xf0) {
            cp = b0 & 0x07;
            len = 4;
        }
        bool ok = len > 0 && i + len <= n;
        if (ok) {
            for (std::size_t k = 1; k < len; ++k) {
                const unsigned char bk = static_cast<unsigned char>(s[i + k]);
                if ((bk & 0xc0) != 0x80) {
                    ok = false;
                    break;
                }
                cp = (cp << 6) | (bk & 0x3f);
            }
        }
        // Reject overlong encodings and surrogates so decode(encode(x)) == x.
        if (ok && len == 2 && cp < 0x80) ok = false;
        if (ok && len == 3 && cp < 0x800) ok = false;
        if (ok && len == 4 && (cp < 0x10000 || cp > 0x10ffff)) ok = false;
        if (ok && cp >= 0xd800 && cp <= 0xdfff) ok = false;
        if (ok) {
            out.push_back(cp);
            i += len;
        } else {
            // Invalid byte: pass through as its own value, flagged outside the
            // Unicode range so encoding can reproduce the byte verbatim.
            out.push_back(0x110000u + b0);
            i += 1;
        }
    }
    return out;
}

std::string utf8_encode(const std::vector<char32_t>& cps) {
    std::string out;
    out.reserve(cps.size());
    for (char32_t cp : cps) {
        if (cp >= 0x110000u) {
            out.push_back(static_cast<char>(cp - 0x110000u));
        } else if (cp < 0x80) {
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
    return out;
}

std::size_t cp_length(const std::string& s) {
    return utf8_decode(s).size();
}

std::string normalize(const std::string& text) {
    const std::vector<char32_t> cps = utf8_decode(text);
    std::vector<char32_t> out;
    out.reserve(cps.size());
    bool pending_space = false;
    for (char32_t cp : cps) {
        const char32_t c = cp >= 0x110000u ? cp : to_lower_cp(cp);
        if (cp < 0x110000u && is_space_cp(c)) {
            pending_space = true;
            continue;
        }
        if (cp < 0x110000u && is_punct_cp(c)) continue;
        if (pending_space && !out.empty()) out.push_back(U' ');
        pending_space = false;
        out.push_back(c);
    }
    return utf8_encode(out);
}

TokenSeq tokenize(const std::string& text) {
    TokenSeq tokens;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find(' ', start);
        if (end == std::string::npos) end = text.size();
        if (end > start) tokens.emplace_back(text.substr(start, end - start));
        start = end + 1;
    }
    return tokens;
}

std::string join_tokens(const TokenSeq& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

StopwordList::StopwordList(std::vector<std::string> words) {
    for (auto& w : words) {
        if (w.empty()) throw std::invalid_argument("stopword list: empty entry");
        for (char c : w)
            if (c >= 'A' && c <= 'Z')
                throw std::invalid_argument("stopword list: entry not lowercase: " + w);
        words_.insert(std::move(w));
    }
}

std::vector<std::string> parse_word_lines(const std::string& content) {
    std::vector<std::string> words;
    std::istringstream in(content);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        words.push_back(line);
    }
    return words;
}

StopwordList StopwordList::load(const std::string& path) {
    return StopwordList(parse_word_lines(read_text_file(path)));
}

const StopwordList& StopwordList::embedded() {
    static const StopwordList list{parse_word_lines(embedded::kStopwordsText)};
    return list;
}

const std::vector<std::string>& embedded_common_words() {
    static const std::vector<std::string> words =
        parse_word_lines(embedded::kCommonWordsText);
    return words;
}

bool is_content_word(const std::string& token, const StopwordList& stopwords) {
    if (token.empty()) throw std::invalid_argument("is_content_word: empty token");
    return !stopwords.contains(token) && cp_length(token) >= 4;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace hsd
