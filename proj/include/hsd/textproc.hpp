#pragma once

#include <string>
#include <unordered_set>
#include <vector>

namespace hsd {

// Token sequence produced by tokenize(); tokens are never empty and never
// contain whitespace.
using TokenSeq = std::vector<std::string>;

// Lowercases, strips punctuation (ASCII punctuation plus Unicode
// general-category P*), collapses whitespace runs to single spaces and trims.
// Digits are kept. Operates on UTF-8; bytes that do not form a valid sequence
// pass through unchanged.
std::string normalize(const std::string& text);

// Splits normalized text on single spaces. Empty input yields no tokens.
TokenSeq tokenize(const std::string& text);

// Joins tokens with single spaces; inverse of tokenize on well-formed input.
std::string join_tokens(const TokenSeq& tokens);

// Number of Unicode code points in a UTF-8 string (invalid bytes count as one
// code point each). Word-length rules throughout the library use this.
std::size_t cp_length(const std::string& s);

// Decodes a UTF-8 string into code points; invalid bytes decode to their own
// byte value so that re-encoding reproduces the input.
std::vector<char32_t> utf8_decode(const std::string& s);
std::string utf8_encode(const std::vector<char32_t>& cps);

bool is_punct_cp(char32_t cp);
bool is_space_cp(char32_t cp);

// Fixed lowercase stopword set.
class StopwordList {
public:
    StopwordList() = default;
    explicit StopwordList(std::vector<std::string> words);

    // The list shipped with the library (embedded copy of data/stopwords_en.txt).
    static const StopwordList& embedded();
    // Reads a UTF-8 file, one word per line; '#' lines and blank lines skipped.
    static StopwordList load(const std::string& path);

    bool contains(const std::string& word) const {
        return words_.count(word) > 0;
    }
    std::size_t size() const { return words_.size(); }

private:
    std::unordered_set<std::string> words_;
};

// True iff token is not a stopword and has at least four code points. This is
// the eligibility rule shared by the word-splitting attack and the append
// wordlist derivations.
bool is_content_word(const std::string& token, const StopwordList& stopwords);

// Lines of the embedded common-words frequency file (descending frequency,
// comments already stripped).
const std::vector<std::string>& embedded_common_words();

// Parses "one word per line" UTF-8 content; skips blanks and '#' comments.
std::vector<std::string> parse_word_lines(const std::string& content);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace hsd
