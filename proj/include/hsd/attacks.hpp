#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hsd/corpus.hpp"
#include "hsd/textproc.hpp"

#include "json.hpp"

namespace hsd {

enum class AttackKind {
    kTypo,
    kLeet,
    kSpaceInsert,
    kSpaceRemove,
    kAppendCommon,
    kAppendNonhate,
    kLove,
};

std::string to_string(AttackKind kind);
AttackKind attack_kind_from_string(const std::string& s);

enum class WordlistSource { kCommonEnglish, kNonhateClass };

std::string to_string(WordlistSource source);

// Ordered unique lowercase words for the append attacks. Words are stable
// under normalize() and contain no stopwords; underfull is set when the
// source had fewer than top_k candidates.
struct WordList {
    std::vector<std::string> words;
    WordlistSource provenance = WordlistSource::kCommonEnglish;
    bool underfull = false;
};

// Filters a frequency-ranked word sequence: drops stopwords, duplicates and
// words normalize() would alter, then truncates to top_k.
WordList derive_wordlist(const std::vector<std::string>& ranked_words,
                         const StopwordList& stopwords, std::size_t top_k = 1000,
                         WordlistSource provenance = WordlistSource::kCommonEnglish);

// Ranks the content words of the given label's documents by frequency
// (ties break lexicographically) and takes the top_k.
WordList derive_wordlist(const LabeledCorpus& corpus, const std::string& label,
                         const StopwordList& stopwords, std::size_t top_k = 1000);

// One word per line, descending frequency.
void save_wordlist(const WordList& list, const std::string& path);

// In each word of at least four code points, swaps two interior characters:
// the first position is drawn from a discrete Gaussian centered mid-word
// (sigma (L-2)/4), the second from the same weights sharpened by a Gaussian
// of sigma 1 around the first pick. First and last characters never move.
// word_prob is the per-eligible-word application probability.
std::string attack_typo(const std::string& text, std::uint64_t seed,
                        double word_prob = 1.0);

// a->4 e->3 l->1 o->0 s->5, every occurrence.
std::string attack_leet(const std::string& text);

// Splits each content word into two nonempty parts at a uniformly chosen
// boundary.
std::string attack_space_insert(const std::string& text, std::uint64_t seed,
                                const StopwordList& stopwords,
                                double word_prob = 1.0);

// Deletes every whitespace code point.
std::string attack_space_remove(const std::string& text);

// Appends k words drawn uniformly with replacement from list, k uniform in
// [lo, hi]; the input is a strict prefix of the output.
std::string attack_append(const std::string& text, const WordList& list, int lo,
                          int hi, std::uint64_t seed);

// attack_space_remove followed by appending " love".
std::string attack_love(const std::string& text);

struct AttackSpec {
    AttackKind kind = AttackKind::kLeet;
    int append_lo = 10;
    int append_hi = 50;
    double word_prob = 1.0;  // typo and space_insert
    WordList wordlist;       // append kinds
    std::uint64_t seed = 0;

    // Self-describing record of the transform, including the fixed Gaussian
    // widths of the typo attack.
    nlohmann::json to_json() const;
};

// Applies the transform named by spec.kind to one normalized text, with the
// given per-document seed for the stochastic kinds.
std::string apply_transform(const std::string& norm_text, const AttackSpec& spec,
                            std::uint64_t seed, const StopwordList& stopwords);

// Transforms every document labeled target_label (per-document seed derived
// from spec.seed and the document's index) and re-normalizes it; all other
// documents are copied bit-exactly.
LabeledCorpus apply_attack(const LabeledCorpus& test, const AttackSpec& spec,
                           const std::string& target_label,
                           const StopwordList& stopwords = StopwordList::embedded());

}  // namespace hsd
