#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "hsd/corpus.hpp"

namespace hsd {

enum class Granularity { kChar, kWord };
enum class Weighting { kCount, kTfidf };

Granularity granularity_from_string(const std::string& s);
std::string to_string(Granularity g);
Weighting weighting_from_string(const std::string& s);
std::string to_string(Weighting w);

// Sparse feature vector: strictly increasing indices below dim.
struct SparseVector {
    std::vector<std::pair<std::uint32_t, double>> entries;
    std::uint32_t dim = 0;

    double sum() const;
};

// N-gram vocabulary at character or word granularity. Indices are dense in
// [0, size). Word vocabularies reserve index 0 for the unknown token; grams
// start at index 1. Character grams are substrings of norm_text (spaces
// included, no boundary padding); word grams are token runs joined with an
// internal separator.
class Vocabulary {
public:
    static constexpr std::uint32_t kUnkIndex = 0;
    // Joins the tokens of a word n-gram; does not survive normalize(), so it
    // cannot collide with corpus text.
    static constexpr char kGramJoiner = '\x1f';

    Vocabulary() = default;

    Granularity granularity() const { return granularity_; }
    std::uint32_t n_lo() const { return n_lo_; }
    std::uint32_t n_hi() const { return n_hi_; }
    std::uint64_t total_docs() const { return total_docs_; }

    // Dimensionality of feature vectors (gram count, plus the unknown slot
    // for word granularity).
    std::uint32_t size() const;
    bool has_unk() const { return granularity_ == Granularity::kWord; }

    // Index of a gram, or -1 if absent.
    std::int64_t index_of(const std::string& gram) const;
    std::uint64_t doc_freq(const std::string& gram) const;

    // (gram, index, df) triples ordered by index.
    std::vector<std::tuple<std::string, std::uint32_t, std::uint64_t>> entries() const;

    // Stable content hash; stored in model files to tie a model to the
    // vocabulary it was trained against.
    std::uint64_t content_hash() const;

    std::string to_json() const;
    static Vocabulary from_json(const std::string& json_text);
    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

    friend Vocabulary build_vocab(const LabeledCorpus&, Granularity,
                                  std::uint32_t, std::uint32_t, std::uint64_t);

private:
    Granularity granularity_ = Granularity::kChar;
    std::uint32_t n_lo_ = 1;
    std::uint32_t n_hi_ = 1;
    std::uint64_t total_docs_ = 0;
    std::unordered_map<std::string, std::uint32_t> index_;
    std::unordered_map<std::string, std::uint64_t> doc_freq_;
};

// Collects all grams of the configured orders from a document's norm_text.
std::vector<std::string> extract_grams(const std::string& norm_text,
                                       Granularity granularity,
                                       std::uint32_t n_lo, std::uint32_t n_hi);

// Builds the vocabulary of grams occurring in at least min_doc_freq
// documents. Indices follow first encounter order over the corpus.
Vocabulary build_vocab(const LabeledCorpus& corpus, Granularity granularity,
                       std::uint32_t n_lo, std::uint32_t n_hi,
                       std::uint64_t min_doc_freq = 2);

// Bag-of-grams vector for one document. Count weighting stores raw counts;
// tf-idf multiplies by ln((1+total_docs)/(1+df)). Word granularity maps each
// unknown unigram occurrence to the unknown index; unknown higher-order grams
// are dropped. Set l2_normalize to scale the vector to unit L2 norm.
SparseVector featurize(const Document& doc, const Vocabulary& vocab,
                       Weighting weighting = Weighting::kCount,
                       bool l2_normalize = false);

// Fraction of unigram tokens mapped to the unknown index (word vocabularies
// only). Empty documents yield 0.
double unk_fraction(const Document& doc, const Vocabulary& vocab);

}  // namespace hsd
