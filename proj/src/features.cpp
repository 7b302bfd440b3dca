#include "hsd/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

#include <nlohmann/json.hpp>

#include "hsd/rng.hpp"
#include "hsd/textproc.hpp"

namespace hsd {

using nlohmann::json;

Granularity granularity_from_string(const std::string& s) {
    if (s == "char") return Granularity::kChar;
    if (s == "word") return Granularity::kWord;
    throw std::invalid_argument("unknown granularity '" + s + "'");
}

std::string to_string(Granularity g) {
    return g == Granularity::kChar ? "char" : "word";
}

Weighting weighting_from_string(const std::string& s) {
    if (s == "count") return Weighting::kCount;
    if (s == "tfidf") return Weighting::kTfidf;
    throw std::invalid_argument("unknown weighting '" + s + "'");
}

std::string to_string(Weighting w) {
    return w == Weighting::kCount ? "count" : "tfidf";
}

double SparseVector::sum() const {
    double total = 0.0;
    for (const auto& [idx, w] : entries) total += w;
    return total;
}

std::vector<std::string> extract_grams(const std::string& norm_text,
                                       Granularity granularity,
                                       std::uint32_t n_lo, std::uint32_t n_hi) {
    std::vector<std::string> grams;
    if (granularity == Granularity::kChar) {
        const std::vector<char32_t> cps = utf8_decode(norm_text);
        for (std::uint32_t n = n_lo; n <= n_hi; ++n) {
            if (cps.size() < n) break;
            for (std::size_t i = 0; i + n <= cps.size(); ++i)
                grams.push_back(utf8_encode(
                    std::vector<char32_t>(cps.begin() + i, cps.begin() + i + n)));
        }
    } else {
        const TokenSeq tokens = tokenize(norm_text);
        for (std::uint32_t n = n_lo; n <= n_hi; ++n) {
            if (tokens.size() < n) break;
            for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
                std::string gram = tokens[i];
                for (std::size_t k = 1; k < n; ++k) {
                    gram.push_back(Vocabulary::kGramJoiner);
                    gram += tokens[i + k];
                }
                grams.push_back(std::move(gram));
            }
        }
    }
    return grams;
}

std::uint32_t Vocabulary::size() const {
    return static_cast<std::uint32_t>(index_.size()) + (has_unk() ? 1u : 0u);
}

std::int64_t Vocabulary::index_of(const std::string& gram) const {
    auto it = index_.find(gram);
    return it == index_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

std::uint64_t Vocabulary::doc_freq(const std::string& gram) const {
    auto it = doc_freq_.find(gram);
    return it == doc_freq_.end() ? 0 : it->second;
}

std::vector<std::tuple<std::string, std::uint32_t, std::uint64_t>>
Vocabulary::entries() const {
    std::vector<std::tuple<std::string, std::uint32_t, std::uint64_t>> out;
    out.reserve(index_.size());
    for (const auto& [gram, idx] : index_)
        out.emplace_back(gram, idx, doc_freq_.at(gram));
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return std::get<1>(a) < std::get<1>(b);
    });
    return out;
}

std::uint64_t Vocabulary::content_hash() const {
    std::uint64_t h = fnv1a(to_string(granularity_)) ^ (n_lo_ * 31u + n_hi_);
    for (const auto& [gram, idx, df] : entries()) {
        h ^= fnv1a(gram) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        h ^= (static_cast<std::uint64_t>(idx) << 32) ^ df;
    }
    return h ^ total_docs_;
}

Vocabulary build_vocab(const LabeledCorpus& corpus, Granularity granularity,
                       std::uint32_t n_lo, std::uint32_t n_hi,
                       std::uint64_t min_doc_freq) {
    if (corpus.docs.empty()) throw std::invalid_argument("build_vocab: empty corpus");
    if (n_lo < 1 || n_lo > n_hi)
        throw std::invalid_argument("build_vocab: need 1 <= n_lo <= n_hi");
    if (min_doc_freq < 1)
        throw std::invalid_argument("build_vocab: min_doc_freq must be >= 1");

    // Document frequencies plus first-encounter order of each gram.
    std::unordered_map<std::string, std::uint64_t> df;
    std::vector<std::string> encounter_order;
    std::vector<std::string> doc_grams;
    for (const auto& doc : corpus.docs) {
        doc_grams = extract_grams(doc.norm_text, granularity, n_lo, n_hi);
        std::sort(doc_grams.begin(), doc_grams.end());
        doc_grams.erase(std::unique(doc_grams.begin(), doc_grams.end()),
                        doc_grams.end());
        for (auto& gram : doc_grams) {
            auto [it, inserted] = df.try_emplace(gram, 0);
            it->second += 1;
            if (inserted) encounter_order.push_back(gram);
        }
    }

    Vocabulary vocab;
    vocab.granularity_ = granularity;
    vocab.n_lo_ = n_lo;
    vocab.n_hi_ = n_hi;
    vocab.total_docs_ = corpus.docs.size();
    std::uint32_t next = vocab.has_unk() ? 1u : 0u;
    for (const auto& gram : encounter_order) {
        if (df.at(gram) < min_doc_freq) continue;
        vocab.index_.emplace(gram, next++);
        vocab.doc_freq_.emplace(gram, df.at(gram));
    }
    return vocab;
}

SparseVector featurize(const Document& doc, const Vocabulary& vocab,
                       Weighting weighting, bool l2_normalize) {
    const bool word = vocab.granularity() == Granularity::kWord;
    const bool tfidf = weighting == Weighting::kTfidf;
    const double total_docs = static_cast<double>(vocab.total_docs());

    std::map<std::uint32_t, double> counts;
    std::map<std::uint32_t, double> idf;
    for (const auto& gram : extract_grams(doc.norm_text, vocab.granularity(),
                                          vocab.n_lo(), vocab.n_hi())) {
        const std::int64_t signed_idx = vocab.index_of(gram);
        std::uint32_t idx;
        double df;
        if (signed_idx >= 0) {
            idx = static_cast<std::uint32_t>(signed_idx);
            df = static_cast<double>(vocab.doc_freq(gram));
        } else if (word && gram.find(Vocabulary::kGramJoiner) == std::string::npos) {
            idx = Vocabulary::kUnkIndex;  // unknown unigram
            df = 0.0;                     // the unknown slot has no document frequency
        } else {
            // unknown char grams and unknown higher-order word grams are dropped
            continue;
        }
        counts[idx] += 1.0;
        if (tfidf) idf[idx] = std::log((1.0 + total_docs) / (1.0 + df));
    }

    SparseVector vec;
    vec.dim = vocab.size();
    vec.entries.reserve(counts.size());
    for (const auto& [idx, count] : counts)
        vec.entries.emplace_back(idx, tfidf ? count * idf.at(idx) : count);

    if (l2_normalize && !vec.entries.empty()) {
        double ss = 0.0;
        for (const auto& [idx, w] : vec.entries) ss += w * w;
        const double norm = std::sqrt(ss);
        if (norm > 0.0)
            for (auto& [idx, w] : vec.entries) w /= norm;
    }
    return vec;
}

double unk_fraction(const Document& doc, const Vocabulary& vocab) {
    if (vocab.granularity() != Granularity::kWord)
        throw std::invalid_argument("unk_fraction: requires a word vocabulary");
    const TokenSeq tokens = tokenize(doc.norm_text);
    if (tokens.empty()) return 0.0;
    std::size_t unknown = 0;
    for (const auto& tok : tokens)
        if (vocab.index_of(tok) < 0) unknown += 1;
    return static_cast<double>(unknown) / static_cast<double>(tokens.size());
}

std::string Vocabulary::to_json() const {
    json j;
    j["format"] = "hsd-vocab";
    j["version"] = 1;
    j["granularity"] = hsd::to_string(granularity_);
    j["n_lo"] = n_lo_;
    j["n_hi"] = n_hi_;
    j["total_docs"] = total_docs_;
    json grams = json::array();
    for (const auto& [gram, idx, df] : entries())
        grams.push_back(json::array({gram, idx, df}));
    j["grams"] = std::move(grams);
    return j.dump();
}

Vocabulary Vocabulary::from_json(const std::string& json_text) {
    const json j = json::parse(json_text);
    if (j.value("format", "") != "hsd-vocab")
        throw std::runtime_error("vocabulary file: unrecognized format");
    if (j.value("version", 0) != 1)
        throw std::runtime_error("vocabulary file: unsupported version");
    Vocabulary vocab;
    vocab.granularity_ = granularity_from_string(j.at("granularity"));
    vocab.n_lo_ = j.at("n_lo");
    vocab.n_hi_ = j.at("n_hi");
    vocab.total_docs_ = j.at("total_docs");
    for (const auto& entry : j.at("grams")) {
        const std::string gram = entry.at(0);
        const std::uint32_t idx = entry.at(1);
        const std::uint64_t df = entry.at(2);
        vocab.index_.emplace(gram, idx);
        vocab.doc_freq_.emplace(gram, df);
    }
    return vocab;
}

void Vocabulary::save(const std::string& path) const {
    write_text_file(path, to_json());
}

Vocabulary Vocabulary::load(const std::string& path) {
    return from_json(read_text_file(path));
}

}  // namespace hsd
