#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hsd {

// One labeled text. norm_text is derived from raw_text by normalize() and may
// be empty even though raw_text never is.
struct Document {
    std::string raw_text;
    std::string norm_text;
    std::string label;
};

Document make_document(std::string raw_text, std::string label);

// Label set with a designated hate label. Labels keep a fixed order; it
// defines the class axis of every model trained on the scheme.
struct ClassScheme {
    std::vector<std::string> labels;
    std::string hate_label;

    bool has_label(const std::string& label) const;
    std::size_t label_index(const std::string& label) const;
};

ClassScheme make_scheme(std::vector<std::string> labels, std::string hate_label);

struct LabeledCorpus {
    std::vector<Document> docs;
    ClassScheme scheme;

    std::map<std::string, std::size_t> label_counts() const;
};

// Descriptive statistics over whitespace-tokenized norm_text lengths.
// Quartiles use the nearest-rank method.
struct CorpusStats {
    std::map<std::string, std::size_t> label_counts;
    std::size_t n_docs = 0;
    std::size_t empty_norm_docs = 0;  // docs whose norm_text is empty
    bool empty = false;               // corpus had no documents
    double mean = 0.0;
    double stddev = 0.0;  // population standard deviation
    std::size_t min = 0;
    std::size_t max = 0;
    std::size_t q25 = 0;
    std::size_t q50 = 0;
    std::size_t q75 = 0;
};

// Loads an RFC-4180 CSV with a header row. One Document per data row in file
// order; text is normalized on ingestion. Rows are reported 1-based (the row
// after the header is row 1).
LabeledCorpus load_csv(const std::string& path, const std::string& text_col,
                       const std::string& label_col, const ClassScheme& scheme);
LabeledCorpus corpus_from_csv_content(const std::string& content,
                                      const std::string& text_col,
                                      const std::string& label_col,
                                      const ClassScheme& scheme);

// Writes a corpus as CSV with columns (text,label); text holds raw_text.
void save_csv(const LabeledCorpus& corpus, const std::string& path);
std::string corpus_to_csv_content(const LabeledCorpus& corpus);

// Relabels every document through merge_map (source label -> target label).
// The map must cover every label of the corpus scheme. The resulting scheme's
// labels are the map's targets, ordered by first appearance over the source
// label order; the hate label follows the mapping.
LabeledCorpus merge_classes(const LabeledCorpus& corpus,
                            const std::map<std::string, std::string>& merge_map);

// Stratified train/test split, deterministic in seed. Every label must have
// at least two documents; each label contributes at least one document to
// each side. Relative document order is preserved within both halves.
std::pair<LabeledCorpus, LabeledCorpus> split(const LabeledCorpus& corpus,
                                              double test_fraction,
                                              std::uint64_t seed);

CorpusStats stats(const LabeledCorpus& corpus);

// Synthetic corpus generation: every document carries one or more keywords of
// its own label plus filler words, so label signal is fully keyword-driven.
struct SyntheticSpec {
    ClassScheme scheme;
    std::map<std::string, std::size_t> docs_per_label;
    std::map<std::string, std::vector<std::string>> keywords;  // per label, disjoint
    std::vector<std::string> filler;
    std::size_t min_tokens = 6;
    std::size_t max_tokens = 12;
    std::size_t min_keywords = 1;
    std::size_t max_keywords = 2;
};

LabeledCorpus generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace hsd
