#include "hsd/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "hsd/csv.hpp"
#include "hsd/rng.hpp"
#include "hsd/textproc.hpp"

namespace hsd {

Document make_document(std::string raw_text, std::string label) {
    if (raw_text.empty())
        throw std::invalid_argument("document: raw_text must be non-empty");
    Document doc;
    doc.norm_text = normalize(raw_text);
    doc.raw_text = std::move(raw_text);
    doc.label = std::move(label);
    return doc;
}

bool ClassScheme::has_label(const std::string& label) const {
    return std::find(labels.begin(), labels.end(), label) != labels.end();
}

std::size_t ClassScheme::label_index(const std::string& label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == label) return i;
    throw std::invalid_argument("scheme: unknown label '" + label + "'");
}

ClassScheme make_scheme(std::vector<std::string> labels, std::string hate_label) {
    if (labels.empty()) throw std::invalid_argument("scheme: no labels");
    std::set<std::string> seen(labels.begin(), labels.end());
    if (seen.size() != labels.size())
        throw std::invalid_argument("scheme: duplicate label");
    if (!seen.count(hate_label))
        throw std::invalid_argument("scheme: hate label '" + hate_label +
                                    "' not in label set");
    return ClassScheme{std::move(labels), std::move(hate_label)};
}

std::map<std::string, std::size_t> LabeledCorpus::label_counts() const {
    std::map<std::string, std::size_t> counts;
    for (const auto& label : scheme.labels) counts[label] = 0;
    for (const auto& doc : docs) counts[doc.label] += 1;
    return counts;
}

LabeledCorpus corpus_from_csv_content(const std::string& content,
                                      const std::string& text_col,
                                      const std::string& label_col,
                                      const ClassScheme& scheme) {
    const CsvTable table = parse_csv(content);
    const std::size_t ti = table.column(text_col);
    const std::size_t li = table.column(label_col);
    LabeledCorpus corpus;
    corpus.scheme = scheme;
    corpus.docs.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const std::string& text = table.rows[r][ti];
        const std::string& label = table.rows[r][li];
        if (text.empty())
            throw std::runtime_error("empty text at row " + std::to_string(r + 1));
        if (!scheme.has_label(label))
            throw std::runtime_error("unknown label at row " + std::to_string(r + 1) +
                                     ": '" + label + "'");
        corpus.docs.push_back(make_document(text, label));
    }
    return corpus;
}

LabeledCorpus load_csv(const std::string& path, const std::string& text_col,
                       const std::string& label_col, const ClassScheme& scheme) {
    return corpus_from_csv_content(read_text_file(path), text_col, label_col,
                                   scheme);
}

std::string corpus_to_csv_content(const LabeledCorpus& corpus) {
    CsvTable table;
    table.header = {"text", "label"};
    table.rows.reserve(corpus.docs.size());
    for (const auto& doc : corpus.docs)
        table.rows.push_back({doc.raw_text, doc.label});
    return to_csv(table);
}

void save_csv(const LabeledCorpus& corpus, const std::string& path) {
    write_text_file(path, corpus_to_csv_content(corpus));
}

LabeledCorpus merge_classes(const LabeledCorpus& corpus,
                            const std::map<std::string, std::string>& merge_map) {
    for (const auto& label : corpus.scheme.labels)
        if (!merge_map.count(label))
            throw std::invalid_argument("merge map does not cover label '" + label +
                                        "'");
    std::vector<std::string> new_labels;
    for (const auto& label : corpus.scheme.labels) {
        const std::string& target = merge_map.at(label);
        if (std::find(new_labels.begin(), new_labels.end(), target) ==
            new_labels.end())
            new_labels.push_back(target);
    }
    LabeledCorpus merged;
    merged.scheme =
        make_scheme(new_labels, merge_map.at(corpus.scheme.hate_label));
    merged.docs = corpus.docs;
    for (auto& doc : merged.docs) doc.label = merge_map.at(doc.label);
    return merged;
}

std::pair<LabeledCorpus, LabeledCorpus> split(const LabeledCorpus& corpus,
                                              double test_fraction,
                                              std::uint64_t seed) {
    if (corpus.docs.empty()) throw std::invalid_argument("split: empty corpus");
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw std::invalid_argument("split: test_fraction must be in (0,1)");

    // Group document indices per label, keeping corpus order.
    std::map<std::string, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < corpus.docs.size(); ++i)
        by_label[corpus.docs[i].label].push_back(i);
    for (const auto& [label, indices] : by_label)
        if (indices.size() < 2)
            throw std::invalid_argument("split: label '" + label +
                                        "' has fewer than 2 documents");

    std::vector<bool> in_test(corpus.docs.size(), false);
    for (auto& [label, indices] : by_label) {
        const std::size_t n = indices.size();
        std::size_t n_test = static_cast<std::size_t>(
            std::llround(static_cast<double>(n) * test_fraction));
        // Each label lands on both sides; this is why < 2 documents errors.
        n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
        Rng rng(derive_seed(seed, fnv1a(label)));
        std::vector<std::size_t> order = indices;
        rng.shuffle(order);
        for (std::size_t k = 0; k < n_test; ++k) in_test[order[k]] = true;
    }

    LabeledCorpus train, test;
    train.scheme = corpus.scheme;
    test.scheme = corpus.scheme;
    for (std::size_t i = 0; i < corpus.docs.size(); ++i)
        (in_test[i] ? test : train).docs.push_back(corpus.docs[i]);
    return {std::move(train), std::move(test)};
}

CorpusStats stats(const LabeledCorpus& corpus) {
    CorpusStats out;
    out.n_docs = corpus.docs.size();
    out.label_counts = corpus.label_counts();
    if (corpus.docs.empty()) {
        out.empty = true;
        return out;
    }
    std::vector<std::size_t> lengths;
    lengths.reserve(corpus.docs.size());
    double sum = 0.0;
    for (const auto& doc : corpus.docs) {
        const std::size_t len = tokenize(doc.norm_text).size();
        if (doc.norm_text.empty()) out.empty_norm_docs += 1;
        lengths.push_back(len);
        sum += static_cast<double>(len);
    }
    std::sort(lengths.begin(), lengths.end());
    const double n = static_cast<double>(lengths.size());
    out.mean = sum / n;
    double ss = 0.0;
    for (std::size_t len : lengths) {
        const double d = static_cast<double>(len) - out.mean;
        ss += d * d;
    }
    out.stddev = std::sqrt(ss / n);
    out.min = lengths.front();
    out.max = lengths.back();
    auto nearest_rank = [&](double p) {
        std::size_t rank = static_cast<std::size_t>(std::ceil(p * n));
        if (rank == 0) rank = 1;
        return lengths[rank - 1];
    };
    out.q25 = nearest_rank(0.25);
    out.q50 = nearest_rank(0.50);
    out.q75 = nearest_rank(0.75);
    return out;
}

LabeledCorpus generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    if (spec.scheme.labels.empty())
        throw std::invalid_argument("synthetic: scheme has no labels");
    if (spec.filler.empty())
        throw std::invalid_argument("synthetic: filler vocabulary empty");
    if (spec.min_tokens == 0 || spec.min_tokens > spec.max_tokens)
        throw std::invalid_argument("synthetic: bad token count bounds");
    if (spec.min_keywords == 0 || spec.min_keywords > spec.max_keywords)
        throw std::invalid_argument("synthetic: bad keyword count bounds");

    std::set<std::string> seen_keywords;
    for (const auto& label : spec.scheme.labels) {
        auto it = spec.keywords.find(label);
        if (it == spec.keywords.end() || it->second.empty())
            throw std::invalid_argument("synthetic: no keywords for label '" +
                                        label + "'");
        for (const auto& kw : it->second)
            if (!seen_keywords.insert(kw).second)
                throw std::invalid_argument(
                    "synthetic: keyword lists overlap on '" + kw + "'");
    }

    LabeledCorpus corpus;
    corpus.scheme = spec.scheme;
    std::size_t doc_index = 0;
    for (const auto& label : spec.scheme.labels) {
        auto cit = spec.docs_per_label.find(label);
        const std::size_t count = cit == spec.docs_per_label.end() ? 0 : cit->second;
        const auto& kws = spec.keywords.at(label);
        for (std::size_t d = 0; d < count; ++d, ++doc_index) {
            Rng rng(derive_seed(seed, doc_index));
            const std::size_t n_tokens = static_cast<std::size_t>(
                rng.uniform_int(static_cast<std::int64_t>(spec.min_tokens),
                                static_cast<std::int64_t>(spec.max_tokens)));
            std::size_t n_kw = static_cast<std::size_t>(
                rng.uniform_int(static_cast<std::int64_t>(spec.min_keywords),
                                static_cast<std::int64_t>(spec.max_keywords)));
            n_kw = std::min(n_kw, n_tokens);

            std::vector<std::string> tokens(n_tokens);
            std::vector<std::size_t> positions(n_tokens);
            for (std::size_t i = 0; i < n_tokens; ++i) positions[i] = i;
            rng.shuffle(positions);
            for (std::size_t k = 0; k < n_kw; ++k)
                tokens[positions[k]] = kws[rng.uniform_u64(kws.size())];
            for (auto& tok : tokens)
                if (tok.empty()) tok = spec.filler[rng.uniform_u64(spec.filler.size())];
            corpus.docs.push_back(make_document(join_tokens(tokens), label));
        }
    }
    return corpus;
}

}  // namespace hsd
