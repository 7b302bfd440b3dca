#include "hsd/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_set>

#include "hsd/rng.hpp"

namespace hsd {

namespace {

// Density of N(mu, sigma) at the integer positions lo..hi, unnormalized
// (the discrete sampler normalizes).
std::vector<double> gaussian_weights(std::size_t lo, std::size_t hi, double mu,
                                     double sigma) {
    std::vector<double> w;
    w.reserve(hi - lo + 1);
    for (std::size_t p = lo; p <= hi; ++p) {
        const double d = (static_cast<double>(p) - mu) / sigma;
        w.push_back(std::exp(-0.5 * d * d));
    }
    return w;
}

std::string typo_word(const std::string& token, Rng& rng) {
    std::vector<char32_t> cps = utf8_decode(token);
    const std::size_t L = cps.size();
    // Interior positions 1..L-2; the first pick favors the middle of the
    // word, the second stays close to the first.
    const double mu1 = (static_cast<double>(L) - 1.0) / 2.0;
    const double sigma1 = (static_cast<double>(L) - 2.0) / 4.0;
    std::vector<double> w1 = gaussian_weights(1, L - 2, mu1, sigma1);
    const std::size_t i = 1 + rng.discrete(w1);

    std::vector<double> w2 = w1;
    for (std::size_t p = 1; p <= L - 2; ++p) {
        if (p == i) {
            w2[p - 1] = 0.0;
        } else {
            const double d = static_cast<double>(p) - static_cast<double>(i);
            w2[p - 1] *= std::exp(-0.5 * d * d);
        }
    }
    const std::size_t j = 1 + rng.discrete(w2);
    std::swap(cps[i], cps[j]);
    return utf8_encode(cps);
}

}  // namespace

std::string to_string(AttackKind kind) {
    switch (kind) {
        case AttackKind::kTypo: return "typo";
        case AttackKind::kLeet: return "leet";
        case AttackKind::kSpaceInsert: return "space_insert";
        case AttackKind::kSpaceRemove: return "space_remove";
        case AttackKind::kAppendCommon: return "append_common";
        case AttackKind::kAppendNonhate: return "append_nonhate";
        case AttackKind::kLove: return "love";
    }
    throw std::invalid_argument("bad attack kind");
}

AttackKind attack_kind_from_string(const std::string& s) {
    if (s == "typo") return AttackKind::kTypo;
    if (s == "leet") return AttackKind::kLeet;
    if (s == "space_insert") return AttackKind::kSpaceInsert;
    if (s == "space_remove") return AttackKind::kSpaceRemove;
    if (s == "append_common") return AttackKind::kAppendCommon;
    if (s == "append_nonhate") return AttackKind::kAppendNonhate;
    if (s == "love") return AttackKind::kLove;
    throw std::invalid_argument("unknown attack kind: " + s);
}

std::string to_string(WordlistSource source) {
    return source == WordlistSource::kCommonEnglish ? "common_english"
                                                    : "nonhate_class";
}

WordList derive_wordlist(const std::vector<std::string>& ranked_words,
                         const StopwordList& stopwords, std::size_t top_k,
                         WordlistSource provenance) {
    if (ranked_words.empty()) throw std::invalid_argument("empty word source");
    if (top_k == 0) throw std::invalid_argument("top_k must be positive");

    WordList list;
    list.provenance = provenance;
    std::unordered_set<std::string> seen;
    for (const auto& word : ranked_words) {
        if (list.words.size() == top_k) break;
        if (word.empty() || stopwords.contains(word)) continue;
        if (normalize(word) != word) continue;
        if (!seen.insert(word).second) continue;
        list.words.push_back(word);
    }
    if (list.words.empty())
        throw std::invalid_argument("no usable words in source");
    list.underfull = list.words.size() < top_k;
    return list;
}

WordList derive_wordlist(const LabeledCorpus& corpus, const std::string& label,
                         const StopwordList& stopwords, std::size_t top_k) {
    if (!corpus.scheme.has_label(label))
        throw std::invalid_argument("unknown label: " + label);
    if (top_k == 0) throw std::invalid_argument("top_k must be positive");

    std::map<std::string, std::size_t> freq;
    for (const auto& doc : corpus.docs) {
        if (doc.label != label) continue;
        for (const auto& token : tokenize(doc.norm_text))
            if (is_content_word(token, stopwords)) ++freq[token];
    }
    if (freq.empty())
        throw std::invalid_argument("label has no content words: " + label);

    std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(),
                                                            freq.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) {
                         if (a.second != b.second) return a.second > b.second;
                         return a.first < b.first;
                     });

    WordList list;
    list.provenance = WordlistSource::kNonhateClass;
    for (const auto& [word, count] : ranked) {
        if (list.words.size() == top_k) break;
        list.words.push_back(word);
    }
    list.underfull = list.words.size() < top_k;
    return list;
}

void save_wordlist(const WordList& list, const std::string& path) {
    std::string out = "# provenance: " + to_string(list.provenance) + "\n";
    for (const auto& word : list.words) {
        out += word;
        out += '\n';
    }
    write_text_file(path, out);
}

std::string attack_typo(const std::string& text, std::uint64_t seed,
                        double word_prob) {
    Rng rng(seed);
    TokenSeq out;
    for (const auto& token : tokenize(text)) {
        if (cp_length(token) < 4) {
            out.push_back(token);
            continue;
        }
        const bool apply = rng.uniform_real() < word_prob;
        out.push_back(apply ? typo_word(token, rng) : token);
    }
    return join_tokens(out);
}

std::string attack_leet(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char ch : text) {
        switch (ch) {
            case 'a': out += '4'; break;
            case 'e': out += '3'; break;
            case 'l': out += '1'; break;
            case 'o': out += '0'; break;
            case 's': out += '5'; break;
            default: out += ch;
        }
    }
    return out;
}

std::string attack_space_insert(const std::string& text, std::uint64_t seed,
                                const StopwordList& stopwords, double word_prob) {
    Rng rng(seed);
    TokenSeq out;
    for (const auto& token : tokenize(text)) {
        if (!is_content_word(token, stopwords)) {
            out.push_back(token);
            continue;
        }
        if (rng.uniform_real() >= word_prob) {
            out.push_back(token);
            continue;
        }
        const std::vector<char32_t> cps = utf8_decode(token);
        const std::size_t split = static_cast<std::size_t>(
            rng.uniform_int(1, static_cast<std::int64_t>(cps.size()) - 1));
        out.push_back(utf8_encode(
            std::vector<char32_t>(cps.begin(), cps.begin() + static_cast<std::ptrdiff_t>(split))));
        out.push_back(utf8_encode(
            std::vector<char32_t>(cps.begin() + static_cast<std::ptrdiff_t>(split), cps.end())));
    }
    return join_tokens(out);
}

std::string attack_space_remove(const std::string& text) {
    const std::vector<char32_t> cps = utf8_decode(text);
    std::vector<char32_t> kept;
    kept.reserve(cps.size());
    for (char32_t cp : cps)
        if (!is_space_cp(cp)) kept.push_back(cp);
    return utf8_encode(kept);
}

std::string attack_append(const std::string& text, const WordList& list, int lo,
                          int hi, std::uint64_t seed) {
    if (list.words.empty()) throw std::invalid_argument("empty wordlist");
    if (lo < 1 || hi < lo)
        throw std::invalid_argument("append bounds must satisfy 1 <= lo <= hi");
    Rng rng(seed);
    const std::int64_t k = rng.uniform_int(lo, hi);
    std::string out = text;
    for (std::int64_t n = 0; n < k; ++n) {
        out += ' ';
        out += list.words[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(list.words.size()) - 1))];
    }
    return out;
}

std::string attack_love(const std::string& text) {
    return attack_space_remove(text) + " love";
}

nlohmann::json AttackSpec::to_json() const {
    nlohmann::json j{{"kind", to_string(kind)}, {"seed", seed}};
    switch (kind) {
        case AttackKind::kTypo:
            j["word_prob"] = word_prob;
            j["sigma1"] = "(L-2)/4";
            j["sigma2"] = "1";
            break;
        case AttackKind::kSpaceInsert:
            j["word_prob"] = word_prob;
            break;
        case AttackKind::kAppendCommon:
        case AttackKind::kAppendNonhate:
            j["append_lo"] = append_lo;
            j["append_hi"] = append_hi;
            j["wordlist_provenance"] = to_string(wordlist.provenance);
            j["wordlist_size"] = wordlist.words.size();
            break;
        default:
            break;
    }
    return j;
}

std::string apply_transform(const std::string& norm_text, const AttackSpec& spec,
                            std::uint64_t seed, const StopwordList& stopwords) {
    switch (spec.kind) {
        case AttackKind::kTypo:
            return attack_typo(norm_text, seed, spec.word_prob);
        case AttackKind::kLeet:
            return attack_leet(norm_text);
        case AttackKind::kSpaceInsert:
            return attack_space_insert(norm_text, seed, stopwords, spec.word_prob);
        case AttackKind::kSpaceRemove:
            return attack_space_remove(norm_text);
        case AttackKind::kAppendCommon:
        case AttackKind::kAppendNonhate:
            return attack_append(norm_text, spec.wordlist, spec.append_lo,
                                 spec.append_hi, seed);
        case AttackKind::kLove:
            return attack_love(norm_text);
    }
    throw std::invalid_argument("bad attack kind");
}

LabeledCorpus apply_attack(const LabeledCorpus& test, const AttackSpec& spec,
                           const std::string& target_label,
                           const StopwordList& stopwords) {
    if (!test.scheme.has_label(target_label))
        throw std::invalid_argument("target label not in scheme: " + target_label);
    if (spec.kind == AttackKind::kAppendCommon &&
        spec.wordlist.provenance != WordlistSource::kCommonEnglish)
        throw std::invalid_argument("append_common requires a common_english wordlist");
    if (spec.kind == AttackKind::kAppendNonhate &&
        spec.wordlist.provenance != WordlistSource::kNonhateClass)
        throw std::invalid_argument("append_nonhate requires a nonhate_class wordlist");

    LabeledCorpus out;
    out.scheme = test.scheme;
    out.docs.reserve(test.docs.size());
    for (std::size_t i = 0; i < test.docs.size(); ++i) {
        const Document& doc = test.docs[i];
        if (doc.label != target_label) {
            out.docs.push_back(doc);
            continue;
        }
        const std::string attacked =
            apply_transform(doc.norm_text, spec, derive_seed(spec.seed, i), stopwords);
        out.docs.push_back(Document{attacked, normalize(attacked), doc.label});
    }
    return out;
}

}  // namespace hsd
