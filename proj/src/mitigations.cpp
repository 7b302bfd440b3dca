#include "hsd/mitigations.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "hsd/rng.hpp"
#include "hsd/textproc.hpp"

namespace hsd {

namespace {

constexpr char kDictFormat[] = "hsd-dict";
constexpr int kDictVersion = 1;

// All strings reachable from cps by deleting up to max_deletes code points,
// the string itself included.
std::set<std::string> deletion_neighborhood(const std::vector<char32_t>& cps,
                                            int max_deletes) {
    std::set<std::vector<char32_t>> level{cps};
    std::set<std::string> out{utf8_encode(cps)};
    for (int d = 0; d < max_deletes; ++d) {
        std::set<std::vector<char32_t>> next;
        for (const auto& v : level) {
            for (std::size_t i = 0; i < v.size(); ++i) {
                std::vector<char32_t> shorter(v);
                shorter.erase(shorter.begin() + static_cast<std::ptrdiff_t>(i));
                if (next.insert(shorter).second)
                    out.insert(utf8_encode(shorter));
            }
        }
        level = std::move(next);
    }
    return out;
}

}  // namespace

std::string to_string(MitigationKind kind) {
    switch (kind) {
        case MitigationKind::kAdversarialTraining: return "adversarial_training";
        case MitigationKind::kSpellCheck: return "spell_check";
        case MitigationKind::kStripSpaces: return "strip_spaces";
    }
    throw std::invalid_argument("bad mitigation kind");
}

MitigationKind mitigation_kind_from_string(const std::string& s) {
    if (s == "adversarial_training") return MitigationKind::kAdversarialTraining;
    if (s == "spell_check") return MitigationKind::kSpellCheck;
    if (s == "strip_spaces") return MitigationKind::kStripSpaces;
    throw std::invalid_argument("unknown mitigation kind: " + s);
}

nlohmann::json MitigationSpec::to_json() const {
    nlohmann::json j{{"kind", to_string(kind)}};
    if (kind == MitigationKind::kAdversarialTraining && attack)
        j["attack"] = attack->to_json();
    if (kind == MitigationKind::kSpellCheck) j["max_dist"] = max_dist;
    return j;
}

LabeledCorpus adversarial_augment(const LabeledCorpus& train,
                                  const AttackSpec& attack, std::uint64_t seed,
                                  const StopwordList& stopwords) {
    LabeledCorpus out;
    out.scheme = train.scheme;
    out.docs.reserve(train.docs.size() * 2);
    out.docs = train.docs;
    for (std::size_t i = 0; i < train.docs.size(); ++i) {
        const Document& doc = train.docs[i];
        const std::string attacked =
            apply_transform(doc.norm_text, attack, derive_seed(seed, i), stopwords);
        out.docs.push_back(Document{attacked, normalize(attacked), doc.label});
    }
    return out;
}

FrequencyDictionary build_dictionary(const LabeledCorpus& train) {
    if (train.docs.empty()) throw std::invalid_argument("empty corpus");
    FrequencyDictionary dict;
    for (const auto& doc : train.docs)
        for (const auto& token : tokenize(doc.norm_text)) ++dict.counts[token];
    return dict;
}

nlohmann::json dictionary_to_json(const FrequencyDictionary& dict) {
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [word, count] : dict.counts) counts[word] = count;
    return nlohmann::json{
        {"format", kDictFormat}, {"version", kDictVersion}, {"counts", counts}};
}

FrequencyDictionary dictionary_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != kDictFormat ||
            j.at("version").get<int>() != kDictVersion)
            throw std::runtime_error("unsupported dictionary format");
        FrequencyDictionary dict;
        for (const auto& [word, count] : j.at("counts").items()) {
            const std::size_t n = count.get<std::size_t>();
            if (word.empty() || n == 0)
                throw std::runtime_error("bad dictionary entry");
            dict.counts[word] = n;
        }
        return dict;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("invalid dictionary file: ") + e.what());
    }
}

void save_dictionary(const FrequencyDictionary& dict, const std::string& path) {
    write_text_file(path, dictionary_to_json(dict).dump());
}

FrequencyDictionary load_dictionary(const std::string& path) {
    return dictionary_from_json(nlohmann::json::parse(read_text_file(path)));
}

std::size_t damerau_distance(const std::string& a, const std::string& b) {
    const std::vector<char32_t> s = utf8_decode(a);
    const std::vector<char32_t> t = utf8_decode(b);
    const std::size_t la = s.size(), lb = t.size();
    const std::size_t inf = la + lb;

    // Lowrance-Wagner: unrestricted transpositions, (la+2) x (lb+2) table.
    const std::size_t w = lb + 2;
    std::vector<std::size_t> d((la + 2) * w);
    const auto at = [&](std::size_t i, std::size_t j) -> std::size_t& {
        return d[i * w + j];
    };
    at(0, 0) = inf;
    for (std::size_t i = 0; i <= la; ++i) {
        at(i + 1, 0) = inf;
        at(i + 1, 1) = i;
    }
    for (std::size_t j = 0; j <= lb; ++j) {
        at(0, j + 1) = inf;
        at(1, j + 1) = j;
    }
    std::unordered_map<char32_t, std::size_t> last_row;
    for (std::size_t i = 1; i <= la; ++i) {
        std::size_t last_match_col = 0;
        for (std::size_t j = 1; j <= lb; ++j) {
            const auto it = last_row.find(t[j - 1]);
            const std::size_t k = it == last_row.end() ? 0 : it->second;
            const std::size_t l = last_match_col;
            std::size_t cost = 1;
            if (s[i - 1] == t[j - 1]) {
                cost = 0;
                last_match_col = j;
            }
            at(i + 1, j + 1) = std::min(
                {at(i, j) + cost, at(i + 1, j) + 1, at(i, j + 1) + 1,
                 at(k, l) + (i - k - 1) + 1 + (j - l - 1)});
        }
        last_row[s[i - 1]] = i;
    }
    return at(la + 1, lb + 1);
}

SpellCorrector::SpellCorrector(FrequencyDictionary dict, int max_dist)
    : dict_(std::move(dict)), max_dist_(max_dist) {
    if (max_dist_ < 1) throw std::invalid_argument("max_dist must be at least 1");
    words_.reserve(dict_.counts.size());
    for (const auto& [word, count] : dict_.counts) {
        if (word.empty() || count == 0)
            throw std::invalid_argument("bad dictionary entry");
        words_.push_back(word);
    }
    std::sort(words_.begin(), words_.end());
    for (std::uint32_t id = 0; id < words_.size(); ++id)
        for (const auto& variant :
             deletion_neighborhood(utf8_decode(words_[id]), max_dist_))
            delete_index_[variant].push_back(id);
}

std::string SpellCorrector::correct_token(const std::string& token) const {
    if (dict_.contains(token)) return token;

    std::set<std::uint32_t> candidates;
    for (const auto& variant : deletion_neighborhood(utf8_decode(token), max_dist_)) {
        const auto it = delete_index_.find(variant);
        if (it == delete_index_.end()) continue;
        candidates.insert(it->second.begin(), it->second.end());
    }

    const std::string* best = nullptr;
    std::size_t best_dist = 0;
    std::size_t best_freq = 0;
    for (std::uint32_t id : candidates) {
        const std::string& word = words_[id];
        const std::size_t dist = damerau_distance(token, word);
        if (dist > static_cast<std::size_t>(max_dist_)) continue;
        const std::size_t freq = dict_.counts.at(word);
        if (best == nullptr || dist < best_dist ||
            (dist == best_dist &&
             (freq > best_freq || (freq == best_freq && word < *best)))) {
            best = &word;
            best_dist = dist;
            best_freq = freq;
        }
    }
    return best ? *best : token;
}

std::string SpellCorrector::correct(const std::string& text) const {
    TokenSeq out;
    for (const auto& token : tokenize(text)) out.push_back(correct_token(token));
    return join_tokens(out);
}

std::string spell_correct(const std::string& text, const FrequencyDictionary& dict,
                          int max_dist) {
    return SpellCorrector(dict, max_dist).correct(text);
}

std::string strip_spaces(const std::string& text) {
    return attack_space_remove(text);
}

}  // namespace hsd
