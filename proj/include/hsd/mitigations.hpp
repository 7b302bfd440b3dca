#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "hsd/attacks.hpp"
#include "hsd/corpus.hpp"

#include "json.hpp"

namespace hsd {

enum class MitigationKind { kAdversarialTraining, kSpellCheck, kStripSpaces };

std::string to_string(MitigationKind kind);
MitigationKind mitigation_kind_from_string(const std::string& s);

struct MitigationSpec {
    MitigationKind kind = MitigationKind::kStripSpaces;
    std::optional<AttackSpec> attack;  // required for adversarial training
    int max_dist = 2;                  // spell check

    nlohmann::json to_json() const;
};

// Original documents followed by one attacked copy of every document, all
// labels included, so the output has exactly twice as many documents and the
// same label ratios. Per-document seeds derive from seed and the index.
LabeledCorpus adversarial_augment(const LabeledCorpus& train,
                                  const AttackSpec& attack, std::uint64_t seed,
                                  const StopwordList& stopwords =
                                      StopwordList::embedded());

struct FrequencyDictionary {
    std::unordered_map<std::string, std::size_t> counts;

    bool contains(const std::string& word) const { return counts.count(word) > 0; }
};

FrequencyDictionary build_dictionary(const LabeledCorpus& train);

nlohmann::json dictionary_to_json(const FrequencyDictionary& dict);
FrequencyDictionary dictionary_from_json(const nlohmann::json& j);
void save_dictionary(const FrequencyDictionary& dict, const std::string& path);
FrequencyDictionary load_dictionary(const std::string& path);

// Damerau-Levenshtein distance (unrestricted transpositions, all edits cost
// 1) over code points.
std::size_t damerau_distance(const std::string& a, const std::string& b);

// Replaces each out-of-dictionary token by the dictionary word with minimal
// Damerau-Levenshtein distance <= max_dist; ties break by higher frequency,
// then lexicographically. Candidate retrieval goes through a precomputed
// deletion-neighborhood index, then every candidate is verified with the
// exact distance. Token count never changes.
class SpellCorrector {
public:
    SpellCorrector(FrequencyDictionary dict, int max_dist = 2);

    std::string correct_token(const std::string& token) const;
    std::string correct(const std::string& text) const;

    const FrequencyDictionary& dictionary() const { return dict_; }
    int max_dist() const { return max_dist_; }

private:
    FrequencyDictionary dict_;
    int max_dist_;
    std::vector<std::string> words_;
    std::unordered_map<std::string, std::vector<std::uint32_t>> delete_index_;
};

// One-shot convenience; builds the index on every call, so prefer a
// SpellCorrector when correcting many documents against one dictionary.
std::string spell_correct(const std::string& text, const FrequencyDictionary& dict,
                          int max_dist = 2);

// Same transform as attack_space_remove, exposed as a preprocessing stage
// for train and test time. Only meaningful for character-granularity
// pipelines; the experiment harness rejects it on word models.
std::string strip_spaces(const std::string& text);

}  // namespace hsd
