#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hsd/attacks.hpp"
#include "hsd/corpus.hpp"
#include "hsd/features.hpp"
#include "hsd/mitigations.hpp"
#include "hsd/models.hpp"

#include "json.hpp"

namespace hsd {

// The id "none" is reserved in attack and mitigation grid axes for the
// baseline column and cannot name a config entry.
inline constexpr char kNoneId[] = "none";

struct CorpusConfig {
    std::string id;
    std::string path;  // CSV source; empty when synthetic is set
    std::string text_col = "text";
    std::string label_col = "label";
    ClassScheme scheme;
    std::optional<SyntheticSpec> synthetic;
    std::optional<std::map<std::string, std::string>> merge;
    double test_fraction = 0.2;
};

struct FeatureConfig {
    std::string id;
    Granularity granularity = Granularity::kChar;
    std::uint32_t n_lo = 1;
    std::uint32_t n_hi = 3;
    Weighting weighting = Weighting::kCount;
    bool l2_normalize = false;
    std::uint64_t min_doc_freq = 2;
};

struct ModelConfig {
    std::string id;
    Arch arch = Arch::kLinear;
    Hyperparams hyper;  // seed is always derived from the global seed
};

struct WordlistConfig {
    std::string id;
    WordlistSource source = WordlistSource::kCommonEnglish;
    std::string path;    // common variant; empty selects the embedded list
    std::string corpus;  // nonhate variant: corpus id
    std::string label;   // nonhate variant: label within that corpus
    std::size_t top_k = 1000;
};

struct AttackConfig {
    std::string id;
    AttackKind kind = AttackKind::kLeet;
    double word_prob = 1.0;
    int append_lo = 10;
    int append_hi = 50;
    std::string wordlist;  // id; append kinds only
};

struct MitigationConfig {
    std::string id;
    MitigationKind kind = MitigationKind::kStripSpaces;
    std::string attack;  // id; adversarial_training only
    int max_dist = 2;
};

// One grid block = full cartesian product of its axes. Omitted attack or
// mitigation axes default to ["none"].
struct GridConfig {
    std::string id;
    std::vector<std::string> corpora;
    std::vector<std::string> features;
    std::vector<std::string> models;
    std::vector<std::string> attacks;
    std::vector<std::string> mitigations;
};

// Trains the (feature, model) pair on every corpus and evaluates each
// trained model on every corpus's test split.
struct CrossApplyConfig {
    std::string id;
    std::vector<std::string> corpora;
    std::string feature;
    std::string model;
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    bool fail_fast = false;
    std::vector<CorpusConfig> corpora;
    std::vector<FeatureConfig> features;
    std::vector<ModelConfig> models;
    std::vector<WordlistConfig> wordlists;
    std::vector<AttackConfig> attacks;
    std::vector<MitigationConfig> mitigations;
    std::vector<GridConfig> grids;
    std::vector<CrossApplyConfig> cross_apply;
    nlohmann::json snapshot;  // the config as given
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

struct CellResult {
    std::string grid_id;
    std::string corpus_id;
    std::string feature_id;
    std::string model_id;
    std::string attack_id;
    std::string mitigation_id;
    bool ok = false;
    std::string error;
    // Set for attack/mitigation pairings with no measured precedent
    // (adversarial training against the combined boundary+append attack).
    bool extrapolation = false;
    double wall_ms = 0.0;
    EvalReport eval;

    nlohmann::json to_json() const;
};

struct CrossApplyResult {
    std::string id;
    std::string feature_id;
    std::string model_id;
    std::vector<std::string> corpus_ids;
    bool ok = false;
    std::string error;
    double wall_ms = 0.0;
    std::vector<std::vector<EvalReport>> grid;  // [trained on][tested on]

    nlohmann::json to_json() const;
};

struct ExperimentReport {
    nlohmann::json config_snapshot;
    std::vector<CellResult> cells;
    std::vector<CrossApplyResult> cross;

    nlohmann::json to_json() const;
};

// Inverse of ExperimentReport::to_json, for re-rendering saved reports.
// Throws std::runtime_error on malformed input.
ExperimentReport report_from_json(const nlohmann::json& j);

// Preparation helpers that mirror run() exactly, derived seeds included, so
// artifacts produced on the side match grid cells bit for bit.

// Loads or generates a configured corpus, merge applied, before splitting.
LabeledCorpus materialize_corpus(const ExperimentConfig& config,
                                 const std::string& corpus_id);

// The (train, test) split run() would use for this corpus.
std::pair<LabeledCorpus, LabeledCorpus> prepare_corpus(
    const ExperimentConfig& config, const std::string& corpus_id);

// The attacked test split shared by every grid cell with this attack.
LabeledCorpus attack_test_split(const ExperimentConfig& config,
                                const std::string& corpus_id,
                                const std::string& attack_id);

// The adversarially augmented train split for an adversarial_training
// mitigation; rejects mitigations of any other kind.
LabeledCorpus augment_train_split(const ExperimentConfig& config,
                                  const std::string& corpus_id,
                                  const std::string& mitigation_id);

// Trains one combination exactly as its grid cell would. A spell_check
// mitigation id is accepted and trains the unmitigated model, since spell
// checking only changes evaluation.
std::pair<Vocabulary, TrainedModel> train_cell(
    const ExperimentConfig& config, const std::string& corpus_id,
    const std::string& feature_id, const std::string& model_id,
    const std::string& mitigation_id = kNoneId);

// Executes every grid cell and cross-application block. Cell pipeline:
// split -> train-side mitigation -> vocabulary -> train -> attack the
// hate-labeled test docs -> test-side mitigation -> evaluate. Failures are
// recorded per cell unless config.fail_fast is set. All randomness derives
// from config.seed and stable cell identifiers, so a rerun reproduces every
// metric bit-exactly.
ExperimentReport run(const ExperimentConfig& config);

std::string render_markdown(const ExperimentReport& report);
std::string render_json(const ExperimentReport& report);

// format is "json" or "markdown".
void render_to_file(const ExperimentReport& report, const std::string& format,
                    const std::string& path);

}  // namespace hsd
