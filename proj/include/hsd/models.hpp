#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hsd/corpus.hpp"
#include "hsd/features.hpp"

#include "json.hpp"

namespace hsd {

enum class Arch { kLinear, kMlp };

std::string to_string(Arch arch);
Arch arch_from_string(const std::string& s);

struct Hyperparams {
    double learning_rate = 0.05;
    int epochs = 40;
    double l2 = 1e-4;
    int batch_size = 32;
    int hidden_units = 128;
    std::uint64_t seed = 0;
};

// Softmax classifier over sparse features: either a single linear layer
// (input_dim x C) or one ReLU hidden layer (input_dim x H, H x C).
// Parameters are plain row-major vectors so they can be flattened for
// gradient checking and serialized losslessly.
struct TrainedModel {
    Arch arch = Arch::kLinear;
    std::vector<std::string> labels;
    std::string hate_label;
    std::uint32_t input_dim = 0;
    int hidden_units = 0;  // 0 when arch == kLinear
    std::uint64_t vocab_hash = 0;
    Weighting weighting = Weighting::kCount;
    bool l2_normalized_features = false;
    Hyperparams hyper;

    std::vector<double> w;   // linear: input_dim x C
    std::vector<double> b;   // linear: C
    std::vector<double> w1;  // mlp: input_dim x H
    std::vector<double> b1;  // mlp: H
    std::vector<double> w2;  // mlp: H x C
    std::vector<double> b2;  // mlp: C

    // Regularized full-set loss before training and after each epoch.
    std::vector<double> epoch_loss;

    std::size_t num_labels() const { return labels.size(); }
};

struct EvalReport {
    std::vector<std::string> labels;
    std::string hate_label;
    std::vector<std::vector<std::int64_t>> confusion;  // [gold][predicted]
    std::vector<double> precision;
    std::vector<double> recall;
    std::vector<double> f1;
    // Set for a label whose precision, recall, or F1 had a zero denominator;
    // the metric itself is reported as 0 in that case.
    std::vector<bool> zero_division;
    double macro_f1 = 0.0;
    double hate_f1 = 0.0;

    std::string model_id;
    std::string corpus_id;
    std::string attack_id;
    std::string mitigation_id;
    Hyperparams hyper;

    nlohmann::json to_json() const;
};

// Inverse of EvalReport::to_json; throws std::runtime_error on malformed or
// inconsistent input.
EvalReport eval_report_from_json(const nlohmann::json& j);

// y holds indices into scheme.labels. Minimizes L2-regularized softmax
// cross-entropy by mini-batch gradient descent; deterministic given
// hyper.seed (fixed init, fixed shuffle order).
TrainedModel train(const std::vector<SparseVector>& X, const std::vector<int>& y,
                   const ClassScheme& scheme, Arch arch, const Hyperparams& hyper,
                   std::uint64_t vocab_hash = 0,
                   Weighting weighting = Weighting::kCount,
                   bool l2_normalized_features = false);

// Featurizes every document with the given vocabulary, then trains.
TrainedModel train_on_corpus(const LabeledCorpus& corpus, const Vocabulary& vocab,
                             Arch arch, const Hyperparams& hyper,
                             Weighting weighting = Weighting::kCount,
                             bool l2_normalized_features = false);

std::vector<double> predict_proba(const TrainedModel& model, const SparseVector& x);

// Argmax of the class probabilities; ties resolve to the lowest index.
int predict_label(const TrainedModel& model, const SparseVector& x);

using DocTransform = std::function<Document(const Document&)>;

// Applies preproc (when set) to each test document before featurization.
// Gold labels always come from the untransformed document.
EvalReport evaluate(const TrainedModel& model, const LabeledCorpus& corpus,
                    const Vocabulary& vocab, const DocTransform& preproc = {});

// Full model x corpus grid; models[i] is featurized with vocabs[i].
std::vector<std::vector<EvalReport>> cross_apply(
    const std::vector<TrainedModel>& models, const std::vector<Vocabulary>& vocabs,
    const std::vector<LabeledCorpus>& corpora);

// Training objective over X/y taken as a single batch: mean cross-entropy
// plus (l2/2) times the squared norm of the weight matrices (biases are
// not regularized). batch_gradient returns the analytic gradient in the
// flatten_params layout; the trainer steps along this same gradient.
double batch_loss(const TrainedModel& model, const std::vector<SparseVector>& X,
                  const std::vector<int>& y, double l2);
std::vector<double> batch_gradient(const TrainedModel& model,
                                   const std::vector<SparseVector>& X,
                                   const std::vector<int>& y, double l2);

// Layout: linear [w, b]; mlp [w1, b1, w2, b2].
std::vector<double> flatten_params(const TrainedModel& model);
void set_params(TrainedModel& model, const std::vector<double>& flat);

nlohmann::json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& j);
void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

}  // namespace hsd
