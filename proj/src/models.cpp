#include "hsd/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include "hsd/rng.hpp"
#include "hsd/textproc.hpp"

namespace hsd {

namespace {

constexpr char kModelFormat[] = "hsd-model";
constexpr int kModelVersion = 1;

void validate_hyperparams(const Hyperparams& h, Arch arch) {
    if (!(h.learning_rate > 0.0))
        throw std::invalid_argument("learning_rate must be positive");
    if (h.epochs < 1) throw std::invalid_argument("epochs must be at least 1");
    if (h.l2 < 0.0) throw std::invalid_argument("l2 must be non-negative");
    if (h.batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
    if (arch == Arch::kMlp && h.hidden_units < 1)
        throw std::invalid_argument("hidden_units must be at least 1");
    if (h.learning_rate * h.l2 >= 1.0)
        throw std::invalid_argument("learning_rate * l2 must be below 1");
}

double logsumexp(const std::vector<double>& z) {
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    return m + std::log(s);
}

void check_feature_vector(const TrainedModel& m, const SparseVector& x) {
    if (x.dim != m.input_dim)
        throw std::invalid_argument("feature dimension " + std::to_string(x.dim) +
                                    " does not match model input " +
                                    std::to_string(m.input_dim));
    for (const auto& [idx, v] : x.entries)
        if (idx >= m.input_dim)
            throw std::invalid_argument("feature index out of range");
}

// Logits with the stored input-layer weights scaled by w_scale (the trainer
// keeps an implicit global multiplier so L2 decay is O(1) per step).
std::vector<double> linear_logits(const TrainedModel& m, const SparseVector& x,
                                  double w_scale) {
    const std::size_t C = m.num_labels();
    std::vector<double> z(m.b);
    for (const auto& [idx, v] : x.entries) {
        const double* row = m.w.data() + static_cast<std::size_t>(idx) * C;
        for (std::size_t c = 0; c < C; ++c) z[c] += w_scale * row[c] * v;
    }
    return z;
}

void mlp_forward(const TrainedModel& m, const SparseVector& x, double w1_scale,
                 std::vector<double>& z1, std::vector<double>& a1,
                 std::vector<double>& z2) {
    const std::size_t H = static_cast<std::size_t>(m.hidden_units);
    const std::size_t C = m.num_labels();
    z1 = m.b1;
    for (const auto& [idx, v] : x.entries) {
        const double* row = m.w1.data() + static_cast<std::size_t>(idx) * H;
        for (std::size_t h = 0; h < H; ++h) z1[h] += w1_scale * row[h] * v;
    }
    a1.resize(H);
    for (std::size_t h = 0; h < H; ++h) a1[h] = z1[h] > 0.0 ? z1[h] : 0.0;
    z2 = m.b2;
    for (std::size_t h = 0; h < H; ++h) {
        if (a1[h] == 0.0) continue;
        const double* row = m.w2.data() + h * C;
        for (std::size_t c = 0; c < C; ++c) z2[c] += a1[h] * row[c];
    }
}

// Mean cross-entropy and its gradients over the examples selected by idxs.
// grad_rows is keyed by feature index and holds rows of the input-layer
// gradient (C-wide for linear, H-wide for mlp); the map keeps the update
// order deterministic. Gradients exclude the regularizer.
struct BatchDeriv {
    double mean_ce = 0.0;
    std::map<std::uint32_t, std::vector<double>> grad_rows;
    std::vector<double> gb;   // linear: b; mlp: b1
    std::vector<double> gw2;  // mlp only
    std::vector<double> gb2;  // mlp only
};

BatchDeriv batch_derivatives(const TrainedModel& m,
                             const std::vector<SparseVector>& X,
                             const std::vector<int>& y,
                             const std::vector<std::size_t>& idxs,
                             double w_scale, bool want_grads) {
    const std::size_t C = m.num_labels();
    const std::size_t H = static_cast<std::size_t>(m.hidden_units);
    const double inv_b = 1.0 / static_cast<double>(idxs.size());

    BatchDeriv d;
    if (want_grads) {
        if (m.arch == Arch::kLinear) {
            d.gb.assign(C, 0.0);
        } else {
            d.gb.assign(H, 0.0);
            d.gw2.assign(H * C, 0.0);
            d.gb2.assign(C, 0.0);
        }
    }

    std::vector<double> z1, a1, z;
    double ce_sum = 0.0;
    for (std::size_t i : idxs) {
        const SparseVector& x = X[i];
        if (m.arch == Arch::kLinear)
            z = linear_logits(m, x, w_scale);
        else
            mlp_forward(m, x, w_scale, z1, a1, z);

        const double lse = logsumexp(z);
        ce_sum += lse - z[static_cast<std::size_t>(y[i])];
        if (!want_grads) continue;

        std::vector<double> dz(C);
        for (std::size_t c = 0; c < C; ++c) dz[c] = std::exp(z[c] - lse) * inv_b;
        dz[static_cast<std::size_t>(y[i])] -= inv_b;

        if (m.arch == Arch::kLinear) {
            for (std::size_t c = 0; c < C; ++c) d.gb[c] += dz[c];
            for (const auto& [idx, v] : x.entries) {
                auto [it, inserted] =
                    d.grad_rows.try_emplace(idx, std::vector<double>(C, 0.0));
                for (std::size_t c = 0; c < C; ++c) it->second[c] += v * dz[c];
            }
        } else {
            for (std::size_t c = 0; c < C; ++c) d.gb2[c] += dz[c];
            std::vector<double> dz1(H, 0.0);
            for (std::size_t h = 0; h < H; ++h) {
                if (a1[h] > 0.0) {
                    double* grow = d.gw2.data() + h * C;
                    const double* wrow = m.w2.data() + h * C;
                    double da = 0.0;
                    for (std::size_t c = 0; c < C; ++c) {
                        grow[c] += a1[h] * dz[c];
                        da += wrow[c] * dz[c];
                    }
                    dz1[h] = da;  // ReLU derivative is 1 where z1 > 0
                }
            }
            for (std::size_t h = 0; h < H; ++h) d.gb[h] += dz1[h];
            for (const auto& [idx, v] : x.entries) {
                auto [it, inserted] =
                    d.grad_rows.try_emplace(idx, std::vector<double>(H, 0.0));
                for (std::size_t h = 0; h < H; ++h) it->second[h] += v * dz1[h];
            }
        }
    }
    d.mean_ce = ce_sum * inv_b;
    return d;
}

double squared_weight_norm(const TrainedModel& m, double w_scale) {
    double ss = 0.0;
    if (m.arch == Arch::kLinear) {
        for (double v : m.w) ss += v * v;
        ss *= w_scale * w_scale;
    } else {
        for (double v : m.w1) ss += v * v;
        ss *= w_scale * w_scale;
        for (double v : m.w2) ss += v * v;
    }
    return ss;
}

double full_loss(const TrainedModel& m, const std::vector<SparseVector>& X,
                 const std::vector<int>& y, const std::vector<std::size_t>& all,
                 double w_scale, double l2) {
    const BatchDeriv d = batch_derivatives(m, X, y, all, w_scale, false);
    return d.mean_ce + 0.5 * l2 * squared_weight_norm(m, w_scale);
}

void check_parameters_finite(const TrainedModel& m) {
    const auto ok = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(),
                           [](double x) { return std::isfinite(x); });
    };
    if (!ok(m.w) || !ok(m.b) || !ok(m.w1) || !ok(m.b1) || !ok(m.w2) || !ok(m.b2))
        throw std::runtime_error("model parameters are not finite");
}

}  // namespace

std::string to_string(Arch arch) {
    return arch == Arch::kLinear ? "linear" : "mlp";
}

Arch arch_from_string(const std::string& s) {
    if (s == "linear") return Arch::kLinear;
    if (s == "mlp") return Arch::kMlp;
    throw std::invalid_argument("unknown architecture: " + s);
}

TrainedModel train(const std::vector<SparseVector>& X, const std::vector<int>& y,
                   const ClassScheme& scheme, Arch arch, const Hyperparams& hyper,
                   std::uint64_t vocab_hash, Weighting weighting,
                   bool l2_normalized_features) {
    if (X.empty()) throw std::invalid_argument("training set is empty");
    if (X.size() != y.size())
        throw std::invalid_argument("feature/label count mismatch");
    validate_hyperparams(hyper, arch);

    const std::uint32_t V = X[0].dim;
    if (V == 0) throw std::invalid_argument("zero-dimensional feature space");
    for (const auto& x : X)
        if (x.dim != V)
            throw std::invalid_argument("inconsistent feature dimensions");
    const std::size_t C = scheme.labels.size();
    for (int label : y)
        if (label < 0 || static_cast<std::size_t>(label) >= C)
            throw std::invalid_argument("label index out of range");

    TrainedModel m;
    m.arch = arch;
    m.labels = scheme.labels;
    m.hate_label = scheme.hate_label;
    m.input_dim = V;
    m.vocab_hash = vocab_hash;
    m.weighting = weighting;
    m.l2_normalized_features = l2_normalized_features;
    m.hyper = hyper;

    Rng rng(mix_seed(hyper.seed));
    if (arch == Arch::kLinear) {
        m.w.assign(static_cast<std::size_t>(V) * C, 0.0);
        m.b.assign(C, 0.0);
    } else {
        const std::size_t H = static_cast<std::size_t>(hyper.hidden_units);
        m.hidden_units = hyper.hidden_units;
        const double bound1 = 1.0 / std::sqrt(static_cast<double>(V));
        m.w1.resize(static_cast<std::size_t>(V) * H);
        for (double& v : m.w1) v = (2.0 * rng.uniform_real() - 1.0) * bound1;
        m.b1.assign(H, 0.0);
        const double bound2 = 1.0 / std::sqrt(static_cast<double>(H));
        m.w2.resize(H * C);
        for (double& v : m.w2) v = (2.0 * rng.uniform_real() - 1.0) * bound2;
        m.b2.assign(C, 0.0);
    }

    const std::size_t N = X.size();
    std::vector<std::size_t> all(N);
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::vector<std::size_t> order = all;

    const double lr = hyper.learning_rate;
    const double decay = 1.0 - lr * hyper.l2;
    double scale = 1.0;  // implicit multiplier on w (linear) or w1 (mlp)
    std::vector<double>& sparse_w = arch == Arch::kLinear ? m.w : m.w1;
    const std::size_t row_width =
        arch == Arch::kLinear ? C : static_cast<std::size_t>(m.hidden_units);

    const auto fold_scale = [&] {
        if (scale == 1.0) return;
        for (double& v : sparse_w) v *= scale;
        scale = 1.0;
    };

    m.epoch_loss.push_back(full_loss(m, X, y, all, scale, hyper.l2));
    const std::size_t batch = static_cast<std::size_t>(hyper.batch_size);
    std::vector<std::size_t> idxs;
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < N; start += batch) {
            const std::size_t stop = std::min(start + batch, N);
            idxs.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                        order.begin() + static_cast<std::ptrdiff_t>(stop));
            BatchDeriv d = batch_derivatives(m, X, y, idxs, scale, true);
            if (!std::isfinite(d.mean_ce))
                throw std::runtime_error(
                    "non-finite loss at epoch " + std::to_string(epoch) +
                    ", batch " + std::to_string(start / batch));

            scale *= decay;
            for (const auto& [idx, row] : d.grad_rows) {
                double* w_row =
                    sparse_w.data() + static_cast<std::size_t>(idx) * row_width;
                for (std::size_t k = 0; k < row_width; ++k)
                    w_row[k] -= lr * row[k] / scale;
            }
            if (arch == Arch::kLinear) {
                for (std::size_t c = 0; c < C; ++c) m.b[c] -= lr * d.gb[c];
            } else {
                for (std::size_t h = 0; h < d.gb.size(); ++h)
                    m.b1[h] -= lr * d.gb[h];
                for (std::size_t k = 0; k < m.w2.size(); ++k)
                    m.w2[k] = decay * m.w2[k] - lr * d.gw2[k];
                for (std::size_t c = 0; c < C; ++c) m.b2[c] -= lr * d.gb2[c];
            }
            if (scale < 1e-8) fold_scale();
        }
        m.epoch_loss.push_back(full_loss(m, X, y, all, scale, hyper.l2));
    }
    fold_scale();
    check_parameters_finite(m);
    return m;
}

TrainedModel train_on_corpus(const LabeledCorpus& corpus, const Vocabulary& vocab,
                             Arch arch, const Hyperparams& hyper,
                             Weighting weighting, bool l2_normalized_features) {
    std::vector<SparseVector> X;
    std::vector<int> y;
    X.reserve(corpus.docs.size());
    y.reserve(corpus.docs.size());
    for (const auto& doc : corpus.docs) {
        X.push_back(featurize(doc, vocab, weighting, l2_normalized_features));
        y.push_back(static_cast<int>(corpus.scheme.label_index(doc.label)));
    }
    return train(X, y, corpus.scheme, arch, hyper, vocab.content_hash(),
                 weighting, l2_normalized_features);
}

std::vector<double> predict_proba(const TrainedModel& model, const SparseVector& x) {
    check_feature_vector(model, x);
    std::vector<double> z;
    if (model.arch == Arch::kLinear) {
        z = linear_logits(model, x, 1.0);
    } else {
        std::vector<double> z1, a1;
        mlp_forward(model, x, 1.0, z1, a1, z);
    }
    const double lse = logsumexp(z);
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - lse);
        sum += v;
    }
    for (double& v : z) v /= sum;
    return z;
}

int predict_label(const TrainedModel& model, const SparseVector& x) {
    const std::vector<double> p = predict_proba(model, x);
    return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

EvalReport evaluate(const TrainedModel& model, const LabeledCorpus& corpus,
                    const Vocabulary& vocab, const DocTransform& preproc) {
    if (corpus.scheme.labels != model.labels ||
        corpus.scheme.hate_label != model.hate_label)
        throw std::invalid_argument("corpus scheme does not match model labels");
    if (model.vocab_hash != 0 && vocab.content_hash() != model.vocab_hash)
        throw std::invalid_argument(
            "vocabulary does not match the one the model was trained with");

    const std::size_t C = model.num_labels();
    EvalReport r;
    r.labels = model.labels;
    r.hate_label = model.hate_label;
    r.hyper = model.hyper;
    r.confusion.assign(C, std::vector<std::int64_t>(C, 0));

    for (const auto& doc : corpus.docs) {
        const std::size_t gold = corpus.scheme.label_index(doc.label);
        const Document& input = preproc ? preproc(doc) : doc;
        const SparseVector x =
            featurize(input, vocab, model.weighting, model.l2_normalized_features);
        const int pred = predict_label(model, x);
        ++r.confusion[gold][static_cast<std::size_t>(pred)];
    }

    r.precision.assign(C, 0.0);
    r.recall.assign(C, 0.0);
    r.f1.assign(C, 0.0);
    r.zero_division.assign(C, false);
    double f1_sum = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
        std::int64_t tp = r.confusion[c][c], fp = 0, fn = 0;
        for (std::size_t k = 0; k < C; ++k) {
            if (k == c) continue;
            fp += r.confusion[k][c];
            fn += r.confusion[c][k];
        }
        const std::int64_t pred_count = tp + fp, gold_count = tp + fn;
        if (pred_count > 0)
            r.precision[c] = static_cast<double>(tp) / static_cast<double>(pred_count);
        else
            r.zero_division[c] = true;
        if (gold_count > 0)
            r.recall[c] = static_cast<double>(tp) / static_cast<double>(gold_count);
        else
            r.zero_division[c] = true;
        const double pr = r.precision[c] + r.recall[c];
        if (pr > 0.0)
            r.f1[c] = 2.0 * r.precision[c] * r.recall[c] / pr;
        else
            r.zero_division[c] = true;
        f1_sum += r.f1[c];
    }
    r.macro_f1 = f1_sum / static_cast<double>(C);
    r.hate_f1 = r.f1[corpus.scheme.label_index(model.hate_label)];
    return r;
}

std::vector<std::vector<EvalReport>> cross_apply(
    const std::vector<TrainedModel>& models, const std::vector<Vocabulary>& vocabs,
    const std::vector<LabeledCorpus>& corpora) {
    if (models.size() != vocabs.size())
        throw std::invalid_argument("each model needs its own vocabulary");
    std::vector<std::vector<EvalReport>> grid;
    grid.reserve(models.size());
    for (std::size_t i = 0; i < models.size(); ++i) {
        std::vector<EvalReport> row;
        row.reserve(corpora.size());
        for (const auto& corpus : corpora)
            row.push_back(evaluate(models[i], corpus, vocabs[i]));
        grid.push_back(std::move(row));
    }
    return grid;
}

double batch_loss(const TrainedModel& model, const std::vector<SparseVector>& X,
                  const std::vector<int>& y, double l2) {
    if (X.empty() || X.size() != y.size())
        throw std::invalid_argument("bad batch");
    std::vector<std::size_t> all(X.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return full_loss(model, X, y, all, 1.0, l2);
}

std::vector<double> batch_gradient(const TrainedModel& model,
                                   const std::vector<SparseVector>& X,
                                   const std::vector<int>& y, double l2) {
    if (X.empty() || X.size() != y.size())
        throw std::invalid_argument("bad batch");
    std::vector<std::size_t> all(X.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const BatchDeriv d = batch_derivatives(model, X, y, all, 1.0, true);

    const std::size_t C = model.num_labels();
    std::vector<double> flat;
    if (model.arch == Arch::kLinear) {
        flat.resize(model.w.size() + model.b.size());
        for (std::size_t i = 0; i < model.w.size(); ++i) flat[i] = l2 * model.w[i];
        for (const auto& [idx, row] : d.grad_rows)
            for (std::size_t c = 0; c < C; ++c)
                flat[static_cast<std::size_t>(idx) * C + c] += row[c];
        for (std::size_t c = 0; c < C; ++c) flat[model.w.size() + c] = d.gb[c];
    } else {
        const std::size_t H = static_cast<std::size_t>(model.hidden_units);
        flat.resize(model.w1.size() + model.b1.size() + model.w2.size() +
                    model.b2.size());
        std::size_t off = 0;
        for (std::size_t i = 0; i < model.w1.size(); ++i)
            flat[off + i] = l2 * model.w1[i];
        for (const auto& [idx, row] : d.grad_rows)
            for (std::size_t h = 0; h < H; ++h)
                flat[off + static_cast<std::size_t>(idx) * H + h] += row[h];
        off += model.w1.size();
        for (std::size_t h = 0; h < H; ++h) flat[off + h] = d.gb[h];
        off += model.b1.size();
        for (std::size_t i = 0; i < model.w2.size(); ++i)
            flat[off + i] = l2 * model.w2[i] + d.gw2[i];
        off += model.w2.size();
        for (std::size_t c = 0; c < C; ++c) flat[off + c] = d.gb2[c];
    }
    return flat;
}

std::vector<double> flatten_params(const TrainedModel& model) {
    std::vector<double> flat;
    const auto append = [&flat](const std::vector<double>& v) {
        flat.insert(flat.end(), v.begin(), v.end());
    };
    if (model.arch == Arch::kLinear) {
        append(model.w);
        append(model.b);
    } else {
        append(model.w1);
        append(model.b1);
        append(model.w2);
        append(model.b2);
    }
    return flat;
}

void set_params(TrainedModel& model, const std::vector<double>& flat) {
    std::vector<std::vector<double>*> parts;
    if (model.arch == Arch::kLinear)
        parts = {&model.w, &model.b};
    else
        parts = {&model.w1, &model.b1, &model.w2, &model.b2};
    std::size_t total = 0;
    for (const auto* p : parts) total += p->size();
    if (flat.size() != total)
        throw std::invalid_argument("parameter count mismatch");
    std::size_t off = 0;
    for (auto* p : parts) {
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
                  flat.begin() + static_cast<std::ptrdiff_t>(off + p->size()),
                  p->begin());
        off += p->size();
    }
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json per_label = nlohmann::json::array();
    for (std::size_t c = 0; c < labels.size(); ++c)
        per_label.push_back({{"label", labels[c]},
                             {"precision", precision[c]},
                             {"recall", recall[c]},
                             {"f1", f1[c]},
                             {"zero_division", static_cast<bool>(zero_division[c])}});
    return nlohmann::json{{"labels", labels},
                          {"hate_label", hate_label},
                          {"confusion", confusion},
                          {"per_label", per_label},
                          {"macro_f1", macro_f1},
                          {"hate_f1", hate_f1},
                          {"model_id", model_id},
                          {"corpus_id", corpus_id},
                          {"attack_id", attack_id},
                          {"mitigation_id", mitigation_id},
                          {"hyperparams",
                           {{"learning_rate", hyper.learning_rate},
                            {"epochs", hyper.epochs},
                            {"l2", hyper.l2},
                            {"batch_size", hyper.batch_size},
                            {"hidden_units", hyper.hidden_units},
                            {"seed", hyper.seed}}}};
}

EvalReport eval_report_from_json(const nlohmann::json& j) {
    try {
        EvalReport r;
        r.labels = j.at("labels").get<std::vector<std::string>>();
        r.hate_label = j.at("hate_label").get<std::string>();
        r.confusion =
            j.at("confusion").get<std::vector<std::vector<std::int64_t>>>();
        const std::size_t C = r.labels.size();
        if (C < 2 || r.confusion.size() != C)
            throw std::runtime_error("invalid eval report: bad confusion shape");
        for (const auto& row : r.confusion)
            if (row.size() != C) throw std::runtime_error("invalid eval report: bad confusion shape");
        const nlohmann::json& per_label = j.at("per_label");
        if (per_label.size() != C)
            throw std::runtime_error("invalid eval report: bad per_label size");
        for (std::size_t c = 0; c < C; ++c) {
            const nlohmann::json& p = per_label.at(c);
            if (p.at("label").get<std::string>() != r.labels[c])
                throw std::runtime_error("invalid eval report: per_label order mismatch");
            r.precision.push_back(p.at("precision").get<double>());
            r.recall.push_back(p.at("recall").get<double>());
            r.f1.push_back(p.at("f1").get<double>());
            r.zero_division.push_back(p.at("zero_division").get<bool>());
        }
        r.macro_f1 = j.at("macro_f1").get<double>();
        r.hate_f1 = j.at("hate_f1").get<double>();
        r.model_id = j.at("model_id").get<std::string>();
        r.corpus_id = j.at("corpus_id").get<std::string>();
        r.attack_id = j.at("attack_id").get<std::string>();
        r.mitigation_id = j.at("mitigation_id").get<std::string>();
        const nlohmann::json& h = j.at("hyperparams");
        r.hyper.learning_rate = h.at("learning_rate").get<double>();
        r.hyper.epochs = h.at("epochs").get<int>();
        r.hyper.l2 = h.at("l2").get<double>();
        r.hyper.batch_size = h.at("batch_size").get<int>();
        r.hyper.hidden_units = h.at("hidden_units").get<int>();
        r.hyper.seed = h.at("seed").get<std::uint64_t>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("invalid eval report: ") + e.what());
    }
}

nlohmann::json model_to_json(const TrainedModel& model) {
    return nlohmann::json{{"format", kModelFormat},
                          {"version", kModelVersion},
                          {"architecture", to_string(model.arch)},
                          {"labels", model.labels},
                          {"hate_label", model.hate_label},
                          {"input_dim", model.input_dim},
                          {"hidden_units", model.hidden_units},
                          {"vocab_hash", model.vocab_hash},
                          {"weighting", to_string(model.weighting)},
                          {"l2_normalized_features", model.l2_normalized_features},
                          {"hyperparams",
                           {{"learning_rate", model.hyper.learning_rate},
                            {"epochs", model.hyper.epochs},
                            {"l2", model.hyper.l2},
                            {"batch_size", model.hyper.batch_size},
                            {"hidden_units", model.hyper.hidden_units},
                            {"seed", model.hyper.seed}}},
                          {"epoch_loss", model.epoch_loss},
                          {"w", model.w},
                          {"b", model.b},
                          {"w1", model.w1},
                          {"b1", model.b1},
                          {"w2", model.w2},
                          {"b2", model.b2}};
}

TrainedModel model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != kModelFormat ||
            j.at("version").get<int>() != kModelVersion)
            throw std::runtime_error("unsupported model format");
        TrainedModel m;
        m.arch = arch_from_string(j.at("architecture").get<std::string>());
        m.labels = j.at("labels").get<std::vector<std::string>>();
        m.hate_label = j.at("hate_label").get<std::string>();
        m.input_dim = j.at("input_dim").get<std::uint32_t>();
        m.hidden_units = j.at("hidden_units").get<int>();
        m.vocab_hash = j.at("vocab_hash").get<std::uint64_t>();
        m.weighting = weighting_from_string(j.at("weighting").get<std::string>());
        m.l2_normalized_features = j.at("l2_normalized_features").get<bool>();
        const auto& h = j.at("hyperparams");
        m.hyper.learning_rate = h.at("learning_rate").get<double>();
        m.hyper.epochs = h.at("epochs").get<int>();
        m.hyper.l2 = h.at("l2").get<double>();
        m.hyper.batch_size = h.at("batch_size").get<int>();
        m.hyper.hidden_units = h.at("hidden_units").get<int>();
        m.hyper.seed = h.at("seed").get<std::uint64_t>();
        m.epoch_loss = j.at("epoch_loss").get<std::vector<double>>();
        m.w = j.at("w").get<std::vector<double>>();
        m.b = j.at("b").get<std::vector<double>>();
        m.w1 = j.at("w1").get<std::vector<double>>();
        m.b1 = j.at("b1").get<std::vector<double>>();
        m.w2 = j.at("w2").get<std::vector<double>>();
        m.b2 = j.at("b2").get<std::vector<double>>();

        const std::size_t C = m.labels.size();
        const std::size_t V = m.input_dim;
        const std::size_t H = static_cast<std::size_t>(m.hidden_units);
        if (C < 2) throw std::runtime_error("bad label set");
        bool shape_ok;
        if (m.arch == Arch::kLinear)
            shape_ok = m.w.size() == V * C && m.b.size() == C && m.w1.empty() &&
                       m.b1.empty() && m.w2.empty() && m.b2.empty();
        else
            shape_ok = m.w1.size() == V * H && m.b1.size() == H &&
                       m.w2.size() == H * C && m.b2.size() == C && m.w.empty() &&
                       m.b.empty();
        if (!shape_ok) throw std::runtime_error("parameter shapes are inconsistent");
        check_parameters_finite(m);
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("invalid model file: ") + e.what());
    }
}

void save_model(const TrainedModel& model, const std::string& path) {
    write_text_file(path, model_to_json(model).dump());
}

TrainedModel load_model(const std::string& path) {
    const nlohmann::json j = nlohmann::json::parse(read_text_file(path));
    return model_from_json(j);
}

}  // namespace hsd
