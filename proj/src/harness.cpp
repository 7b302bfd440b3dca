#include "hsd/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <memory>
#include <set>
#include <stdexcept>
#include <utility>

#include "hsd/rng.hpp"
#include "hsd/textproc.hpp"

namespace hsd {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& msg) {
    throw std::invalid_argument("config: " + msg);
}

const json& field(const json& j, const char* key, const std::string& where) {
    const auto it = j.find(key);
    if (it == j.end()) config_error("missing '" + std::string(key) + "' in " + where);
    return *it;
}

template <typename T>
T field_or(const json& j, const char* key, T fallback) {
    const auto it = j.find(key);
    return it == j.end() ? fallback : it->get<T>();
}

bool valid_id(const std::string& id) {
    if (id.empty()) return false;
    for (char c : id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
        if (!ok) return false;
    }
    return true;
}

std::string parse_id(const json& j, const std::string& section) {
    const std::string id = field(j, "id", section).get<std::string>();
    if (!valid_id(id))
        config_error("bad id '" + id + "' in " + section +
                     " (use letters, digits, '_', '-', '.')");
    if (id == kNoneId) config_error("id 'none' is reserved");
    return id;
}

ClassScheme parse_scheme(const json& j, const std::string& where) {
    return make_scheme(field(j, "labels", where).get<std::vector<std::string>>(),
                       field(j, "hate_label", where).get<std::string>());
}

SyntheticSpec parse_synthetic(const json& j, const std::string& where) {
    SyntheticSpec spec;
    spec.scheme = parse_scheme(j, where);
    for (const auto& [label, n] : field(j, "docs_per_label", where).items())
        spec.docs_per_label[label] = n.get<std::size_t>();
    for (const auto& [label, words] : field(j, "keywords", where).items())
        spec.keywords[label] = words.get<std::vector<std::string>>();
    spec.filler = field(j, "filler", where).get<std::vector<std::string>>();
    spec.min_tokens = field_or<std::size_t>(j, "min_tokens", spec.min_tokens);
    spec.max_tokens = field_or<std::size_t>(j, "max_tokens", spec.max_tokens);
    spec.min_keywords = field_or<std::size_t>(j, "min_keywords", spec.min_keywords);
    spec.max_keywords = field_or<std::size_t>(j, "max_keywords", spec.max_keywords);
    return spec;
}

Hyperparams parse_hyper(const json& j, const std::string& where) {
    static const std::set<std::string> known{"learning_rate", "epochs", "l2",
                                            "batch_size", "hidden_units"};
    for (const auto& [key, value] : j.items())
        if (known.count(key) == 0)
            config_error("unknown hyperparameter '" + key + "' in " + where);
    Hyperparams h;
    h.learning_rate = field_or(j, "learning_rate", h.learning_rate);
    h.epochs = field_or(j, "epochs", h.epochs);
    h.l2 = field_or(j, "l2", h.l2);
    h.batch_size = field_or(j, "batch_size", h.batch_size);
    h.hidden_units = field_or(j, "hidden_units", h.hidden_units);
    return h;
}

template <typename T>
const T* find_by_id(const std::vector<T>& items, const std::string& id) {
    for (const auto& item : items)
        if (item.id == id) return &item;
    return nullptr;
}

template <typename T>
const T& need_by_id(const std::vector<T>& items, const std::string& id,
                    const std::string& what) {
    const T* item = find_by_id(items, id);
    if (!item) config_error("unknown " + what + " id '" + id + "'");
    return *item;
}

template <typename T>
void check_unique_ids(const std::vector<T>& items, const std::string& section) {
    std::set<std::string> seen;
    for (const auto& item : items)
        if (!seen.insert(item.id).second)
            config_error("duplicate id '" + item.id + "' in " + section);
}

std::vector<std::string> parse_axis(const json& j, const char* key,
                                    const std::string& where, bool allow_none) {
    std::vector<std::string> ids;
    const auto it = j.find(key);
    if (it == j.end()) {
        if (!allow_none) config_error("missing '" + std::string(key) + "' in " + where);
        ids.push_back(kNoneId);
        return ids;
    }
    ids = it->get<std::vector<std::string>>();
    if (ids.empty()) config_error("empty '" + std::string(key) + "' in " + where);
    std::set<std::string> seen;
    for (const auto& id : ids)
        if (!seen.insert(id).second)
            config_error("duplicate '" + id + "' in " + where + " " + key);
    return ids;
}

void validate_references(const ExperimentConfig& cfg) {
    for (const auto& wl : cfg.wordlists) {
        if (wl.source == WordlistSource::kNonhateClass) {
            need_by_id(cfg.corpora, wl.corpus, "corpus");
            if (wl.label.empty())
                config_error("wordlist '" + wl.id + "' needs a label");
        }
    }
    for (const auto& at : cfg.attacks) {
        const bool append = at.kind == AttackKind::kAppendCommon ||
                            at.kind == AttackKind::kAppendNonhate;
        if (!append) continue;
        const auto& wl = need_by_id(cfg.wordlists, at.wordlist, "wordlist");
        const auto want = at.kind == AttackKind::kAppendCommon
                              ? WordlistSource::kCommonEnglish
                              : WordlistSource::kNonhateClass;
        if (wl.source != want)
            config_error("attack '" + at.id + "' needs a " + to_string(want) +
                         " wordlist, got '" + wl.id + "'");
    }
    for (const auto& mit : cfg.mitigations) {
        if (mit.kind == MitigationKind::kAdversarialTraining)
            need_by_id(cfg.attacks, mit.attack, "attack");
        if (mit.kind == MitigationKind::kSpellCheck && mit.max_dist < 1)
            config_error("mitigation '" + mit.id + "': max_dist must be >= 1");
    }
    for (const auto& grid : cfg.grids) {
        for (const auto& id : grid.corpora) need_by_id(cfg.corpora, id, "corpus");
        for (const auto& id : grid.features) need_by_id(cfg.features, id, "feature");
        for (const auto& id : grid.models) need_by_id(cfg.models, id, "model");
        for (const auto& id : grid.attacks)
            if (id != kNoneId) need_by_id(cfg.attacks, id, "attack");
        bool has_strip = false;
        for (const auto& id : grid.mitigations) {
            if (id == kNoneId) continue;
            const auto& mit = need_by_id(cfg.mitigations, id, "mitigation");
            has_strip = has_strip || mit.kind == MitigationKind::kStripSpaces;
        }
        if (has_strip)
            for (const auto& id : grid.features)
                if (need_by_id(cfg.features, id, "feature").granularity ==
                    Granularity::kWord)
                    config_error("grid '" + grid.id +
                                 "': strip_spaces cannot be combined with the "
                                 "word-granularity feature '" + id + "'");
    }
    for (const auto& block : cfg.cross_apply) {
        for (const auto& id : block.corpora) need_by_id(cfg.corpora, id, "corpus");
        need_by_id(cfg.features, block.feature, "feature");
        need_by_id(cfg.models, block.model, "model");
    }
}

std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

// Prepared state shared between cells, built lazily and memoized. Cache keys
// concatenate config ids, which the id charset keeps unambiguous.
class Runtime {
public:
    explicit Runtime(const ExperimentConfig& cfg) : cfg_(cfg) {}

    struct Prepared {
        LabeledCorpus train;
        LabeledCorpus test;
    };

    struct Trained {
        Vocabulary vocab;
        TrainedModel model;
    };

    const Prepared& corpus(const std::string& id) {
        const auto it = corpora_.find(id);
        if (it != corpora_.end()) return it->second;
        const CorpusConfig& cc = need_by_id(cfg_.corpora, id, "corpus");
        auto [train, test] =
            split(materialize_corpus(cfg_, id), cc.test_fraction,
                  derive_seed(cfg_.seed, fnv1a("split:" + id)));
        return corpora_.emplace(id, Prepared{std::move(train), std::move(test)})
            .first->second;
    }

    const WordList& wordlist(const std::string& id) {
        const auto it = wordlists_.find(id);
        if (it != wordlists_.end()) return it->second;
        const WordlistConfig& wc = need_by_id(cfg_.wordlists, id, "wordlist");
        WordList list;
        if (wc.source == WordlistSource::kCommonEnglish) {
            const std::vector<std::string> ranked =
                wc.path.empty() ? embedded_common_words()
                                : parse_word_lines(read_text_file(wc.path));
            list = derive_wordlist(ranked, StopwordList::embedded(), wc.top_k,
                                   WordlistSource::kCommonEnglish);
        } else {
            list = derive_wordlist(corpus(wc.corpus).train, wc.label,
                                   StopwordList::embedded(), wc.top_k);
        }
        return wordlists_.emplace(id, std::move(list)).first->second;
    }

    AttackSpec attack_spec(const std::string& id, std::uint64_t seed) {
        const AttackConfig& ac = need_by_id(cfg_.attacks, id, "attack");
        AttackSpec spec;
        spec.kind = ac.kind;
        spec.word_prob = ac.word_prob;
        spec.append_lo = ac.append_lo;
        spec.append_hi = ac.append_hi;
        if (ac.kind == AttackKind::kAppendCommon ||
            ac.kind == AttackKind::kAppendNonhate)
            spec.wordlist = wordlist(ac.wordlist);
        spec.seed = seed;
        return spec;
    }

    // Attacked test sets are shared across feature/model/mitigation columns
    // so defenses are compared on identical attacked text.
    const LabeledCorpus& attacked(const std::string& corpus_id,
                                  const std::string& attack_id) {
        const std::string key = corpus_id + "|" + attack_id;
        const auto it = attacked_.find(key);
        if (it != attacked_.end()) return it->second;
        const Prepared& pc = corpus(corpus_id);
        const AttackSpec spec = attack_spec(
            attack_id,
            derive_seed(cfg_.seed, fnv1a("attack:" + attack_id + ":" + corpus_id)));
        return attacked_
            .emplace(key, apply_attack(pc.test, spec, pc.test.scheme.hate_label))
            .first->second;
    }

    // mit_key identifies the train-side mitigation: a mitigation id for
    // adversarial training and strip_spaces, "none" otherwise, so cells that
    // differ only test-side share one trained model.
    const Trained& trained(const std::string& corpus_id, const std::string& feature_id,
                           const std::string& model_id, const std::string& mit_key) {
        const std::string key =
            corpus_id + "|" + feature_id + "|" + model_id + "|" + mit_key;
        const auto it = trained_.find(key);
        if (it != trained_.end()) return it->second;

        const FeatureConfig& fc = need_by_id(cfg_.features, feature_id, "feature");
        const ModelConfig& mc = need_by_id(cfg_.models, model_id, "model");
        const Prepared& pc = corpus(corpus_id);

        LabeledCorpus train_set = pc.train;
        if (mit_key != kNoneId) {
            const MitigationConfig& mit =
                need_by_id(cfg_.mitigations, mit_key, "mitigation");
            if (mit.kind == MitigationKind::kAdversarialTraining) {
                train_set = augmented_train(corpus_id, mit);
            } else if (mit.kind == MitigationKind::kStripSpaces) {
                for (auto& doc : train_set.docs) {
                    const std::string stripped = strip_spaces(doc.norm_text);
                    doc = Document{stripped, normalize(stripped), doc.label};
                }
            }
        }

        Trained t;
        t.vocab = build_vocab(train_set, fc.granularity, fc.n_lo, fc.n_hi,
                              fc.min_doc_freq);
        Hyperparams hyper = mc.hyper;
        hyper.seed = derive_seed(cfg_.seed, fnv1a("train:" + key));
        t.model = train_on_corpus(train_set, t.vocab, mc.arch, hyper, fc.weighting,
                                  fc.l2_normalize);
        return trained_.emplace(key, std::move(t)).first->second;
    }

    LabeledCorpus augmented_train(const std::string& corpus_id,
                                  const MitigationConfig& mit) {
        const AttackSpec spec = attack_spec(mit.attack, 0);
        return adversarial_augment(
            corpus(corpus_id).train, spec,
            derive_seed(cfg_.seed, fnv1a("augment:" + mit.id + ":" + corpus_id)));
    }

    const SpellCorrector& corrector(const std::string& corpus_id, int max_dist) {
        const std::string key = corpus_id + "|" + std::to_string(max_dist);
        const auto it = correctors_.find(key);
        if (it != correctors_.end()) return *it->second;
        FrequencyDictionary dict = build_dictionary(corpus(corpus_id).train);
        return *correctors_
                    .emplace(key, std::make_unique<SpellCorrector>(std::move(dict),
                                                                   max_dist))
                    .first->second;
    }

private:
    const ExperimentConfig& cfg_;
    std::map<std::string, Prepared> corpora_;
    std::map<std::string, WordList> wordlists_;
    std::map<std::string, LabeledCorpus> attacked_;
    std::map<std::string, Trained> trained_;
    std::map<std::string, std::unique_ptr<SpellCorrector>> correctors_;
};

EvalReport run_cell(Runtime& rt, const ExperimentConfig& cfg,
                    const std::string& corpus_id, const std::string& feature_id,
                    const std::string& model_id, const std::string& attack_id,
                    const std::string& mitigation_id) {
    const MitigationConfig* mit =
        mitigation_id == kNoneId
            ? nullptr
            : &need_by_id(cfg.mitigations, mitigation_id, "mitigation");
    const FeatureConfig& fc = need_by_id(cfg.features, feature_id, "feature");
    if (mit && mit->kind == MitigationKind::kStripSpaces &&
        fc.granularity == Granularity::kWord)
        throw std::invalid_argument(
            "strip_spaces is not applicable to a word-granularity model");

    std::string mit_key = kNoneId;
    if (mit && mit->kind != MitigationKind::kSpellCheck) mit_key = mit->id;
    const Runtime::Trained& tc = rt.trained(corpus_id, feature_id, model_id, mit_key);

    const LabeledCorpus& test =
        attack_id == kNoneId ? rt.corpus(corpus_id).test
                             : rt.attacked(corpus_id, attack_id);

    DocTransform preproc;
    if (mit && mit->kind == MitigationKind::kSpellCheck) {
        const SpellCorrector& sc = rt.corrector(corpus_id, mit->max_dist);
        preproc = [&sc](const Document& doc) {
            const std::string corrected = sc.correct(doc.norm_text);
            return Document{corrected, normalize(corrected), doc.label};
        };
    } else if (mit && mit->kind == MitigationKind::kStripSpaces) {
        preproc = [](const Document& doc) {
            const std::string stripped = strip_spaces(doc.norm_text);
            return Document{stripped, normalize(stripped), doc.label};
        };
    }

    EvalReport r = evaluate(tc.model, test, tc.vocab, preproc);
    r.model_id = model_id;
    r.corpus_id = corpus_id;
    r.attack_id = attack_id;
    r.mitigation_id = mitigation_id;
    return r;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
    try {
        ExperimentConfig cfg;
        cfg.snapshot = j;
        cfg.seed = field(j, "seed", "config root").get<std::uint64_t>();
        cfg.out_dir = field_or<std::string>(j, "out_dir", ".");
        cfg.fail_fast = field_or(j, "fail_fast", false);

        for (const auto& cj : field_or(j, "corpora", json::array())) {
            CorpusConfig cc;
            cc.id = parse_id(cj, "corpora");
            const bool has_path = cj.contains("path");
            const bool has_synth = cj.contains("synthetic");
            if (has_path == has_synth)
                config_error("corpus '" + cc.id +
                             "' needs exactly one of 'path' or 'synthetic'");
            if (has_path) {
                cc.path = cj.at("path").get<std::string>();
                cc.text_col = field_or<std::string>(cj, "text_col", cc.text_col);
                cc.label_col = field_or<std::string>(cj, "label_col", cc.label_col);
                cc.scheme = parse_scheme(cj, "corpus '" + cc.id + "'");
            } else {
                cc.synthetic =
                    parse_synthetic(cj.at("synthetic"), "corpus '" + cc.id + "'");
                cc.scheme = cc.synthetic->scheme;
            }
            if (cj.contains("merge"))
                cc.merge =
                    cj.at("merge").get<std::map<std::string, std::string>>();
            cc.test_fraction = field_or(cj, "test_fraction", cc.test_fraction);
            if (!(cc.test_fraction > 0.0 && cc.test_fraction < 1.0))
                config_error("corpus '" + cc.id +
                             "': test_fraction must be in (0,1)");
            cfg.corpora.push_back(std::move(cc));
        }

        for (const auto& fj : field_or(j, "features", json::array())) {
            FeatureConfig fc;
            fc.id = parse_id(fj, "features");
            fc.granularity = granularity_from_string(
                field(fj, "granularity", "feature '" + fc.id + "'")
                    .get<std::string>());
            fc.n_lo = field(fj, "n_lo", "feature '" + fc.id + "'")
                          .get<std::uint32_t>();
            fc.n_hi = field(fj, "n_hi", "feature '" + fc.id + "'")
                          .get<std::uint32_t>();
            if (fc.n_lo < 1 || fc.n_hi < fc.n_lo)
                config_error("feature '" + fc.id + "': need 1 <= n_lo <= n_hi");
            if (fj.contains("weighting"))
                fc.weighting =
                    weighting_from_string(fj.at("weighting").get<std::string>());
            fc.l2_normalize = field_or(fj, "l2_normalize", fc.l2_normalize);
            fc.min_doc_freq = field_or(fj, "min_doc_freq", fc.min_doc_freq);
            if (fc.min_doc_freq < 1)
                config_error("feature '" + fc.id + "': min_doc_freq must be >= 1");
            cfg.features.push_back(std::move(fc));
        }

        for (const auto& mj : field_or(j, "models", json::array())) {
            ModelConfig mc;
            mc.id = parse_id(mj, "models");
            mc.arch = arch_from_string(
                field(mj, "arch", "model '" + mc.id + "'").get<std::string>());
            if (mj.contains("hyper"))
                mc.hyper = parse_hyper(mj.at("hyper"), "model '" + mc.id + "'");
            cfg.models.push_back(std::move(mc));
        }

        for (const auto& wj : field_or(j, "wordlists", json::array())) {
            WordlistConfig wc;
            wc.id = parse_id(wj, "wordlists");
            const std::string source =
                field(wj, "source", "wordlist '" + wc.id + "'").get<std::string>();
            if (source == "common_english") {
                wc.source = WordlistSource::kCommonEnglish;
                wc.path = field_or<std::string>(wj, "path", "");
            } else if (source == "nonhate_class") {
                wc.source = WordlistSource::kNonhateClass;
                wc.corpus = field(wj, "corpus", "wordlist '" + wc.id + "'")
                                .get<std::string>();
                wc.label =
                    field(wj, "label", "wordlist '" + wc.id + "'").get<std::string>();
            } else {
                config_error("wordlist '" + wc.id + "': unknown source '" + source +
                             "'");
            }
            wc.top_k = field_or<std::size_t>(wj, "top_k", wc.top_k);
            if (wc.top_k == 0)
                config_error("wordlist '" + wc.id + "': top_k must be >= 1");
            cfg.wordlists.push_back(std::move(wc));
        }

        for (const auto& aj : field_or(j, "attacks", json::array())) {
            AttackConfig ac;
            ac.id = parse_id(aj, "attacks");
            ac.kind = attack_kind_from_string(
                field(aj, "kind", "attack '" + ac.id + "'").get<std::string>());
            ac.word_prob = field_or(aj, "word_prob", ac.word_prob);
            if (!(ac.word_prob > 0.0 && ac.word_prob <= 1.0))
                config_error("attack '" + ac.id + "': word_prob must be in (0,1]");
            ac.append_lo = field_or(aj, "append_lo", ac.append_lo);
            ac.append_hi = field_or(aj, "append_hi", ac.append_hi);
            if (ac.kind == AttackKind::kAppendCommon ||
                ac.kind == AttackKind::kAppendNonhate) {
                if (ac.append_lo < 1 || ac.append_hi < ac.append_lo)
                    config_error("attack '" + ac.id +
                                 "': need 1 <= append_lo <= append_hi");
                ac.wordlist = field(aj, "wordlist", "attack '" + ac.id + "'")
                                  .get<std::string>();
            }
            cfg.attacks.push_back(std::move(ac));
        }

        for (const auto& mj : field_or(j, "mitigations", json::array())) {
            MitigationConfig mc;
            mc.id = parse_id(mj, "mitigations");
            mc.kind = mitigation_kind_from_string(
                field(mj, "kind", "mitigation '" + mc.id + "'").get<std::string>());
            if (mc.kind == MitigationKind::kAdversarialTraining)
                mc.attack = field(mj, "attack", "mitigation '" + mc.id + "'")
                                .get<std::string>();
            mc.max_dist = field_or(mj, "max_dist", mc.max_dist);
            cfg.mitigations.push_back(std::move(mc));
        }

        for (const auto& gj : field_or(j, "grids", json::array())) {
            GridConfig gc;
            gc.id = parse_id(gj, "grids");
            const std::string where = "grid '" + gc.id + "'";
            gc.corpora = parse_axis(gj, "corpora", where, false);
            gc.features = parse_axis(gj, "features", where, false);
            gc.models = parse_axis(gj, "models", where, false);
            gc.attacks = parse_axis(gj, "attacks", where, true);
            gc.mitigations = parse_axis(gj, "mitigations", where, true);
            cfg.grids.push_back(std::move(gc));
        }

        for (const auto& xj : field_or(j, "cross_apply", json::array())) {
            CrossApplyConfig xc;
            xc.id = parse_id(xj, "cross_apply");
            const std::string where = "cross_apply '" + xc.id + "'";
            xc.corpora = parse_axis(xj, "corpora", where, false);
            xc.feature = field(xj, "feature", where).get<std::string>();
            xc.model = field(xj, "model", where).get<std::string>();
            cfg.cross_apply.push_back(std::move(xc));
        }

        check_unique_ids(cfg.corpora, "corpora");
        check_unique_ids(cfg.features, "features");
        check_unique_ids(cfg.models, "models");
        check_unique_ids(cfg.wordlists, "wordlists");
        check_unique_ids(cfg.attacks, "attacks");
        check_unique_ids(cfg.mitigations, "mitigations");
        check_unique_ids(cfg.grids, "grids");
        check_unique_ids(cfg.cross_apply, "cross_apply");
        validate_references(cfg);
        return cfg;
    } catch (const json::exception& e) {
        config_error(e.what());
    }
}

ExperimentConfig load_config(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        config_error(std::string(e.what()) + " in " + path);
    }
    return parse_config(j);
}

ExperimentReport run(const ExperimentConfig& config) {
    Runtime rt(config);
    ExperimentReport report;
    report.config_snapshot = config.snapshot;

    using clock = std::chrono::steady_clock;
    const auto elapsed_ms = [](clock::time_point t0) {
        return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    };

    for (const auto& grid : config.grids) {
        for (const auto& corpus_id : grid.corpora)
            for (const auto& feature_id : grid.features)
                for (const auto& model_id : grid.models)
                    for (const auto& attack_id : grid.attacks)
                        for (const auto& mitigation_id : grid.mitigations) {
                            CellResult cell;
                            cell.grid_id = grid.id;
                            cell.corpus_id = corpus_id;
                            cell.feature_id = feature_id;
                            cell.model_id = model_id;
                            cell.attack_id = attack_id;
                            cell.mitigation_id = mitigation_id;
                            if (attack_id != kNoneId && mitigation_id != kNoneId) {
                                const auto& at =
                                    need_by_id(config.attacks, attack_id, "attack");
                                const auto& mit = need_by_id(config.mitigations,
                                                             mitigation_id,
                                                             "mitigation");
                                cell.extrapolation =
                                    at.kind == AttackKind::kLove &&
                                    mit.kind ==
                                        MitigationKind::kAdversarialTraining;
                            }
                            const auto t0 = clock::now();
                            try {
                                cell.eval =
                                    run_cell(rt, config, corpus_id, feature_id,
                                             model_id, attack_id, mitigation_id);
                                cell.ok = true;
                            } catch (const std::exception& e) {
                                cell.error = e.what();
                                if (config.fail_fast)
                                    throw std::runtime_error(
                                        "cell " + corpus_id + "/" + feature_id +
                                        "/" + model_id + "/" + attack_id + "/" +
                                        mitigation_id + ": " + e.what());
                            }
                            cell.wall_ms = elapsed_ms(t0);
                            report.cells.push_back(std::move(cell));
                        }
    }

    for (const auto& block : config.cross_apply) {
        CrossApplyResult res;
        res.id = block.id;
        res.feature_id = block.feature;
        res.model_id = block.model;
        res.corpus_ids = block.corpora;
        const auto t0 = clock::now();
        try {
            const std::size_t n = block.corpora.size();
            res.grid.assign(n, {});
            for (std::size_t i = 0; i < n; ++i) {
                const Runtime::Trained& tc =
                    rt.trained(block.corpora[i], block.feature, block.model, kNoneId);
                for (std::size_t k = 0; k < n; ++k) {
                    EvalReport r = evaluate(
                        tc.model, rt.corpus(block.corpora[k]).test, tc.vocab);
                    r.model_id = block.model;
                    r.corpus_id = block.corpora[k];
                    r.attack_id = kNoneId;
                    r.mitigation_id = kNoneId;
                    res.grid[i].push_back(std::move(r));
                }
            }
            res.ok = true;
        } catch (const std::exception& e) {
            res.error = e.what();
            res.grid.clear();
            if (config.fail_fast)
                throw std::runtime_error("cross_apply " + block.id + ": " + e.what());
        }
        res.wall_ms = elapsed_ms(t0);
        report.cross.push_back(std::move(res));
    }

    return report;
}

LabeledCorpus materialize_corpus(const ExperimentConfig& config,
                                 const std::string& corpus_id) {
    const CorpusConfig& cc = need_by_id(config.corpora, corpus_id, "corpus");
    LabeledCorpus full =
        cc.synthetic
            ? generate_synthetic(
                  *cc.synthetic,
                  derive_seed(config.seed, fnv1a("corpus:" + corpus_id)))
            : load_csv(cc.path, cc.text_col, cc.label_col, cc.scheme);
    if (cc.merge) full = merge_classes(full, *cc.merge);
    return full;
}

std::pair<LabeledCorpus, LabeledCorpus> prepare_corpus(
    const ExperimentConfig& config, const std::string& corpus_id) {
    Runtime rt(config);
    const Runtime::Prepared& pc = rt.corpus(corpus_id);
    return {pc.train, pc.test};
}

LabeledCorpus attack_test_split(const ExperimentConfig& config,
                                const std::string& corpus_id,
                                const std::string& attack_id) {
    Runtime rt(config);
    return rt.attacked(corpus_id, attack_id);
}

LabeledCorpus augment_train_split(const ExperimentConfig& config,
                                  const std::string& corpus_id,
                                  const std::string& mitigation_id) {
    const MitigationConfig& mit =
        need_by_id(config.mitigations, mitigation_id, "mitigation");
    if (mit.kind != MitigationKind::kAdversarialTraining)
        throw std::invalid_argument("mitigation '" + mitigation_id +
                                    "' is not adversarial_training");
    Runtime rt(config);
    return rt.augmented_train(corpus_id, mit);
}

std::pair<Vocabulary, TrainedModel> train_cell(const ExperimentConfig& config,
                                               const std::string& corpus_id,
                                               const std::string& feature_id,
                                               const std::string& model_id,
                                               const std::string& mitigation_id) {
    std::string mit_key = mitigation_id;
    if (mitigation_id != kNoneId &&
        need_by_id(config.mitigations, mitigation_id, "mitigation").kind ==
            MitigationKind::kSpellCheck)
        mit_key = kNoneId;
    Runtime rt(config);
    const Runtime::Trained& t =
        rt.trained(corpus_id, feature_id, model_id, mit_key);
    return {t.vocab, t.model};
}

nlohmann::json CellResult::to_json() const {
    json j{{"grid", grid_id},
           {"corpus", corpus_id},
           {"feature", feature_id},
           {"model", model_id},
           {"attack", attack_id},
           {"mitigation", mitigation_id},
           {"ok", ok},
           {"extrapolation", extrapolation},
           {"wall_ms", wall_ms}};
    if (ok)
        j["eval"] = eval.to_json();
    else
        j["error"] = error;
    return j;
}

nlohmann::json CrossApplyResult::to_json() const {
    json j{{"id", id},
           {"feature", feature_id},
           {"model", model_id},
           {"corpora", corpus_ids},
           {"ok", ok},
           {"wall_ms", wall_ms}};
    if (ok) {
        json rows = json::array();
        for (const auto& row : grid) {
            json cells = json::array();
            for (const auto& r : row) cells.push_back(r.to_json());
            rows.push_back(std::move(cells));
        }
        j["grid"] = std::move(rows);
    } else {
        j["error"] = error;
    }
    return j;
}

nlohmann::json ExperimentReport::to_json() const {
    json cells_json = json::array();
    for (const auto& cell : cells) cells_json.push_back(cell.to_json());
    json cross_json = json::array();
    for (const auto& block : cross) cross_json.push_back(block.to_json());
    return json{{"config", config_snapshot},
                {"cells", std::move(cells_json)},
                {"cross_apply", std::move(cross_json)}};
}

ExperimentReport report_from_json(const nlohmann::json& j) {
    try {
        ExperimentReport rep;
        rep.config_snapshot = j.at("config");
        for (const auto& cj : j.at("cells")) {
            CellResult c;
            c.grid_id = cj.at("grid").get<std::string>();
            c.corpus_id = cj.at("corpus").get<std::string>();
            c.feature_id = cj.at("feature").get<std::string>();
            c.model_id = cj.at("model").get<std::string>();
            c.attack_id = cj.at("attack").get<std::string>();
            c.mitigation_id = cj.at("mitigation").get<std::string>();
            c.ok = cj.at("ok").get<bool>();
            c.extrapolation = cj.at("extrapolation").get<bool>();
            c.wall_ms = cj.at("wall_ms").get<double>();
            if (c.ok)
                c.eval = eval_report_from_json(cj.at("eval"));
            else
                c.error = cj.at("error").get<std::string>();
            rep.cells.push_back(std::move(c));
        }
        for (const auto& xj : j.at("cross_apply")) {
            CrossApplyResult x;
            x.id = xj.at("id").get<std::string>();
            x.feature_id = xj.at("feature").get<std::string>();
            x.model_id = xj.at("model").get<std::string>();
            x.corpus_ids = xj.at("corpora").get<std::vector<std::string>>();
            x.ok = xj.at("ok").get<bool>();
            x.wall_ms = xj.at("wall_ms").get<double>();
            if (x.ok) {
                const auto& rows = xj.at("grid");
                if (rows.size() != x.corpus_ids.size())
                    throw std::runtime_error(
                        "invalid report file: bad cross-apply grid shape");
                for (const auto& row : rows) {
                    if (row.size() != x.corpus_ids.size())
                        throw std::runtime_error(
                            "invalid report file: bad cross-apply grid shape");
                    std::vector<EvalReport> evals;
                    for (const auto& rj : row)
                        evals.push_back(eval_report_from_json(rj));
                    x.grid.push_back(std::move(evals));
                }
            } else {
                x.error = xj.at("error").get<std::string>();
            }
            rep.cross.push_back(std::move(x));
        }
        return rep;
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("invalid report file: ") + e.what());
    }
}

std::string render_json(const ExperimentReport& report) {
    return report.to_json().dump(2) + "\n";
}

std::string render_markdown(const ExperimentReport& report) {
    if (report.cells.empty() && report.cross.empty())
        throw std::invalid_argument("report has no cells to render");

    std::string out = "# Experiment report\n";
    bool any_extrapolation = false;

    // Group cells back into their grids, preserving declaration order.
    std::vector<std::string> grid_ids;
    for (const auto& cell : report.cells)
        if (std::find(grid_ids.begin(), grid_ids.end(), cell.grid_id) ==
            grid_ids.end())
            grid_ids.push_back(cell.grid_id);

    for (const auto& grid_id : grid_ids) {
        std::vector<const CellResult*> cells;
        for (const auto& cell : report.cells)
            if (cell.grid_id == grid_id) cells.push_back(&cell);

        // Rows are (corpus, feature, model) triples, columns are
        // (attack, mitigation) pairs, both in cell order.
        std::vector<std::string> rows, cols;
        for (const CellResult* cell : cells) {
            const std::string row =
                cell->corpus_id + "/" + cell->feature_id + "/" + cell->model_id;
            const std::string col =
                cell->mitigation_id == kNoneId
                    ? cell->attack_id
                    : cell->attack_id + "+" + cell->mitigation_id;
            if (std::find(rows.begin(), rows.end(), row) == rows.end())
                rows.push_back(row);
            if (std::find(cols.begin(), cols.end(), col) == cols.end())
                cols.push_back(col);
        }

        const auto cell_at = [&](const std::string& row,
                                 const std::string& col) -> const CellResult* {
            for (const CellResult* cell : cells) {
                const std::string r =
                    cell->corpus_id + "/" + cell->feature_id + "/" + cell->model_id;
                const std::string c =
                    cell->mitigation_id == kNoneId
                        ? cell->attack_id
                        : cell->attack_id + "+" + cell->mitigation_id;
                if (r == row && c == col) return cell;
            }
            return nullptr;
        };

        const auto emit_table = [&](const char* title, bool hate) {
            out += "\n### " + std::string(title) + "\n\n| model |";
            for (const auto& col : cols) out += " " + col + " |";
            out += "\n|---|";
            for (std::size_t i = 0; i < cols.size(); ++i) out += "---|";
            out += "\n";
            for (const auto& row : rows) {
                out += "| " + row + " |";
                for (const auto& col : cols) {
                    const CellResult* cell = cell_at(row, col);
                    std::string text = "-";
                    if (cell && cell->ok) {
                        text = fixed2(hate ? cell->eval.hate_f1
                                           : cell->eval.macro_f1);
                        if (cell->extrapolation) {
                            text += "\\*";
                            any_extrapolation = true;
                        }
                    } else if (cell) {
                        text = "err";
                    }
                    out += " " + text + " |";
                }
                out += "\n";
            }
        };

        out += "\n## Grid " + grid_id + "\n";
        emit_table("Hate-class F1", true);
        emit_table("Macro F1", false);
    }

    for (const auto& block : report.cross) {
        out += "\n## Cross-application " + block.id + " (" + block.feature_id +
               "/" + block.model_id + ", macro F1)\n\n";
        if (!block.ok) {
            out += "Failed: " + block.error + "\n";
            continue;
        }
        out += "| trained \\ tested |";
        for (const auto& id : block.corpus_ids) out += " " + id + " |";
        out += "\n|---|";
        for (std::size_t i = 0; i < block.corpus_ids.size(); ++i) out += "---|";
        out += "\n";
        for (std::size_t i = 0; i < block.corpus_ids.size(); ++i) {
            out += "| " + block.corpus_ids[i] + " |";
            for (std::size_t k = 0; k < block.corpus_ids.size(); ++k)
                out += " " + fixed2(block.grid[i][k].macro_f1) + " |";
            out += "\n";
        }
    }

    if (any_extrapolation)
        out += "\n\\* adversarial training against the combined attack has no "
               "measured precedent; treat as extrapolation.\n";
    return out;
}

void render_to_file(const ExperimentReport& report, const std::string& format,
                    const std::string& path) {
    if (report.cells.empty() && report.cross.empty())
        throw std::invalid_argument("report has no cells to render");
    std::string content;
    if (format == "json")
        content = render_json(report);
    else if (format == "markdown")
        content = render_markdown(report);
    else
        throw std::invalid_argument("unknown render format: " + format);
    write_text_file(path, content);
}

}  // namespace hsd
