#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hsd/blackbox.hpp"
#include "hsd/harness.hpp"
#include "hsd/mitigations.hpp"
#include "hsd/textproc.hpp"

#include "CLI11.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;

namespace fs = std::filesystem;

struct GlobalOpts {
    std::string config;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out = ".";
    std::string format = "json";
    bool fail_fast = false;
};

// Shared flags; each subcommand attaches the subset it honors.
void add_config(CLI::App* cmd, GlobalOpts& o) {
    cmd->add_option("--config", o.config, "Experiment config JSON")
        ->required()
        ->check(CLI::ExistingFile);
}

void add_seed(CLI::App* cmd, GlobalOpts& o) {
    cmd->add_option("--seed", o.seed, "Override the config seed")
        ->each([&o](const std::string&) { o.seed_set = true; });
}

void add_out(CLI::App* cmd, GlobalOpts& o) {
    cmd->add_option("--out", o.out, "Output directory (default .)");
}

void add_format(CLI::App* cmd, GlobalOpts& o) {
    cmd->add_option("--format", o.format, "json or markdown")
        ->check(CLI::IsMember({"json", "markdown"}));
}

hsd::ExperimentConfig load_with_overrides(const GlobalOpts& o) {
    hsd::ExperimentConfig cfg = hsd::load_config(o.config);
    if (o.seed_set) cfg.seed = o.seed;
    if (o.fail_fast) cfg.fail_fast = true;
    return cfg;
}

std::string write_into(const std::string& dir, const std::string& name,
                       const std::string& content) {
    fs::create_directories(dir);
    const std::string path = (fs::path(dir) / name).string();
    hsd::write_text_file(path, content);
    return path;
}

void print_paths(std::initializer_list<std::pair<const char*, std::string>> kv) {
    json j;
    for (const auto& [key, value] : kv) j[key] = value;
    std::cout << j.dump(2) << "\n";
}

// Runs a single grid cell through the full pipeline and returns its
// evaluation; any failure surfaces as an exception.
hsd::EvalReport evaluate_cell(hsd::ExperimentConfig cfg, const std::string& corpus,
                              const std::string& feature, const std::string& model,
                              const std::string& attack,
                              const std::string& mitigation) {
    cfg.grids.clear();
    cfg.cross_apply.clear();
    cfg.fail_fast = true;
    hsd::GridConfig grid;
    grid.id = "cell";
    grid.corpora = {corpus};
    grid.features = {feature};
    grid.models = {model};
    grid.attacks = {attack};
    grid.mitigations = {mitigation};
    cfg.grids.push_back(std::move(grid));
    return hsd::run(cfg).cells.at(0).eval;
}

int cmd_run(const GlobalOpts& o) {
    hsd::ExperimentConfig cfg = load_with_overrides(o);
    if (o.out != ".") cfg.out_dir = o.out;
    const hsd::ExperimentReport report = hsd::run(cfg);
    const std::string name =
        o.format == "json" ? "report.json" : "report.md";
    fs::create_directories(cfg.out_dir);
    const std::string path = (fs::path(cfg.out_dir) / name).string();
    hsd::render_to_file(report, o.format, path);
    print_paths({{"report", path}});
    return 0;
}

int cmd_train(const GlobalOpts& o, const std::string& corpus,
              const std::string& feature, const std::string& model,
              const std::string& mitigation) {
    const hsd::ExperimentConfig cfg = load_with_overrides(o);
    const auto [vocab, trained] =
        hsd::train_cell(cfg, corpus, feature, model, mitigation);
    std::string stem = corpus + "_" + feature + "_" + model;
    if (mitigation != hsd::kNoneId) stem += "_" + mitigation;
    const std::string vocab_path =
        write_into(o.out, stem + ".vocab.json", vocab.to_json());
    fs::create_directories(o.out);
    const std::string model_path =
        (fs::path(o.out) / (stem + ".model.json")).string();
    hsd::save_model(trained, model_path);
    print_paths({{"model", model_path}, {"vocab", vocab_path}});
    return 0;
}

int cmd_evaluate(const GlobalOpts& o, const std::string& corpus,
                 const std::string& feature, const std::string& model,
                 const std::string& attack, const std::string& mitigation) {
    const hsd::EvalReport report = evaluate_cell(
        load_with_overrides(o), corpus, feature, model, attack, mitigation);
    std::cout << report.to_json().dump(2) << "\n";
    return 0;
}

int cmd_attack(const GlobalOpts& o, const std::string& corpus,
               const std::string& attack) {
    const hsd::ExperimentConfig cfg = load_with_overrides(o);
    const hsd::LabeledCorpus attacked =
        hsd::attack_test_split(cfg, corpus, attack);
    fs::create_directories(o.out);
    const std::string path =
        (fs::path(o.out) / (corpus + "_test_" + attack + ".csv")).string();
    hsd::save_csv(attacked, path);
    print_paths({{"attacked_test", path}});
    return 0;
}

int cmd_mitigate(const GlobalOpts& o, const std::string& corpus,
                 const std::string& mitigation, const std::string& attack) {
    const hsd::ExperimentConfig cfg = load_with_overrides(o);
    const hsd::MitigationConfig* mit = nullptr;
    for (const auto& m : cfg.mitigations)
        if (m.id == mitigation) mit = &m;
    if (!mit)
        throw std::invalid_argument("config: unknown mitigation id '" +
                                    mitigation + "'");
    fs::create_directories(o.out);

    if (mit->kind == hsd::MitigationKind::kAdversarialTraining) {
        if (attack != hsd::kNoneId)
            throw std::invalid_argument(
                "adversarial_training augments the training split; --attack "
                "does not apply");
        const hsd::LabeledCorpus augmented =
            hsd::augment_train_split(cfg, corpus, mitigation);
        const std::string path =
            (fs::path(o.out) / (corpus + "_train_" + mitigation + ".csv"))
                .string();
        hsd::save_csv(augmented, path);
        print_paths({{"augmented_train", path}});
        return 0;
    }

    auto [train, test] = hsd::prepare_corpus(cfg, corpus);
    if (attack != hsd::kNoneId) test = hsd::attack_test_split(cfg, corpus, attack);

    hsd::LabeledCorpus out_corpus = test;
    if (mit->kind == hsd::MitigationKind::kSpellCheck) {
        const hsd::SpellCorrector corrector(hsd::build_dictionary(train),
                                            mit->max_dist);
        for (auto& doc : out_corpus.docs) {
            const std::string corrected = corrector.correct(doc.norm_text);
            doc = hsd::Document{corrected, hsd::normalize(corrected), doc.label};
        }
    } else {
        for (auto& doc : out_corpus.docs) {
            const std::string stripped = hsd::strip_spaces(doc.norm_text);
            doc = hsd::Document{stripped, hsd::normalize(stripped), doc.label};
        }
    }
    std::string name = corpus + "_test_";
    if (attack != hsd::kNoneId) name += attack + "_";
    name += mitigation + ".csv";
    const std::string path = (fs::path(o.out) / name).string();
    hsd::save_csv(out_corpus, path);
    print_paths({{"mitigated_test", path}});
    return 0;
}

int cmd_cross_apply(const GlobalOpts& o, const std::string& id) {
    hsd::ExperimentConfig cfg = load_with_overrides(o);
    cfg.grids.clear();
    std::vector<hsd::CrossApplyConfig> keep;
    for (const auto& block : cfg.cross_apply)
        if (block.id == id) keep.push_back(block);
    if (keep.empty())
        throw std::invalid_argument("config: unknown cross_apply id '" + id + "'");
    cfg.cross_apply = std::move(keep);
    cfg.fail_fast = true;
    const hsd::ExperimentReport report = hsd::run(cfg);
    const std::string rendered = o.format == "json"
                                     ? hsd::render_json(report)
                                     : hsd::render_markdown(report);
    if (o.out == ".") {
        std::cout << rendered;
        return 0;
    }
    const std::string ext = o.format == "json" ? ".json" : ".md";
    print_paths({{"report", write_into(o.out, "cross_" + id + ext, rendered)}});
    return 0;
}

int cmd_report(const GlobalOpts& o, const std::string& in) {
    json j;
    try {
        j = json::parse(hsd::read_text_file(in));
    } catch (const json::exception& e) {
        throw std::runtime_error("invalid report file: " + std::string(e.what()));
    }
    const hsd::ExperimentReport report = hsd::report_from_json(j);
    const std::string rendered = o.format == "json"
                                     ? hsd::render_json(report)
                                     : hsd::render_markdown(report);
    if (o.out == ".") {
        std::cout << rendered;
        return 0;
    }
    const std::string name =
        o.format == "json" ? "report.json" : "report.md";
    print_paths({{"report", write_into(o.out, name, rendered)}});
    return 0;
}

int cmd_synth(const GlobalOpts& o, const std::string& corpus) {
    const hsd::ExperimentConfig cfg = load_with_overrides(o);
    const hsd::CorpusConfig* cc = nullptr;
    for (const auto& c : cfg.corpora)
        if (c.id == corpus) cc = &c;
    if (!cc)
        throw std::invalid_argument("config: unknown corpus id '" + corpus + "'");
    if (!cc->synthetic)
        throw std::invalid_argument("corpus '" + corpus + "' is not synthetic");
    const hsd::LabeledCorpus full = hsd::materialize_corpus(cfg, corpus);
    fs::create_directories(o.out);
    const std::string path = (fs::path(o.out) / (corpus + ".csv")).string();
    hsd::save_csv(full, path);
    print_paths({{"corpus", path}});
    return 0;
}

struct ProbeOpts {
    std::string endpoint;
    std::string in;
    std::string attack = "love";
    double threshold = 0.40;
    std::string separator = " ";
    std::uint64_t seed = 0;
    double word_prob = 1.0;
    int append_lo = 10;
    int append_hi = 50;
    std::size_t top_k = 1000;
    std::string out = ".";
};

int cmd_probe(const ProbeOpts& p) {
    std::vector<std::string> texts;
    std::istringstream lines(hsd::read_text_file(p.in));
    std::string line;
    while (std::getline(lines, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) texts.push_back(line);
    }
    if (texts.empty())
        throw std::invalid_argument("no texts in " + p.in);

    std::optional<hsd::AttackSpec> attack;
    if (p.attack != hsd::kNoneId) {
        hsd::AttackSpec spec;
        spec.kind = hsd::attack_kind_from_string(p.attack);
        spec.word_prob = p.word_prob;
        spec.append_lo = p.append_lo;
        spec.append_hi = p.append_hi;
        spec.seed = p.seed;
        if (spec.kind == hsd::AttackKind::kAppendNonhate)
            throw std::invalid_argument(
                "append_nonhate needs a corpus-derived wordlist; use the "
                "experiment harness");
        if (spec.kind == hsd::AttackKind::kAppendCommon)
            spec.wordlist = hsd::derive_wordlist(
                hsd::embedded_common_words(), hsd::StopwordList::embedded(),
                p.top_k, hsd::WordlistSource::kCommonEnglish);
        attack = std::move(spec);
    }

    hsd::Scorer scorer(hsd::load_endpoint(p.endpoint));
    hsd::ProbeOptions options;
    options.threshold = p.threshold;
    options.love_separator = p.separator;
    const hsd::ProbeSummary summary = hsd::probe(scorer, texts, attack, options);

    const std::string rendered = summary.to_json().dump(2) + "\n";
    if (p.out == ".") {
        std::cout << rendered;
        return 0;
    }
    print_paths({{"summary", write_into(p.out, "probe_" + p.attack + ".json",
                                        rendered)}});
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"n-gram hate speech classifiers, evasion attacks, mitigations"};
    app.require_subcommand(1);

    GlobalOpts o;
    std::string corpus, feature, model;
    std::string attack = hsd::kNoneId;
    std::string mitigation = hsd::kNoneId;
    std::string cross_id, report_in;
    ProbeOpts p;

    CLI::App* c_run = app.add_subcommand("run", "Run every configured grid cell");
    add_config(c_run, o);
    add_seed(c_run, o);
    add_out(c_run, o);
    add_format(c_run, o);
    c_run->add_flag("--fail-fast", o.fail_fast,
                    "Abort on the first failing cell");

    CLI::App* c_train =
        app.add_subcommand("train", "Train one combination and save it");
    add_config(c_train, o);
    add_seed(c_train, o);
    add_out(c_train, o);
    c_train->add_option("--corpus", corpus)->required();
    c_train->add_option("--feature", feature)->required();
    c_train->add_option("--model", model)->required();
    c_train->add_option("--mitigation", mitigation,
                        "Train-side mitigation id (default none)");

    CLI::App* c_eval =
        app.add_subcommand("evaluate", "Evaluate one grid cell and print it");
    add_config(c_eval, o);
    add_seed(c_eval, o);
    c_eval->add_option("--corpus", corpus)->required();
    c_eval->add_option("--feature", feature)->required();
    c_eval->add_option("--model", model)->required();
    c_eval->add_option("--attack", attack, "Attack id (default none)");
    c_eval->add_option("--mitigation", mitigation, "Mitigation id (default none)");

    CLI::App* c_attack =
        app.add_subcommand("attack", "Write the attacked test split as CSV");
    add_config(c_attack, o);
    add_seed(c_attack, o);
    add_out(c_attack, o);
    c_attack->add_option("--corpus", corpus)->required();
    c_attack->add_option("--attack", attack)->required();

    CLI::App* c_mit = app.add_subcommand(
        "mitigate", "Write a mitigated train or test split as CSV");
    add_config(c_mit, o);
    add_seed(c_mit, o);
    add_out(c_mit, o);
    c_mit->add_option("--corpus", corpus)->required();
    c_mit->add_option("--mitigation", mitigation)->required();
    c_mit->add_option("--attack", attack,
                      "Attack the test split first (spell_check/strip_spaces)");

    CLI::App* c_cross = app.add_subcommand(
        "cross-apply", "Train on each corpus, test on every other");
    add_config(c_cross, o);
    add_seed(c_cross, o);
    add_out(c_cross, o);
    add_format(c_cross, o);
    c_cross->add_option("--id", cross_id, "cross_apply block id")->required();

    CLI::App* c_report =
        app.add_subcommand("report", "Re-render a saved report");
    c_report->add_option("--in", report_in, "report.json path")
        ->required()
        ->check(CLI::ExistingFile);
    add_out(c_report, o);
    add_format(c_report, o);

    CLI::App* c_synth =
        app.add_subcommand("synth", "Write a configured synthetic corpus as CSV");
    add_config(c_synth, o);
    add_seed(c_synth, o);
    add_out(c_synth, o);
    c_synth->add_option("--corpus", corpus)->required();

    CLI::App* c_probe =
        app.add_subcommand("probe", "Probe a remote scorer with an attack");
    c_probe->add_option("--endpoint", p.endpoint, "Endpoint config JSON")
        ->required()
        ->check(CLI::ExistingFile);
    c_probe->add_option("--in", p.in, "Input texts, one per line")
        ->required()
        ->check(CLI::ExistingFile);
    c_probe->add_option("--attack", p.attack,
                        "Attack kind or none (default love)");
    c_probe->add_option("--threshold", p.threshold,
                        "Below-threshold cutoff (default 0.40)");
    c_probe->add_option("--separator", p.separator,
                        "Separator before the appended love word");
    c_probe->add_option("--seed", p.seed);
    c_probe->add_option("--word-prob", p.word_prob,
                        "Per-word probability for typo/space_insert");
    c_probe->add_option("--append-lo", p.append_lo);
    c_probe->add_option("--append-hi", p.append_hi);
    c_probe->add_option("--top-k", p.top_k,
                        "Wordlist size for append_common");
    c_probe->add_option("--out", p.out, "Output directory (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << json{{"command", "parse"}, {"error", e.what()}}.dump()
                  << "\n";
        return e.get_exit_code();
    }

    const std::string active = app.get_subcommands().at(0)->get_name();
    try {
        if (c_run->parsed()) return cmd_run(o);
        if (c_train->parsed())
            return cmd_train(o, corpus, feature, model, mitigation);
        if (c_eval->parsed())
            return cmd_evaluate(o, corpus, feature, model, attack, mitigation);
        if (c_attack->parsed()) return cmd_attack(o, corpus, attack);
        if (c_mit->parsed()) return cmd_mitigate(o, corpus, mitigation, attack);
        if (c_cross->parsed()) return cmd_cross_apply(o, cross_id);
        if (c_report->parsed()) return cmd_report(o, report_in);
        if (c_synth->parsed()) return cmd_synth(o, corpus);
        if (c_probe->parsed()) return cmd_probe(p);
    } catch (const std::exception& e) {
        std::cerr << json{{"command", active}, {"error", e.what()}}.dump()
                  << "\n";
        return 1;
    }
    return 0;
}
