#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <string>
#include <vector>

#include "hsd/harness.hpp"
#include "hsd/models.hpp"
#include "hsd/textproc.hpp"

#include "test_util.hpp"

using namespace hsd;
using nlohmann::json;

namespace {

// Small synthetic single-corpus experiment that trains in milliseconds.
json base_config() {
    return json{
        {"seed", 2024},
        {"corpora",
         {{{"id", "syn"},
           {"synthetic",
            {{"labels", {"hate", "nonhate"}},
             {"hate_label", "hate"},
             {"docs_per_label", {{"hate", 40}, {"nonhate", 60}}},
             {"keywords",
              {{"hate", {"vermin", "scum", "filth", "loathe"}},
               {"nonhate", {"garden", "puppy", "sunny", "kitten"}}}},
             {"filler",
              {"word0", "word1", "word2", "word3", "word4", "word5"}}}},
           {"test_fraction", 0.25}}}},
        {"features",
         {{{"id", "char12"},
           {"granularity", "char"},
           {"n_lo", 1},
           {"n_hi", 2},
           {"min_doc_freq", 1}}}},
        {"models",
         {{{"id", "lr"},
           {"arch", "linear"},
           {"hyper",
            {{"learning_rate", 0.1}, {"epochs", 6}, {"batch_size", 16}}}}}},
        {"wordlists",
         {{{"id", "common"}, {"source", "common_english"}, {"top_k", 50}},
          {{"id", "nh"},
           {"source", "nonhate_class"},
           {"corpus", "syn"},
           {"label", "nonhate"},
           {"top_k", 20}}}},
        {"attacks",
         {{{"id", "typo"}, {"kind", "typo"}},
          {{"id", "leet"}, {"kind", "leet"}},
          {{"id", "ins"}, {"kind", "space_insert"}},
          {{"id", "rem"}, {"kind", "space_remove"}},
          {{"id", "app"},
           {"kind", "append_common"},
           {"wordlist", "common"},
           {"append_lo", 3},
           {"append_hi", 6}},
          {{"id", "love"}, {"kind", "love"}}}},
        {"mitigations",
         {{{"id", "at_leet"},
           {"kind", "adversarial_training"},
           {"attack", "leet"}},
          {{"id", "spell"}, {"kind", "spell_check"}, {"max_dist", 2}},
          {{"id", "strip"}, {"kind", "strip_spaces"}}}},
        {"grids",
         {{{"id", "main"},
           {"corpora", {"syn"}},
           {"features", {"char12"}},
           {"models", {"lr"}},
           {"attacks", {"none", "typo", "leet", "ins", "rem", "app", "love"}},
           {"mitigations", {"none", "at_leet"}}}}}};
}

const CellResult& cell_for(const ExperimentReport& report,
                           const std::string& attack,
                           const std::string& mitigation) {
    for (const auto& cell : report.cells)
        if (cell.attack_id == attack && cell.mitigation_id == mitigation)
            return cell;
    REQUIRE(false);
    throw std::logic_error("unreachable");
}

}  // namespace

TEST_CASE("parse_config keeps fields and applies defaults") {
    const ExperimentConfig cfg = parse_config(base_config());
    CHECK(cfg.seed == 2024);
    CHECK(cfg.out_dir == ".");
    CHECK_FALSE(cfg.fail_fast);
    REQUIRE(cfg.corpora.size() == 1);
    CHECK(cfg.corpora[0].id == "syn");
    CHECK(cfg.corpora[0].test_fraction == 0.25);
    CHECK(cfg.corpora[0].synthetic.has_value());
    CHECK(cfg.corpora[0].scheme.hate_label == "hate");
    REQUIRE(cfg.features.size() == 1);
    CHECK(cfg.features[0].weighting == Weighting::kCount);
    CHECK(cfg.features[0].min_doc_freq == 1);
    REQUIRE(cfg.models.size() == 1);
    CHECK(cfg.models[0].hyper.epochs == 6);
    CHECK(cfg.models[0].hyper.l2 == Hyperparams{}.l2);
    REQUIRE(cfg.grids.size() == 1);
    CHECK(cfg.grids[0].attacks.size() == 7);
    CHECK(cfg.snapshot == base_config());
}

TEST_CASE("omitted grid axes default to the baseline column") {
    json j = base_config();
    j["grids"][0].erase("attacks");
    j["grids"][0].erase("mitigations");
    const ExperimentConfig cfg = parse_config(j);
    CHECK(cfg.grids[0].attacks == std::vector<std::string>{"none"});
    CHECK(cfg.grids[0].mitigations == std::vector<std::string>{"none"});
}

TEST_CASE("parse_config rejects malformed configs") {
    json no_seed = base_config();
    no_seed.erase("seed");
    CHECK_THROWS_WITH_AS(parse_config(no_seed),
                         "config: missing 'seed' in config root",
                         std::invalid_argument);

    json reserved = base_config();
    reserved["attacks"][0]["id"] = "none";
    CHECK_THROWS_WITH_AS(parse_config(reserved), "config: id 'none' is reserved",
                         std::invalid_argument);

    json bad_id = base_config();
    bad_id["models"][0]["id"] = "l r";
    CHECK_THROWS_AS(parse_config(bad_id), std::invalid_argument);

    json dup = base_config();
    dup["features"].push_back(dup["features"][0]);
    CHECK_THROWS_WITH_AS(parse_config(dup),
                         "config: duplicate id 'char12' in features",
                         std::invalid_argument);

    json both_sources = base_config();
    both_sources["corpora"][0]["path"] = "x.csv";
    CHECK_THROWS_AS(parse_config(both_sources), std::invalid_argument);

    json bad_frac = base_config();
    bad_frac["corpora"][0]["test_fraction"] = 1.0;
    CHECK_THROWS_WITH_AS(parse_config(bad_frac),
                         "config: corpus 'syn': test_fraction must be in (0,1)",
                         std::invalid_argument);

    json bad_ngram = base_config();
    bad_ngram["features"][0]["n_lo"] = 0;
    CHECK_THROWS_AS(parse_config(bad_ngram), std::invalid_argument);

    json bad_hyper = base_config();
    bad_hyper["models"][0]["hyper"]["momentum"] = 0.9;
    CHECK_THROWS_WITH_AS(parse_config(bad_hyper),
                         "config: unknown hyperparameter 'momentum' in model 'lr'",
                         std::invalid_argument);

    json bad_prob = base_config();
    bad_prob["attacks"][0]["word_prob"] = 0.0;
    CHECK_THROWS_AS(parse_config(bad_prob), std::invalid_argument);

    json bad_bounds = base_config();
    bad_bounds["attacks"][4]["append_hi"] = 1;
    CHECK_THROWS_AS(parse_config(bad_bounds), std::invalid_argument);

    json no_wordlist = base_config();
    no_wordlist["attacks"][4].erase("wordlist");
    CHECK_THROWS_AS(parse_config(no_wordlist), std::invalid_argument);

    json wrong_list = base_config();
    wrong_list["attacks"][4]["wordlist"] = "nh";
    CHECK_THROWS_AS(parse_config(wrong_list), std::invalid_argument);

    json ghost_ref = base_config();
    ghost_ref["grids"][0]["attacks"].push_back("nope");
    CHECK_THROWS_WITH_AS(parse_config(ghost_ref),
                         "config: unknown attack id 'nope'",
                         std::invalid_argument);

    json dup_axis = base_config();
    dup_axis["grids"][0]["attacks"].push_back("typo");
    CHECK_THROWS_AS(parse_config(dup_axis), std::invalid_argument);

    json empty_axis = base_config();
    empty_axis["grids"][0]["models"] = json::array();
    CHECK_THROWS_AS(parse_config(empty_axis), std::invalid_argument);

    json at_missing = base_config();
    at_missing["mitigations"][0].erase("attack");
    CHECK_THROWS_AS(parse_config(at_missing), std::invalid_argument);

    json bad_dist = base_config();
    bad_dist["mitigations"][1]["max_dist"] = 0;
    CHECK_THROWS_AS(parse_config(bad_dist), std::invalid_argument);

    json bad_source = base_config();
    bad_source["wordlists"][0]["source"] = "martian";
    CHECK_THROWS_AS(parse_config(bad_source), std::invalid_argument);
}

TEST_CASE("strip_spaces cannot share a grid with word features") {
    json j = base_config();
    j["features"].push_back(json{{"id", "w1"},
                                 {"granularity", "word"},
                                 {"n_lo", 1},
                                 {"n_hi", 1},
                                 {"min_doc_freq", 1}});
    j["grids"][0]["features"] = {"char12", "w1"};
    j["grids"][0]["mitigations"] = {"none", "strip"};
    CHECK_THROWS_WITH_AS(
        parse_config(j),
        "config: grid 'main': strip_spaces cannot be combined with the "
        "word-granularity feature 'w1'",
        std::invalid_argument);
}

TEST_CASE("load_config reads a file and keeps the snapshot") {
    const std::string path = "harness_config_tmp.json";
    write_text_file(path, base_config().dump());
    const ExperimentConfig cfg = load_config(path);
    CHECK(cfg.snapshot == base_config());
    std::remove(path.c_str());

    write_text_file(path, "not json at all");
    CHECK_THROWS_AS(load_config(path), std::invalid_argument);
    std::remove(path.c_str());
}

TEST_CASE("a full grid runs every cell exactly once") {
    const ExperimentConfig cfg = parse_config(base_config());
    const ExperimentReport report = run(cfg);

    REQUIRE(report.cells.size() == 14);  // 7 attacks x 2 mitigations
    for (const auto& cell : report.cells) {
        CAPTURE(cell.attack_id);
        CAPTURE(cell.mitigation_id);
        CHECK(cell.ok);
        CHECK(cell.error.empty());
        CHECK(cell.grid_id == "main");
        CHECK(cell.corpus_id == "syn");
        CHECK(cell.eval.confusion.size() == 2);
    }

    // Mitigations iterate innermost.
    CHECK(report.cells[0].attack_id == "none");
    CHECK(report.cells[0].mitigation_id == "none");
    CHECK(report.cells[1].attack_id == "none");
    CHECK(report.cells[1].mitigation_id == "at_leet");
    CHECK(report.cells[13].attack_id == "love");
    CHECK(report.cells[13].mitigation_id == "at_leet");

    std::size_t flagged = 0;
    for (const auto& cell : report.cells)
        if (cell.extrapolation) ++flagged;
    CHECK(flagged == 1);
    CHECK(report.cells[13].extrapolation);
}

TEST_CASE("reruns reproduce every metric bit-exactly") {
    const ExperimentConfig cfg = parse_config(base_config());
    const ExperimentReport a = run(cfg);
    const ExperimentReport b = run(cfg);
    REQUIRE(a.cells.size() == b.cells.size());
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        CHECK(a.cells[i].eval.macro_f1 == b.cells[i].eval.macro_f1);
        CHECK(a.cells[i].eval.hate_f1 == b.cells[i].eval.hate_f1);
        CHECK(a.cells[i].eval.confusion == b.cells[i].eval.confusion);
    }
    CHECK(render_markdown(a) == render_markdown(b));
}

TEST_CASE("side helpers mirror grid cells bit for bit") {
    const ExperimentConfig cfg = parse_config(base_config());
    const ExperimentReport report = run(cfg);

    const auto [train, test] = prepare_corpus(cfg, "syn");
    CHECK(train.docs.size() + test.docs.size() == 100);

    const auto [vocab, model] = train_cell(cfg, "syn", "char12", "lr");
    const EvalReport direct = evaluate(model, test, vocab);
    const CellResult& baseline = cell_for(report, "none", "none");
    CHECK(direct.macro_f1 == baseline.eval.macro_f1);
    CHECK(direct.hate_f1 == baseline.eval.hate_f1);
    CHECK(direct.confusion == baseline.eval.confusion);

    const LabeledCorpus attacked = attack_test_split(cfg, "syn", "leet");
    const EvalReport on_attacked = evaluate(model, attacked, vocab);
    const CellResult& leet_cell = cell_for(report, "leet", "none");
    CHECK(on_attacked.macro_f1 == leet_cell.eval.macro_f1);
    CHECK(on_attacked.confusion == leet_cell.eval.confusion);

    const LabeledCorpus augmented = augment_train_split(cfg, "syn", "at_leet");
    CHECK(augmented.docs.size() == 2 * train.docs.size());
    for (std::size_t i = 0; i < train.docs.size(); ++i)
        CHECK(augmented.docs[i].raw_text == train.docs[i].raw_text);
    CHECK_THROWS_AS(augment_train_split(cfg, "syn", "spell"),
                    std::invalid_argument);
    CHECK_THROWS_AS(augment_train_split(cfg, "syn", "strip"),
                    std::invalid_argument);

    // Spell checking only changes evaluation, so the trained model is the
    // unmitigated one.
    const auto [v2, spell_model] = train_cell(cfg, "syn", "char12", "lr", "spell");
    CHECK(flatten_params(spell_model) == flatten_params(model));
}

TEST_CASE("cell failures stay inside their cell unless fail_fast is set") {
    json j = base_config();
    j["features"].push_back(json{{"id", "starved"},
                                 {"granularity", "char"},
                                 {"n_lo", 1},
                                 {"n_hi", 2},
                                 {"min_doc_freq", 100000}});
    j["grids"][0]["features"] = {"char12", "starved"};
    j["grids"][0]["attacks"] = {"none"};
    j["grids"][0]["mitigations"] = {"none"};

    const ExperimentReport report = run(parse_config(j));
    REQUIRE(report.cells.size() == 2);
    CHECK(report.cells[0].ok);
    CHECK_FALSE(report.cells[1].ok);
    CHECK(report.cells[1].error.find("zero-dimensional") != std::string::npos);

    j["fail_fast"] = true;
    CHECK_THROWS_AS(run(parse_config(j)), std::runtime_error);
}

TEST_CASE("spell-check cells evaluate with corrected text") {
    json j = base_config();
    j["grids"][0]["attacks"] = {"none", "typo"};
    j["grids"][0]["mitigations"] = {"none", "spell"};
    const ExperimentReport report = run(parse_config(j));
    REQUIRE(report.cells.size() == 4);
    for (const auto& cell : report.cells) CHECK(cell.ok);
}

TEST_CASE("cross-application diagonals equal their baseline cells") {
    json j = base_config();
    j["corpora"].push_back(json{
        {"id", "syn2"},
        {"synthetic",
         {{"labels", {"hate", "nonhate"}},
          {"hate_label", "hate"},
          {"docs_per_label", {{"hate", 40}, {"nonhate", 60}}},
          {"keywords",
           {{"hate", {"wretch", "menace", "blight", "plague"}},
            {"nonhate", {"meadow", "breeze", "violet", "stream"}}}},
          {"filler", {"item0", "item1", "item2", "item3", "item4", "item5"}}}},
        {"test_fraction", 0.25}});
    j["grids"][0]["corpora"] = {"syn", "syn2"};
    j["grids"][0]["attacks"] = {"none"};
    j["grids"][0]["mitigations"] = {"none"};
    j["cross_apply"] = {{{"id", "xa"},
                         {"corpora", {"syn", "syn2"}},
                         {"feature", "char12"},
                         {"model", "lr"}}};

    const ExperimentReport report = run(parse_config(j));
    REQUIRE(report.cells.size() == 2);
    REQUIRE(report.cross.size() == 1);
    const CrossApplyResult& xa = report.cross[0];
    CHECK(xa.ok);
    REQUIRE(xa.grid.size() == 2);
    REQUIRE(xa.grid[0].size() == 2);
    REQUIRE(xa.grid[1].size() == 2);
    CHECK(xa.grid[0][0].macro_f1 == report.cells[0].eval.macro_f1);
    CHECK(xa.grid[1][1].macro_f1 == report.cells[1].eval.macro_f1);
    CHECK(render_markdown(report).find("Cross-application xa") !=
          std::string::npos);
}

TEST_CASE("markdown rendering lays out both metric tables") {
    const ExperimentReport report = run(parse_config(base_config()));
    const std::string md = render_markdown(report);
    CHECK(md.find("## Grid main") != std::string::npos);
    CHECK(md.find("### Hate-class F1") != std::string::npos);
    CHECK(md.find("### Macro F1") != std::string::npos);
    CHECK(md.find("| model |") != std::string::npos);
    CHECK(md.find("love+at_leet") != std::string::npos);
    CHECK(md.find("syn/char12/lr") != std::string::npos);
    CHECK(md.find("treat as extrapolation") != std::string::npos);
    CHECK(md.find("\\*") != std::string::npos);

    // Metric cells are fixed two-decimal numbers.
    CHECK(md.find(" 0.") != std::string::npos ||
          md.find(" 1.") != std::string::npos);

    CHECK_THROWS_AS(render_markdown(ExperimentReport{}), std::invalid_argument);
}

TEST_CASE("report serialization survives a round trip") {
    const ExperimentReport report = run(parse_config(base_config()));
    const ExperimentReport back = report_from_json(report.to_json());
    CHECK(render_markdown(back) == render_markdown(report));
    CHECK(render_json(back) == render_json(report));

    CHECK_THROWS_WITH_AS(report_from_json(json::object()),
                         doctest::Contains("invalid report file"),
                         std::runtime_error);

    json bad_shape = report.to_json();
    bad_shape["cross_apply"] = {{{"id", "x"},
                                 {"feature", "f"},
                                 {"model", "m"},
                                 {"corpora", {"a", "b"}},
                                 {"ok", true},
                                 {"wall_ms", 1.0},
                                 {"grid", json::array()}}};
    CHECK_THROWS_AS(report_from_json(bad_shape), std::runtime_error);
}

TEST_CASE("render_to_file writes either format and rejects others") {
    const ExperimentReport report = run(parse_config(base_config()));
    const std::string path = "harness_report_tmp.json";
    render_to_file(report, "json", path);
    const ExperimentReport back = report_from_json(json::parse(read_text_file(path)));
    CHECK(render_markdown(back) == render_markdown(report));
    std::remove(path.c_str());

    CHECK_THROWS_AS(render_to_file(report, "xml", "nope.txt"),
                    std::invalid_argument);
    CHECK_THROWS_AS(render_to_file(ExperimentReport{}, "json", "nope.txt"),
                    std::invalid_argument);
}

TEST_CASE("materialize_corpus applies class merges") {
    json j = base_config();
    j["corpora"][0]["synthetic"]["labels"] = {"racist", "sexist", "ordinary"};
    j["corpora"][0]["synthetic"]["hate_label"] = "racist";
    j["corpora"][0]["synthetic"]["docs_per_label"] =
        json{{"racist", 10}, {"sexist", 15}, {"ordinary", 25}};
    j["corpora"][0]["synthetic"]["keywords"] =
        json{{"racist", {"vermin"}}, {"sexist", {"harpy"}}, {"ordinary", {"garden"}}};
    j["corpora"][0]["merge"] =
        json{{"racist", "hate"}, {"sexist", "hate"}, {"ordinary", "nonhate"}};
    // Grid axes reference ids only, so the merged corpus still runs.
    const ExperimentConfig cfg = parse_config(j);
    const LabeledCorpus full = materialize_corpus(cfg, "syn");
    const auto counts = full.label_counts();
    CHECK(counts.at("hate") == 25);
    CHECK(counts.at("nonhate") == 25);
    CHECK(full.scheme.hate_label == "hate");
}
