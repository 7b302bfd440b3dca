#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "hsd/attacks.hpp"
#include "hsd/corpus.hpp"
#include "hsd/mitigations.hpp"
#include "hsd/rng.hpp"
#include "hsd/textproc.hpp"

#include "oracles.hpp"
#include "test_util.hpp"

using namespace hsd;

namespace {

// All strings over the given alphabet up to max_len code points.
std::vector<std::string> all_strings(const std::string& alphabet,
                                     std::size_t max_len) {
    std::vector<std::string> out = {""};
    std::size_t level_begin = 0;
    for (std::size_t len = 1; len <= max_len; ++len) {
        const std::size_t level_end = out.size();
        for (std::size_t i = level_begin; i < level_end; ++i)
            for (char c : alphabet) out.push_back(out[i] + c);
        level_begin = level_end;
    }
    return out;
}

// Reference corrector: scans the whole dictionary with the exact distance
// and applies the documented tie-breaking.
std::string brute_force_correct(const std::string& token,
                                const FrequencyDictionary& dict, int max_dist) {
    if (dict.contains(token)) return token;
    std::string best;
    std::size_t best_dist = 0, best_freq = 0;
    bool found = false;
    std::vector<std::string> words;
    for (const auto& [word, count] : dict.counts) words.push_back(word);
    std::sort(words.begin(), words.end());
    for (const auto& word : words) {
        const std::size_t dist = damerau_distance(token, word);
        if (dist > static_cast<std::size_t>(max_dist)) continue;
        const std::size_t freq = dict.counts.at(word);
        if (!found || dist < best_dist || (dist == best_dist && freq > best_freq)) {
            best = word;
            best_dist = dist;
            best_freq = freq;
            found = true;
        }
    }
    return found ? best : token;
}

FrequencyDictionary dict_of(std::map<std::string, std::size_t> counts) {
    FrequencyDictionary dict;
    dict.counts.insert(counts.begin(), counts.end());
    return dict;
}

std::string mutate_word(const std::string& word, Rng& rng, int edits) {
    std::vector<char32_t> cps = utf8_decode(word);
    for (int e = 0; e < edits; ++e) {
        const auto op = rng.uniform_u64(4);
        if (op == 0 && !cps.empty()) {
            cps.erase(cps.begin() +
                      static_cast<std::ptrdiff_t>(rng.uniform_u64(cps.size())));
        } else if (op == 1 && cps.size() >= 2) {
            const std::size_t i = rng.uniform_u64(cps.size() - 1);
            std::swap(cps[i], cps[i + 1]);
        } else if (op == 2) {
            cps.insert(cps.begin() +
                           static_cast<std::ptrdiff_t>(rng.uniform_u64(cps.size() + 1)),
                       static_cast<char32_t>('a' + rng.uniform_u64(6)));
        } else if (!cps.empty()) {
            cps[rng.uniform_u64(cps.size())] =
                static_cast<char32_t>('a' + rng.uniform_u64(6));
        }
    }
    return utf8_encode(cps);
}

}  // namespace

TEST_CASE("edit distance handles the textbook cases") {
    CHECK(damerau_distance("", "") == 0);
    CHECK(damerau_distance("hate", "hate") == 0);
    CHECK(damerau_distance("hate", "htae") == 1);
    CHECK(damerau_distance("abc", "") == 3);
    CHECK(damerau_distance("", "abc") == 3);
    CHECK(damerau_distance("kitten", "sitting") == 3);
    CHECK(damerau_distance("héllo", "hello") == 1);
    // A transposition may be followed by insertions between the swapped
    // characters; the restricted variant would report 3 here.
    CHECK(damerau_distance("ca", "abc") == 2);
    CHECK(damerau_distance("abc", "ca") == 2);
}

TEST_CASE("edit distance agrees with breadth-first search on small strings") {
    const auto shorts = all_strings("abc", 3);
    REQUIRE(shorts.size() == 40);
    for (const auto& a : shorts) {
        for (const auto& b : shorts) {
            const std::size_t got = damerau_distance(a, b);
            CHECK(got == damerau_distance(b, a));
            const std::size_t oracle = oracles::bfs_edit_distance(a, b, 3);
            if (oracle == oracles::kUnreachable)
                CHECK(got > 3);
            else
                CHECK(got == oracle);
        }
    }

    Rng rng(515);
    for (int trial = 0; trial < 120; ++trial) {
        std::string a, b;
        const std::size_t la = rng.uniform_u64(6), lb = rng.uniform_u64(6);
        for (std::size_t i = 0; i < la; ++i)
            a += static_cast<char>('a' + rng.uniform_u64(3));
        for (std::size_t i = 0; i < lb; ++i)
            b += static_cast<char>('a' + rng.uniform_u64(3));
        const std::size_t got = damerau_distance(a, b);
        const std::size_t oracle = oracles::bfs_edit_distance(a, b, 3);
        CAPTURE(a);
        CAPTURE(b);
        if (oracle == oracles::kUnreachable)
            CHECK(got > 3);
        else
            CHECK(got == oracle);
    }
}

TEST_CASE("build_dictionary counts normalized tokens") {
    const LabeledCorpus corpus = testutil::corpus_of({{"a a b", "hate"}});
    const FrequencyDictionary dict = build_dictionary(corpus);
    REQUIRE(dict.counts.size() == 2);
    CHECK(dict.counts.at("a") == 2);
    CHECK(dict.counts.at("b") == 1);
    CHECK(dict.contains("a"));
    CHECK_FALSE(dict.contains("c"));

    LabeledCorpus empty;
    empty.scheme = corpus.scheme;
    CHECK_THROWS_AS(build_dictionary(empty), std::invalid_argument);
}

TEST_CASE("dictionary counts add across corpus parts") {
    const LabeledCorpus part_a = testutil::corpus_of(
        {{"red fox red", "hate"}, {"blue sky", "nonhate"}});
    const LabeledCorpus part_b = testutil::corpus_of(
        {{"red blue blue", "nonhate"}, {"green fox", "hate"}});
    LabeledCorpus both;
    both.scheme = part_a.scheme;
    both.docs = part_a.docs;
    both.docs.insert(both.docs.end(), part_b.docs.begin(), part_b.docs.end());

    const auto da = build_dictionary(part_a).counts;
    const auto db = build_dictionary(part_b).counts;
    auto merged = da;
    for (const auto& [word, count] : db) merged[word] += count;
    CHECK(build_dictionary(both).counts == merged);
}

TEST_CASE("dictionary serialization round-trips") {
    const FrequencyDictionary dict = dict_of({{"hate", 7}, {"über", 2}});
    const FrequencyDictionary back = dictionary_from_json(dictionary_to_json(dict));
    CHECK(back.counts == dict.counts);

    const std::string path = "dict_roundtrip_tmp.json";
    save_dictionary(dict, path);
    CHECK(load_dictionary(path).counts == dict.counts);
    std::remove(path.c_str());

    CHECK_THROWS_AS(dictionary_from_json(nlohmann::json{{"format", "hsd-dict"},
                                                        {"version", 99},
                                                        {"counts", {{"a", 1}}}}),
                    std::runtime_error);
    CHECK_THROWS_AS(
        dictionary_from_json(nlohmann::json{
            {"format", "hsd-dict"}, {"version", 1}, {"counts", {{"a", 0}}}}),
        std::runtime_error);
    CHECK_THROWS_AS(dictionary_from_json(nlohmann::json::object()),
                    std::runtime_error);
}

TEST_CASE("spell correction fixes the canonical transposition") {
    const LabeledCorpus corpus = testutil::corpus_of(
        {{"i hate you so much", "hate"}, {"what a lovely day", "nonhate"}});
    const FrequencyDictionary dict = build_dictionary(corpus);
    REQUIRE(damerau_distance("htae", "hate") == 1);
    REQUIRE(oracles::bfs_edit_distance("htae", "hate", 2) == 1);
    CHECK(spell_correct("i htae you", dict) == "i hate you");
}

TEST_CASE("spell correction leaves in-dictionary and hopeless tokens alone") {
    const FrequencyDictionary dict = dict_of({{"hate", 3}, {"have", 9}});
    const SpellCorrector fix(dict);
    CHECK(fix.correct_token("hate") == "hate");  // in-dict beats the nearby word
    CHECK(fix.correct_token("zzzzzz") == "zzzzzz");
    CHECK(fix.correct("") == "");
}

TEST_CASE("spell correction prefers smaller distance, then frequency, then order") {
    const SpellCorrector by_dist(dict_of({{"ab", 1}, {"abcde", 99}}));
    CHECK(by_dist.correct_token("abc") == "ab");  // distance 1 beats distance 2

    const SpellCorrector by_freq(dict_of({{"cat", 5}, {"car", 2}}));
    CHECK(by_freq.correct_token("caz") == "cat");

    const SpellCorrector by_name(dict_of({{"cat", 3}, {"car", 3}}));
    CHECK(by_name.correct_token("caz") == "car");
}

TEST_CASE("spell correction respects max_dist") {
    const FrequencyDictionary dict = dict_of({{"ab", 5}});
    CHECK(SpellCorrector(dict, 1).correct_token("abxy") == "abxy");
    CHECK(SpellCorrector(dict, 2).correct_token("abxy") == "ab");
    CHECK_THROWS_AS(SpellCorrector(dict, 0), std::invalid_argument);
    CHECK_THROWS_AS(SpellCorrector(dict_of({{"a", 0}})), std::invalid_argument);
}

TEST_CASE("indexed correction matches a full dictionary scan") {
    FrequencyDictionary dict;
    const std::vector<std::string> base = {
        "hate", "have", "love", "dove", "cave",  "cove", "stupid", "stud",
        "idiot", "india", "abide", "abcde", "ab", "a",   "bad",    "bade",
        "fool", "food",  "flood", "blood"};
    Rng freq_rng(99);
    for (const auto& w : base) dict.counts[w] = 1 + freq_rng.uniform_u64(9);

    const SpellCorrector fix(dict, 2);
    Rng rng(424242);
    for (int trial = 0; trial < 300; ++trial) {
        std::string token;
        if (rng.uniform_u64(2) == 0) {
            token = mutate_word(base[rng.uniform_u64(base.size())], rng,
                                static_cast<int>(rng.uniform_u64(4)));
        } else {
            const std::size_t len = 1 + rng.uniform_u64(7);
            for (std::size_t i = 0; i < len; ++i)
                token += static_cast<char>('a' + rng.uniform_u64(8));
        }
        if (token.empty()) continue;
        CAPTURE(token);
        CHECK(fix.correct_token(token) == brute_force_correct(token, dict, 2));
    }
}

TEST_CASE("spell correction preserves token count and is idempotent") {
    const LabeledCorpus corpus = testutil::corpus_of(
        {{"the quick brown fox jumps over the lazy dog", "nonhate"},
         {"pack my box with five dozen liquor jugs", "nonhate"},
         {"hate speech stays unacceptable everywhere", "hate"}});
    const FrequencyDictionary dict = build_dictionary(corpus);
    const SpellCorrector fix(dict);

    Rng rng(7171);
    for (int trial = 0; trial < 60; ++trial) {
        TokenSeq tokens;
        const std::size_t n = 1 + rng.uniform_u64(6);
        for (std::size_t i = 0; i < n; ++i) {
            auto it = dict.counts.begin();
            std::advance(it, static_cast<std::ptrdiff_t>(
                                 rng.uniform_u64(dict.counts.size())));
            std::string t = mutate_word(it->first, rng,
                                        static_cast<int>(rng.uniform_u64(3)));
            if (t.empty()) t = "x";
            tokens.push_back(t);
        }
        const std::string text = join_tokens(tokens);
        const std::string fixed = fix.correct(text);
        CHECK(tokenize(fixed).size() == tokens.size());
        CHECK(fix.correct(fixed) == fixed);
    }
}

TEST_CASE("one-shot correction equals the reusable corrector") {
    const FrequencyDictionary dict = dict_of({{"hate", 2}, {"love", 5}});
    const SpellCorrector fix(dict, 2);
    for (const std::string text : {"htae", "lvoe tham", "zz qq", "love"})
        CHECK(spell_correct(text, dict, 2) == fix.correct(text));
}

TEST_CASE("adversarial augmentation doubles the corpus") {
    LabeledCorpus train;
    train.scheme = make_scheme({"hate", "nonhate"}, "hate");
    for (int i = 0; i < 40; ++i)
        train.docs.push_back(
            make_document("loathsome vermin number " + std::to_string(i), "hate"));
    for (int i = 0; i < 60; ++i)
        train.docs.push_back(
            make_document("pleasant garden number " + std::to_string(i), "nonhate"));

    AttackSpec leet;
    leet.kind = AttackKind::kLeet;
    const LabeledCorpus augmented = adversarial_augment(train, leet, 11);

    REQUIRE(augmented.docs.size() == 200);
    const auto counts = augmented.label_counts();
    CHECK(counts.at("hate") == 80);
    CHECK(counts.at("nonhate") == 120);
    for (std::size_t i = 0; i < 100; ++i) {
        CHECK(augmented.docs[i].raw_text == train.docs[i].raw_text);
        CHECK(augmented.docs[i].norm_text == train.docs[i].norm_text);
        CHECK(augmented.docs[i].label == train.docs[i].label);

        const Document& twin = augmented.docs[100 + i];
        CHECK(twin.label == train.docs[i].label);
        CHECK(twin.raw_text == attack_leet(train.docs[i].norm_text));
        CHECK(twin.norm_text == normalize(twin.raw_text));
    }
}

TEST_CASE("adversarial augmentation attacks every label") {
    const LabeledCorpus train = testutil::corpus_of(
        {{"some spaced hate text", "hate"}, {"some spaced calm text", "nonhate"}});
    AttackSpec remove;
    remove.kind = AttackKind::kSpaceRemove;
    const LabeledCorpus augmented = adversarial_augment(train, remove, 0);
    REQUIRE(augmented.docs.size() == 4);
    CHECK(augmented.docs[2].norm_text.find(' ') == std::string::npos);
    CHECK(augmented.docs[3].norm_text.find(' ') == std::string::npos);
}

TEST_CASE("adversarial augmentation is seed-deterministic") {
    LabeledCorpus train;
    train.scheme = make_scheme({"hate", "nonhate"}, "hate");
    for (int i = 0; i < 10; ++i)
        train.docs.push_back(make_document("identical wording everywhere", "hate"));

    AttackSpec typo;
    typo.kind = AttackKind::kTypo;
    const LabeledCorpus a = adversarial_augment(train, typo, 3);
    const LabeledCorpus b = adversarial_augment(train, typo, 3);
    REQUIRE(a.docs.size() == b.docs.size());
    for (std::size_t i = 0; i < a.docs.size(); ++i)
        CHECK(a.docs[i].raw_text == b.docs[i].raw_text);

    const LabeledCorpus c = adversarial_augment(train, typo, 4);
    bool differs = false;
    for (std::size_t i = 0; i < a.docs.size(); ++i)
        if (c.docs[i].raw_text != a.docs[i].raw_text) differs = true;
    CHECK(differs);
}

TEST_CASE("strip_spaces is the whitespace deletion transform") {
    CHECK(strip_spaces("a b") == "ab");
    CHECK(strip_spaces("i hate you") == "ihateyou");
    for (const auto& c : testutil::load_golden_transforms())
        CHECK(strip_spaces(c.input) == c.space_remove);
}

TEST_CASE("strip_spaces neutralizes whitespace attacks exactly") {
    const StopwordList& sw = StopwordList::embedded();
    Rng rng(606);
    for (int trial = 0; trial < 60; ++trial) {
        std::string text;
        const std::size_t n = 1 + rng.uniform_u64(6);
        for (std::size_t i = 0; i < n; ++i) {
            if (i) text += ' ';
            const std::size_t len = 1 + rng.uniform_u64(8);
            for (std::size_t k = 0; k < len; ++k)
                text += static_cast<char>('a' + rng.uniform_u64(26));
        }
        CHECK(strip_spaces(attack_space_remove(text)) == strip_spaces(text));
        CHECK(strip_spaces(attack_space_insert(text, trial, sw)) ==
              strip_spaces(text));
    }
}

TEST_CASE("mitigation kinds and specs describe themselves") {
    for (MitigationKind kind :
         {MitigationKind::kAdversarialTraining, MitigationKind::kSpellCheck,
          MitigationKind::kStripSpaces})
        CHECK(mitigation_kind_from_string(to_string(kind)) == kind);
    CHECK_THROWS_AS(mitigation_kind_from_string("prayer"), std::invalid_argument);

    MitigationSpec spell;
    spell.kind = MitigationKind::kSpellCheck;
    spell.max_dist = 1;
    CHECK(spell.to_json().at("max_dist") == 1);

    MitigationSpec at;
    at.kind = MitigationKind::kAdversarialTraining;
    AttackSpec leet;
    leet.kind = AttackKind::kLeet;
    at.attack = leet;
    CHECK(at.to_json().at("attack").at("kind") == "leet");
}
