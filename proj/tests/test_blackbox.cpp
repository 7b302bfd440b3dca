#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "hsd/attacks.hpp"
#include "hsd/blackbox.hpp"

#include "httplib.h"

using namespace hsd;
using nlohmann::json;

namespace {

ScorerEndpoint make_endpoint(double rps = 1000.0) {
    ScorerEndpoint ep;
    ep.url = "http://example.test/score";
    ep.score_path = "/score";
    ep.rate_limit_rps = rps;
    ep.backoff_s = 0.25;
    return ep;
}

// Clock that never touches the wall clock: sleeping advances fake time.
struct FakeTime {
    double t = 0.0;
    std::vector<double> sleeps;

    ProbeClock clock() {
        return ProbeClock{[this] { return t; }, [this](double s) {
                              sleeps.push_back(s);
                              t += s;
                          }};
    }
};

Transport canned_transport(int status, std::string body) {
    return [status, body = std::move(body)](const ScorerEndpoint&,
                                            const std::string&) {
        return HttpResponse{status, body, ""};
    };
}

}  // namespace

TEST_CASE("stub scorer is the documented step function") {
    CHECK(stub_score("i love you") == 0.0);
    CHECK(stub_score("lovely") == 0.0);
    CHECK(stub_score("ihateyou love") == 0.0);
    CHECK(stub_score("i hate you") == 0.9);
    CHECK(stub_score("ihateyou") == 0.5);
    CHECK(stub_score("") == 0.5);
}

TEST_CASE("endpoint config parses with defaults") {
    const ScorerEndpoint ep =
        endpoint_from_json(json{{"url", "http://h/score"}});
    CHECK(ep.url == "http://h/score");
    CHECK(ep.method == "POST");
    CHECK(ep.body_template == R"({"text": "{{TEXT}}"})");
    CHECK(ep.score_path == "/score");
    CHECK(ep.timeout_s == 10.0);
    CHECK(ep.rate_limit_rps == 1.0);
    CHECK(ep.backoff_s == 0.25);

    const ScorerEndpoint back = endpoint_from_json(ep.to_json());
    CHECK(back.url == ep.url);
    CHECK(back.body_template == ep.body_template);
    CHECK(back.rate_limit_rps == ep.rate_limit_rps);
}

TEST_CASE("endpoint config rejects bad fields") {
    CHECK_THROWS_WITH_AS(endpoint_from_json(json::object()),
                         "endpoint config: missing 'url'", std::invalid_argument);
    CHECK_THROWS_WITH_AS(
        endpoint_from_json(json{{"url", "http://h"}, {"verb", "POST"}}),
        "endpoint config: unknown field 'verb'", std::invalid_argument);
    CHECK_THROWS_AS(
        endpoint_from_json(json{{"url", "http://h"}, {"method", "GET"}}),
        std::invalid_argument);
    CHECK_THROWS_AS(endpoint_from_json(
                        json{{"url", "http://h"}, {"body_template", "{}"}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(endpoint_from_json(
                        json{{"url", "http://h"}, {"score_path", "score"}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        endpoint_from_json(json{{"url", "http://h"}, {"timeout_s", 0.0}}),
        std::invalid_argument);
    CHECK_THROWS_AS(
        endpoint_from_json(json{{"url", "http://h"}, {"rate_limit_rps", 0.0}}),
        std::invalid_argument);
    CHECK_THROWS_AS(
        endpoint_from_json(json{{"url", "http://h"}, {"backoff_s", -1.0}}),
        std::invalid_argument);
}

TEST_CASE("scorer construction validates its pieces") {
    FakeTime ft;
    ScorerEndpoint bad = make_endpoint();
    bad.url = "";
    CHECK_THROWS_AS(Scorer(bad, stub_transport(), ft.clock()),
                    std::invalid_argument);
    CHECK_THROWS_AS(Scorer(make_endpoint(), Transport{}, ft.clock()),
                    std::invalid_argument);
    CHECK_THROWS_AS(Scorer(make_endpoint(), stub_transport(), ProbeClock{}),
                    std::invalid_argument);
}

TEST_CASE("scorer extracts stub scores through the body template") {
    FakeTime ft;
    Scorer scorer(make_endpoint(), stub_transport(), ft.clock());
    CHECK(scorer.score("i love you") == 0.0);
    CHECK(scorer.score("i hate you") == 0.9);
    CHECK(scorer.score("ihateyou") == 0.5);
    // The template substitution JSON-escapes the text.
    CHECK(scorer.score("he said \"love\"\nloudly") == 0.0);
    CHECK(scorer.requests_sent() == 4);
}

TEST_CASE("scorer rejects malformed and out-of-range responses") {
    FakeTime ft;
    const auto throws_with = [&](const std::string& body,
                                 const std::string& needle) {
        Scorer scorer(make_endpoint(), canned_transport(200, body), ft.clock());
        CHECK_THROWS_WITH_AS(scorer.score("x"), doctest::Contains(needle),
                             std::runtime_error);
    };
    throws_with("not json", "unparseable");
    throws_with("{}", "not found");
    throws_with(R"({"score": "high"})", "not a number");
    throws_with(R"({"score": 1.7})", "out of [0,1]");
    throws_with(R"({"score": -0.1})", "out of [0,1]");
}

TEST_CASE("transient failures are retried with exponential backoff") {
    FakeTime ft;
    int failures_left = 2;
    Transport flaky = [&](const ScorerEndpoint& ep, const std::string& body) {
        if (failures_left-- > 0) return HttpResponse{0, "", "connection reset"};
        return stub_transport()(ep, body);
    };
    Scorer scorer(make_endpoint(), flaky, ft.clock());
    CHECK(scorer.score("i hate you") == 0.9);
    CHECK(scorer.requests_sent() == 3);
    // Backoff doubles from the configured base before each retry.
    REQUIRE(ft.sleeps.size() >= 2);
    CHECK(ft.sleeps[0] == 0.25);
    CHECK(ft.sleeps[1] == 0.5);
}

TEST_CASE("server errors are retried, client errors are not") {
    FakeTime ft;
    int failures_left = 1;
    Transport recovering = [&](const ScorerEndpoint& ep, const std::string& body) {
        if (failures_left-- > 0) return HttpResponse{503, "oops", ""};
        return stub_transport()(ep, body);
    };
    Scorer ok_after_503(make_endpoint(), recovering, ft.clock());
    CHECK(ok_after_503.score("ihateyou") == 0.5);
    CHECK(ok_after_503.requests_sent() == 2);

    Scorer hard_404(make_endpoint(), canned_transport(404, ""), ft.clock());
    CHECK_THROWS_WITH_AS(hard_404.score("x"), "scorer returned HTTP 404",
                         std::runtime_error);
    CHECK(hard_404.requests_sent() == 1);
}

TEST_CASE("retries stop after four attempts") {
    FakeTime ft;
    Transport broken = [](const ScorerEndpoint&, const std::string&) {
        return HttpResponse{0, "", "boom"};
    };
    Scorer scorer(make_endpoint(), broken, ft.clock());
    CHECK_THROWS_WITH_AS(scorer.score("x"),
                         doctest::Contains("failed after 4 attempts"),
                         std::runtime_error);
    CHECK(scorer.requests_sent() == 4);
}

TEST_CASE("requests never exceed the configured rate") {
    FakeTime ft;
    std::vector<double> request_times;
    Transport timed = [&](const ScorerEndpoint& ep, const std::string& body) {
        request_times.push_back(ft.t);
        return stub_transport()(ep, body);
    };
    Scorer scorer(make_endpoint(10.0), timed, ft.clock());
    for (int i = 0; i < 25; ++i) scorer.score("text number " + std::to_string(i));

    REQUIRE(request_times.size() == 25);
    const double min_interval = 1.0 / 10.0;
    for (std::size_t i = 1; i < request_times.size(); ++i)
        CHECK(request_times[i] - request_times[i - 1] >= min_interval - 1e-9);
    // Equivalent window statement: at most rps+1 requests in any one second.
    for (std::size_t i = 0; i < request_times.size(); ++i) {
        std::size_t in_window = 0;
        for (double t : request_times)
            if (t >= request_times[i] && t < request_times[i] + 1.0) ++in_window;
        CHECK(in_window <= 11);
    }
}

TEST_CASE("secrets stay in the environment") {
    FakeTime ft;
    ScorerEndpoint ep = make_endpoint();
    ep.url = "http://h/score?key={{TOKEN}}";
    CHECK_THROWS_WITH_AS(Scorer(ep, stub_transport(), ft.clock()),
                         doctest::Contains("token_env is not configured"),
                         std::runtime_error);

    ep.token_env = "HSD_TEST_TOKEN_UNSET";
    unsetenv("HSD_TEST_TOKEN_UNSET");
    CHECK_THROWS_WITH_AS(Scorer(ep, stub_transport(), ft.clock()),
                         doctest::Contains("is not set"), std::runtime_error);

    setenv("HSD_TEST_TOKEN_SET", "s3cret", 1);
    ep.token_env = "HSD_TEST_TOKEN_SET";
    std::string seen_url;
    Transport spy = [&](const ScorerEndpoint& e, const std::string& body) {
        seen_url = e.url;
        return stub_transport()(e, body);
    };
    Scorer scorer(ep, spy, ft.clock());
    CHECK(scorer.score("ihateyou") == 0.5);
    CHECK(seen_url == "http://h/score?key=s3cret");
    // The serialized config keeps the placeholder, never the value.
    const std::string dumped = scorer.endpoint().to_json().dump();
    CHECK(dumped.find("{{TOKEN}}") != std::string::npos);
    CHECK(dumped.find("s3cret") == std::string::npos);
    unsetenv("HSD_TEST_TOKEN_SET");
}

TEST_CASE("identity probes reuse the original score") {
    FakeTime ft;
    Scorer scorer(make_endpoint(), stub_transport(), ft.clock());
    const std::vector<std::string> texts = {"i hate you", "ihateyou", "calm words"};
    const ProbeSummary summary = probe(scorer, texts, std::nullopt);

    CHECK(summary.attack_id == "none");
    CHECK(summary.scored == 3);
    CHECK(summary.requests_sent == 3);  // one request per text, none repeated
    REQUIRE(summary.results.size() == 3);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        const ProbeResult& r = summary.results[i];
        CHECK(r.index == i);
        CHECK(r.ok);
        CHECK(r.original_text == texts[i]);
        CHECK(r.attacked_text == texts[i]);
        CHECK(r.attacked_score == r.original_score);
    }
    CHECK(summary.fraction_below == 0.0);  // stub scores 0.9/0.5 stay above 0.40
}

TEST_CASE("probe rejects an empty batch") {
    FakeTime ft;
    Scorer scorer(make_endpoint(), stub_transport(), ft.clock());
    CHECK_THROWS_AS(probe(scorer, {}, std::nullopt), std::invalid_argument);
}

TEST_CASE("the combined attack drives every stub score to zero") {
    FakeTime ft;
    Scorer scorer(make_endpoint(), stub_transport(), ft.clock());
    const std::vector<std::string> texts = {"i hate you", "you are stupid",
                                            "utter vermin filth"};
    AttackSpec love;
    love.kind = AttackKind::kLove;
    const ProbeSummary summary = probe(scorer, texts, love);

    CHECK(summary.attack_id == "love");
    CHECK(summary.scored == 3);
    CHECK(summary.requests_sent == 6);
    CHECK(summary.fraction_below == 1.0);
    for (const auto& r : summary.results) {
        CHECK(r.ok);
        CHECK(r.original_score == 0.9);
        CHECK(r.attacked_score == 0.0);
        CHECK(r.below_threshold);
    }
    CHECK(summary.results[0].attacked_text == "ihateyou love");

    ProbeOptions glued;
    glued.love_separator = "";
    const ProbeSummary tight = probe(scorer, {"i hate you"}, love, glued);
    CHECK(tight.results[0].attacked_text == "ihateyoulove");
    CHECK(tight.results[0].attacked_score == 0.0);
}

TEST_CASE("append probes keep the original as a strict prefix") {
    FakeTime ft;
    Scorer scorer(make_endpoint(), stub_transport(), ft.clock());
    AttackSpec append;
    append.kind = AttackKind::kAppendCommon;
    append.append_lo = 2;
    append.append_hi = 4;
    append.wordlist.words = {"love", "time", "good"};
    append.seed = 9;

    const std::vector<std::string> texts = {"i hate you", "dreadful nonsense"};
    const ProbeSummary a = probe(scorer, texts, append);
    const ProbeSummary b = probe(scorer, texts, append);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        CHECK(a.results[i].attacked_text.rfind(texts[i] + " ", 0) == 0);
        CHECK(a.results[i].attacked_text.size() > texts[i].size());
        // Per-text seeds derive from the spec seed and the index.
        CHECK(a.results[i].attacked_text == b.results[i].attacked_text);
    }
}

TEST_CASE("per-text scoring failures do not abort the batch") {
    FakeTime ft;
    Transport poisoned = [](const ScorerEndpoint& ep, const std::string& body) {
        if (body.find("poison") != std::string::npos)
            return HttpResponse{404, "", ""};
        return stub_transport()(ep, body);
    };
    Scorer scorer(make_endpoint(), poisoned, ft.clock());
    const std::vector<std::string> texts = {"fine text", "poison pill", "ihateyou"};
    const ProbeSummary summary = probe(scorer, texts, std::nullopt);

    REQUIRE(summary.results.size() == 3);
    CHECK(summary.results[0].ok);
    CHECK_FALSE(summary.results[1].ok);
    CHECK(summary.results[1].error.find("404") != std::string::npos);
    CHECK(summary.results[2].ok);
    CHECK(summary.scored == 2);
    // Fractions are over the texts that scored.
    CHECK(summary.fraction_below == 0.0);

    const json j = summary.to_json();
    CHECK(j.at("results").size() == 3);
    CHECK(j.at("results")[1].contains("error"));
    CHECK_FALSE(j.at("results")[0].contains("error"));
}

TEST_CASE("threshold comparison is strict") {
    FakeTime ft;
    Scorer scorer(make_endpoint(), stub_transport(), ft.clock());
    ProbeOptions at_half;
    at_half.threshold = 0.5;  // stub scores "ihateyou" exactly 0.5
    const ProbeSummary equal = probe(scorer, {"ihateyou"}, std::nullopt, at_half);
    CHECK_FALSE(equal.results[0].below_threshold);

    at_half.threshold = 0.51;
    const ProbeSummary above = probe(scorer, {"ihateyou"}, std::nullopt, at_half);
    CHECK(above.results[0].below_threshold);
}

TEST_CASE("the scorer talks to a live loopback server") {
    httplib::Server server;
    server.Post("/score", [](const httplib::Request& req, httplib::Response& res) {
        const json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.contains("text")) {
            res.status = 400;
            return;
        }
        res.set_content(
            json{{"score", stub_score(body.at("text").get<std::string>())}}.dump(),
            "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread server_thread([&server] { server.listen_after_bind(); });
    server.wait_until_ready();

    ScorerEndpoint ep = make_endpoint();
    ep.url = "http://127.0.0.1:" + std::to_string(port) + "/score";
    ep.timeout_s = 5.0;
    Scorer scorer(ep);  // real transport, real clock
    CHECK(scorer.score("i love you") == 0.0);
    CHECK(scorer.score("i hate you") == 0.9);
    CHECK(scorer.score("ihateyou") == 0.5);

    server.stop();
    server_thread.join();
}
