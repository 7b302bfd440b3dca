#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hsd/attacks.hpp"

#include "json.hpp"

namespace hsd {

// Remote scoring endpoint. The body template must contain {{TEXT}}, replaced
// per request by the JSON-escaped input text. "{{TOKEN}}" inside the url or a
// header value expands to the value of the environment variable named by
// token_env; the token itself never appears in config files or in to_json().
struct ScorerEndpoint {
    std::string url;
    std::string method = "POST";
    std::string body_template = R"({"text": "{{TEXT}}"})";
    std::string score_path = "/score";  // JSON pointer into the response
    std::map<std::string, std::string> headers;
    std::string token_env;
    double timeout_s = 10.0;
    double rate_limit_rps = 1.0;
    double backoff_s = 0.25;  // base of the exponential retry backoff

    nlohmann::json to_json() const;
};

ScorerEndpoint endpoint_from_json(const nlohmann::json& j);
ScorerEndpoint load_endpoint(const std::string& path);

struct HttpResponse {
    int status = 0;
    std::string body;
    std::string error;  // transport-level failure when nonempty (retryable)
};

// Sends one rendered request body to the endpoint. Implementations report
// retryable I/O failures through HttpResponse::error and throw for permanent
// problems (malformed url, unsupported scheme).
using Transport =
    std::function<HttpResponse(const ScorerEndpoint&, const std::string& body)>;

Transport http_transport();

// Analytic reference scorer used by tests and local stub servers:
// 0.0 when the text contains "love", else 0.9 when it contains a space,
// else 0.5.
double stub_score(const std::string& text);

// In-process transport wrapping stub_score. Reads the text at text_path from
// the request body and replies {"score": s}; request_count, when given, is
// incremented once per call.
Transport stub_transport(std::string text_path = "/text",
                         std::size_t* request_count = nullptr);

// Injectable time source so rate limiting and backoff are testable without
// wall-clock waits. now() is monotonic seconds.
struct ProbeClock {
    std::function<double()> now;
    std::function<void(double)> sleep_for;
};

ProbeClock steady_probe_clock();

inline constexpr int kMaxScoreRetries = 3;

// Rate-limited scoring client. score() issues one HTTP request and retries
// transient failures (transport errors, HTTP 429 and 5xx) at most
// kMaxScoreRetries times with exponential backoff; requests, retries
// included, never exceed the endpoint rate limit.
class Scorer {
public:
    explicit Scorer(ScorerEndpoint endpoint);
    Scorer(ScorerEndpoint endpoint, Transport transport, ProbeClock clock);

    // Returns the extracted score in [0,1]. Throws std::runtime_error on
    // exhausted retries, a non-retryable HTTP status, an unparseable
    // response, or an out-of-range score.
    double score(const std::string& text);

    std::size_t requests_sent() const { return requests_sent_; }
    const ScorerEndpoint& endpoint() const { return endpoint_; }

private:
    void pace();
    double extract_score(const std::string& body) const;

    ScorerEndpoint endpoint_;
    ScorerEndpoint resolved_;  // endpoint with {{TOKEN}} substituted
    Transport transport_;
    ProbeClock clock_;
    double min_interval_s_ = 0.0;
    std::optional<double> next_slot_;
    std::size_t requests_sent_ = 0;
};

struct ProbeResult {
    std::size_t index = 0;
    std::string original_text;
    std::string attacked_text;
    std::string attack_id;
    double original_score = 0.0;
    double attacked_score = 0.0;
    bool below_threshold = false;
    bool ok = false;
    std::string error;  // set when this text could not be scored

    nlohmann::json to_json() const;
};

struct ProbeSummary {
    std::vector<ProbeResult> results;
    std::string attack_id;
    double threshold = 0.0;
    double fraction_below = 0.0;  // over successfully scored texts
    std::size_t scored = 0;
    std::size_t requests_sent = 0;

    nlohmann::json to_json() const;
};

struct ProbeOptions {
    double threshold = 0.40;
    // Separator between the text and the appended "love" for the combined
    // attack; " " gives "... love", "" gives "...love".
    std::string love_separator = " ";
};

// Scores every text and its attacked variant (texts are attacked as given;
// pass nullopt for an identity probe). Identical attacked text reuses the
// original's score rather than spending a second request. Per-text scoring
// failures are recorded in the result without aborting the batch; the result
// list is index-ordered and always has one entry per input text.
ProbeSummary probe(Scorer& scorer, const std::vector<std::string>& texts,
                   const std::optional<AttackSpec>& attack,
                   const ProbeOptions& options = {});

}  // namespace hsd
