#include "hsd/blackbox.hpp"

#include <chrono>
#include <cstdlib>
#include <set>
#include <stdexcept>
#include <thread>
#include <utility>

#include "hsd/rng.hpp"
#include "hsd/textproc.hpp"

#include "httplib.h"

namespace hsd {

namespace {

using nlohmann::json;

[[noreturn]] void endpoint_error(const std::string& msg) {
    throw std::invalid_argument("endpoint config: " + msg);
}

std::string replace_all(std::string text, const std::string& from,
                        const std::string& to) {
    std::size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
    return text;
}

// JSON string escaping without the surrounding quotes, for template
// substitution inside an already-quoted field.
std::string json_escape(const std::string& text) {
    const std::string dumped = json(text).dump();
    return dumped.substr(1, dumped.size() - 2);
}

void validate_endpoint(const ScorerEndpoint& ep) {
    if (ep.url.empty()) endpoint_error("url must be nonempty");
    if (ep.method != "POST")
        endpoint_error("unsupported method '" + ep.method + "' (only POST)");
    if (ep.body_template.find("{{TEXT}}") == std::string::npos)
        endpoint_error("body_template must contain {{TEXT}}");
    try {
        json::json_pointer ptr(ep.score_path);
    } catch (const json::exception&) {
        endpoint_error("score_path '" + ep.score_path +
                       "' is not a valid JSON pointer");
    }
    if (!(ep.timeout_s > 0.0)) endpoint_error("timeout_s must be positive");
    if (!(ep.rate_limit_rps > 0.0))
        endpoint_error("rate_limit_rps must be positive");
    if (!(ep.backoff_s >= 0.0)) endpoint_error("backoff_s must be >= 0");
}

bool uses_token(const ScorerEndpoint& ep) {
    if (ep.url.find("{{TOKEN}}") != std::string::npos) return true;
    for (const auto& [name, value] : ep.headers)
        if (value.find("{{TOKEN}}") != std::string::npos) return true;
    return false;
}

ScorerEndpoint resolve_tokens(const ScorerEndpoint& ep) {
    if (!uses_token(ep)) return ep;
    if (ep.token_env.empty())
        throw std::runtime_error(
            "endpoint uses {{TOKEN}} but token_env is not configured");
    const char* raw = std::getenv(ep.token_env.c_str());
    if (raw == nullptr || *raw == '\0')
        throw std::runtime_error("environment variable '" + ep.token_env +
                                 "' is not set");
    const std::string token(raw);
    ScorerEndpoint out = ep;
    out.url = replace_all(out.url, "{{TOKEN}}", token);
    for (auto& [name, value] : out.headers)
        value = replace_all(value, "{{TOKEN}}", token);
    return out;
}

}  // namespace

nlohmann::json ScorerEndpoint::to_json() const {
    json h = json::object();
    for (const auto& [name, value] : headers) h[name] = value;
    return json{{"url", url},
                {"method", method},
                {"body_template", body_template},
                {"score_path", score_path},
                {"headers", std::move(h)},
                {"token_env", token_env},
                {"timeout_s", timeout_s},
                {"rate_limit_rps", rate_limit_rps},
                {"backoff_s", backoff_s}};
}

ScorerEndpoint endpoint_from_json(const nlohmann::json& j) {
    static const std::set<std::string> known{
        "url",       "method",    "body_template",  "score_path", "headers",
        "token_env", "timeout_s", "rate_limit_rps", "backoff_s"};
    try {
        for (const auto& [key, value] : j.items())
            if (known.count(key) == 0)
                endpoint_error("unknown field '" + key + "'");
        ScorerEndpoint ep;
        const auto it = j.find("url");
        if (it == j.end()) endpoint_error("missing 'url'");
        ep.url = it->get<std::string>();
        if (j.contains("method")) ep.method = j.at("method").get<std::string>();
        if (j.contains("body_template"))
            ep.body_template = j.at("body_template").get<std::string>();
        if (j.contains("score_path"))
            ep.score_path = j.at("score_path").get<std::string>();
        if (j.contains("headers"))
            ep.headers = j.at("headers").get<std::map<std::string, std::string>>();
        if (j.contains("token_env"))
            ep.token_env = j.at("token_env").get<std::string>();
        if (j.contains("timeout_s")) ep.timeout_s = j.at("timeout_s").get<double>();
        if (j.contains("rate_limit_rps"))
            ep.rate_limit_rps = j.at("rate_limit_rps").get<double>();
        if (j.contains("backoff_s")) ep.backoff_s = j.at("backoff_s").get<double>();
        validate_endpoint(ep);
        return ep;
    } catch (const json::exception& e) {
        endpoint_error(e.what());
    }
}

ScorerEndpoint load_endpoint(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        endpoint_error(std::string(e.what()) + " in " + path);
    }
    return endpoint_from_json(j);
}

Transport http_transport() {
    return [](const ScorerEndpoint& ep, const std::string& body) -> HttpResponse {
        const auto scheme_end = ep.url.find("://");
        if (scheme_end == std::string::npos)
            throw std::runtime_error("malformed endpoint url: " + ep.url);
        const std::string scheme = ep.url.substr(0, scheme_end);
        if (scheme != "http" && scheme != "https")
            throw std::runtime_error("unsupported url scheme '" + scheme + "'");
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
        if (scheme == "https")
            throw std::runtime_error(
                "https endpoints require a TLS-enabled build");
#endif
        const auto path_pos = ep.url.find('/', scheme_end + 3);
        const std::string base =
            path_pos == std::string::npos ? ep.url : ep.url.substr(0, path_pos);
        const std::string path =
            path_pos == std::string::npos ? "/" : ep.url.substr(path_pos);

        httplib::Client client(base);
        const auto seconds = static_cast<time_t>(ep.timeout_s);
        const auto micros = static_cast<time_t>(
            (ep.timeout_s - static_cast<double>(seconds)) * 1e6);
        client.set_connection_timeout(seconds, micros);
        client.set_read_timeout(seconds, micros);
        client.set_write_timeout(seconds, micros);

        httplib::Headers headers(ep.headers.begin(), ep.headers.end());
        const httplib::Result res =
            client.Post(path, headers, body, "application/json");
        if (!res) return HttpResponse{0, "", httplib::to_string(res.error())};
        return HttpResponse{res->status, res->body, ""};
    };
}

double stub_score(const std::string& text) {
    if (text.find("love") != std::string::npos) return 0.0;
    return text.find(' ') != std::string::npos ? 0.9 : 0.5;
}

Transport stub_transport(std::string text_path, std::size_t* request_count) {
    return [text_path = std::move(text_path),
            request_count](const ScorerEndpoint&,
                           const std::string& body) -> HttpResponse {
        if (request_count != nullptr) ++*request_count;
        const json req = json::parse(body, nullptr, false);
        if (req.is_discarded()) return HttpResponse{400, "", ""};
        const json::json_pointer ptr(text_path);
        if (!req.contains(ptr) || !req.at(ptr).is_string())
            return HttpResponse{400, "", ""};
        const double s = stub_score(req.at(ptr).get<std::string>());
        return HttpResponse{200, json{{"score", s}}.dump(), ""};
    };
}

ProbeClock steady_probe_clock() {
    return ProbeClock{
        [] {
            return std::chrono::duration<double>(
                       std::chrono::steady_clock::now().time_since_epoch())
                .count();
        },
        [](double seconds) {
            if (seconds > 0.0)
                std::this_thread::sleep_for(
                    std::chrono::duration<double>(seconds));
        },
    };
}

Scorer::Scorer(ScorerEndpoint endpoint)
    : Scorer(std::move(endpoint), http_transport(), steady_probe_clock()) {}

Scorer::Scorer(ScorerEndpoint endpoint, Transport transport, ProbeClock clock)
    : endpoint_(std::move(endpoint)),
      transport_(std::move(transport)),
      clock_(std::move(clock)) {
    validate_endpoint(endpoint_);
    if (!transport_) throw std::invalid_argument("scorer needs a transport");
    if (!clock_.now || !clock_.sleep_for)
        throw std::invalid_argument("scorer needs a complete clock");
    resolved_ = resolve_tokens(endpoint_);
    min_interval_s_ = 1.0 / endpoint_.rate_limit_rps;
}

void Scorer::pace() {
    const double now = clock_.now();
    if (next_slot_ && now < *next_slot_) {
        clock_.sleep_for(*next_slot_ - now);
        next_slot_ = *next_slot_ + min_interval_s_;
    } else {
        next_slot_ = now + min_interval_s_;
    }
}

double Scorer::extract_score(const std::string& body) const {
    const json j = json::parse(body, nullptr, false);
    if (j.is_discarded())
        throw std::runtime_error("unparseable scorer response");
    const json::json_pointer ptr(endpoint_.score_path);
    if (!j.contains(ptr))
        throw std::runtime_error("score path '" + endpoint_.score_path +
                                 "' not found in scorer response");
    const json& value = j.at(ptr);
    if (!value.is_number())
        throw std::runtime_error("score path '" + endpoint_.score_path +
                                 "' is not a number");
    const double score = value.get<double>();
    if (!(score >= 0.0 && score <= 1.0))
        throw std::runtime_error("score " + std::to_string(score) +
                                 " out of [0,1]");
    return score;
}

double Scorer::score(const std::string& text) {
    const std::string body =
        replace_all(resolved_.body_template, "{{TEXT}}", json_escape(text));
    std::string last_error;
    for (int attempt = 0; attempt <= kMaxScoreRetries; ++attempt) {
        if (attempt > 0)
            clock_.sleep_for(endpoint_.backoff_s *
                             static_cast<double>(1 << (attempt - 1)));
        pace();
        const HttpResponse resp = transport_(resolved_, body);
        ++requests_sent_;
        if (!resp.error.empty()) {
            last_error = "transport error: " + resp.error;
            continue;
        }
        if (resp.status == 429 || resp.status >= 500) {
            last_error = "HTTP " + std::to_string(resp.status);
            continue;
        }
        if (resp.status < 200 || resp.status >= 300)
            throw std::runtime_error("scorer returned HTTP " +
                                     std::to_string(resp.status));
        return extract_score(resp.body);
    }
    throw std::runtime_error("scorer request failed after " +
                             std::to_string(kMaxScoreRetries + 1) +
                             " attempts: " + last_error);
}

nlohmann::json ProbeResult::to_json() const {
    json j{{"index", index},
           {"original_text", original_text},
           {"attacked_text", attacked_text},
           {"attack", attack_id},
           {"ok", ok}};
    if (ok) {
        j["original_score"] = original_score;
        j["attacked_score"] = attacked_score;
        j["below_threshold"] = below_threshold;
    } else {
        j["error"] = error;
    }
    return j;
}

nlohmann::json ProbeSummary::to_json() const {
    json items = json::array();
    for (const auto& r : results) items.push_back(r.to_json());
    return json{{"attack", attack_id},
                {"threshold", threshold},
                {"fraction_below", fraction_below},
                {"scored", scored},
                {"requests_sent", requests_sent},
                {"results", std::move(items)}};
}

ProbeSummary probe(Scorer& scorer, const std::vector<std::string>& texts,
                   const std::optional<AttackSpec>& attack,
                   const ProbeOptions& options) {
    if (texts.empty())
        throw std::invalid_argument("probe needs at least one text");

    ProbeSummary summary;
    summary.attack_id = attack ? to_string(attack->kind) : "none";
    summary.threshold = options.threshold;
    const StopwordList& stopwords = StopwordList::embedded();
    const std::size_t sent_before = scorer.requests_sent();

    std::size_t below = 0;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        ProbeResult r;
        r.index = i;
        r.original_text = texts[i];
        r.attack_id = summary.attack_id;
        r.attacked_text = texts[i];
        if (attack) {
            if (attack->kind == AttackKind::kLove)
                r.attacked_text = attack_space_remove(texts[i]) +
                                  options.love_separator + "love";
            else
                r.attacked_text = apply_transform(
                    texts[i], *attack, derive_seed(attack->seed, i), stopwords);
        }
        try {
            r.original_score = scorer.score(r.original_text);
            r.attacked_score = r.attacked_text == r.original_text
                                   ? r.original_score
                                   : scorer.score(r.attacked_text);
            r.below_threshold = r.attacked_score < options.threshold;
            r.ok = true;
            ++summary.scored;
            if (r.below_threshold) ++below;
        } catch (const std::exception& e) {
            r.error = e.what();
        }
        summary.results.push_back(std::move(r));
    }

    summary.fraction_below =
        summary.scored == 0
            ? 0.0
            : static_cast<double>(below) / static_cast<double>(summary.scored);
    summary.requests_sent = scorer.requests_sent() - sent_before;
    return summary;
}

}  // namespace hsd
