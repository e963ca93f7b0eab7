#include "bprobe/clients.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "bprobe/errors.hpp"
#include "bprobe/metrics.hpp"
#include "bprobe/rng.hpp"

namespace bprobe::clients {

using json = nlohmann::json;

std::chrono::milliseconds RealClock::now() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now().time_since_epoch());
}

void RealClock::sleep_for(std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
}

RateLimiter::RateLimiter(int per_minute, Clock& clock)
    : per_minute_(per_minute), clock_(clock) {
    if (per_minute_ <= 0) {
        throw_error(ErrorCode::ConfigInvalid, "rate limit must be positive");
    }
}

void RateLimiter::acquire() {
    const auto window = std::chrono::milliseconds(60'000);
    for (;;) {
        auto now = clock_.now();
        while (!timestamps_.empty() && now - timestamps_.front() >= window) {
            timestamps_.pop_front();
        }
        if (static_cast<int>(timestamps_.size()) < per_minute_) {
            timestamps_.push_back(now);
            return;
        }
        clock_.sleep_for(timestamps_.front() + window - now);
    }
}

std::string call_with_retries(const std::function<std::string()>& op,
                              const RetryPolicy& policy, Clock& clock) {
    auto backoff = policy.initial_backoff;
    std::string last_error;
    for (int attempt = 0; attempt < policy.attempts; ++attempt) {
        if (attempt > 0) {
            clock.sleep_for(backoff);
            backoff *= 2;
        }
        try {
            return op();
        } catch (const std::exception& e) {
            last_error = e.what();
        }
    }
    throw_error(ErrorCode::ClientFailure,
                "request failed after " + std::to_string(policy.attempts) +
                    " attempts: " + last_error);
}

MockChatClient::MockChatClient(std::vector<std::string> responses, bool strict)
    : responses_(std::move(responses)), strict_(strict) {}

std::string MockChatClient::complete(const std::vector<ChatMessage>& messages,
                                     const ChatParams&) {
    requests_.push_back(messages);
    if (responses_.empty()) {
        throw_error(ErrorCode::ClientFailure, "mock client has no responses");
    }
    std::size_t index = calls_++;
    if (index >= responses_.size()) {
        if (strict_) {
            throw_error(ErrorCode::ClientFailure,
                        "mock script exhausted at call " + std::to_string(index));
        }
        index = responses_.size() - 1;
    }
    return responses_[index];
}

std::string ReplayChatClient::fingerprint(const std::vector<ChatMessage>& messages) {
    json rows = json::array();
    for (const auto& m : messages) {
        rows.push_back({{"role", m.role}, {"content", m.content}});
    }
    return rows.dump();
}

ReplayChatClient::ReplayChatClient(std::map<std::string, std::string> transcript)
    : transcript_(std::move(transcript)) {}

ReplayChatClient ReplayChatClient::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw_error(ErrorCode::IoFailure, "cannot open transcript: " + path);
    }
    std::map<std::string, std::string> transcript;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json row = json::parse(line);
        transcript[row.at("request").get<std::string>()] =
            row.at("response").get<std::string>();
    }
    return ReplayChatClient(std::move(transcript));
}

void ReplayChatClient::record(const std::string& path,
                              const std::vector<ChatMessage>& messages,
                              const std::string& response) {
    std::ofstream out(path, std::ios::app);
    if (!out) {
        throw_error(ErrorCode::IoFailure, "cannot append transcript: " + path);
    }
    json row = {{"request", fingerprint(messages)}, {"response", response}};
    out << row.dump() << "\n";
}

std::string ReplayChatClient::complete(const std::vector<ChatMessage>& messages,
                                       const ChatParams&) {
    auto it = transcript_.find(fingerprint(messages));
    if (it == transcript_.end()) {
        std::string tail = messages.empty() ? "" : messages.back().content;
        throw_error(ErrorCode::ClientFailure,
                    "no recorded response for request ending: " +
                        tail.substr(0, 120));
    }
    return it->second;
}

RecordingChatClient::RecordingChatClient(ChatClient& inner, std::string transcript_path)
    : inner_(inner), path_(std::move(transcript_path)) {}

std::string RecordingChatClient::complete(const std::vector<ChatMessage>& messages,
                                          const ChatParams& params) {
    std::string response = inner_.complete(messages, params);
    ReplayChatClient::record(path_, messages, response);
    return response;
}

HttpChatClient::HttpChatClient(std::string base_url, std::string api_key,
                               RetryPolicy retry, Clock* clock,
                               int rate_limit_per_minute)
    : base_url_(std::move(base_url)),
      api_key_(std::move(api_key)),
      retry_(retry),
      owned_clock_(clock ? nullptr : std::make_unique<RealClock>()),
      clock_(clock ? clock : owned_clock_.get()),
      limiter_(rate_limit_per_minute, *clock_) {
    if (base_url_.empty()) {
        throw_error(ErrorCode::ConfigInvalid, "chat endpoint URL is empty");
    }
}

HttpChatClient HttpChatClient::from_env() {
    const char* url = std::getenv("BP_API_URL");
    const char* key = std::getenv("BP_API_KEY");
    if (url == nullptr || *url == '\0') {
        throw_error(ErrorCode::ConfigInvalid, "BP_API_URL is not set");
    }
    return HttpChatClient(url, key ? key : "");
}

std::string HttpChatClient::complete(const std::vector<ChatMessage>& messages,
                                     const ChatParams& params) {
    json body;
    body["model"] = params.model;
    body["temperature"] = params.temperature;
    body["messages"] = json::array();
    for (const auto& m : messages) {
        body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    }
    const std::string payload = body.dump();

    return call_with_retries(
        [&]() -> std::string {
            limiter_.acquire();
            httplib::Client http(base_url_);
            http.set_connection_timeout(30);
            http.set_read_timeout(120);
            httplib::Headers headers;
            if (!api_key_.empty()) {
                headers.emplace("Authorization", "Bearer " + api_key_);
            }
            auto res = http.Post("/v1/chat/completions", headers, payload,
                                 "application/json");
            if (!res) {
                throw std::runtime_error("transport error: " +
                                         httplib::to_string(res.error()));
            }
            if (res->status != 200) {
                throw std::runtime_error("status " + std::to_string(res->status) +
                                         ": " + res->body.substr(0, 200));
            }
            json reply = json::parse(res->body);
            const auto& choices = reply.at("choices");
            if (!choices.is_array() || choices.empty()) {
                throw std::runtime_error("response has no choices");
            }
            return choices[0].at("message").at("content").get<std::string>();
        },
        retry_, *clock_);
}

// --- prompt templates -----------------------------------------------------

namespace {

std::string replace_all(std::string text, const std::string& from,
                        const std::string& to) {
    std::size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
    return text;
}

}  // namespace

std::string PromptTemplate::fill(const std::string& answer,
                                 const std::string& question_requirements) const {
    std::string out = replace_all(body, "{ANSWER}", answer);
    return replace_all(out, "{QUESTION_REQUIREMENTS}", question_requirements);
}

std::uint64_t PromptTemplate::hash() const { return hash_string(0, body); }

const PromptTemplate& self_eval_template() {
    static const PromptTemplate tmpl{
        "self_eval",
        "Does {ANSWER} belong to {QUESTION_REQUIREMENTS}? I'll tip $100 for the "
        "factually correct answer. Think step by step and then give your answer."};
    return tmpl;
}

const PromptTemplate& rag_eval_template() {
    static const PromptTemplate tmpl{
        "rag_eval",
        "Search online for highly credible information related to the following "
        "question, and answer the question based on the search results. Does "
        "{ANSWER} belong to {QUESTION_REQUIREMENTS}? I'll tip $100 for the "
        "factually correct answer. Think step by step and then give your answer."};
    return tmpl;
}

// --- verdict parsing -------------------------------------------------------

const VerdictRules& VerdictRules::defaults() {
    static const VerdictRules rules{
        // negation
        {
            "no,",
            "no.",
            "no it",
            "does not belong",
            "doesn't belong",
            "is not a",
            "is not an",
            "is not part of",
            "is incorrect",
            "this is false",
            "the answer is no",
            "not a member of",
        },
        // affirmation
        {
            "yes,",
            "yes.",
            "yes it",
            "does belong",
            "belongs to",
            "is indeed",
            "is correct",
            "this is true",
            "the answer is yes",
            "is a member of",
            "is part of",
            "is one of",
        },
        // hedge
        {
            "cannot verify",
            "can't verify",
            "unable to verify",
            "not sure",
            "uncertain",
            "cannot confirm",
            "can't confirm",
            "hard to say",
            "no reliable information",
            "could not find",
            "couldn't find",
            "insufficient information",
        },
    };
    return rules;
}

VerdictRules VerdictRules::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw_error(ErrorCode::IoFailure, "cannot open verdict rules: " + path);
    }
    json doc = json::parse(in);
    VerdictRules rules;
    rules.negation = doc.at("negation").get<std::vector<std::string>>();
    rules.affirmation = doc.at("affirmation").get<std::vector<std::string>>();
    rules.hedge = doc.at("hedge").get<std::vector<std::string>>();
    return rules;
}

namespace {

std::string final_paragraph(const std::string& text) {
    // Last non-empty block delimited by blank lines.
    std::vector<std::string> blocks;
    std::string current;
    std::istringstream in(text);
    std::string line;
    auto is_blank = [](const std::string& s) {
        return std::all_of(s.begin(), s.end(),
                           [](unsigned char c) { return std::isspace(c); });
    };
    while (std::getline(in, line)) {
        if (is_blank(line)) {
            if (!current.empty()) blocks.push_back(current);
            current.clear();
        } else {
            if (!current.empty()) current += "\n";
            current += line;
        }
    }
    if (!current.empty()) blocks.push_back(current);
    return blocks.empty() ? text : blocks.back();
}

std::string to_lower_copy(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool matches_any(const std::string& haystack,
                 const std::vector<std::string>& phrases) {
    return std::any_of(phrases.begin(), phrases.end(),
                       [&](const std::string& p) {
                           return haystack.find(to_lower_copy(p)) != std::string::npos;
                       });
}

}  // namespace

ParsedVerdict parse_verdict(const std::string& text, const VerdictRules& rules) {
    const std::string target = to_lower_copy(final_paragraph(text));
    if (matches_any(target, rules.negation)) {
        return {verification::Verdict::Incorrect, false};
    }
    if (matches_any(target, rules.affirmation)) {
        return {verification::Verdict::Correct, false};
    }
    if (matches_any(target, rules.hedge)) {
        return {verification::Verdict::Unverifiable, false};
    }
    return {verification::Verdict::Unverifiable, true};
}

// --- evaluation records and cache -----------------------------------------

std::string eval_cache_key(const std::string& question_id,
                           const std::string& answer,
                           const std::string& evaluator_identity,
                           std::uint64_t template_hash) {
    std::uint64_t h = hash_string(0, question_id);
    h ^= hash_string(0, metrics::normalize_answer(answer)) + 0x9e3779b97f4a7c15ULL +
         (h << 6) + (h >> 2);
    h ^= hash_string(0, evaluator_identity) + 0x9e3779b97f4a7c15ULL + (h << 6) +
         (h >> 2);
    h ^= template_hash + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    std::ostringstream out;
    out << std::hex << h;
    return out.str();
}

namespace {

json record_to_json(const EvalRecord& r) {
    return json{{"key", r.key},
                {"question_id", r.question_id},
                {"answer", r.answer},
                {"evaluator", r.evaluator},
                {"raw_response", r.raw_response},
                {"verdict", verification::verdict_name(r.verdict)},
                {"parse_failed", r.parse_failed},
                {"citations", r.citations},
                {"timestamp_ms", r.timestamp_ms}};
}

EvalRecord record_from_json(const json& doc) {
    EvalRecord r;
    r.key = doc.at("key").get<std::string>();
    r.question_id = doc.at("question_id").get<std::string>();
    r.answer = doc.at("answer").get<std::string>();
    r.evaluator = doc.at("evaluator").get<std::string>();
    r.raw_response = doc.at("raw_response").get<std::string>();
    const std::string verdict_text = doc.at("verdict").get<std::string>();
    auto verdict = verification::verdict_from_name(verdict_text);
    if (!verdict) {
        throw_error(ErrorCode::ParseFailure,
                    "bad verdict in cache row: " + verdict_text);
    }
    r.verdict = *verdict;
    r.parse_failed = doc.value("parse_failed", false);
    if (doc.contains("citations")) {
        r.citations = doc.at("citations").get<std::vector<std::string>>();
    }
    r.timestamp_ms = doc.value("timestamp_ms", std::int64_t{0});
    return r;
}

}  // namespace

EvalCache::EvalCache(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_);
    if (!in) return;  // cache starts cold; the file appears on first store
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        EvalRecord r = record_from_json(json::parse(line));
        records_[r.key] = r;
    }
}

std::optional<EvalRecord> EvalCache::lookup(const std::string& key) const {
    std::lock_guard<std::mutex> guard(mutex_);
    auto it = records_.find(key);
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

void EvalCache::store(const EvalRecord& record) {
    std::lock_guard<std::mutex> guard(mutex_);
    records_[record.key] = record;
    if (path_.empty()) return;
    std::ofstream out(path_, std::ios::app);
    if (!out) {
        throw_error(ErrorCode::IoFailure, "cannot append eval cache: " + path_);
    }
    out << record_to_json(record).dump() << "\n";
}

std::size_t EvalCache::size() const {
    std::lock_guard<std::mutex> guard(mutex_);
    return records_.size();
}

std::vector<std::string> extract_urls(const std::string& text) {
    static const std::regex url_re(R"(https?://[^\s\)\]\}"'<>]+)");
    std::vector<std::string> urls;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), url_re);
         it != std::sregex_iterator(); ++it) {
        std::string url = it->str();
        while (!url.empty() && (url.back() == '.' || url.back() == ',')) {
            url.pop_back();
        }
        urls.push_back(url);
    }
    return urls;
}

namespace {

EvalRecord evaluate_impl(ChatClient& client,
                         const std::string& question_requirements,
                         const std::string& answer, const PromptTemplate& tmpl,
                         EvalCache& cache, const std::string& question_id,
                         const EvaluateOptions& options, bool collect_citations) {
    const std::string key =
        eval_cache_key(question_id, answer, client.identity(), tmpl.hash());
    if (auto hit = cache.lookup(key)) {
        return *hit;
    }

    RealClock fallback_clock;
    Clock& clock = options.clock ? *options.clock : fallback_clock;
    const VerdictRules& rules =
        options.rules ? *options.rules : VerdictRules::defaults();

    std::vector<ChatMessage> messages{
        {"user", tmpl.fill(answer, question_requirements)}};
    const std::string response = call_with_retries(
        [&] { return client.complete(messages, ChatParams{}); }, options.retry,
        clock);

    EvalRecord record;
    record.key = key;
    record.question_id = question_id;
    record.answer = answer;
    record.evaluator = client.identity();
    record.raw_response = response;
    ParsedVerdict parsed = parse_verdict(response, rules);
    record.verdict = parsed.verdict;
    record.parse_failed = parsed.parse_failed;
    if (collect_citations) {
        record.citations = extract_urls(response);
    }
    record.timestamp_ms = clock.now().count();
    cache.store(record);
    return record;
}

}  // namespace

EvalRecord self_evaluate(ChatClient& client,
                         const std::string& question_requirements,
                         const std::string& answer, const PromptTemplate& tmpl,
                         EvalCache& cache, const std::string& question_id,
                         const EvaluateOptions& options) {
    return evaluate_impl(client, question_requirements, answer, tmpl, cache,
                         question_id, options, false);
}

EvalRecord rag_evaluate(ChatClient& client,
                        const std::string& question_requirements,
                        const std::string& answer, const PromptTemplate& tmpl,
                        EvalCache& cache, const std::string& question_id,
                        const EvaluateOptions& options) {
    return evaluate_impl(client, question_requirements, answer, tmpl, cache,
                         question_id, options, true);
}

}  // namespace bprobe::clients
