#ifndef BPROBE_CLIENTS_HPP
#define BPROBE_CLIENTS_HPP

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "bprobe/verification.hpp"

namespace bprobe::clients {

struct ChatMessage {
    std::string role;  // "system" | "user" | "assistant"
    std::string content;
};

struct ChatParams {
    std::string model = "gpt-4-turbo";
    double temperature = 0.0;
};

/// Abstract chat-completion endpoint. complete either returns text or
/// throws; it never silently returns empty on failure.
class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual std::string complete(const std::vector<ChatMessage>& messages,
                                 const ChatParams& params) = 0;
    virtual std::string identity() const = 0;
};

// --- clocks and rate limiting -------------------------------------------

class Clock {
public:
    virtual ~Clock() = default;
    virtual std::chrono::milliseconds now() = 0;
    virtual void sleep_for(std::chrono::milliseconds d) = 0;
};

class RealClock : public Clock {
public:
    std::chrono::milliseconds now() override;
    void sleep_for(std::chrono::milliseconds d) override;
};

class SimulatedClock : public Clock {
public:
    std::chrono::milliseconds now() override { return current_; }
    void sleep_for(std::chrono::milliseconds d) override { current_ += d; }

private:
    std::chrono::milliseconds current_{0};
};

/// Sliding-window limiter: at most `per_minute` acquisitions in any
/// 60-second window.
class RateLimiter {
public:
    RateLimiter(int per_minute, Clock& clock);
    void acquire();
    const std::deque<std::chrono::milliseconds>& timestamps() const {
        return timestamps_;
    }

private:
    int per_minute_;
    Clock& clock_;
    std::deque<std::chrono::milliseconds> timestamps_;
};

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{1000};  // doubles per retry
};

// Runs op with retries; rethrows the final failure as ClientFailure.
std::string call_with_retries(const std::function<std::string()>& op,
                              const RetryPolicy& policy, Clock& clock);

// --- concrete clients ----------------------------------------------------

/// Fixed scripted responses, served in order. Repeats the last response
/// when the script runs out unless strict.
class MockChatClient : public ChatClient {
public:
    explicit MockChatClient(std::vector<std::string> responses, bool strict = false);
    std::string complete(const std::vector<ChatMessage>& messages,
                         const ChatParams& params) override;
    std::string identity() const override { return "mock"; }
    std::size_t calls() const { return calls_; }
    const std::vector<std::vector<ChatMessage>>& requests() const { return requests_; }

private:
    std::vector<std::string> responses_;
    bool strict_;
    std::size_t calls_ = 0;
    std::vector<std::vector<ChatMessage>> requests_;
};

/// Serves responses from a recorded JSON-lines transcript. Rows carry the
/// full message list and the response; lookups are exact on the serialized
/// messages. Enables zero-network full-pipeline runs.
class ReplayChatClient : public ChatClient {
public:
    static ReplayChatClient load(const std::string& path);
    explicit ReplayChatClient(std::map<std::string, std::string> transcript);

    std::string complete(const std::vector<ChatMessage>& messages,
                         const ChatParams& params) override;
    std::string identity() const override { return "replay"; }

    static std::string fingerprint(const std::vector<ChatMessage>& messages);
    static void record(const std::string& path,
                       const std::vector<ChatMessage>& messages,
                       const std::string& response);

private:
    std::map<std::string, std::string> transcript_;
};

/// Decorator that appends every exchange to a transcript file in the
/// ReplayChatClient format, so a live (or mock) run can be replayed later.
class RecordingChatClient : public ChatClient {
public:
    RecordingChatClient(ChatClient& inner, std::string transcript_path);
    std::string complete(const std::vector<ChatMessage>& messages,
                         const ChatParams& params) override;
    std::string identity() const override { return inner_.identity(); }

private:
    ChatClient& inner_;
    std::string path_;
};

/// JSON chat-completion endpoint: {model, messages, temperature} in,
/// {choices:[{message:{content}}]} out. Endpoint and key come from
/// BP_API_URL / BP_API_KEY unless given explicitly.
class HttpChatClient : public ChatClient {
public:
    HttpChatClient(std::string base_url, std::string api_key,
                   RetryPolicy retry = {}, Clock* clock = nullptr,
                   int rate_limit_per_minute = 60);
    static HttpChatClient from_env();

    std::string complete(const std::vector<ChatMessage>& messages,
                         const ChatParams& params) override;
    std::string identity() const override { return "http:" + base_url_; }

private:
    std::string base_url_;
    std::string api_key_;
    RetryPolicy retry_;
    std::unique_ptr<Clock> owned_clock_;
    Clock* clock_;
    RateLimiter limiter_;
};

// --- prompt templates -----------------------------------------------------

struct PromptTemplate {
    std::string name;
    std::string body;  // placeholders {ANSWER}, {QUESTION_REQUIREMENTS}

    std::string fill(const std::string& answer,
                     const std::string& question_requirements) const;
    std::uint64_t hash() const;
};

const PromptTemplate& self_eval_template();
const PromptTemplate& rag_eval_template();

// --- verdict parsing -------------------------------------------------------

struct VerdictRules {
    std::vector<std::string> negation;
    std::vector<std::string> affirmation;
    std::vector<std::string> hedge;

    static const VerdictRules& defaults();
    static VerdictRules load(const std::string& path);  // editable JSON
};

struct ParsedVerdict {
    verification::Verdict verdict = verification::Verdict::Unverifiable;
    bool parse_failed = false;  // Unparseable: no rule matched
};

// Rule cascade over the final paragraph: negation -> Incorrect,
// affirmation -> Correct, hedge -> Unverifiable, otherwise unparseable.
ParsedVerdict parse_verdict(const std::string& text,
                            const VerdictRules& rules = VerdictRules::defaults());

// --- evaluation records and cache -----------------------------------------

struct EvalRecord {
    std::string key;
    std::string question_id;
    std::string answer;
    std::string evaluator;
    std::string raw_response;
    verification::Verdict verdict = verification::Verdict::Unverifiable;
    bool parse_failed = false;
    std::vector<std::string> citations;  // RAG only
    std::int64_t timestamp_ms = 0;
};

std::string eval_cache_key(const std::string& question_id,
                           const std::string& answer,
                           const std::string& evaluator_identity,
                           std::uint64_t template_hash);

/// Append-only JSON-lines store of EvalRecord; exact lookups by key.
/// Concurrent readers are safe; writes are serialized.
class EvalCache {
public:
    EvalCache() = default;
    explicit EvalCache(std::string path);  // loads existing rows if present

    std::optional<EvalRecord> lookup(const std::string& key) const;
    void store(const EvalRecord& record);
    std::size_t size() const;

private:
    std::string path_;
    mutable std::mutex mutex_;
    std::map<std::string, EvalRecord> records_;
};

std::vector<std::string> extract_urls(const std::string& text);

struct EvaluateOptions {
    RetryPolicy retry{};
    Clock* clock = nullptr;  // defaults to a real clock
    const VerdictRules* rules = nullptr;
};

EvalRecord self_evaluate(ChatClient& client, const std::string& question_requirements,
                         const std::string& answer, const PromptTemplate& tmpl,
                         EvalCache& cache, const std::string& question_id,
                         const EvaluateOptions& options = {});

EvalRecord rag_evaluate(ChatClient& client, const std::string& question_requirements,
                        const std::string& answer, const PromptTemplate& tmpl,
                        EvalCache& cache, const std::string& question_id,
                        const EvaluateOptions& options = {});

}  // namespace bprobe::clients

#endif  // BPROBE_CLIENTS_HPP
