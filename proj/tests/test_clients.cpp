#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "bprobe/clients.hpp"
#include "bprobe/errors.hpp"

using bprobe::Error;
using bprobe::ErrorCode;
using namespace bprobe::clients;
using bprobe::verification::Verdict;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& err) {
        return err.code();
    }
    FAIL("expected an Error");
    return ErrorCode::IoFailure;
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

// Minimal loopback endpoint speaking the chat-completion shape.
struct ScopedServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;

    explicit ScopedServer(httplib::Server::Handler handler) {
        server.Post("/v1/chat/completions", std::move(handler));
        port = server.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }

    ~ScopedServer() {
        server.stop();
        thread.join();
    }
};

}  // namespace

TEST_CASE("verdicts parse from the final paragraph by rule class") {
    const auto incorrect =
        parse_verdict("No, the official language of Rome is Italian.");
    CHECK(incorrect.verdict == Verdict::Incorrect);
    CHECK_FALSE(incorrect.parse_failed);

    CHECK(parse_verdict("Yes, the koala is native to Australia.").verdict ==
          Verdict::Correct);
    const auto hedged = parse_verdict("I cannot verify this claim from here.");
    CHECK(hedged.verdict == Verdict::Unverifiable);
    CHECK_FALSE(hedged.parse_failed);

    const auto unparsed = parse_verdict("Bananas are yellow.");
    CHECK(unparsed.verdict == Verdict::Unverifiable);
    CHECK(unparsed.parse_failed);

    // Only the last blank-line-delimited block counts, so chain-of-thought
    // affirmations upstream do not leak into the verdict.
    const auto final_wins = parse_verdict(
        "Yes, at first glance this seems plausible.\n"
        "Let me check the details carefully.\n"
        "\n"
        "No, the official language of Rome is Italian.");
    CHECK(final_wins.verdict == Verdict::Incorrect);

    CHECK(parse_verdict("Step one.\n\nYes, it belongs.\n\n   \n").verdict ==
          Verdict::Correct);
    CHECK(parse_verdict("NO, NEVER.").verdict == Verdict::Incorrect);

    // Negation outranks affirmation inside the same paragraph.
    CHECK(parse_verdict("No, it does not belong. Yes, I am sure of that.").verdict ==
          Verdict::Incorrect);
}

TEST_CASE("verdict rules load from an editable JSON file") {
    const auto path = temp_path("bprobe_rules.json");
    {
        std::ofstream out(path);
        out << R"({"negation":["nope"],"affirmation":["yep"],"hedge":["dunno"]})";
    }
    const auto rules = VerdictRules::load(path.string());
    CHECK(parse_verdict("Nope, wrong.", rules).verdict == Verdict::Incorrect);
    CHECK(parse_verdict("Yep!", rules).verdict == Verdict::Correct);
    CHECK(parse_verdict("dunno really", rules).verdict == Verdict::Unverifiable);
    // The stock phrases are not in the custom rule set.
    CHECK(parse_verdict("Yes, it belongs.", rules).parse_failed);
    std::filesystem::remove(path);

    CHECK(code_of([] { VerdictRules::load("/nonexistent/rules.json"); }) ==
          ErrorCode::IoFailure);
}

TEST_CASE("prompt templates fill both placeholders") {
    const auto& self = self_eval_template();
    CHECK(self.fill("Koala", "land animals unique to Australia") ==
          "Does Koala belong to land animals unique to Australia? I'll tip $100 "
          "for the factually correct answer. Think step by step and then give "
          "your answer.");

    const auto& rag = rag_eval_template();
    CHECK(rag.body.rfind("Search online for highly credible information", 0) == 0);
    CHECK(rag.fill("Koala", "land animals").find("Does Koala belong to land animals?") !=
          std::string::npos);

    CHECK(self.hash() == self_eval_template().hash());
    CHECK(self.hash() != rag.hash());
}

TEST_CASE("cache keys collapse answer variants and separate evaluators") {
    const auto base = eval_cache_key("q1", "Koala", "mock", 7);
    CHECK(base == eval_cache_key("q1", "koalas.", "mock", 7));
    CHECK(base != eval_cache_key("q2", "Koala", "mock", 7));
    CHECK(base != eval_cache_key("q1", "Koala", "replay", 7));
    CHECK(base != eval_cache_key("q1", "Koala", "mock", 8));
    CHECK(base != eval_cache_key("q1", "Wombat", "mock", 7));
}

TEST_CASE("the evaluation cache persists across instances") {
    EvalRecord record;
    record.key = "k1";
    record.question_id = "q1";
    record.answer = "Koala";
    record.evaluator = "mock";
    record.raw_response = "Yes, it belongs.";
    record.verdict = Verdict::Correct;
    record.citations = {"https://example.org/a"};

    SUBCASE("in memory only") {
        EvalCache cache;
        CHECK_FALSE(cache.lookup("k1").has_value());
        cache.store(record);
        CHECK(cache.size() == 1);
        const auto hit = cache.lookup("k1");
        REQUIRE(hit.has_value());
        CHECK(hit->answer == "Koala");
        CHECK(hit->verdict == Verdict::Correct);
        CHECK(hit->citations == std::vector<std::string>{"https://example.org/a"});
    }

    SUBCASE("backed by a JSON-lines file") {
        const auto path = temp_path("bprobe_eval_cache.jsonl");
        std::filesystem::remove(path);
        {
            EvalCache cache(path.string());
            CHECK(cache.size() == 0);
            cache.store(record);
            EvalRecord second = record;
            second.key = "k2";
            second.verdict = Verdict::Incorrect;
            cache.store(second);
        }
        EvalCache reloaded(path.string());
        CHECK(reloaded.size() == 2);
        CHECK(reloaded.lookup("k1")->verdict == Verdict::Correct);
        CHECK(reloaded.lookup("k2")->verdict == Verdict::Incorrect);
        std::filesystem::remove(path);
    }

    SUBCASE("rows with unknown verdicts are rejected at load") {
        const auto path = temp_path("bprobe_eval_cache_bad.jsonl");
        {
            std::ofstream out(path);
            out << R"({"key":"k","question_id":"q","answer":"a","evaluator":"m",)"
                << R"("raw_response":"r","verdict":"maybe","parse_failed":false,)"
                << R"("citations":[],"timestamp_ms":0})" << "\n";
        }
        CHECK(code_of([&] { EvalCache cache(path.string()); }) ==
              ErrorCode::ParseFailure);
        std::filesystem::remove(path);
    }
}

TEST_CASE("retries back off exponentially on a simulated clock") {
    SimulatedClock clock;

    SUBCASE("immediate success sleeps never") {
        const auto out = call_with_retries([] { return std::string("ok"); },
                                           RetryPolicy{}, clock);
        CHECK(out == "ok");
        CHECK(clock.now().count() == 0);
    }

    SUBCASE("two failures cost 1s + 2s") {
        int failures = 0;
        const auto out = call_with_retries(
            [&]() -> std::string {
                if (failures < 2) {
                    ++failures;
                    throw std::runtime_error("flaky");
                }
                return "recovered";
            },
            RetryPolicy{}, clock);
        CHECK(out == "recovered");
        CHECK(clock.now().count() == 3000);
    }

    SUBCASE("exhausted retries carry the last error") {
        try {
            call_with_retries(
                []() -> std::string { throw std::runtime_error("downstream busy"); },
                RetryPolicy{}, clock);
            FAIL("expected an error");
        } catch (const Error& err) {
            CHECK(err.code() == ErrorCode::ClientFailure);
            CHECK(std::string(err.what()).find("failed after 3 attempts") !=
                  std::string::npos);
            CHECK(std::string(err.what()).find("downstream busy") !=
                  std::string::npos);
        }
        CHECK(clock.now().count() == 3000);
    }
}

TEST_CASE("the rate limiter enforces a sliding 60s window") {
    SimulatedClock clock;
    RateLimiter limiter(2, clock);
    limiter.acquire();
    limiter.acquire();
    CHECK(clock.now().count() == 0);

    // Third acquisition must wait out the window.
    limiter.acquire();
    CHECK(clock.now().count() == 60'000);
    CHECK(limiter.timestamps().size() == 1);

    CHECK_THROWS_AS(RateLimiter(0, clock), Error);
}

TEST_CASE("the scripted client serves its script in order") {
    MockChatClient lax({"one", "two"});
    CHECK(lax.complete({{"user", "a"}}, {}) == "one");
    CHECK(lax.complete({{"user", "b"}}, {}) == "two");
    CHECK(lax.complete({{"user", "c"}}, {}) == "two");  // repeats when lax
    CHECK(lax.calls() == 3);
    REQUIRE(lax.requests().size() == 3);
    CHECK(lax.requests()[1][0].content == "b");

    MockChatClient strict({"only"}, /*strict=*/true);
    strict.complete({{"user", "a"}}, {});
    CHECK(code_of([&] { strict.complete({{"user", "b"}}, {}); }) ==
          ErrorCode::ClientFailure);

    MockChatClient empty({});
    CHECK(code_of([&] { empty.complete({{"user", "a"}}, {}); }) ==
          ErrorCode::ClientFailure);
}

TEST_CASE("transcripts record and replay exact request fingerprints") {
    CHECK(ReplayChatClient::fingerprint({{"user", "hi"}}) ==
          R"([{"content":"hi","role":"user"}])");

    const auto path = temp_path("bprobe_transcript.jsonl");
    std::filesystem::remove(path);

    const std::vector<ChatMessage> first{{"user", "Tell me a list of trees."}};
    const std::vector<ChatMessage> second{{"user", "Tell me a list of trees."},
                                          {"assistant", "1. Oak"},
                                          {"user", "Tell me more trees."}};
    ReplayChatClient::record(path.string(), first, "1. Oak");
    ReplayChatClient::record(path.string(), second, "2. Elm");

    auto replay = ReplayChatClient::load(path.string());
    CHECK(replay.complete(first, {}) == "1. Oak");
    CHECK(replay.complete(second, {}) == "2. Elm");

    try {
        replay.complete({{"user", "Tell me a list of shrubs."}}, {});
        FAIL("expected an error");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::ClientFailure);
        CHECK(std::string(err.what()).find(
                  "no recorded response for request ending: Tell me a list of "
                  "shrubs.") != std::string::npos);
    }
    std::filesystem::remove(path);

    CHECK(code_of([] { ReplayChatClient::load("/nonexistent/t.jsonl"); }) ==
          ErrorCode::IoFailure);
}

TEST_CASE("the recording decorator produces a replayable transcript") {
    const auto path = temp_path("bprobe_recorded.jsonl");
    std::filesystem::remove(path);

    MockChatClient inner({"alpha", "beta"});
    RecordingChatClient recorder(inner, path.string());
    CHECK(recorder.identity() == "mock");
    CHECK(recorder.complete({{"user", "one"}}, {}) == "alpha");
    CHECK(recorder.complete({{"user", "two"}}, {}) == "beta");

    auto replay = ReplayChatClient::load(path.string());
    CHECK(replay.complete({{"user", "one"}}, {}) == "alpha");
    CHECK(replay.complete({{"user", "two"}}, {}) == "beta");
    std::filesystem::remove(path);
}

TEST_CASE("citation urls are pulled out of running text") {
    const auto urls = extract_urls(
        "See https://example.org/wiki/Koala. Also (https://a.b/c), "
        "and http://plain.example/d");
    CHECK(urls == std::vector<std::string>{"https://example.org/wiki/Koala",
                                           "https://a.b/c",
                                           "http://plain.example/d"});
    CHECK(extract_urls("no links here").empty());
}

TEST_CASE("evaluations hit the cache before the client") {
    MockChatClient client({"Yes, it belongs."});
    EvalCache cache;
    SimulatedClock clock;
    EvaluateOptions options;
    options.clock = &clock;

    const auto first =
        self_evaluate(client, "land animals unique to Australia", "Koala",
                      self_eval_template(), cache, "q1", options);
    CHECK(first.verdict == Verdict::Correct);
    CHECK_FALSE(first.parse_failed);
    CHECK(first.evaluator == "mock");
    CHECK(first.key == eval_cache_key("q1", "Koala", "mock",
                                      self_eval_template().hash()));
    CHECK(first.citations.empty());
    CHECK(client.calls() == 1);
    CHECK(client.requests()[0][0].content ==
          self_eval_template().fill("Koala", "land animals unique to Australia"));

    // Same question/answer again: served from cache, no new traffic.
    const auto second =
        self_evaluate(client, "land animals unique to Australia", "Koala",
                      self_eval_template(), cache, "q1", options);
    CHECK(client.calls() == 1);
    CHECK(second.key == first.key);
    CHECK(second.verdict == first.verdict);

    // A normalized variant of the answer is the same cache row.
    self_evaluate(client, "land animals unique to Australia", "koalas",
                  self_eval_template(), cache, "q1", options);
    CHECK(client.calls() == 1);
}

TEST_CASE("fact-checked evaluation collects citations and retries failures") {
    struct FlakyClient : ChatClient {
        int failures_left;
        std::string response;
        int calls = 0;
        FlakyClient(int failures, std::string r)
            : failures_left(failures), response(std::move(r)) {}
        std::string complete(const std::vector<ChatMessage>&, const ChatParams&) override {
            ++calls;
            if (failures_left > 0) {
                --failures_left;
                throw std::runtime_error("transient");
            }
            return response;
        }
        std::string identity() const override { return "flaky"; }
    };

    FlakyClient client(1, "Per https://example.org/records/koala it is real.\n\n"
                          "Yes, it belongs.");
    EvalCache cache;
    SimulatedClock clock;
    EvaluateOptions options;
    options.clock = &clock;

    const auto record = rag_evaluate(client, "land animals", "Koala",
                                     rag_eval_template(), cache, "q1", options);
    CHECK(record.verdict == Verdict::Correct);
    CHECK(record.citations ==
          std::vector<std::string>{"https://example.org/records/koala"});
    CHECK(client.calls == 2);
    CHECK(clock.now().count() == 1000);
    CHECK(cache.size() == 1);
}

TEST_CASE("the http client speaks the chat-completion protocol") {
    nlohmann::json seen_body;
    std::string seen_auth;
    ScopedServer server([&](const httplib::Request& req, httplib::Response& res) {
        seen_body = nlohmann::json::parse(req.body);
        seen_auth = req.get_header_value("Authorization");
        res.set_content(
            R"({"choices":[{"message":{"content":"Yes, it belongs."}}]})",
            "application/json");
    });

    SimulatedClock clock;
    HttpChatClient client(server.url(), "test-key", RetryPolicy{}, &clock);
    CHECK(client.identity() == "http:" + server.url());

    const auto out = client.complete(
        {{"user", "Does Koala belong to land animals?"}}, ChatParams{});
    CHECK(out == "Yes, it belongs.");
    CHECK(seen_auth == "Bearer test-key");
    CHECK(seen_body.at("model") == "gpt-4-turbo");
    CHECK(seen_body.at("temperature") == 0.0);
    REQUIRE(seen_body.at("messages").size() == 1);
    CHECK(seen_body["messages"][0]["role"] == "user");
    CHECK(seen_body["messages"][0]["content"] ==
          "Does Koala belong to land animals?");
}

TEST_CASE("the http client retries server errors, then gives up honestly") {
    SUBCASE("a transient 500 is absorbed") {
        std::atomic<int> hits{0};
        ScopedServer server([&](const httplib::Request&, httplib::Response& res) {
            if (hits++ == 0) {
                res.status = 500;
                res.set_content("boom", "text/plain");
            } else {
                res.set_content(
                    R"({"choices":[{"message":{"content":"recovered"}}]})",
                    "application/json");
            }
        });
        SimulatedClock clock;
        HttpChatClient client(server.url(), "", RetryPolicy{}, &clock);
        CHECK(client.complete({{"user", "x"}}, {}) == "recovered");
        CHECK(hits == 2);
        CHECK(clock.now().count() == 1000);
    }

    SUBCASE("a persistent failure surfaces with the status text") {
        ScopedServer server([](const httplib::Request&, httplib::Response& res) {
            res.status = 503;
            res.set_content("overloaded", "text/plain");
        });
        SimulatedClock clock;
        HttpChatClient client(server.url(), "", RetryPolicy{}, &clock);
        try {
            client.complete({{"user", "x"}}, {});
            FAIL("expected an error");
        } catch (const Error& err) {
            CHECK(err.code() == ErrorCode::ClientFailure);
            CHECK(std::string(err.what()).find("failed after 3 attempts") !=
                  std::string::npos);
            CHECK(std::string(err.what()).find("status 503") != std::string::npos);
        }
    }

    SUBCASE("responses without choices are rejected") {
        ScopedServer server([](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"choices":[]})", "application/json");
        });
        SimulatedClock clock;
        HttpChatClient client(server.url(), "", RetryPolicy{}, &clock);
        try {
            client.complete({{"user", "x"}}, {});
            FAIL("expected an error");
        } catch (const Error& err) {
            CHECK(err.code() == ErrorCode::ClientFailure);
            CHECK(std::string(err.what()).find("no choices") != std::string::npos);
        }
    }
}

TEST_CASE("endpoint configuration comes from arguments or the environment") {
    CHECK(code_of([] { HttpChatClient("", ""); }) == ErrorCode::ConfigInvalid);

    unsetenv("BP_API_URL");
    CHECK(code_of([] { HttpChatClient::from_env(); }) == ErrorCode::ConfigInvalid);

    setenv("BP_API_URL", "http://127.0.0.1:1", 1);
    setenv("BP_API_KEY", "k", 1);
    const auto client = HttpChatClient::from_env();
    CHECK(client.identity() == "http:http://127.0.0.1:1");
    unsetenv("BP_API_URL");
    unsetenv("BP_API_KEY");
}
