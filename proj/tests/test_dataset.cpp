#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "bprobe/dataset.hpp"
#include "bprobe/errors.hpp"

using bprobe::Error;
using bprobe::ErrorCode;
using namespace bprobe::dataset;
using bprobe::clients::ChatMessage;
using bprobe::clients::MockChatClient;

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

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

}  // namespace

TEST_CASE("list items parse across marker styles") {
    CHECK(extract_entities({"1. Carrots \n 2. Spinach"}) ==
          std::vector<std::string>{"Carrots", "Spinach"});
    CHECK(extract_entities({"1) Mango\n- Papaya\n\xE2\x80\xA2 Lychee\n3. Fig."}) ==
          std::vector<std::string>{"Mango", "Papaya", "Lychee", "Fig"});
    CHECK(extract_entities({"Sure, here you go:\n12. Quokka,\nThat is all I know."}) ==
          std::vector<std::string>{"Quokka"});
}

TEST_CASE("entities deduplicate on normalized form, keeping first spelling") {
    const std::vector<std::string> rounds = {
        "1. Koala\n2. koalas\n3. Wombat",
        "1. Wombats!\n2. Quokka",
    };
    CHECK(extract_entities(rounds) ==
          std::vector<std::string>{"Koala", "Wombat", "Quokka"});
}

TEST_CASE("entity extraction refuses empty input honestly") {
    CHECK(code_of([] { extract_entities({}); }) == ErrorCode::EmptyInput);
    CHECK(code_of([] { extract_entities({"No list at all, just prose."}); }) ==
          ErrorCode::NoEntitiesFound);
    // Items that normalize to nothing do not count as entities.
    CHECK(code_of([] { extract_entities({"1. ..."}); }) == ErrorCode::NoEntitiesFound);
}

TEST_CASE("the split puts floor(fraction * N) in the common prefix") {
    std::vector<std::string> entities;
    for (int i = 0; i < 52; ++i) entities.push_back("e" + std::to_string(i));

    const auto [common, ambiguous] = split_common_ambiguous(entities);
    CHECK(common.size() == 39);
    CHECK(ambiguous.size() == 13);
    CHECK(common.front() == "e0");
    CHECK(common.back() == "e38");
    CHECK(ambiguous.front() == "e39");
    CHECK(ambiguous.back() == "e51");

    const auto one = split_common_ambiguous({"only"});
    CHECK(one.first.empty());
    CHECK(one.second == std::vector<std::string>{"only"});

    const auto four = split_common_ambiguous({"a", "b", "c", "d"});
    CHECK(four.first.size() == 3);
    CHECK(four.second == std::vector<std::string>{"d"});

    const auto none = split_common_ambiguous({});
    CHECK(none.first.empty());
    CHECK(none.second.empty());

    const auto all_common = split_common_ambiguous({"a", "b"}, 1.0);
    CHECK(all_common.first.size() == 2);
    CHECK(all_common.second.empty());

    const auto all_ambiguous = split_common_ambiguous({"a", "b"}, 0.0);
    CHECK(all_ambiguous.first.empty());
    CHECK(all_ambiguous.second.size() == 2);

    CHECK(code_of([] { split_common_ambiguous({"a"}, -0.1); }) ==
          ErrorCode::ConfigInvalid);
    CHECK(code_of([] { split_common_ambiguous({"a"}, 1.1); }) ==
          ErrorCode::ConfigInvalid);
}

TEST_CASE("follow-up phrasing swaps the list-request prefix") {
    CHECK(follow_up_question("Tell me a list of land animals unique to Australia.",
                             "Tell me more {LIST_SUBJECT}") ==
          "Tell me more land animals unique to Australia.");
    // No recognized prefix: the whole question becomes the subject.
    CHECK(follow_up_question("List some things.", "More about {LIST_SUBJECT}") ==
          "More about List some things.");
    CHECK(follow_up_question("Tell me a list of trees.", "Anything else?") ==
          "Anything else?");
}

TEST_CASE("question ids are stable content hashes") {
    const auto id = make_question_id("Tell me a list of trees.");
    CHECK(id.rfind("q-", 0) == 0);
    CHECK(id == make_question_id("Tell me a list of trees."));
    CHECK(id != make_question_id("Tell me a list of shrubs."));
}

TEST_CASE("answer collection keeps the whole dialogue in context") {
    MockChatClient client({"1. Koala", "2. Wombat", "3. Quokka"}, /*strict=*/true);
    QuestionRecord q;
    q.question = "Tell me a list of land animals unique to Australia.";

    CollectionConfig cfg;
    collect_answers(client, q, cfg);

    CHECK(q.rounds == std::vector<std::string>{"1. Koala", "2. Wombat", "3. Quokka"});
    CHECK_FALSE(q.partial);
    REQUIRE(client.requests().size() == 3);
    CHECK(client.requests()[0].size() == 1);
    CHECK(client.requests()[0][0].role == "user");
    CHECK(client.requests()[0][0].content == q.question);
    REQUIRE(client.requests()[1].size() == 3);
    CHECK(client.requests()[1][1].role == "assistant");
    CHECK(client.requests()[1][1].content == "1. Koala");
    CHECK(client.requests()[1][2].content ==
          "Tell me more land animals unique to Australia.");
    CHECK(client.requests()[2].size() == 5);
}

TEST_CASE("interrupted collection stays partial and resumes in place") {
    QuestionRecord q;
    q.question = "Tell me a list of land animals unique to Australia.";
    CollectionConfig cfg;

    MockChatClient failing({"1. Koala"}, /*strict=*/true);
    try {
        collect_answers(failing, q, cfg);
        FAIL("expected an error");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::ClientFailure);
    }
    CHECK(q.partial);
    CHECK(q.rounds == std::vector<std::string>{"1. Koala"});

    // The resumed run asks only for the missing rounds, with the collected
    // prefix already in the conversation.
    MockChatClient resuming({"2. Wombat", "3. Quokka"}, /*strict=*/true);
    collect_answers(resuming, q, cfg);
    CHECK_FALSE(q.partial);
    CHECK(q.rounds == std::vector<std::string>{"1. Koala", "2. Wombat", "3. Quokka"});
    REQUIRE(resuming.requests().size() == 2);
    CHECK(resuming.requests()[0].size() == 3);

    // Identical to the never-interrupted collection.
    QuestionRecord direct;
    direct.question = q.question;
    MockChatClient uninterrupted({"1. Koala", "2. Wombat", "3. Quokka"}, true);
    collect_answers(uninterrupted, direct, cfg);
    CHECK(direct.rounds == q.rounds);
}

TEST_CASE("collection validates its inputs and respects finished records") {
    MockChatClient client({"unused"});
    QuestionRecord q;
    q.question = "What is a koala?";
    CHECK(code_of([&] { collect_answers(client, q, {}); }) == ErrorCode::ConfigInvalid);

    q.question = "Tell me a list of trees.";
    CollectionConfig zero;
    zero.rounds = 0;
    CHECK(code_of([&] { collect_answers(client, q, zero); }) == ErrorCode::ConfigInvalid);

    // Already-complete records trigger no client traffic at all.
    q.rounds = {"a", "b", "c"};
    q.partial = true;
    collect_answers(client, q, {});
    CHECK(client.calls() == 0);
    CHECK_FALSE(q.partial);
}

TEST_CASE("domain generation parses, deduplicates, and keeps the raw text") {
    const auto raw_path = temp_path("bprobe_domains_raw.txt");
    MockChatClient client({"Sure!\n1. Biology\n2. History\n3. biology\n"});
    const auto domains = generate_domains(client, raw_path.string());
    CHECK(domains == std::vector<std::string>{"Biology", "History"});
    CHECK(slurp(raw_path) == "Sure!\n1. Biology\n2. History\n3. biology\n");
    std::filesystem::remove(raw_path);

    MockChatClient prose({"I cannot list domains right now."});
    const auto recovery_path = temp_path("bprobe_domains_raw2.txt");
    CHECK(code_of([&] { generate_domains(prose, recovery_path.string()); }) ==
          ErrorCode::ParseFailure);
    // The unparseable response is still on disk for manual repair.
    CHECK(slurp(recovery_path) == "I cannot list domains right now.");
    std::filesystem::remove(recovery_path);

    MockChatClient blocked({"1. Biology"});
    CHECK(code_of([&] { generate_domains(blocked, "/nonexistent/dir/raw.txt"); }) ==
          ErrorCode::IoFailure);
}

TEST_CASE("question generation keeps the template and flags broken items") {
    MockChatClient client(
        {"Here you go:\n"
         "1. Tell me a list of birds that cannot fly and live in the southern "
         "hemisphere.\n"
         "2. What is the tallest mountain?\n"
         "Some prose in between.\n"
         "Tell me a list of metals that are liquid at room temperature.\n"});
    CollectionConfig cfg;
    const auto batch = generate_questions(client, "Biology", cfg);

    REQUIRE(batch.questions.size() == 2);
    CHECK(batch.questions[0].rfind(kQuestionPrefix, 0) == 0);
    CHECK(batch.questions[1] ==
          "Tell me a list of metals that are liquid at room temperature.");
    REQUIRE(batch.warnings.size() == 1);
    CHECK(batch.warnings[0] ==
          "dropped non-conforming question: What is the tallest mountain?");

    // The prompt carries the domain and the demonstration questions.
    const auto& prompt = client.requests()[0][0].content;
    CHECK(prompt.find("professor of Biology") != std::string::npos);
    CHECK(prompt.find("Question 1: " + cfg.demos[0]) != std::string::npos);

    CHECK(code_of([&] { generate_questions(client, "", cfg); }) ==
          ErrorCode::EmptyInput);
}

TEST_CASE("dataset files round trip through JSON lines") {
    QuestionRecord a;
    a.id = "q-1";
    a.domain = "Biology";
    a.question = "Tell me a list of trees.";
    a.rounds = {"1. Oak\n2. Fig", "3. Elm"};
    a.entities = {"Oak", "Fig", "Elm"};
    a.common = {"Oak", "Fig"};
    a.ambiguous = {"Elm"};

    QuestionRecord b;
    b.id = "q-2";
    b.domain = "History";
    b.question = "Tell me a list of treaties.";
    b.rounds = {"1. Tordesillas"};
    b.partial = true;

    const auto path = temp_path("bprobe_dataset.jsonl");
    save_dataset(path.string(), {a, b}, "cfg-hash-42");

    const auto loaded = load_dataset(path.string());
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0] == a);
    CHECK(loaded[1] == b);

    // Timestamps live in the sidecar, never in the dataset itself, so the
    // data file stays byte-stable across identical runs.
    CHECK(slurp(path).find("written_at") == std::string::npos);
    const auto meta = slurp(path.string() + ".meta.json");
    CHECK(meta.find("\"config_hash\": \"cfg-hash-42\"") != std::string::npos);

    std::filesystem::remove(path);
    std::filesystem::remove(path.string() + ".meta.json");

    CHECK(code_of([] { load_dataset("/nonexistent/dataset.jsonl"); }) ==
          ErrorCode::IoFailure);
    CHECK_THROWS_AS(record_from_json("not json"), std::exception);
}
