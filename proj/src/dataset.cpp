#include "bprobe/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "bprobe/errors.hpp"
#include "bprobe/metrics.hpp"
#include "bprobe/rng.hpp"

namespace bprobe::dataset {

using json = nlohmann::json;

namespace {

const char* kDomainPrompt =
    "I hope to test my students' knowledge in different domains. Which domains "
    "can I use to create questions?";

const char* kQuestionPromptTemplate =
    "I am a professor of {CATEGORY} and need to test students' understanding of "
    "{CATEGORY} by asking a series of challenging questions. These questions "
    "require respondents to list entities that they know meet a series of "
    "certain conditions. You need to create more different and diverse "
    "challenging questions according to the requirements. Read the following "
    "requirements carefully. I'm going to tip $100 for a perfect list of "
    "questions!\n"
    "The questions should meet the following criteria:\n"
    "1. Each question should start with \"Tell me a list of\";\n"
    "2. To make the question challenging enough, each question should contain "
    "multiple limiting conditions.\n"
    "3. The requirement of the question should not involve specific numbers "
    "(which makes the question too hard to answer) or vague descriptions (which "
    "makes it hard to evaluate the truthfulness of the answer), like \"long "
    "lifespan\", \"quick speed\", \"popular\", and \"important\";\n"
    "4. The boundaries of the question should be very clear, making it easy to "
    "evaluate its truthfulness;\n"
    "5. The answers to the questions should be consistent through a relatively "
    "long time and not change frequently, for example, yearly.\n"
    "Refer to the style in the following two examples from an exemplary "
    "subject, biology.\n";

std::string trim(const std::string& s) {
    std::size_t begin = 0, end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(begin, end - begin);
}

// Strips a leading list marker; returns false if the line has none.
bool strip_list_marker(const std::string& line, std::string* rest) {
    std::size_t i = 0;
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t digits = i;
    while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits]))) {
        ++digits;
    }
    if (digits > i && digits < line.size() &&
        (line[digits] == '.' || line[digits] == ')')) {
        *rest = line.substr(digits + 1);
        return true;
    }
    if (i < line.size() && line[i] == '-') {
        *rest = line.substr(i + 1);
        return true;
    }
    if (line.compare(i, 3, "\xE2\x80\xA2") == 0) {  // U+2022 bullet
        *rest = line.substr(i + 3);
        return true;
    }
    return false;
}

std::string strip_terminal_punct(std::string s) {
    static const std::string punct = ".,!?;:";
    while (!s.empty() && punct.find(s.back()) != std::string::npos) {
        s.pop_back();
    }
    return trim(s);
}

std::vector<std::string> parse_list_items(const std::string& text) {
    std::vector<std::string> items;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::string rest;
        if (!strip_list_marker(line, &rest)) continue;
        std::string item = strip_terminal_punct(trim(rest));
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

}  // namespace

std::vector<std::string> generate_domains(clients::ChatClient& client,
                                          const std::string& raw_path) {
    const std::string raw = client.complete(
        {{"user", kDomainPrompt}}, clients::ChatParams{});
    if (!raw_path.empty()) {
        std::ofstream out(raw_path);
        if (!out) {
            throw_error(ErrorCode::IoFailure, "cannot write raw domains: " + raw_path);
        }
        out << raw;
    }
    std::vector<std::string> items = parse_list_items(raw);
    if (items.empty()) {
        throw_error(ErrorCode::ParseFailure,
                    "no domains parsed from response" +
                        (raw_path.empty() ? "" : " (raw kept at " + raw_path + ")"));
    }
    std::vector<std::string> domains;
    std::set<std::string> seen;
    for (const auto& item : items) {
        std::string key = metrics::normalize_answer(item);
        if (seen.insert(key).second) domains.push_back(item);
    }
    return domains;
}

QuestionBatch generate_questions(clients::ChatClient& client,
                                 const std::string& domain,
                                 const CollectionConfig& cfg) {
    if (domain.empty()) {
        throw_error(ErrorCode::EmptyInput, "domain is empty");
    }
    std::string prompt = kQuestionPromptTemplate;
    std::size_t pos = 0;
    while ((pos = prompt.find("{CATEGORY}", pos)) != std::string::npos) {
        prompt.replace(pos, 10, domain);
        pos += domain.size();
    }
    for (std::size_t i = 0; i < cfg.demos.size(); ++i) {
        prompt += "Question " + std::to_string(i + 1) + ": " + cfg.demos[i] + "\n";
    }

    const std::string raw = client.complete({{"user", prompt}}, clients::ChatParams{});

    QuestionBatch batch;
    std::istringstream in(raw);
    std::string line;
    while (std::getline(in, line)) {
        std::string rest;
        const bool listed = strip_list_marker(line, &rest);
        std::string candidate = listed ? trim(rest) : trim(line);
        if (candidate.empty()) continue;
        if (candidate.rfind(kQuestionPrefix, 0) == 0) {
            batch.questions.push_back(candidate);
        } else if (listed) {
            // Prose around the list is ignored; a listed item that breaks
            // the template is worth surfacing.
            batch.warnings.push_back("dropped non-conforming question: " + candidate);
        }
    }
    return batch;
}

std::string follow_up_question(const std::string& question,
                               const std::string& followup_template) {
    std::string subject = question;
    const std::string prefix = std::string(kQuestionPrefix) + " ";
    if (subject.rfind(prefix, 0) == 0) {
        subject = subject.substr(prefix.size());
    }
    std::string out = followup_template;
    std::size_t pos = out.find("{LIST_SUBJECT}");
    if (pos != std::string::npos) {
        out.replace(pos, 14, subject);
    }
    return out;
}

void collect_answers(clients::ChatClient& client, QuestionRecord& q,
                     const CollectionConfig& cfg) {
    if (cfg.rounds < 1) {
        throw_error(ErrorCode::ConfigInvalid, "collection needs at least one round");
    }
    if (q.question.rfind(kQuestionPrefix, 0) != 0) {
        throw_error(ErrorCode::ConfigInvalid,
                    "question does not start with \"" + std::string(kQuestionPrefix) +
                        "\": " + q.question);
    }
    const std::string followup = follow_up_question(q.question, cfg.followup_template);

    // Rebuild the conversation over rounds already collected so a partial
    // record resumes mid-dialogue.
    std::vector<clients::ChatMessage> messages;
    messages.push_back({"user", q.question});
    for (std::size_t i = 0; i < q.rounds.size(); ++i) {
        messages.push_back({"assistant", q.rounds[i]});
        messages.push_back({"user", followup});
    }

    for (int round = static_cast<int>(q.rounds.size()); round < cfg.rounds; ++round) {
        std::string response;
        try {
            response = client.complete(messages, clients::ChatParams{});
        } catch (const Error&) {
            q.partial = true;
            throw;
        }
        q.rounds.push_back(response);
        messages.push_back({"assistant", response});
        messages.push_back({"user", followup});
    }
    q.partial = false;
}

std::vector<std::string> extract_entities(const std::vector<std::string>& rounds) {
    if (rounds.empty()) {
        throw_error(ErrorCode::EmptyInput, "no rounds to extract entities from");
    }
    std::vector<std::string> entities;
    std::set<std::string> seen;
    for (const auto& round : rounds) {
        for (const auto& item : parse_list_items(round)) {
            std::string key = metrics::normalize_answer(item);
            if (key.empty()) continue;
            if (seen.insert(key).second) entities.push_back(item);
        }
    }
    if (entities.empty()) {
        throw_error(ErrorCode::NoEntitiesFound,
                    "no list items found across " + std::to_string(rounds.size()) +
                        " rounds");
    }
    return entities;
}

std::pair<std::vector<std::string>, std::vector<std::string>>
split_common_ambiguous(const std::vector<std::string>& entities,
                       double fraction) {
    if (fraction < 0.0 || fraction > 1.0) {
        throw_error(ErrorCode::ConfigInvalid, "split fraction must be in [0, 1]");
    }
    const std::size_t cut =
        static_cast<std::size_t>(fraction * static_cast<double>(entities.size()));
    std::vector<std::string> common(entities.begin(), entities.begin() + cut);
    std::vector<std::string> ambiguous(entities.begin() + cut, entities.end());
    return {std::move(common), std::move(ambiguous)};
}

std::string make_question_id(const std::string& question) {
    std::ostringstream out;
    out << "q-" << std::hex << hash_string(0, question);
    return out.str();
}

std::string record_to_json(const QuestionRecord& record) {
    json doc = {{"id", record.id},
                {"domain", record.domain},
                {"question", record.question},
                {"rounds", record.rounds},
                {"entities", record.entities},
                {"common", record.common},
                {"ambiguous", record.ambiguous},
                {"partial", record.partial}};
    return doc.dump();
}

QuestionRecord record_from_json(const std::string& line) {
    json doc = json::parse(line);
    QuestionRecord record;
    record.id = doc.at("id").get<std::string>();
    record.domain = doc.at("domain").get<std::string>();
    record.question = doc.at("question").get<std::string>();
    record.rounds = doc.at("rounds").get<std::vector<std::string>>();
    record.entities = doc.at("entities").get<std::vector<std::string>>();
    record.common = doc.at("common").get<std::vector<std::string>>();
    record.ambiguous = doc.at("ambiguous").get<std::vector<std::string>>();
    record.partial = doc.value("partial", false);
    return record;
}

void save_dataset(const std::string& path,
                  const std::vector<QuestionRecord>& records,
                  const std::string& config_hash) {
    std::ofstream out(path);
    if (!out) {
        throw_error(ErrorCode::IoFailure, "cannot write dataset: " + path);
    }
    for (const auto& record : records) {
        out << record_to_json(record) << "\n";
    }

    json meta = {{"records", records.size()}, {"config_hash", config_hash}};
    meta["written_at_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count();
    std::ofstream meta_out(path + ".meta.json");
    if (meta_out) {
        meta_out << meta.dump(2) << "\n";
    }
}

std::vector<QuestionRecord> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw_error(ErrorCode::IoFailure, "cannot open dataset: " + path);
    }
    std::vector<QuestionRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(record_from_json(line));
    }
    return records;
}

}  // namespace bprobe::dataset
