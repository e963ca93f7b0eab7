#ifndef BPROBE_DATASET_HPP
#define BPROBE_DATASET_HPP

#include <string>
#include <utility>
#include <vector>

#include "bprobe/clients.hpp"

namespace bprobe::dataset {

inline constexpr const char* kQuestionPrefix = "Tell me a list of";

/// One semi-open-ended question with its collected raw responses and the
/// extracted answer list, partitioned into the common prefix (assumed well
/// known to the target) and the ambiguous suffix (the boundary candidates).
struct QuestionRecord {
    std::string id;
    std::string domain;
    std::string question;
    std::vector<std::string> rounds;    // raw response per collection round
    std::vector<std::string> entities;  // ordered answer list A
    std::vector<std::string> common;
    std::vector<std::string> ambiguous;
    bool partial = false;  // collection stopped early; resumable

    bool operator==(const QuestionRecord&) const = default;
};

struct CollectionConfig {
    int rounds = 3;
    std::string followup_template = "Tell me more {LIST_SUBJECT}";
    std::vector<std::string> demos = {
        "Tell me a list of land animals unique to Australia.",
        "Tell me a list of fruits that grow on trees in tropical regions.",
    };
};

// Asks for question domains and parses the listed items, deduplicated in
// order. When raw_path is nonempty the raw response is written there first,
// so a ParseFailure still leaves the text on disk for manual repair.
std::vector<std::string> generate_domains(clients::ChatClient& client,
                                          const std::string& raw_path = "");

struct QuestionBatch {
    std::vector<std::string> questions;
    std::vector<std::string> warnings;  // one per dropped non-conforming item
};

// Generates candidate questions for one domain and keeps those that pass
// the template check (kQuestionPrefix). Dropped items become warnings.
QuestionBatch generate_questions(clients::ChatClient& client,
                                 const std::string& domain,
                                 const CollectionConfig& cfg);

// Round 0 asks q.question; each later round asks the follow-up phrasing with
// all earlier exchanges kept in the conversation. Rounds already present are
// treated as done, so a partial record resumes where it stopped. On client
// failure the collected prefix stays in place, q.partial is set, and the
// failure propagates.
void collect_answers(clients::ChatClient& client, QuestionRecord& q,
                     const CollectionConfig& cfg);

// The follow-up phrasing: the question with its list-request prefix replaced
// per the template ("Tell me a list of X" -> "Tell me more X").
std::string follow_up_question(const std::string& question,
                               const std::string& followup_template);

// Pulls list items ("1. X", "2) Y", "- Z", "• W") out of the raw rounds,
// strips markers and terminal punctuation, and keeps first occurrences in
// order, deduplicating on the normalized form.
std::vector<std::string> extract_entities(const std::vector<std::string>& rounds);

// common = first floor(fraction * N) entities, ambiguous = the rest; the
// ambiguous suffix is nonempty for any nonempty input when fraction < 1.
std::pair<std::vector<std::string>, std::vector<std::string>>
split_common_ambiguous(const std::vector<std::string>& entities,
                       double fraction = 0.75);

std::string make_question_id(const std::string& question);

// JSON-lines persistence, one record per line, plus a .meta.json sidecar
// with the config hash (written by save, ignored by load).
void save_dataset(const std::string& path,
                  const std::vector<QuestionRecord>& records,
                  const std::string& config_hash = "");
std::vector<QuestionRecord> load_dataset(const std::string& path);

std::string record_to_json(const QuestionRecord& record);
QuestionRecord record_from_json(const std::string& line);

}  // namespace bprobe::dataset

#endif  // BPROBE_DATASET_HPP
