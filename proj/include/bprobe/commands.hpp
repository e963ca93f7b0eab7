#ifndef BPROBE_COMMANDS_HPP
#define BPROBE_COMMANDS_HPP

#include <memory>
#include <string>
#include <vector>

#include "bprobe/clients.hpp"
#include "bprobe/config.hpp"
#include "bprobe/dataset.hpp"
#include "bprobe/decoder.hpp"

namespace bprobe::commands {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitPartial = 2;
inline constexpr int kExitFatal = 3;

/// One question's discovery run: the decoded response, its parsed entities,
/// and what is left after removing answers the target already gave.
struct DiscoveryRecord {
    std::string question_id;
    std::string mode;
    double lambda = 0.0;
    std::vector<std::string> raw_entities;  // parsed from the decode, in order
    std::vector<std::string> new_entities;  // raw minus normalized matches of A
    double aor = 0.0;                       // overlap of raw against A
    std::string response_text;
};

void save_discovery(const std::string& path,
                    const std::vector<DiscoveryRecord>& records);
std::vector<DiscoveryRecord> load_discovery(const std::string& path);

// Wiring helpers, shared by the subcommands and the test fixtures.
// Chat: replay transcript if configured, else the HTTP endpoint.
std::unique_ptr<clients::ChatClient> make_chat_client(const RunConfig& config);
// Model: remote logits socket if configured, else mock file, else the
// built-in demo model. Tokenizer: vocab file, else the demo vocabulary.
std::unique_ptr<decoder::LanguageModel> make_language_model(const RunConfig& config);
std::unique_ptr<anchors::Tokenizer> make_tokenizer(const RunConfig& config);

// The per-question core of `discover`: anchors -> mass -> plan -> decode ->
// entity extraction; exposed so fixtures can run it without touching disk.
DiscoveryRecord discover_question(decoder::LanguageModel& model,
                                  const anchors::Tokenizer& tokenizer,
                                  const dataset::QuestionRecord& record,
                                  const RunConfig& config);

int cmd_build_dataset(const RunConfig& config);
int cmd_discover(const RunConfig& config);
int cmd_evaluate(const RunConfig& config);
int cmd_report(const RunConfig& config);
int cmd_selfcheck(const RunConfig& config);

}  // namespace bprobe::commands

#endif  // BPROBE_COMMANDS_HPP
