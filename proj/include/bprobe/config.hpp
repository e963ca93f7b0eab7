#ifndef BPROBE_CONFIG_HPP
#define BPROBE_CONFIG_HPP

#include <cstdint>
#include <string>

#include "bprobe/anchors.hpp"
#include "bprobe/dataset.hpp"
#include "bprobe/decoder.hpp"
#include "bprobe/metrics.hpp"

namespace bprobe {

/// Everything a run needs, aggregated from the config file and CLI flags.
/// Defaults match the reference setup: lambda 80, top_p 0.9, temperature
/// 0.7, repetition penalty 1.15, 3 collection rounds, 75/25 split.
struct RunConfig {
    // paths
    std::string dataset_path = "dataset.jsonl";
    std::string discovery_path = "discovery.jsonl";
    std::string cache_path;    // eval cache JSONL; empty = in-memory only
    std::string report_dir = "reports";
    std::string model_file;    // mock model JSON; empty = built-in demo model
    std::string vocab_file;    // tokenizer vocabulary; empty = demo vocabulary
    std::string remote_socket; // logits server socket; empty = mock model
    std::string embedding_file; // output-head matrix for the remote model
    int remote_eos_token = -1;  // -1: remote decodes run to max_tokens
    std::string override_file; // reviewed verdict overrides (JSONL)
    std::string verdict_rules_file;
    std::string replay_transcript;
    std::string domains_raw_path;  // raw domain response dump for repair

    decoder::SamplerConfig sampler;
    dataset::CollectionConfig collection;
    anchors::AnchorOptions anchor_options;

    double split_fraction = 0.75;
    int max_questions = 0;  // cap on questions per dataset build; 0 = no cap
    metrics::ExactMatchMode em_mode = metrics::ExactMatchMode::Precision;
    metrics::OverlapGranularity aor_granularity = metrics::OverlapGranularity::Entity;

    std::string api_url;
    std::string api_key;
    int rate_limit_per_minute = 60;
    int retry_attempts = 3;

    std::uint64_t seed = 1;
};

// Parses a flat key = value config file. '#' starts a comment; ${NAME}
// expands from the environment (empty when unset); unknown keys are
// rejected so typos fail loudly instead of silently running on defaults.
RunConfig load_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);

// Applies one key = value assignment to an existing config (the CLI uses
// this for overrides). Throws ConfigInvalid on unknown keys or bad values.
void apply_config_entry(RunConfig& config, const std::string& key,
                        const std::string& value);

}  // namespace bprobe

#endif  // BPROBE_CONFIG_HPP
