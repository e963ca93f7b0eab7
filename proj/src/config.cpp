#include "bprobe/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "bprobe/errors.hpp"

namespace bprobe {

namespace {

std::string trim(const std::string& s) {
    std::size_t begin = 0, end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(begin, end - begin);
}

std::string interpolate_env(const std::string& value) {
    std::string out;
    std::size_t pos = 0;
    while (pos < value.size()) {
        std::size_t open = value.find("${", pos);
        if (open == std::string::npos) {
            out += value.substr(pos);
            break;
        }
        std::size_t close = value.find('}', open + 2);
        if (close == std::string::npos) {
            throw_error(ErrorCode::ConfigInvalid,
                        "unterminated ${...} in value: " + value);
        }
        out += value.substr(pos, open - pos);
        const std::string name = value.substr(open + 2, close - open - 2);
        const char* env = std::getenv(name.c_str());
        if (env != nullptr) out += env;
        pos = close + 1;
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw_error(ErrorCode::ConfigInvalid, key + ": expected boolean, got " + value);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        double parsed = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return parsed;
    } catch (const std::exception&) {
        throw_error(ErrorCode::ConfigInvalid, key + ": expected number, got " + value);
    }
}

int parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        int parsed = std::stoi(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return parsed;
    } catch (const std::exception&) {
        throw_error(ErrorCode::ConfigInvalid, key + ": expected integer, got " + value);
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        unsigned long long parsed = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return parsed;
    } catch (const std::exception&) {
        throw_error(ErrorCode::ConfigInvalid, key + ": expected integer, got " + value);
    }
}

}  // namespace

void apply_config_entry(RunConfig& config, const std::string& key,
                        const std::string& raw_value) {
    const std::string value = interpolate_env(raw_value);

    if (key == "paths.dataset") config.dataset_path = value;
    else if (key == "paths.discovery") config.discovery_path = value;
    else if (key == "paths.cache") config.cache_path = value;
    else if (key == "paths.reports") config.report_dir = value;
    else if (key == "paths.model") config.model_file = value;
    else if (key == "paths.vocab") config.vocab_file = value;
    else if (key == "paths.remote_socket") config.remote_socket = value;
    else if (key == "paths.embedding") config.embedding_file = value;
    else if (key == "remote.eos_token") config.remote_eos_token = parse_int(key, value);
    else if (key == "paths.overrides") config.override_file = value;
    else if (key == "paths.verdict_rules") config.verdict_rules_file = value;
    else if (key == "paths.replay") config.replay_transcript = value;
    else if (key == "paths.domains_raw") config.domains_raw_path = value;
    else if (key == "sampler.lambda") config.sampler.lambda = parse_double(key, value);
    else if (key == "sampler.top_p") config.sampler.top_p = parse_double(key, value);
    else if (key == "sampler.temperature") config.sampler.temperature = parse_double(key, value);
    else if (key == "sampler.repetition_penalty") config.sampler.repetition_penalty = parse_double(key, value);
    else if (key == "sampler.max_tokens") config.sampler.max_tokens = parse_int(key, value);
    else if (key == "sampler.mode") {
        auto mode = decoder::mode_from_name(value);
        if (!mode) {
            throw_error(ErrorCode::ConfigInvalid, key + ": unknown mode " + value);
        }
        config.sampler.mode = *mode;
    }
    else if (key == "collection.rounds") config.collection.rounds = parse_int(key, value);
    else if (key == "collection.followup_template") config.collection.followup_template = value;
    else if (key == "collection.max_questions") config.max_questions = parse_int(key, value);
    else if (key == "anchors.include_space_variant") config.anchor_options.include_space_variant = parse_bool(key, value);
    else if (key == "anchors.include_case_variants") config.anchor_options.include_case_variants = parse_bool(key, value);
    else if (key == "anchors.strip_leading_articles") config.anchor_options.strip_leading_articles = parse_bool(key, value);
    else if (key == "split.fraction") config.split_fraction = parse_double(key, value);
    else if (key == "metrics.em_mode") {
        if (value == "precision") config.em_mode = metrics::ExactMatchMode::Precision;
        else if (value == "recall") config.em_mode = metrics::ExactMatchMode::Recall;
        else throw_error(ErrorCode::ConfigInvalid, key + ": expected precision|recall");
    }
    else if (key == "metrics.aor_granularity") {
        if (value == "entity") config.aor_granularity = metrics::OverlapGranularity::Entity;
        else if (value == "word") config.aor_granularity = metrics::OverlapGranularity::Word;
        else throw_error(ErrorCode::ConfigInvalid, key + ": expected entity|word");
    }
    else if (key == "client.api_url") config.api_url = value;
    else if (key == "client.api_key") config.api_key = value;
    else if (key == "client.rate_limit_per_minute") config.rate_limit_per_minute = parse_int(key, value);
    else if (key == "client.retry_attempts") config.retry_attempts = parse_int(key, value);
    else if (key == "seed") {
        config.seed = parse_u64(key, value);
        config.sampler.seed = config.seed;
    }
    else {
        throw_error(ErrorCode::ConfigInvalid, "unknown config key: " + key);
    }
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig config;
    config.sampler.seed = config.seed;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw_error(ErrorCode::ConfigInvalid,
                        "line " + std::to_string(line_no) + ": expected key = value");
        }
        apply_config_entry(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return config;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw_error(ErrorCode::ConfigInvalid, "cannot open config: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config_text(buffer.str());
}

}  // namespace bprobe
