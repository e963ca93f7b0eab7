#ifndef BPROBE_MOCK_MODEL_HPP
#define BPROBE_MOCK_MODEL_HPP

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "bprobe/decoder.hpp"

namespace bprobe::mock {

/// Desk-scale language model double. step(c) is exactly
/// embedding * context_map(c), where context_map is a deterministic seeded
/// function of the context ids.
///
/// Two behaviors:
///  - kRandom: context_map draws a pseudo-random hidden vector keyed by
///    (seed, context). Good for sampling-oracle tests.
///  - kStructuredList: context_map walks a bullet-list grammar
///    ("- <entity>\n" lines) so decode output parses as an answer list.
///    Entity-slot activations are a fixed base vector plus seeded per-step
///    noise; all other positions are driven deterministically.
class MockLanguageModel : public decoder::LanguageModel {
public:
    enum class Behavior { kRandom, kStructuredList };

    struct Config {
        Behavior behavior = Behavior::kRandom;
        std::uint64_t seed = 1;
        int eos_token = -1;       // -1: never emitted by the random mock
        double hidden_scale = 1.0;

        // kStructuredList only:
        int dash_token = -1;
        int newline_token = -1;
        std::set<int> entity_tokens;
        Eigen::VectorXd slot_hidden;      // base activation at entity slots
        Eigen::VectorXd dash_hidden;
        Eigen::VectorXd newline_hidden;
        Eigen::VectorXd eos_hidden;
        std::vector<int> noise_dims;      // dims receiving per-step noise
        double noise_scale = 0.0;
        int entities_per_response = 0;    // 0: unlimited
    };

    MockLanguageModel(linalg::EmbeddingMatrix embedding, Config config);

    // JSON description pointing at an EMBD binary (path resolved relative
    // to the JSON file's directory).
    static MockLanguageModel load(const std::string& path);
    void save(const std::string& path, const std::string& embedding_file) const;

    Eigen::VectorXd step(std::span<const int> context) override;
    const linalg::EmbeddingMatrix& embedding() const override { return embedding_; }
    int eos_token() const override { return config_.eos_token; }

    Eigen::VectorXd context_map(std::span<const int> context) const;
    const Config& config() const { return config_; }

private:
    Eigen::VectorXd random_hidden(std::span<const int> context) const;
    Eigen::VectorXd structured_hidden(std::span<const int> context) const;

    linalg::EmbeddingMatrix embedding_;
    Config config_;
};

}  // namespace bprobe::mock

#endif  // BPROBE_MOCK_MODEL_HPP
