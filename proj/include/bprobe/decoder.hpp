#ifndef BPROBE_DECODER_HPP
#define BPROBE_DECODER_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bprobe/anchors.hpp"
#include "bprobe/linalg.hpp"
#include "bprobe/rng.hpp"

namespace bprobe::decoder {

enum class SuppressionMode { Suppress, Mask, PromptOnly };

const char* mode_name(SuppressionMode mode);
std::optional<SuppressionMode> mode_from_name(const std::string& name);

struct SamplerConfig {
    double lambda = 80.0;
    double top_p = 0.9;
    double temperature = 0.7;
    double repetition_penalty = 1.15;
    int max_tokens = 512;
    std::uint64_t seed = 0;
    SuppressionMode mode = SuppressionMode::Suppress;
};

/// A language model observed through its logits. step computes the raw
/// pre-softmax head output for the next position; the output embedding is
/// exposed so suppression plans can be built against it.
class LanguageModel {
public:
    virtual ~LanguageModel() = default;
    virtual Eigen::VectorXd step(std::span<const int> context) = 0;
    virtual const linalg::EmbeddingMatrix& embedding() const = 0;
    virtual int eos_token() const = 0;

    std::int64_t vocab_size() const { return embedding().rows(); }
};

// For each unique token in history: positive logits divided by penalty,
// non-positive multiplied. Applied once per token regardless of repeat
// count, matching the convention of open inference stacks.
Eigen::VectorXd apply_repetition_penalty(const Eigen::VectorXd& logits,
                                         const std::vector<int>& history,
                                         double penalty);

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

// Keeps the smallest descending-probability prefix with cumulative mass
// >= top_p (ties broken by token id ascending), renormalizes, samples.
int nucleus_sample(const Eigen::VectorXd& probs, double top_p, SplitMix64& rng);

// Surviving token set of the nucleus truncation, for audit and tests.
std::vector<int> nucleus_set(const Eigen::VectorXd& probs, double top_p);

struct StepTrace {
    Eigen::VectorXd pre_suppression;
    Eigen::VectorXd post_suppression;
    int sampled = -1;
};

struct DecodeResult {
    std::vector<int> tokens;  // generated ids, eos excluded
    std::string text;         // rendered via the tokenizer when given
    bool hit_eos = false;
};

// Per-step pipeline: raw logits -> suppression (per mode) -> repetition
// penalty over generated history -> temperature -> softmax -> nucleus
// truncation -> seeded categorical sample. Stops at eos or max_tokens.
DecodeResult decode(LanguageModel& model,
                    const std::vector<int>& prompt_tokens,
                    const linalg::SuppressionPlan* plan,
                    const SamplerConfig& cfg,
                    const anchors::Tokenizer* tokenizer = nullptr,
                    std::vector<StepTrace>* trace = nullptr);

}  // namespace bprobe::decoder

#endif  // BPROBE_DECODER_HPP
