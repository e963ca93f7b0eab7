#include "bprobe/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace bprobe::decoder {

const char* mode_name(SuppressionMode mode) {
    switch (mode) {
        case SuppressionMode::Suppress: return "suppress";
        case SuppressionMode::Mask: return "mask";
        case SuppressionMode::PromptOnly: return "prompt";
    }
    return "?";
}

std::optional<SuppressionMode> mode_from_name(const std::string& name) {
    if (name == "suppress") return SuppressionMode::Suppress;
    if (name == "mask") return SuppressionMode::Mask;
    if (name == "prompt") return SuppressionMode::PromptOnly;
    return std::nullopt;
}

Eigen::VectorXd apply_repetition_penalty(const Eigen::VectorXd& logits,
                                         const std::vector<int>& history,
                                         double penalty) {
    Eigen::VectorXd out = logits;
    if (penalty == 1.0 || history.empty()) return out;
    std::set<int> unique(history.begin(), history.end());
    for (int id : unique) {
        if (id < 0 || id >= out.size()) continue;
        if (out[id] > 0.0) {
            out[id] /= penalty;
        } else {
            out[id] *= penalty;
        }
    }
    return out;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
    const double peak = logits.maxCoeff();
    Eigen::VectorXd exps = (logits.array() - peak).exp();
    return exps / exps.sum();
}

namespace {

// Indices sorted by probability descending, token id ascending on ties.
std::vector<int> sorted_candidates(const Eigen::VectorXd& probs) {
    std::vector<int> order(probs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (probs[a] != probs[b]) return probs[a] > probs[b];
        return a < b;
    });
    return order;
}

void check_distribution(const Eigen::VectorXd& probs, double top_p) {
    if (top_p <= 0.0 || top_p > 1.0) {
        throw_error(ErrorCode::ConfigInvalid,
                    "top_p must be in (0,1], got " + std::to_string(top_p));
    }
    double sum = 0.0;
    bool any_positive = false;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        const double p = probs[i];
        if (std::isnan(p)) {
            throw_error(ErrorCode::DegenerateDistribution, "NaN probability");
        }
        if (p > 0.0) any_positive = true;
        sum += p;
    }
    if (!any_positive) {
        throw_error(ErrorCode::DegenerateDistribution, "all probabilities zero");
    }
    if (std::abs(sum - 1.0) > 1e-6) {
        throw_error(ErrorCode::DegenerateDistribution,
                    "probabilities sum to " + std::to_string(sum));
    }
}

}  // namespace

std::vector<int> nucleus_set(const Eigen::VectorXd& probs, double top_p) {
    check_distribution(probs, top_p);
    const std::vector<int> order = sorted_candidates(probs);
    std::vector<int> kept;
    double cumulative = 0.0;
    for (int id : order) {
        kept.push_back(id);
        cumulative += probs[id];
        if (cumulative >= top_p) break;
    }
    return kept;
}

int nucleus_sample(const Eigen::VectorXd& probs, double top_p, SplitMix64& rng) {
    const std::vector<int> kept = nucleus_set(probs, top_p);
    double mass = 0.0;
    for (int id : kept) mass += probs[id];

    const double r = rng.next_double() * mass;
    double cdf = 0.0;
    for (int id : kept) {
        cdf += probs[id];
        if (r < cdf) return id;
    }
    return kept.back();  // rounding fallback
}

namespace {

void validate_config(const SamplerConfig& cfg) {
    if (cfg.lambda < 0.0) {
        throw_error(ErrorCode::ConfigInvalid, "lambda must be >= 0");
    }
    if (cfg.top_p <= 0.0 || cfg.top_p > 1.0) {
        throw_error(ErrorCode::ConfigInvalid, "top_p must be in (0,1]");
    }
    if (cfg.temperature <= 0.0) {
        throw_error(ErrorCode::ConfigInvalid, "temperature must be > 0");
    }
    if (cfg.repetition_penalty < 1.0) {
        throw_error(ErrorCode::ConfigInvalid, "repetition_penalty must be >= 1");
    }
    if (cfg.max_tokens < 1) {
        throw_error(ErrorCode::ConfigInvalid, "max_tokens must be >= 1");
    }
}

}  // namespace

DecodeResult decode(LanguageModel& model,
                    const std::vector<int>& prompt_tokens,
                    const linalg::SuppressionPlan* plan,
                    const SamplerConfig& cfg,
                    const anchors::Tokenizer* tokenizer,
                    std::vector<StepTrace>* trace) {
    validate_config(cfg);
    if (prompt_tokens.empty()) {
        throw_error(ErrorCode::ConfigInvalid, "prompt must be nonempty");
    }
    const bool needs_plan = cfg.mode != SuppressionMode::PromptOnly;
    if (needs_plan && plan == nullptr) {
        throw_error(ErrorCode::ConfigInvalid,
                    std::string(mode_name(cfg.mode)) + " mode requires a plan");
    }
    if (!needs_plan && plan != nullptr) {
        throw_error(ErrorCode::ConfigInvalid, "prompt mode takes no plan");
    }

    SplitMix64 rng(cfg.seed);
    std::vector<int> context = prompt_tokens;
    DecodeResult result;

    for (int step = 0; step < cfg.max_tokens; ++step) {
        Eigen::VectorXd raw;
        try {
            raw = model.step(context);
        } catch (const std::exception& e) {
            throw_error(ErrorCode::ModelStepFailure,
                        "step " + std::to_string(step) + ": " + e.what());
        }
        if (raw.size() != model.vocab_size()) {
            throw_error(ErrorCode::ModelStepFailure,
                        "step " + std::to_string(step) + ": model returned " +
                            std::to_string(raw.size()) + " logits, expected " +
                            std::to_string(model.vocab_size()));
        }

        Eigen::VectorXd adjusted;
        switch (cfg.mode) {
            case SuppressionMode::Suppress:
                adjusted = linalg::adjust_logits(raw, plan->suppression, cfg.lambda);
                break;
            case SuppressionMode::Mask:
                adjusted = linalg::adjust_logits_mask(raw, plan->mass, cfg.lambda);
                break;
            case SuppressionMode::PromptOnly:
                adjusted = raw;
                break;
        }
        if (trace) {
            trace->push_back(StepTrace{raw, adjusted, -1});
        }

        Eigen::VectorXd penalized =
            apply_repetition_penalty(adjusted, result.tokens, cfg.repetition_penalty);
        const Eigen::VectorXd probs = softmax(penalized / cfg.temperature);
        const int id = nucleus_sample(probs, cfg.top_p, rng);
        if (trace) trace->back().sampled = id;

        if (id == model.eos_token()) {
            result.hit_eos = true;
            break;
        }
        result.tokens.push_back(id);
        context.push_back(id);
    }

    if (tokenizer) result.text = tokenizer->decode(result.tokens);
    return result;
}

}  // namespace bprobe::decoder
