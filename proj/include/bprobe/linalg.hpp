#ifndef BPROBE_LINALG_HPP
#define BPROBE_LINALG_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "bprobe/errors.hpp"

namespace bprobe::linalg {

/// Output embedding head of the auxiliary model: one row per vocabulary
/// token, one column per hidden dimension. A rank-revealing orthogonal
/// factorization is computed once at load and reused for every
/// least-squares solve; the explicit pseudo-inverse is never materialized.
class EmbeddingMatrix {
public:
    // Relative diagonal threshold for the effective numerical rank:
    // a pivot counts when |t_ii| > kRankThreshold * |t_00|.
    static constexpr double kRankThreshold = 1e-10;

    explicit EmbeddingMatrix(Eigen::MatrixXd data);

    // Raw little-endian row-major binary file:
    //   magic "EMBD", u32 version, u64 rows, u64 cols, u8 dtype (0=f32, 1=f64)
    static EmbeddingMatrix load_binary(const std::string& path);
    void save_binary(const std::string& path, bool as_f32 = false) const;

    // Deterministic seeded generator for tests: entries uniform in [-1, 1).
    static EmbeddingMatrix random(std::int64_t rows, std::int64_t cols,
                                  std::uint64_t seed);

    std::int64_t rows() const { return data_.rows(); }
    std::int64_t cols() const { return data_.cols(); }
    const Eigen::MatrixXd& data() const { return data_; }

    std::int64_t rank() const { return rank_; }
    bool full_column_rank() const { return rank_ == data_.cols(); }

    // Minimum-norm least-squares solve through the cached factorization:
    // returns argmin_x |E x - rhs|_2 (the pseudo-inverse applied to rhs).
    Eigen::VectorXd solve_least_squares(const Eigen::VectorXd& rhs) const;

    // Max-abs error of the Moore-Penrose identity E (E+ E) = E, normalized
    // checkable against the matrix magnitude. Exercised by the invariant
    // suite; cheap only at test scale.
    double reconstruction_error() const;

private:
    Eigen::MatrixXd data_;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod_;
    std::int64_t rank_ = 0;
};

/// Delta-y: the initialized probability distribution of existing answers.
/// Mass 1/n on each of n unique anchor token positions, zero elsewhere.
struct AnswerMassVector {
    std::int64_t length = 0;                // |V|
    std::map<int, double> entries;          // token id -> 1/n
    std::int64_t n = 0;                     // unique anchor count

    Eigen::VectorXd dense() const;
    double sum() const;
};

/// Delta-x: least-squares semantic representation of the anchor mass.
struct SemanticEstimate {
    Eigen::VectorXd vector;       // length d
    bool rank_deficient = false;  // set when rank < d was hit with ridge = 0
    double ridge = 0.0;           // regularization actually applied
};

/// Delta-y-hat = E * delta-x: the projection of the anchor mass onto the
/// embedding column space. Subtracted (scaled) from logits.
struct SuppressionVector {
    Eigen::VectorXd vector;  // length |V|
};

// --- operations ---------------------------------------------------------

AnswerMassVector build_answer_mass(const std::vector<int>& anchors,
                                   std::int64_t vocab_size);

// argmin_x |E x - mass|_2 (+ ridge * |x|_2^2 when ridge > 0).
// With ridge = 0 on a rank-deficient E the minimum-norm solution is
// returned and the result is flagged rank_deficient; the caller may retry
// with ridge > 0.
SemanticEstimate estimate_semantics(const EmbeddingMatrix& embedding,
                                    const AnswerMassVector& mass,
                                    double ridge = 0.0);

SuppressionVector project_suppression(const EmbeddingMatrix& embedding,
                                      const SemanticEstimate& estimate);

// y2[i] = y1[i] - lambda * suppression[i]; a single subtraction per element.
Eigen::VectorXd adjust_logits(const Eigen::VectorXd& logits,
                              const SuppressionVector& suppression,
                              double lambda);

// MASK baseline: y2 = y1 - lambda * mass. Anchor tokens only, no
// propagation to near-duplicates.
Eigen::VectorXd adjust_logits_mask(const Eigen::VectorXd& logits,
                                   const AnswerMassVector& mass,
                                   double lambda);

/// Per-question bundle, immutable after build and reused at every decode
/// step. When the head is rank deficient and no ridge was requested, a
/// default ridge of 1e-6 is applied automatically.
struct SuppressionPlan {
    AnswerMassVector mass;
    SemanticEstimate estimate;
    SuppressionVector suppression;
};

constexpr double kDefaultRidge = 1e-6;

SuppressionPlan build_suppression_plan(const EmbeddingMatrix& embedding,
                                       const std::vector<int>& anchors,
                                       double ridge = 0.0);

}  // namespace bprobe::linalg

#endif  // BPROBE_LINALG_HPP
