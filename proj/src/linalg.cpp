#include "bprobe/linalg.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "bprobe/rng.hpp"

namespace bprobe::linalg {

namespace {

std::int64_t effective_rank(
        const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>& cod) {
    // Count pivots of the triangular factor against the largest one.
    const auto& qtz = cod.matrixQTZ();
    const std::int64_t n = std::min(qtz.rows(), qtz.cols());
    if (n == 0) return 0;
    const double largest = std::abs(qtz(0, 0));
    if (largest == 0.0) return 0;
    std::int64_t rank = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        if (std::abs(qtz(i, i)) > EmbeddingMatrix::kRankThreshold * largest) ++rank;
    }
    return rank;
}

void check_finite(const Eigen::MatrixXd& m, const char* what) {
    if (!m.allFinite()) {
        throw_error(ErrorCode::DimensionMismatch,
                    std::string(what) + " contains non-finite entries");
    }
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(Eigen::MatrixXd data) : data_(std::move(data)) {
    if (data_.rows() < data_.cols() || data_.cols() < 1) {
        throw_error(ErrorCode::DimensionMismatch,
                    "embedding requires |V| >= d >= 1, got " +
                        std::to_string(data_.rows()) + "x" +
                        std::to_string(data_.cols()));
    }
    check_finite(data_, "embedding");
    cod_.compute(data_);
    rank_ = effective_rank(cod_);
}

Eigen::VectorXd EmbeddingMatrix::solve_least_squares(const Eigen::VectorXd& rhs) const {
    if (rhs.size() != data_.rows()) {
        throw_error(ErrorCode::DimensionMismatch,
                    "rhs length " + std::to_string(rhs.size()) +
                        " != vocab size " + std::to_string(data_.rows()));
    }
    return cod_.solve(rhs);
}

double EmbeddingMatrix::reconstruction_error() const {
    const Eigen::MatrixXd pinv_e = cod_.solve(data_);            // E+ E, d x d
    const double err = (data_ * pinv_e - data_).cwiseAbs().maxCoeff();
    return err;
}

EmbeddingMatrix EmbeddingMatrix::random(std::int64_t rows, std::int64_t cols,
                                        std::uint64_t seed) {
    SplitMix64 rng(seed);
    Eigen::MatrixXd m(rows, cols);
    for (std::int64_t i = 0; i < rows; ++i) {
        for (std::int64_t j = 0; j < cols; ++j) {
            m(i, j) = rng.next_signed();
        }
    }
    return EmbeddingMatrix(std::move(m));
}

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', 'D'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_raw(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    return value;
}

}  // namespace

void EmbeddingMatrix::save_binary(const std::string& path, bool as_f32) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_error(ErrorCode::IoFailure, "cannot open " + path + " for write");
    out.write(kMagic, 4);
    write_raw(out, kVersion);
    write_raw(out, static_cast<std::uint64_t>(data_.rows()));
    write_raw(out, static_cast<std::uint64_t>(data_.cols()));
    write_raw(out, static_cast<std::uint8_t>(as_f32 ? 0 : 1));
    for (std::int64_t i = 0; i < data_.rows(); ++i) {
        for (std::int64_t j = 0; j < data_.cols(); ++j) {
            if (as_f32) {
                write_raw(out, static_cast<float>(data_(i, j)));
            } else {
                write_raw(out, data_(i, j));
            }
        }
    }
    if (!out) throw_error(ErrorCode::IoFailure, "short write to " + path);
}

EmbeddingMatrix EmbeddingMatrix::load_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_error(ErrorCode::IoFailure, "cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw_error(ErrorCode::ParseFailure, path + ": bad magic, expected EMBD");
    }
    const auto version = read_raw<std::uint32_t>(in);
    if (version != kVersion) {
        throw_error(ErrorCode::ParseFailure,
                    path + ": unsupported version " + std::to_string(version));
    }
    const auto rows = static_cast<std::int64_t>(read_raw<std::uint64_t>(in));
    const auto cols = static_cast<std::int64_t>(read_raw<std::uint64_t>(in));
    const auto dtype = read_raw<std::uint8_t>(in);
    if (dtype > 1) {
        throw_error(ErrorCode::ParseFailure,
                    path + ": unknown dtype " + std::to_string(dtype));
    }
    if (rows <= 0 || cols <= 0 || rows < cols) {
        throw_error(ErrorCode::ParseFailure, path + ": bad shape");
    }
    Eigen::MatrixXd m(rows, cols);
    for (std::int64_t i = 0; i < rows; ++i) {
        for (std::int64_t j = 0; j < cols; ++j) {
            m(i, j) = (dtype == 0) ? static_cast<double>(read_raw<float>(in))
                                   : read_raw<double>(in);
        }
    }
    if (!in) throw_error(ErrorCode::ParseFailure, path + ": truncated data");
    return EmbeddingMatrix(std::move(m));
}

Eigen::VectorXd AnswerMassVector::dense() const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(length);
    for (const auto& [id, mass] : entries) v[id] = mass;
    return v;
}

double AnswerMassVector::sum() const {
    double total = 0.0;
    for (const auto& [id, mass] : entries) total += mass;
    return total;
}

AnswerMassVector build_answer_mass(const std::vector<int>& anchors,
                                   std::int64_t vocab_size) {
    if (anchors.empty()) {
        throw_error(ErrorCode::EmptyAnchorSet, "no anchor tokens");
    }
    AnswerMassVector mass;
    mass.length = vocab_size;
    for (int id : anchors) {
        if (id < 0 || id >= vocab_size) {
            throw_error(ErrorCode::TokenOutOfRange,
                        "anchor " + std::to_string(id) + " outside vocab of " +
                            std::to_string(vocab_size));
        }
        mass.entries[id] = 0.0;  // value assigned below once n is known
    }
    mass.n = static_cast<std::int64_t>(mass.entries.size());
    const double value = 1.0 / static_cast<double>(mass.n);
    for (auto& [id, m] : mass.entries) m = value;
    return mass;
}

SemanticEstimate estimate_semantics(const EmbeddingMatrix& embedding,
                                    const AnswerMassVector& mass,
                                    double ridge) {
    if (mass.length != embedding.rows()) {
        throw_error(ErrorCode::DimensionMismatch,
                    "mass length " + std::to_string(mass.length) +
                        " != vocab size " + std::to_string(embedding.rows()));
    }
    SemanticEstimate estimate;
    estimate.ridge = ridge;
    const Eigen::VectorXd dy = mass.dense();
    if (ridge > 0.0) {
        // Augmented system [E; sqrt(ridge) I] x = [dy; 0] keeps the solve in
        // factored form without forming normal equations.
        const std::int64_t v = embedding.rows();
        const std::int64_t d = embedding.cols();
        Eigen::MatrixXd aug(v + d, d);
        aug.topRows(v) = embedding.data();
        aug.bottomRows(d) = std::sqrt(ridge) * Eigen::MatrixXd::Identity(d, d);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(v + d);
        rhs.head(v) = dy;
        estimate.vector = aug.colPivHouseholderQr().solve(rhs);
    } else {
        estimate.vector = embedding.solve_least_squares(dy);
        estimate.rank_deficient = !embedding.full_column_rank();
    }
    return estimate;
}

SuppressionVector project_suppression(const EmbeddingMatrix& embedding,
                                      const SemanticEstimate& estimate) {
    if (estimate.vector.size() != embedding.cols()) {
        throw_error(ErrorCode::DimensionMismatch,
                    "estimate length " + std::to_string(estimate.vector.size()) +
                        " != hidden dim " + std::to_string(embedding.cols()));
    }
    return SuppressionVector{embedding.data() * estimate.vector};
}

Eigen::VectorXd adjust_logits(const Eigen::VectorXd& logits,
                              const SuppressionVector& suppression,
                              double lambda) {
    if (logits.size() != suppression.vector.size()) {
        throw_error(ErrorCode::DimensionMismatch,
                    "logits length " + std::to_string(logits.size()) +
                        " != suppression length " +
                        std::to_string(suppression.vector.size()));
    }
    Eigen::VectorXd adjusted(logits.size());
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
        adjusted[i] = logits[i] - lambda * suppression.vector[i];
    }
    return adjusted;
}

Eigen::VectorXd adjust_logits_mask(const Eigen::VectorXd& logits,
                                   const AnswerMassVector& mass,
                                   double lambda) {
    if (logits.size() != mass.length) {
        throw_error(ErrorCode::DimensionMismatch,
                    "logits length " + std::to_string(logits.size()) +
                        " != mass length " + std::to_string(mass.length));
    }
    Eigen::VectorXd adjusted = logits;
    for (const auto& [id, m] : mass.entries) {
        adjusted[id] = logits[id] - lambda * m;
    }
    return adjusted;
}

SuppressionPlan build_suppression_plan(const EmbeddingMatrix& embedding,
                                       const std::vector<int>& anchors,
                                       double ridge) {
    SuppressionPlan plan;
    plan.mass = build_answer_mass(anchors, embedding.rows());
    plan.estimate = estimate_semantics(embedding, plan.mass, ridge);
    if (plan.estimate.rank_deficient && ridge == 0.0) {
        plan.estimate = estimate_semantics(embedding, plan.mass, kDefaultRidge);
        plan.estimate.rank_deficient = true;  // keep the signal visible
    }
    plan.suppression = project_suppression(embedding, plan.estimate);
    return plan;
}

}  // namespace bprobe::linalg
