#ifndef BPROBE_TESTS_SVD_ORACLE_HPP
#define BPROBE_TESTS_SVD_ORACLE_HPP

// Brute-force least-squares oracle used to cross-check the production
// solver. Computes the full SVD by one-sided Jacobi over plain vectors;
// deliberately shares no code (and no linear-algebra library) with the
// implementation under test.

#include <cmath>
#include <cstddef>
#include <vector>

namespace svd_oracle {

using Matrix = std::vector<std::vector<double>>;  // row-major, m x n

struct Svd {
    std::vector<std::vector<double>> u_cols;  // columns of U, each length m
    std::vector<double> sigma;                // n singular values, unsorted
    std::vector<std::vector<double>> v_cols;  // columns of V, each length n
};

inline double dot(const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

// One-sided Jacobi: rotate column pairs of B = A V until mutually
// orthogonal. Then sigma_j = |B_j|, U_j = B_j / sigma_j.
inline Svd jacobi_svd(const Matrix& a) {
    const std::size_t m = a.size();
    const std::size_t n = a.empty() ? 0 : a[0].size();

    std::vector<std::vector<double>> b(n, std::vector<double>(m));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) b[j][i] = a[i][j];
    }
    std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) v[j][j] = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double worst = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = dot(b[p], b[q]);
                const double app = dot(b[p], b[p]);
                const double aqq = dot(b[q], b[q]);
                const double denom = std::sqrt(app * aqq);
                if (denom > 0.0) worst = std::max(worst, std::abs(apq) / denom);
                if (apq == 0.0 || denom == 0.0 ||
                    std::abs(apq) <= 1e-300) {
                    continue;
                }
                const double tau = (aqq - app) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double bp = b[p][i], bq = b[q][i];
                    b[p][i] = c * bp - s * bq;
                    b[q][i] = s * bp + c * bq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vp = v[p][i], vq = v[q][i];
                    v[p][i] = c * vp - s * vq;
                    v[q][i] = s * vp + c * vq;
                }
            }
        }
        if (worst < 1e-15) break;
    }

    Svd out;
    out.sigma.resize(n);
    out.u_cols.assign(n, std::vector<double>(m, 0.0));
    out.v_cols = std::move(v);
    for (std::size_t j = 0; j < n; ++j) {
        const double norm = std::sqrt(dot(b[j], b[j]));
        out.sigma[j] = norm;
        if (norm > 0.0) {
            for (std::size_t i = 0; i < m; ++i) out.u_cols[j][i] = b[j][i] / norm;
        }
    }
    return out;
}

// Minimum-norm solution of min |A x - rhs|: x = V diag(1/sigma) U^T rhs,
// dropping singular values below a relative threshold.
inline std::vector<double> pinv_solve(const Matrix& a,
                                      const std::vector<double>& rhs,
                                      double rel_threshold = 1e-12) {
    const Svd svd = jacobi_svd(a);
    const std::size_t n = svd.sigma.size();
    double largest = 0.0;
    for (double s : svd.sigma) largest = std::max(largest, s);
    std::vector<double> x(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        if (svd.sigma[j] <= rel_threshold * largest) continue;
        const double coeff = dot(svd.u_cols[j], rhs) / svd.sigma[j];
        for (std::size_t i = 0; i < n; ++i) x[i] += coeff * svd.v_cols[j][i];
    }
    return x;
}

// A x for the projection step of the oracle.
inline std::vector<double> matvec(const Matrix& a, const std::vector<double>& x) {
    std::vector<double> y(a.size(), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < x.size(); ++j) y[i] += a[i][j] * x[j];
    }
    return y;
}

}  // namespace svd_oracle

#endif  // BPROBE_TESTS_SVD_ORACLE_HPP
