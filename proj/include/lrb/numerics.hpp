#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>

#include <lrb/types.hpp>

namespace lrb {

/// Eigen-decomposition of a symmetric matrix, eigenvalues non-increasing.
/// Columns of `eigenvectors` pair with entries of `eigenvalues`.
struct SymEig {
    Vector eigenvalues;
    Matrix eigenvectors;
};

inline constexpr double kSymmetryTol = 1e-12;
inline constexpr double kNegativeClamp = 1e-12;

inline SymEig sym_eig(const Matrix& a)
{
    if (a.rows() != a.cols() || a.rows() < 1)
        throw DomainError("sym_eig: matrix must be square and non-empty");
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < i; ++j)
            if (std::abs(a(i, j) - a(j, i)) > kSymmetryTol)
                throw DomainError("sym_eig: matrix is not symmetric");

    Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
    if (solver.info() != Eigen::Success)
        throw NumericError("sym_eig: eigen-solver did not converge");

    // Eigen returns ascending order.
    const Index k = a.rows();
    SymEig out{Vector(k), Matrix(k, k)};
    for (Index i = 0; i < k; ++i) {
        double mu = solver.eigenvalues()(k - 1 - i);
        if (mu < 0.0 && mu >= -kNegativeClamp) mu = 0.0;
        out.eigenvalues(i) = mu;
        out.eigenvectors.col(i) = solver.eigenvectors().col(k - 1 - i);
    }
    return out;
}

inline double soft_threshold(double z, double t)
{
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

inline double std_normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

/// Truncated series sum_{j=0}^{terms} (-A)^j, which approximates (I + A)^{-1}
/// when the max absolute row sum of A is below one.
inline Matrix neumann_inverse(const Matrix& a, int terms)
{
    if (a.rows() != a.cols()) throw DomainError("neumann_inverse: matrix must be square");
    if (terms < 0) throw DomainError("neumann_inverse: terms must be nonnegative");
    const double row_norm = a.rows() == 0 ? 0.0 : a.cwiseAbs().rowwise().sum().maxCoeff();
    if (!(row_norm < 1.0)) throw DomainError("neumann_inverse: ||A||_inf must be < 1");

    const Index k = a.rows();
    Matrix sum = Matrix::Identity(k, k);
    Matrix power = Matrix::Identity(k, k);
    for (int j = 1; j <= terms; ++j) {
        power = -(power * a).eval();
        sum += power;
    }
    return sum;
}

/// Pairwise summation in fixed order; result depends only on the input order.
inline double pairwise_sum(std::span<const double> xs)
{
    constexpr std::size_t kBlock = 8;
    if (xs.size() <= kBlock) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
    std::size_t count = 0;
};

/// Sample mean and its standard error (sample sd / sqrt(count)).
inline MeanSe mean_and_se(std::span<const double> xs)
{
    MeanSe out;
    out.count = xs.size();
    if (xs.empty()) return out;
    out.mean = pairwise_sum(xs) / static_cast<double>(xs.size());
    if (xs.size() < 2) return out;
    std::vector<double> sq(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double d = xs[i] - out.mean;
        sq[i] = d * d;
    }
    const double var = pairwise_sum(sq) / static_cast<double>(xs.size() - 1);
    out.se = std::sqrt(var / static_cast<double>(xs.size()));
    return out;
}

/// Mean of 0/1 indicators with the binomial standard error.
inline MeanSe proportion(std::span<const double> indicators)
{
    MeanSe out;
    out.count = indicators.size();
    if (indicators.empty()) return out;
    out.mean = pairwise_sum(indicators) / static_cast<double>(indicators.size());
    out.se = std::sqrt(out.mean * (1.0 - out.mean) / static_cast<double>(indicators.size()));
    return out;
}

} // namespace lrb
