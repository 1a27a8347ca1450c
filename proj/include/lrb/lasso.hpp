#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <lrb/numerics.hpp>
#include <lrb/types.hpp>

namespace lrb {

struct LassoOptions {
    // Stop when the largest coefficient change in a full pass is below
    // tol * max(1, ||beta||_inf).
    double tol = 1e-13;
    // Certified when duality gap <= tol_gap * max(1, primal).
    double tol_gap = 1e-8;
    // Equicorrelation membership: |(1/n) X_j'r| >= lambda (1 - tol_equi).
    double tol_equi = 1e-7;
    int max_iter = 20000;
    // Replace the final iterate by the exact active-block solve when that
    // solve is sign- and KKT-consistent.
    bool polish = true;
};

/// Lasso fit for (1/2n)||y - X beta||^2 + lambda ||beta||_1 together with
/// its equicorrelation set E and signs s (aligned with equi_set).
struct LassoSolution {
    Vector beta;
    IndexSet equi_set;
    std::vector<int> signs;
    double lambda = 0.0;
    double kkt_residual = 0.0;
    double duality_gap = 0.0;
    double primal = 0.0;
    int iterations = 0;
    bool converged = false;
    bool polished = false;
    bool certified = false;

    bool empty() const { return equi_set.empty(); }
    Vector sign_vector() const
    {
        Vector s(static_cast<Index>(signs.size()));
        for (std::size_t k = 0; k < signs.size(); ++k) s(static_cast<Index>(k)) = signs[k];
        return s;
    }
};

struct KktCertificate {
    double kkt_residual = 0.0;
    double duality_gap = 0.0;
    double primal = 0.0;
    // max over E of | |(1/n)X_j'r| - lambda |
    double boundary_deviation = 0.0;
    // min over j not in E of lambda - |(1/n)X_j'r|  (+inf when E covers everything)
    double interior_margin = std::numeric_limits<double>::infinity();
    int sign_mismatches = 0;
    bool support_in_equi_set = true;
    bool passes = false;
};

namespace detail {

struct KktState {
    Vector correlation;  // (1/n) X'(y - X beta)
    double primal = 0.0;
    double gap = 0.0;
    double kkt_residual = 0.0;
};

inline KktState kkt_state(const Matrix& x, const Vector& y, const Vector& beta, double lambda)
{
    const double n = static_cast<double>(x.rows());
    KktState st;
    Vector resid = y;
    for (Index j = 0; j < beta.size(); ++j)
        if (beta(j) != 0.0) resid.noalias() -= x.col(j) * beta(j);
    st.correlation.noalias() = x.transpose() * resid / n;
    st.primal = resid.squaredNorm() / (2.0 * n) + lambda * beta.lpNorm<1>();

    // Dual point u = alpha * resid scaled into {|X'u|/n <= lambda}.
    const double corr_max = st.correlation.lpNorm<Eigen::Infinity>();
    const double alpha = corr_max > lambda ? lambda / corr_max : 1.0;
    const double dual = (alpha * resid.dot(y) - 0.5 * alpha * alpha * resid.squaredNorm()) / n;
    st.gap = std::max(0.0, st.primal - dual);

    for (Index j = 0; j < beta.size(); ++j) {
        const double r = st.correlation(j);
        const double dev = beta(j) != 0.0 ? std::abs(r - lambda * (beta(j) > 0 ? 1.0 : -1.0))
                                          : std::max(0.0, std::abs(r) - lambda);
        st.kkt_residual = std::max(st.kkt_residual, dev);
    }
    return st;
}

} // namespace detail

/// Cyclic coordinate descent for the Lasso on a fixed design. The design is
/// held by reference and must outlive the solver. With `use_gram` the
/// covariance matrix X'X/n is cached once and shared read-only, so a solver
/// may be used from several threads at once.
class LassoSolver {
public:
    explicit LassoSolver(const Matrix& x) : LassoSolver(x, x.cols() <= 2000) {}

    LassoSolver(const Matrix& x, bool use_gram) : x_(&x), use_gram_(use_gram)
    {
        const double n = static_cast<double>(x.rows());
        diag_ = x.colwise().squaredNorm().transpose() / n;
        if (use_gram_) {
            gram_ = Matrix::Zero(x.cols(), x.cols());
            gram_.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose(), 1.0 / n);
            gram_.triangularView<Eigen::StrictlyUpper>() = gram_.transpose();
        }
    }

    const Matrix& x() const { return *x_; }
    bool uses_gram() const { return use_gram_; }
    const Matrix& gram() const { return gram_; }

    LassoSolution solve(const Vector& y, double lambda, const LassoOptions& opt = {}) const
    {
        const Matrix& x = *x_;
        const Index n = x.rows();
        const Index p = x.cols();
        if (!(lambda > 0.0) || !std::isfinite(lambda)) throw DomainError("solve_lasso: lambda_L must be positive");
        if (y.size() != n) throw DomainError("solve_lasso: y has the wrong length");

        const double inv_n = 1.0 / static_cast<double>(n);
        const Vector xty = x.transpose() * y * inv_n;

        LassoSolution sol;
        sol.lambda = lambda;
        sol.beta = Vector::Zero(p);

        if (xty.lpNorm<Eigen::Infinity>() <= lambda) {
            sol.converged = true;
            finalize(y, sol, opt);
            return sol;
        }

        // corr_j = (1/n) X_j'(y - X beta), maintained incrementally.
        Vector corr = xty;
        Vector resid;
        if (!use_gram_) resid = y;
        std::vector<Index> active;
        std::vector<char> is_active(static_cast<std::size_t>(p), 0);

        auto update = [&](Index j) -> double {
            const double d = diag_(j);
            if (!(d > 0.0)) return 0.0;
            const double cj = use_gram_ ? corr(j) : x.col(j).dot(resid) * inv_n;
            const double old = sol.beta(j);
            const double fresh = soft_threshold(cj + d * old, lambda) / d;
            const double delta = fresh - old;
            if (delta == 0.0) return 0.0;
            sol.beta(j) = fresh;
            if (use_gram_) corr.noalias() -= gram_.col(j) * delta;
            else resid.noalias() -= x.col(j) * delta;
            if (!is_active[static_cast<std::size_t>(j)]) {
                is_active[static_cast<std::size_t>(j)] = 1;
                active.push_back(j);
            }
            return std::abs(delta);
        };

        auto threshold = [&] { return opt.tol * std::max(1.0, sol.beta.lpNorm<Eigen::Infinity>()); };

        int iter = 0;
        while (iter < opt.max_iter) {
            ++iter;
            double change = 0.0;
            for (Index j = 0; j < p; ++j) change = std::max(change, update(j));
            if (change <= threshold()) {
                sol.converged = true;
                break;
            }
            while (iter < opt.max_iter) {
                ++iter;
                double inner = 0.0;
                for (Index j : active) inner = std::max(inner, update(j));
                if (inner <= threshold()) break;
            }
        }
        sol.iterations = iter;

        if (opt.polish) polish(y, sol, xty);
        finalize(y, sol, opt);
        return sol;
    }

private:
    Matrix active_gram(const IndexSet& a) const
    {
        const Index k = static_cast<Index>(a.size());
        Matrix g(k, k);
        if (use_gram_) {
            for (Index r = 0; r < k; ++r)
                for (Index c = 0; c < k; ++c) g(r, c) = gram_(a[static_cast<std::size_t>(r)], a[static_cast<std::size_t>(c)]);
        } else {
            const Matrix xa = select_columns(*x_, a);
            g.noalias() = xa.transpose() * xa / static_cast<double>(x_->rows());
        }
        return g;
    }

    void polish(const Vector& y, LassoSolution& sol, const Vector& xty) const
    {
        IndexSet support;
        for (Index j = 0; j < sol.beta.size(); ++j)
            if (sol.beta(j) != 0.0) support.push_back(j);
        if (support.empty() || static_cast<Index>(support.size()) > x_->rows()) return;

        const Index k = static_cast<Index>(support.size());
        Vector rhs(k);
        for (Index i = 0; i < k; ++i) {
            const Index j = support[static_cast<std::size_t>(i)];
            rhs(i) = xty(j) - sol.lambda * (sol.beta(j) > 0 ? 1.0 : -1.0);
        }
        Eigen::LDLT<Matrix> ldlt(active_gram(support));
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return;
        const Vector b = ldlt.solve(rhs);
        if (!b.allFinite()) return;

        Vector candidate = Vector::Zero(sol.beta.size());
        for (Index i = 0; i < k; ++i) {
            const Index j = support[static_cast<std::size_t>(i)];
            if ((b(i) > 0) != (sol.beta(j) > 0) || b(i) == 0.0) return;
            candidate(j) = b(i);
        }
        const auto before = detail::kkt_state(*x_, y, sol.beta, sol.lambda);
        const auto after = detail::kkt_state(*x_, y, candidate, sol.lambda);
        if (after.kkt_residual <= before.kkt_residual) {
            sol.beta = std::move(candidate);
            sol.polished = true;
        }
    }

    void finalize(const Vector& y, LassoSolution& sol, const LassoOptions& opt) const
    {
        const auto st = detail::kkt_state(*x_, y, sol.beta, sol.lambda);
        sol.primal = st.primal;
        sol.duality_gap = st.gap;
        sol.kkt_residual = st.kkt_residual;

        sol.equi_set.clear();
        sol.signs.clear();
        bool nonzero = false;
        for (Index j = 0; j < sol.beta.size(); ++j) nonzero = nonzero || sol.beta(j) != 0.0;
        if (nonzero) {
            const double cut = sol.lambda * (1.0 - opt.tol_equi);
            for (Index j = 0; j < sol.beta.size(); ++j) {
                const double r = st.correlation(j);
                if (std::abs(r) >= cut) {
                    sol.equi_set.push_back(j);
                    sol.signs.push_back(r > 0 ? 1 : -1);
                }
            }
        }

        bool support_in_e = true;
        for (Index j = 0; j < sol.beta.size(); ++j)
            if (sol.beta(j) != 0.0 && !std::binary_search(sol.equi_set.begin(), sol.equi_set.end(), j))
                support_in_e = false;

        sol.certified = sol.converged && support_in_e && sol.duality_gap <= opt.tol_gap * std::max(1.0, sol.primal) &&
                        sol.kkt_residual <= opt.tol_equi * sol.lambda;
    }

    const Matrix* x_;
    bool use_gram_;
    Vector diag_;
    Matrix gram_;
};

inline LassoSolution solve_lasso(const Matrix& x, const Vector& y, double lambda, const LassoOptions& opt = {})
{
    return LassoSolver(x).solve(y, lambda, opt);
}

/// Recomputes optimality evidence for `sol` from (X, y); never throws on
/// failure, it reports.
inline KktCertificate kkt_certificate(const Matrix& x, const Vector& y, const LassoSolution& sol,
                                      const LassoOptions& opt = {})
{
    KktCertificate cert;
    const auto st = detail::kkt_state(x, y, sol.beta, sol.lambda);
    cert.kkt_residual = st.kkt_residual;
    cert.duality_gap = st.gap;
    cert.primal = st.primal;

    std::vector<char> in_e(static_cast<std::size_t>(x.cols()), 0);
    for (std::size_t k = 0; k < sol.equi_set.size(); ++k) {
        const Index j = sol.equi_set[k];
        in_e[static_cast<std::size_t>(j)] = 1;
        const double r = st.correlation(j);
        cert.boundary_deviation = std::max(cert.boundary_deviation, std::abs(std::abs(r) - sol.lambda));
        if ((r > 0 ? 1 : -1) != sol.signs[k]) ++cert.sign_mismatches;
    }
    for (Index j = 0; j < x.cols(); ++j) {
        if (in_e[static_cast<std::size_t>(j)]) continue;
        cert.interior_margin = std::min(cert.interior_margin, sol.lambda - std::abs(st.correlation(j)));
        if (sol.beta(j) != 0.0) cert.support_in_equi_set = false;
    }

    const double tol = opt.tol_equi * sol.lambda;
    cert.passes = cert.kkt_residual <= tol && cert.boundary_deviation <= tol && cert.interior_margin > tol &&
                  cert.sign_mismatches == 0 && cert.support_in_equi_set &&
                  cert.duality_gap <= opt.tol_gap * std::max(1.0, cert.primal);
    return cert;
}

/// Upper bound Phi((lambda_L - ||Sigma_n beta0||_inf) / (sigma / sqrt(n)))
/// on the probability that the Lasso returns the zero vector.
inline double empty_set_probability_bound(double sigma_beta0_inf, double lambda, double sigma, Index n)
{
    if (!(sigma > 0.0)) throw DomainError("empty_set_probability_bound: sigma must be positive");
    if (!(lambda > 0.0)) throw DomainError("empty_set_probability_bound: lambda_L must be positive");
    if (sigma_beta0_inf < 0.0) throw DomainError("empty_set_probability_bound: norm must be nonnegative");
    const double z = (lambda - sigma_beta0_inf) / (sigma / std::sqrt(static_cast<double>(n)));
    return std::clamp(std_normal_cdf(z), 0.0, 1.0);
}

} // namespace lrb
