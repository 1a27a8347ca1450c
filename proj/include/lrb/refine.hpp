#pragma once

#include <cmath>

#include <lrb/lasso.hpp>
#include <lrb/numerics.hpp>
#include <lrb/types.hpp>

namespace lrb {

/// Ridge correction on the equicorrelation set E, penalized toward the Lasso
/// fit, with lambda_R = c |E|. beta_refined = beta_L + delta_hat.
struct RefinedEstimate {
    Vector delta_hat;
    Vector beta_refined;
    double lambda_r = 0.0;
    double c = 0.0;
    double h_value = 0.0;
    double l1_delta = 0.0;
    // sign(delta_hat_E) == s componentwise (guaranteed only when lambda_R > 2|E|).
    bool signs_aligned = true;
};

/// Sigma_{n,E} = X_E'X_E / n.
inline Matrix restricted_gram(const Matrix& x, const IndexSet& e)
{
    const Matrix xe = select_columns(x, e);
    Matrix g = xe.transpose() * xe / static_cast<double>(x.rows());
    return (0.5 * (g + g.transpose())).eval();
}

/// H_{E,s} = lambda_L^2 s'P diag((mu_i + 2 lambda_R) / (mu_i + lambda_R)^2) P's
/// evaluated through the eigen-decomposition of Sigma_{n,E}; zero on E = {}.
inline double compute_h(const LassoSolution& sol, const RefinedEstimate& ref, const Matrix& gram_e)
{
    if (sol.equi_set.empty()) return 0.0;
    const SymEig eig = sym_eig(gram_e);
    const Vector proj = eig.eigenvectors.transpose() * sol.sign_vector();
    double h = 0.0;
    for (Index i = 0; i < proj.size(); ++i) {
        const double mu = eig.eigenvalues(i);
        const double denom = mu + ref.lambda_r;
        h += proj(i) * proj(i) * (mu + 2.0 * ref.lambda_r) / (denom * denom);
    }
    return sol.lambda * sol.lambda * h;
}

/// Same quantity from its definition 2 lambda_L <delta_E, s> - (1/n)||X_E delta_E||^2.
inline double h_definitional(const Matrix& x, const LassoSolution& sol, const RefinedEstimate& ref)
{
    if (sol.equi_set.empty()) return 0.0;
    double inner = 0.0;
    Vector fit = Vector::Zero(x.rows());
    for (std::size_t k = 0; k < sol.equi_set.size(); ++k) {
        const Index j = sol.equi_set[k];
        inner += ref.delta_hat(j) * sol.signs[k];
        fit.noalias() += x.col(j) * ref.delta_hat(j);
    }
    return 2.0 * sol.lambda * inner - fit.squaredNorm() / static_cast<double>(x.rows());
}

/// Lasso-Ridge refinement from the KKT closed form: (Sigma_{n,E} + lambda_R I) delta_E = lambda_L s.
/// `gram_e` may be supplied to skip recomputing Sigma_{n,E}.
inline RefinedEstimate refine(const Matrix& x, const LassoSolution& sol, double c, const Matrix* gram_e = nullptr)
{
    if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("refine: c must be positive");
    const Index p = x.cols();
    RefinedEstimate ref;
    ref.c = c;
    ref.delta_hat = Vector::Zero(p);
    ref.beta_refined = sol.beta;
    if (sol.equi_set.empty()) return ref;

    const Index k = static_cast<Index>(sol.equi_set.size());
    const Matrix owned = gram_e ? Matrix() : restricted_gram(x, sol.equi_set);
    const Matrix& g = gram_e ? *gram_e : owned;
    ref.lambda_r = c * static_cast<double>(k);

    Matrix shifted = g;
    shifted.diagonal().array() += ref.lambda_r;
    Eigen::LLT<Matrix> llt(shifted);
    if (llt.info() != Eigen::Success) throw NumericError("refine: shifted Gram matrix is not positive definite");
    const Vector s = sol.sign_vector();
    const Vector delta_e = llt.solve(sol.lambda * s);

    for (Index i = 0; i < k; ++i) {
        const Index j = sol.equi_set[static_cast<std::size_t>(i)];
        ref.delta_hat(j) = delta_e(i);
        if ((delta_e(i) > 0 ? 1 : -1) != sol.signs[static_cast<std::size_t>(i)] || delta_e(i) == 0.0)
            ref.signs_aligned = false;
    }
    ref.beta_refined = sol.beta + ref.delta_hat;
    ref.l1_delta = delta_e.lpNorm<1>();
    ref.h_value = compute_h(sol, ref, g);
    return ref;
}

/// Delta = (1/n)(||X(beta_L - beta0)||^2 - ||X(beta_R - beta0)||^2) for one realization.
inline double prediction_gap(const Matrix& x, const Vector& beta0, const LassoSolution& sol, const RefinedEstimate& ref)
{
    const double n = static_cast<double>(x.rows());
    const Vector lasso_err = x * (sol.beta - beta0);
    const Vector refined_err = x * (ref.beta_refined - beta0);
    return (lasso_err.squaredNorm() - refined_err.squaredNorm()) / n;
}

/// (2/n) <X_E delta_E, eps>: the stochastic part separating Delta from H.
inline double noise_interaction(const Matrix& x, const RefinedEstimate& ref, const Vector& eps)
{
    return 2.0 * (x * ref.delta_hat).dot(eps) / static_cast<double>(x.rows());
}

} // namespace lrb
