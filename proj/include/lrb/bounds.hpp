#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <lrb/types.hpp>

namespace lrb {

// Scalar factors appearing in the dominance bounds.

/// (x + 2a) / (x + a)^2, decreasing in x >= 0.
inline double factor_f1(double x, double a)
{
    return (x + 2.0 * a) / ((x + a) * (x + a));
}

/// x(2x + 1) / (x + 1)^2, increasing on [0, inf) with limit 2.
inline double factor_f2(double x)
{
    return x * (2.0 * x + 1.0) / ((x + 1.0) * (x + 1.0));
}

/// x / (x + a)^2, maximized at x = a with value 1/(4a).
inline double factor_f3(double x, double a)
{
    return x / ((x + a) * (x + a));
}

/// sqrt(x)(2x + 1) / (x + 1)^2; unimodal, peak near x = 1.78.
inline double factor_f4(double x)
{
    return std::sqrt(x) * (2.0 * x + 1.0) / ((x + 1.0) * (x + 1.0));
}

struct ScalarMax {
    double argmax = 0.0;
    double value = 0.0;
};

/// Golden-section search for the maximum of a unimodal f on [lo, hi].
template <class F>
ScalarMax golden_section_max(F&& f, double lo, double hi, double tol = 1e-10)
{
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    const double x = 0.5 * (a + b);
    return {x, f(x)};
}

inline ScalarMax f4_maximum()
{
    return golden_section_max(factor_f4, 0.0, 10.0);
}

/// Inputs to the dominance bounds. All expectations are already divided by n:
/// exp_max_t0 estimates E||X_T0' eps||_inf / n and sqrt_second_moment
/// estimates sqrt(E||X' eps||_inf^2) / n.
struct BoundInputs {
    double lambda_l = 0.0;
    double c = 3.0;
    Index n = 1;
    Index p = 1;
    double sigma = 0.0;
    double p_nonempty = 1.0;
    IndexSet t0;
    double exp_max_t0 = 0.0;
    double exp_max_full = 0.0;
    double sqrt_second_moment = 0.0;
    double p_not_contained = 0.0;
    double p_neq_s0 = 0.0;

    void validate() const
    {
        auto prob = [](double v, const char* name) {
            if (!(v >= 0.0 && v <= 1.0)) throw DomainError(std::string("bound inputs: ") + name + " must lie in [0, 1]");
        };
        prob(p_nonempty, "p_nonempty");
        prob(p_not_contained, "p_not_contained");
        prob(p_neq_s0, "p_neq_s0");
        if (!(lambda_l > 0.0)) throw DomainError("bound inputs: lambda_L must be positive");
        if (!(c > 0.0)) throw DomainError("bound inputs: c must be positive");
        if (n < 1 || p < 1) throw DomainError("bound inputs: n and p must be positive");
        if (sigma < 0.0 || exp_max_t0 < 0.0 || exp_max_full < 0.0 || sqrt_second_moment < 0.0)
            throw DomainError("bound inputs: scales must be nonnegative");
    }
};

/// Leading factor c(2c+1) / (2(c+1)^2) = f2(c)/2.
inline double thm31_leading_factor(double c)
{
    return factor_f2(c) / 2.0;
}

/// (2 lambda/c) [ f2(c)/2 lambda P(E != {}) - E||X_T0'eps||/n
///                - sqrt(E||X'eps||^2)/n sqrt(P(E not in T0)) ], for one T0; c > 2.
inline double bound_thm31(const BoundInputs& in)
{
    in.validate();
    if (!(in.c > 2.0)) throw DomainError("bound_thm31: requires c > 2");
    const double lam = in.lambda_l;
    const double bracket = thm31_leading_factor(in.c) * lam * in.p_nonempty - in.exp_max_t0 -
                           in.sqrt_second_moment * std::sqrt(in.p_not_contained);
    return 2.0 * lam / in.c * bracket;
}

inline double bound_cor35(double lambda_l, double c, double p_nonempty, double exp_max_full)
{
    if (!(c > 2.0)) throw DomainError("bound_cor35: requires c > 2");
    if (!(lambda_l > 0.0)) throw DomainError("bound_cor35: lambda_L must be positive");
    if (!(p_nonempty >= 0.0 && p_nonempty <= 1.0)) throw DomainError("bound_cor35: p_nonempty must lie in [0, 1]");
    return 2.0 * lambda_l / c * (thm31_leading_factor(c) * lambda_l * p_nonempty - exp_max_full);
}

/// Smallest lambda_L with a positive cor35 bound at this c:
/// exp_max_full / p_nonempty * 2(c+1)^2 / (c(2c+1)).
inline double cor35_positivity_threshold(double exp_max_full, double p_nonempty, double c)
{
    return exp_max_full / p_nonempty / thm31_leading_factor(c);
}

/// (lambda/sqrt(c)) [ f4(c) lambda P(E != {}) - sigma (1 + 1/sqrt(n)) sqrt(P(E != S0)) ].
inline double bound_thm314(double lambda_l, double c, double sigma, Index n, double p_nonempty, double p_neq_s0)
{
    if (!(c > 0.0)) throw DomainError("bound_thm314: c must be positive");
    if (!(lambda_l > 0.0)) throw DomainError("bound_thm314: lambda_L must be positive");
    if (n < 1) throw DomainError("bound_thm314: n must be positive");
    const double rc = std::sqrt(c);
    return lambda_l / rc *
           (factor_f4(c) * lambda_l * p_nonempty - sigma * (1.0 + 1.0 / std::sqrt(static_cast<double>(n))) * std::sqrt(p_neq_s0));
}

/// sigma sqrt(2 log(2p) / n): bound on E||X'eps||_inf / n.
inline double gaussian_max_bound(Index p, Index n, double sigma)
{
    if (p < 1 || n < 1) throw DomainError("gaussian_max_bound: p and n must be positive");
    return sigma * std::sqrt(2.0 * std::log(2.0 * static_cast<double>(p)) / static_cast<double>(n));
}

/// sigma^2 (2 log(4p) + 1) / n: bound on E||X'eps / n||_inf^2.
inline double second_moment_bound(Index p, Index n, double sigma)
{
    if (p < 1 || n < 1) throw DomainError("second_moment_bound: p and n must be positive");
    return sigma * sigma * (2.0 * std::log(4.0 * static_cast<double>(p)) + 1.0) / static_cast<double>(n);
}

/// (sigma / sqrt(n)) (sqrt(2 log(2K)) + delta sqrt(2 log(2p))) for delta-tight clusters.
inline double two_step_bound(Index k, Index p, Index n, double sigma, double delta)
{
    if (k < 1 || k > p) throw DomainError("two_step_bound: need 1 <= K <= p");
    if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("two_step_bound: delta must lie in (0, 1]");
    if (n < 1) throw DomainError("two_step_bound: n must be positive");
    return sigma / std::sqrt(static_cast<double>(n)) *
           (std::sqrt(2.0 * std::log(2.0 * static_cast<double>(k))) +
            delta * std::sqrt(2.0 * std::log(2.0 * static_cast<double>(p))));
}

struct BoundReport {
    double thm31_bound = 0.0;
    double cor35_bound = 0.0;
    double thm314_bound = 0.0;
    bool thm31_applicable = false;  // c > 2
    double f1 = 0.0;                // f1(|E| = 1, a = c) lower factor of H per unit lambda^2
    double f2 = 0.0;
    double f3_max = 0.0;            // f3 at its peak x = a = c
    double f4 = 0.0;
    double leading_factor = 0.0;    // f2(c) / 2
    double gaussian_max_bound = 0.0;
    double second_moment_bound = 0.0;
    double two_step_bound = 0.0;    // NaN unless cluster info supplied
    double positivity_threshold = 0.0;
};

/// Every bound and factor for one input set. `clusters`/`delta` feed the
/// two-step bound when positive.
inline BoundReport evaluate_bounds(const BoundInputs& in, Index clusters = 0, double delta = 0.0)
{
    in.validate();
    BoundReport r;
    r.f1 = factor_f1(1.0, in.c);
    r.f2 = factor_f2(in.c);
    r.f3_max = factor_f3(in.c, in.c);
    r.f4 = factor_f4(in.c);
    r.leading_factor = thm31_leading_factor(in.c);
    r.thm31_applicable = in.c > 2.0;
    if (r.thm31_applicable) {
        r.thm31_bound = bound_thm31(in);
        r.cor35_bound = bound_cor35(in.lambda_l, in.c, in.p_nonempty, in.exp_max_full);
    } else {
        r.thm31_bound = r.cor35_bound = std::nan("");
    }
    r.thm314_bound = bound_thm314(in.lambda_l, in.c, in.sigma, in.n, in.p_nonempty, in.p_neq_s0);
    r.gaussian_max_bound = gaussian_max_bound(in.p, in.n, in.sigma);
    r.second_moment_bound = second_moment_bound(in.p, in.n, in.sigma);
    r.two_step_bound = clusters > 0 ? two_step_bound(clusters, in.p, in.n, in.sigma, delta) : std::nan("");
    r.positivity_threshold = in.p_nonempty > 0.0 ? cor35_positivity_threshold(in.exp_max_full, in.p_nonempty, in.c)
                                                 : std::nan("");
    return r;
}

} // namespace lrb
