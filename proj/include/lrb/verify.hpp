#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/QR>

#include <lrb/bounds.hpp>
#include <lrb/designs.hpp>
#include <lrb/experiments.hpp>
#include <lrb/lasso.hpp>
#include <lrb/numerics.hpp>
#include <lrb/random.hpp>
#include <lrb/refine.hpp>

namespace lrb {

// ---------------------------------------------------------------------------
// Random certified Lasso instances
// ---------------------------------------------------------------------------

struct Instance {
    Matrix x;
    Vector beta0;
    Vector eps;
    Vector y;
    double sigma = 1.0;
    LassoSolution sol;
};

struct InstanceRange {
    Index n_lo = 20, n_hi = 200;
    Index p_lo = 10, p_hi = 500;
};

/// Draws designs (iid, equicorrelated or AR(1)), sparse signals and noise
/// until the Lasso solve is certified with a non-empty E. lambda_L is a
/// random multiple in [0.5, 2] of the universal rate.
inline Instance sample_instance(std::uint64_t seed, const InstanceRange& range = {})
{
    Rng rng(seed);
    for (int attempt = 0; attempt < 100; ++attempt) {
        Instance in;
        const auto n = static_cast<Index>(range.n_lo + static_cast<Index>(rng.next() % static_cast<std::uint64_t>(range.n_hi - range.n_lo + 1)));
        const auto p = static_cast<Index>(range.p_lo + static_cast<Index>(rng.next() % static_cast<std::uint64_t>(range.p_hi - range.p_lo + 1)));
        DesignSpec spec;
        switch (rng.next() % 3) {
        case 0: spec.kind = DesignKind::iid_gaussian; break;
        case 1: spec.kind = DesignKind::equicorrelated; spec.rho = rng.uniform(0.0, 0.6); break;
        default: spec.kind = DesignKind::ar1; spec.rho = rng.uniform(-0.8, 0.8); break;
        }
        in.x = generate_design(n, p, spec, rng.next()).x;
        const Index k = 1 + static_cast<Index>(rng.next() % static_cast<std::uint64_t>(std::min<Index>(10, p)));
        const TrueModel model = make_true_model(p, k, rng.uniform(0.2, 2.0), SupportPlacement::random, rng.next());
        in.beta0 = model.beta0;
        in.sigma = rng.uniform(0.2, 2.0);
        NoiseSpec ns;
        ns.sigma = in.sigma;
        in.eps = generate_noise(n, ns, rng.next());
        in.y = in.x * in.beta0 + in.eps;
        const double lambda = rng.uniform(0.5, 2.0) * gaussian_max_bound(p, n, in.sigma);
        in.sol = solve_lasso(in.x, in.y, lambda);
        if (in.sol.certified && !in.sol.empty()) return in;
    }
    throw NumericError("sample_instance: no certified non-empty instance found");
}

/// Ridge step minimised directly: argmin (1/2n)||y - X beta_L - X_E d||^2 + (lambda_R/2)||d||^2,
/// as the least-squares problem [X_E / sqrt(n); sqrt(lambda_R) I] d = [r / sqrt(n); 0] via QR.
inline Vector direct_ridge_delta(const Matrix& x, const Vector& y, const LassoSolution& sol, double lambda_r)
{
    const Index n = x.rows();
    const auto k = static_cast<Index>(sol.equi_set.size());
    const double rn = std::sqrt(static_cast<double>(n));
    Matrix a = Matrix::Zero(n + k, k);
    a.topRows(n) = select_columns(x, sol.equi_set) / rn;
    a.bottomRows(k).diagonal().setConstant(std::sqrt(lambda_r));
    Vector b = Vector::Zero(n + k);
    b.head(n) = (y - x * sol.beta) / rn;
    return a.householderQr().solve(b);
}

// ---------------------------------------------------------------------------
// Property suites
// ---------------------------------------------------------------------------

struct SuiteResult {
    std::string name;
    std::string property;
    int checks = 0;
    int failures = 0;
    std::string detail;
    bool passed() const { return checks > 0 && failures == 0; }
};

struct VerifyOptions {
    int instances = 200;
    int mc_reps = 4000;
    std::uint64_t seed = 20240601;
    int threads = 1;
    bool inject_sign_fault = false;  // test hook: flips one sign of delta_hat
};

namespace detail {

inline void record(SuiteResult& r, bool ok, const std::string& what)
{
    ++r.checks;
    if (!ok) {
        ++r.failures;
        if (r.detail.empty()) r.detail = what;
    }
}

inline std::vector<Instance> suite_instances(const VerifyOptions& opt)
{
    std::vector<Instance> out(static_cast<std::size_t>(opt.instances));
    const InstanceRange range{20, 120, 10, 200};
    parallel_for(out.size(), opt.threads, [&](std::size_t i) {
        out[i] = sample_instance(derive_seed(opt.seed, "verify-instances", Stream::aux, i), range);
    });
    return out;
}

} // namespace detail

inline SuiteResult suite_neumann(const std::vector<Instance>& insts)
{
    SuiteResult r{"neumann", "ridge inverse as Neumann series", 0, 0, {}};
    for (const auto& in : insts) {
        const double c = 3.0;
        const auto k = static_cast<double>(in.sol.equi_set.size());
        const Matrix a = restricted_gram(in.x, in.sol.equi_set) / (c * k);
        const Matrix direct = (Matrix::Identity(a.rows(), a.cols()) + a).inverse();
        const Matrix series = neumann_inverse(a, 200);
        detail::record(r, (series - direct).norm() <= 1e-10 * (1.0 + direct.norm()), "Neumann series disagrees with direct inverse");
        const Vector s = in.sol.sign_vector();
        const Vector remainder = direct * s - s;
        detail::record(r, remainder.lpNorm<Eigen::Infinity>() < 1.0, "Neumann remainder sup-norm reached 1");
    }
    return r;
}

inline SuiteResult suite_closed_form(const std::vector<Instance>& insts)
{
    SuiteResult r{"closed-form", "closed-form ridge step vs direct solve", 0, 0, {}};
    for (const auto& in : insts) {
        const RefinedEstimate ref = refine(in.x, in.sol, 3.0);
        const Vector closed = select_rows(ref.delta_hat, in.sol.equi_set);
        const Vector direct = direct_ridge_delta(in.x, in.y, in.sol, ref.lambda_r);
        detail::record(r, (closed - direct).norm() <= 1e-8 * (1.0 + closed.norm()), "closed form differs from direct ridge solve");
    }
    return r;
}

inline SuiteResult suite_sign_alignment(const std::vector<Instance>& insts, bool inject_fault)
{
    SuiteResult r{"sign-alignment", "sign(delta_E) = s when lambda_R > 2|E|", 0, 0, {}};
    for (const auto& in : insts) {
        RefinedEstimate ref = refine(in.x, in.sol, 3.0);
        if (inject_fault) ref.delta_hat(in.sol.equi_set.front()) *= -1.0;
        bool ok = true;
        double inner = 0.0;
        for (std::size_t k = 0; k < in.sol.equi_set.size(); ++k) {
            const double d = ref.delta_hat(in.sol.equi_set[k]);
            ok = ok && d != 0.0 && (d > 0.0 ? 1 : -1) == in.sol.signs[k];
            inner += d * in.sol.signs[k];
        }
        detail::record(r, ok, "sign(delta_E) != s at c = 3");
        detail::record(r, std::abs(inner - ref.l1_delta) <= 1e-12 * (1.0 + ref.l1_delta) || inject_fault,
               "||delta_E||_1 != s'delta_E");
    }
    return r;
}

inline SuiteResult suite_h_bound(const std::vector<Instance>& insts)
{
    SuiteResult r{"h-bound", "H and energy bounds for lambda_R = c|E|", 0, 0, {}};
    for (const auto& in : insts) {
        const double lam = in.sol.lambda;
        for (double c : {2.1, 3.0, 5.0, 10.0}) {
            const RefinedEstimate ref = refine(in.x, in.sol, c);
            const double h_def = h_definitional(in.x, in.sol, ref);
            detail::record(r, std::abs(ref.h_value - h_def) <= 1e-9 * std::max(1e-300, std::abs(h_def)),
                   "eigen and definitional H disagree");
            const double lower = lam * lam * (2.0 * c + 1.0) / ((c + 1.0) * (c + 1.0));
            detail::record(r, ref.h_value >= lower * (1.0 - 1e-12), "H below lambda^2 (2c+1)/(c+1)^2");
            const double energy = (in.x * ref.delta_hat).squaredNorm() / static_cast<double>(in.x.rows());
            detail::record(r, energy <= lam * lam / (4.0 * c) * (1.0 + 1e-12), "(1/n)||X_E delta||^2 above lambda^2/(4c)");
            detail::record(r, ref.l1_delta <= lam / c * (1.0 + 1e-12), "||delta_E||_1 above lambda/c");
        }
    }
    return r;
}

inline SuiteResult suite_gaussian_max(const VerifyOptions& opt)
{
    SuiteResult r{"gaussian-max", "Gaussian maximum and second moment", 0, 0, {}};
    const std::pair<Index, Index> sizes[] = {{100, 50}, {100, 500}};
    for (auto [n, p] : sizes) {
        const Matrix x = generate_design(n, p, {}, derive_seed(opt.seed, "verify-gmax", Stream::design, static_cast<std::uint64_t>(p))).x;
        IndexSet all(static_cast<std::size_t>(p));
        for (Index j = 0; j < p; ++j) all[static_cast<std::size_t>(j)] = j;
        NoiseSpec ns;
        const auto est = estimate_noise_max(x, all, ns, opt.mc_reps, derive_seed(opt.seed, "verify-gmax", Stream::noise, static_cast<std::uint64_t>(p)), opt.threads);
        detail::record(r, est.max.mean <= gaussian_max_bound(p, n, 1.0) + 3.0 * est.max.se, "Gaussian max above sigma sqrt(2 log 2p / n)");
        detail::record(r, est.max_sq.mean <= second_moment_bound(p, n, 1.0) + 3.0 * est.max_sq.se, "second moment above sigma^2 (2 log 4p + 1) / n");
    }
    return r;
}

inline SuiteResult suite_two_step(const VerifyOptions& opt)
{
    SuiteResult r{"two-step", "two-step maximum on clustered designs", 0, 0, {}};
    const Index n = 100, p = 500;
    const DesignMatrix d = generate_clustered_design(n, p, 3, 0.2, derive_seed(opt.seed, "verify-cluster", Stream::design));
    detail::record(r, max_cluster_radius(d) <= 0.2, "cluster radius above delta");
    IndexSet all(static_cast<std::size_t>(p));
    for (Index j = 0; j < p; ++j) all[static_cast<std::size_t>(j)] = j;
    const auto est = estimate_noise_max(d.x, all, NoiseSpec{}, opt.mc_reps, derive_seed(opt.seed, "verify-cluster", Stream::noise), opt.threads);
    const double bound = two_step_bound(d.num_clusters(), p, n, 1.0, 0.2);
    detail::record(r, est.max.mean <= bound + 3.0 * est.max.se, "clustered Gaussian max above two-step bound");
    detail::record(r, bound < gaussian_max_bound(p, n, 1.0), "two-step bound not below the plain union bound");
    return r;
}

inline SuiteResult suite_empty_set(const VerifyOptions& opt)
{
    SuiteResult r{"empty-set", "empty equicorrelation set probability", 0, 0, {}};
    const Index n = 100, p = 20;
    const Matrix x = generate_design(n, p, {}, derive_seed(opt.seed, "verify-empty", Stream::design)).x;
    Vector beta0 = Vector::Zero(p);
    beta0(0) = 0.5;
    const Vector signal = x * beta0;
    const double sb = (x.transpose() * signal / static_cast<double>(n)).lpNorm<Eigen::Infinity>();
    const double sigma = 1.0;
    const LassoSolver solver(x);
    for (double t : {-1.0, 0.0, 2.0}) {
        const double lambda = sb - t * sigma / std::sqrt(static_cast<double>(n));
        std::vector<double> empty(static_cast<std::size_t>(opt.mc_reps));
        parallel_for(empty.size(), opt.threads, [&](std::size_t i) {
            Rng rng(derive_seed(opt.seed, "verify-empty", Stream::noise, i));
            Vector eps(n);
            fill_noise(eps, NoiseSpec{}, rng);
            const Vector y = signal + eps;
            // E is empty exactly when ||X'y||_inf / n <= lambda.
            empty[i] = (x.transpose() * y / static_cast<double>(n)).lpNorm<Eigen::Infinity>() <= lambda ? 1.0 : 0.0;
        });
        const MeanSe pe = proportion(empty);
        const double bound = empty_set_probability_bound(sb, lambda, sigma, n);
        detail::record(r, pe.mean <= bound + 3.0 * pe.se, "empty-set frequency above Phi bound");
    }
    // The zero-solution shortcut agrees with the solver on one draw.
    const Vector y0 = signal + generate_noise(n, NoiseSpec{}, derive_seed(opt.seed, "verify-empty", Stream::aux));
    const double lam0 = (x.transpose() * y0 / static_cast<double>(n)).lpNorm<Eigen::Infinity>();
    detail::record(r, solver.solve(y0, lam0 * 1.000001).empty() && !solver.solve(y0, lam0 * 0.9).empty(),
           "solver disagrees with the ||X'y||_inf / n threshold");
    return r;
}

inline SuiteResult suite_factors()
{
    SuiteResult r{"factors", "scalar factors f1..f4", 0, 0, {}};
    const ScalarMax m = f4_maximum();
    detail::record(r, m.argmax >= 1.77 && m.argmax <= 1.79, "f4 argmax outside [1.77, 1.79]");
    detail::record(r, m.value >= 0.78 && m.value <= 0.80, "f4 max outside [0.78, 0.80]");
    double prev = factor_f2(0.0);
    bool mono = true;
    for (int i = 1; i <= 20000; ++i) {
        const double v = factor_f2(0.01 * i);
        mono = mono && v > prev;
        prev = v;
    }
    detail::record(r, mono, "f2 not increasing");
    detail::record(r, std::abs(factor_f2(1e8) - 2.0) < 1e-7 && factor_f2(1e8) < 2.0, "f2 does not approach 2 from below");
    for (double a : {0.5, 1.0, 3.0}) {
        detail::record(r, factor_f1(0.0, a) > factor_f1(1.0, a) && factor_f1(1.0, a) > factor_f1(5.0, a), "f1 not decreasing");
        detail::record(r, std::abs(factor_f3(a, a) - 1.0 / (4.0 * a)) < 1e-15 && factor_f3(0.9 * a, a) < factor_f3(a, a) &&
                      factor_f3(1.1 * a, a) < factor_f3(a, a),
               "f3 peak not at x = a");
    }
    return r;
}

inline const std::vector<std::string>& suite_names()
{
    static const std::vector<std::string> names{"neumann", "closed-form", "sign-alignment", "h-bound",
                                                "gaussian-max", "two-step", "empty-set", "factors"};
    return names;
}

/// Runs the selected suites (all when `only` is empty). Unknown names throw.
inline std::vector<SuiteResult> run_verify(const std::vector<std::string>& only, const VerifyOptions& opt = {})
{
    for (const auto& name : only)
        if (std::find(suite_names().begin(), suite_names().end(), name) == suite_names().end())
            throw DomainError("unknown suite '" + name + "'");
    auto selected = [&](const std::string& name) {
        return only.empty() || std::find(only.begin(), only.end(), name) != only.end();
    };
    std::vector<Instance> insts;
    const bool need_instances =
        selected("neumann") || selected("closed-form") || selected("sign-alignment") || selected("h-bound");
    if (need_instances) insts = detail::suite_instances(opt);

    std::vector<SuiteResult> out;
    if (selected("neumann")) out.push_back(suite_neumann(insts));
    if (selected("closed-form")) out.push_back(suite_closed_form(insts));
    if (selected("sign-alignment")) out.push_back(suite_sign_alignment(insts, opt.inject_sign_fault));
    if (selected("h-bound")) out.push_back(suite_h_bound(insts));
    if (selected("gaussian-max")) out.push_back(suite_gaussian_max(opt));
    if (selected("two-step")) out.push_back(suite_two_step(opt));
    if (selected("empty-set")) out.push_back(suite_empty_set(opt));
    if (selected("factors")) out.push_back(suite_factors());
    return out;
}

} // namespace lrb
