#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <lrb/bounds.hpp>
#include <lrb/designs.hpp>
#include <lrb/lasso.hpp>
#include <lrb/numerics.hpp>
#include <lrb/parallel.hpp>
#include <lrb/random.hpp>
#include <lrb/refine.hpp>

namespace lrb {

// A scenario or config field failed validation; `pointer` is the JSON
// pointer of the offending field relative to the scenario.
class ValidationError : public DomainError {
public:
    ValidationError(std::string pointer, const std::string& what)
        : DomainError(what), pointer_(std::move(pointer)) {}
    const std::string& pointer() const { return pointer_; }

private:
    std::string pointer_;
};

// Monte Carlo run could not produce a trustworthy summary.
class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class LambdaRule { absolute, universal_multiple };

struct LambdaSpec {
    LambdaRule rule = LambdaRule::universal_multiple;
    double value = 1.0;

    bool operator==(const LambdaSpec&) const = default;

    /// universal_multiple: value * sigma sqrt(2 log(2p) / n).
    double resolve(Index n, Index p, double sigma) const
    {
        return rule == LambdaRule::absolute ? value : value * gaussian_max_bound(p, n, sigma);
    }
};

enum class T0Kind { support, full, padded, explicit_set };

struct T0Spec {
    std::string name;
    T0Kind kind = T0Kind::support;
    int pad = 0;
    IndexSet indices;

    bool operator==(const T0Spec&) const = default;
};

enum class DesignMode { fixed, redrawn };
enum class BoundKind { cor35, thm31, thm314 };

inline std::string to_string(BoundKind b)
{
    switch (b) {
    case BoundKind::cor35: return "cor35";
    case BoundKind::thm31: return "thm31";
    case BoundKind::thm314: return "thm314";
    }
    return "unknown";
}

struct ModelSpec {
    Index support_size = 0;
    double magnitude = 0.0;
    SupportPlacement placement = SupportPlacement::first;
    bool alternate_signs = true;

    bool operator==(const ModelSpec&) const = default;
};

struct Scenario {
    std::string id;
    Index n = 0;
    Index p = 0;
    DesignSpec design;
    DesignMode design_mode = DesignMode::fixed;
    ModelSpec model;
    NoiseSpec noise;
    LambdaSpec lambda;
    std::vector<double> c_values{3.0};
    int replications = 1;
    std::uint64_t seed = 0;
    std::vector<T0Spec> t0;
    std::vector<BoundKind> bounds{BoundKind::cor35};

    bool operator==(const Scenario&) const = default;

    bool wants(BoundKind b) const { return std::find(bounds.begin(), bounds.end(), b) != bounds.end(); }

    void validate() const
    {
        if (id.empty()) throw ValidationError("/id", "scenario id must be non-empty");
        if (n < 2) throw ValidationError("/design/n", "n must be at least 2");
        if (p < 1) throw ValidationError("/design/p", "p must be at least 1");
        if (design.kind == DesignKind::orthogonal && p > n)
            throw ValidationError("/design/p", "orthogonal design needs p <= n");
        if (design.kind == DesignKind::clustered) {
            if (!(design.delta > 0.0 && design.delta <= 1.0))
                throw ValidationError("/design/delta", "delta must lie in (0, 1]");
            if (design.rank < 1 || design.rank > n) throw ValidationError("/design/rank", "rank must satisfy 1 <= r <= n");
            if (design.clusters < 0 || design.clusters > p) throw ValidationError("/design/clusters", "clusters must lie in [0, p]");
            if (design.clusters > 0 && static_cast<double>(design.clusters) > clustered_k_bound(design.rank, design.delta))
                throw ValidationError("/design/clusters", "clusters exceed the covering bound (1 + 2/delta)^r");
        }
        if (design.kind == DesignKind::equicorrelated && !(design.rho >= 0.0 && design.rho < 1.0))
            throw ValidationError("/design/rho", "equicorrelated rho must lie in [0, 1)");
        if (design.kind == DesignKind::ar1 && !(design.rho > -1.0 && design.rho < 1.0))
            throw ValidationError("/design/rho", "ar1 rho must lie in (-1, 1)");
        if (model.support_size < 0 || model.support_size > p)
            throw ValidationError("/model/support_size", "support size must lie in [0, p]");
        if (!std::isfinite(model.magnitude)) throw ValidationError("/model/magnitude", "magnitude must be finite");
        try {
            noise.validate();
        } catch (const DomainError& e) {
            throw ValidationError("/noise", e.what());
        }
        if (!(lambda.value > 0.0)) throw ValidationError("/lambda/value", "lambda value must be positive");
        if (!(lambda.resolve(n, p, noise.sigma) > 0.0))
            throw ValidationError("/lambda", "lambda rule resolves to a non-positive value (universal rule needs sigma > 0)");
        if (c_values.empty()) throw ValidationError("/c_values", "at least one c value is required");
        const bool needs_c_above_two = wants(BoundKind::cor35) || wants(BoundKind::thm31);
        for (std::size_t k = 0; k < c_values.size(); ++k) {
            const std::string ptr = "/c_values/" + std::to_string(k);
            if (!(c_values[k] > 0.0)) throw ValidationError(ptr, "c must be positive");
            if (needs_c_above_two && !(c_values[k] > 2.0))
                throw ValidationError(ptr, "cor35/thm31 comparisons require c > 2");
        }
        if (wants(BoundKind::thm314) && noise.kind != NoiseKind::gaussian)
            throw ValidationError("/bounds", "thm314 comparison requires gaussian noise");
        if (replications < 1) throw ValidationError("/replications", "replications must be at least 1");
        for (std::size_t k = 0; k < t0.size(); ++k) {
            const std::string ptr = "/t0/" + std::to_string(k);
            if (t0[k].name.empty()) throw ValidationError(ptr + "/name", "T0 candidate needs a name");
            if (t0[k].pad < 0) throw ValidationError(ptr + "/pad", "pad must be nonnegative");
            for (Index j : t0[k].indices)
                if (j < 0 || j >= p) throw ValidationError(ptr + "/indices", "index out of range");
            for (std::size_t m = 0; m < k; ++m)
                if (t0[m].name == t0[k].name) throw ValidationError(ptr + "/name", "duplicate T0 name");
        }
        if (wants(BoundKind::thm31) && t0.empty()) throw ValidationError("/t0", "thm31 comparison needs T0 candidates");
    }
};

// ---------------------------------------------------------------------------
// Events and noise maxima
// ---------------------------------------------------------------------------

struct SupportEvents {
    bool empty = false;
    bool equals_s0 = false;
    std::vector<bool> contained;
};

inline SupportEvents support_events(const LassoSolution& sol, const IndexSet& s0, const std::vector<IndexSet>& t0_list)
{
    SupportEvents ev;
    ev.empty = sol.equi_set.empty();
    ev.equals_s0 = sol.equi_set == s0;
    for (const auto& t : t0_list) ev.contained.push_back(is_subset(sol.equi_set, t));
    return ev;
}

struct NoiseMaxEstimate {
    MeanSe max;     // ||X_T' eps||_inf / n
    MeanSe max_sq;  // its square
};

/// Monte Carlo estimate of E||X_T' eps||_inf / n and E(||X_T' eps||_inf / n)^2.
/// Replication r draws its noise from seed splitmix64(seed + r).
inline NoiseMaxEstimate estimate_noise_max(const Matrix& x, const IndexSet& t, const NoiseSpec& spec, int reps,
                                           std::uint64_t seed, int threads = 1)
{
    if (t.empty()) throw DomainError("estimate_noise_max: T must be non-empty");
    if (reps < 100) throw DomainError("estimate_noise_max: need at least 100 replications");
    spec.validate();
    const Matrix xt = select_columns(x, t);
    const Index n = x.rows();
    const double inv_n = 1.0 / static_cast<double>(n);
    constexpr int kBatch = 256;
    const int batches = (reps + kBatch - 1) / kBatch;
    std::vector<double> maxima(static_cast<std::size_t>(reps));
    parallel_for(static_cast<std::size_t>(batches), threads, [&](std::size_t b) {
        const int first = static_cast<int>(b) * kBatch;
        const int count = std::min(kBatch, reps - first);
        Matrix eps(n, count);
        for (int k = 0; k < count; ++k) {
            Rng rng(splitmix64(seed + static_cast<std::uint64_t>(first + k)));
            fill_noise(eps.col(k), spec, rng);
        }
        const Matrix prod = xt.transpose() * eps;
        for (int k = 0; k < count; ++k)
            maxima[static_cast<std::size_t>(first + k)] = prod.col(k).cwiseAbs().maxCoeff() * inv_n;
    });
    std::vector<double> squares(maxima.size());
    for (std::size_t i = 0; i < maxima.size(); ++i) squares[i] = maxima[i] * maxima[i];
    return {mean_and_se(maxima), mean_and_se(squares)};
}

// ---------------------------------------------------------------------------
// Replications
// ---------------------------------------------------------------------------

struct RefineRecord {
    double c = 0.0;
    double lambda_r = 0.0;
    double h = 0.0;
    double delta_gap = 0.0;
    double pred_err_lasso = 0.0;
    double pred_err_refined = 0.0;
    double l1_delta = 0.0;
    double identity_residual = 0.0;  // |Delta - (H - (2/n)<X_E delta_E, eps>)|
    bool signs_aligned = true;
};

struct RepRecord {
    int rep = 0;
    bool certified = false;
    Index e_size = 0;
    bool e_empty = false;
    bool e_eq_s0 = false;
    std::vector<char> e_in_t0;
    std::vector<double> max_t;  // ||X_T' eps||_inf / n per T0 candidate
    double max_full = 0.0;      // ||X' eps||_inf / n
    double kkt_residual = 0.0;
    double duality_gap = 0.0;
    std::vector<RefineRecord> per_c;
};

struct PerCSummary {
    double c = 0.0;
    MeanSe dmse;
    double ci95_lo = 0.0;
    double ci95_hi = 0.0;
    MeanSe h;
    double mean_l1_delta = 0.0;
    double max_identity_residual = 0.0;
    int sign_misaligned = 0;
};

struct DmseSummary {
    std::string scenario_id;
    Index n = 0;
    Index p = 0;
    double sigma = 0.0;
    double lambda_l = 0.0;
    int replications = 0;
    int certified = 0;
    int excluded = 0;
    int realized_clusters = 0;
    double cluster_radius = 0.0;    // max ||X_j - v_r(j)|| / sqrt(n), clustered fixed designs
    double sigma_beta0_inf = 0.0;   // ||Sigma_n beta0||_inf (fixed design)
    double empty_bound = std::nan("");
    MeanSe p_nonempty;
    MeanSe p_empty;
    MeanSe p_eq_s0;
    std::vector<std::string> t0_names;
    std::vector<Index> t0_sizes;
    std::vector<MeanSe> p_contain;
    std::vector<MeanSe> exp_max_t;
    MeanSe exp_max_full;
    MeanSe second_moment;           // E(||X'eps||_inf / n)^2
    double sqrt_second_moment = 0.0;
    std::vector<PerCSummary> per_c;
};

struct ScenarioResult {
    DmseSummary summary;
    std::vector<RepRecord> reps;
};

struct RunOptions {
    int threads = 1;
    double max_exclusion_fraction = 0.01;
};

namespace detail {

// Columns of x selected by the nonzero entries of v, times those entries.
inline Vector sparse_product(const Matrix& x, const Vector& v)
{
    Vector out = Vector::Zero(x.rows());
    for (Index j = 0; j < v.size(); ++j)
        if (v(j) != 0.0) out.noalias() += x.col(j) * v(j);
    return out;
}

inline std::vector<IndexSet> resolve_t0(const std::vector<T0Spec>& specs, const IndexSet& s0, const Matrix& x)
{
    const Index p = x.cols();
    std::vector<IndexSet> out;
    for (const auto& spec : specs) {
        IndexSet t;
        switch (spec.kind) {
        case T0Kind::support: t = s0; break;
        case T0Kind::full:
            t.resize(static_cast<std::size_t>(p));
            std::iota(t.begin(), t.end(), Index{0});
            break;
        case T0Kind::explicit_set: t = spec.indices; break;
        case T0Kind::padded: {
            t = s0;
            // Off-support columns ranked by max_{k in S0} |X_j'X_k| / n.
            std::vector<std::pair<double, Index>> score;
            const double n = static_cast<double>(x.rows());
            for (Index j = 0; j < p; ++j) {
                if (std::binary_search(s0.begin(), s0.end(), j)) continue;
                double best = 0.0;
                for (Index k : s0) best = std::max(best, std::abs(x.col(j).dot(x.col(k))) / n);
                score.emplace_back(-best, j);
            }
            std::sort(score.begin(), score.end());
            for (int k = 0; k < spec.pad && k < static_cast<int>(score.size()); ++k) t.push_back(score[static_cast<std::size_t>(k)].second);
            break;
        }
        }
        std::sort(t.begin(), t.end());
        t.erase(std::unique(t.begin(), t.end()), t.end());
        out.push_back(std::move(t));
    }
    return out;
}

} // namespace detail

/// Monte Carlo estimate of DMSE and the event probabilities the bounds need.
/// Replication r uses seeds derived from (scenario seed, id, r) only, and
/// aggregation runs in replication order, so the result is independent of
/// the thread count.
inline ScenarioResult run_scenario(const Scenario& s, const RunOptions& opt = {})
{
    s.validate();
    const Index n = s.n;
    const Index p = s.p;
    const double inv_n = 1.0 / static_cast<double>(n);

    const DesignMatrix design = generate_design(n, p, s.design, derive_seed(s.seed, s.id, Stream::design));
    const TrueModel model = make_true_model(p, s.model.support_size, s.model.magnitude, s.model.placement,
                                            derive_seed(s.seed, s.id, Stream::model), s.model.alternate_signs);
    const double lambda = s.lambda.resolve(n, p, s.noise.sigma);
    const bool fixed = s.design_mode == DesignMode::fixed;

    std::optional<LassoSolver> shared_solver;
    std::vector<IndexSet> shared_t0;
    Vector shared_signal;
    if (fixed) {
        shared_solver.emplace(design.x);
        shared_t0 = detail::resolve_t0(s.t0, model.support, design.x);
        shared_signal = design.x * model.beta0;
    }

    ScenarioResult result;
    result.reps.resize(static_cast<std::size_t>(s.replications));

    parallel_for(static_cast<std::size_t>(s.replications), opt.threads, [&](std::size_t r) {
        RepRecord& rec = result.reps[r];
        rec.rep = static_cast<int>(r);

        std::optional<DesignMatrix> own_design;
        std::optional<LassoSolver> own_solver;
        std::vector<IndexSet> own_t0;
        Vector own_signal;
        if (!fixed) {
            own_design.emplace(generate_design(n, p, s.design, derive_seed(s.seed, s.id, Stream::design, r + 1)));
            own_solver.emplace(own_design->x, p <= 500);
            own_t0 = detail::resolve_t0(s.t0, model.support, own_design->x);
            own_signal = own_design->x * model.beta0;
        }
        const Matrix& x = fixed ? design.x : own_design->x;
        const LassoSolver& solver = fixed ? *shared_solver : *own_solver;
        const auto& t0_sets = fixed ? shared_t0 : own_t0;
        const Vector& signal = fixed ? shared_signal : own_signal;

        Vector eps(n);
        Rng rng(derive_seed(s.seed, s.id, Stream::noise, r));
        fill_noise(eps, s.noise, rng);
        const Vector y = signal + eps;

        const Vector xte = x.transpose() * eps * inv_n;
        rec.max_full = xte.cwiseAbs().maxCoeff();
        for (const auto& t : t0_sets) {
            double m = 0.0;
            for (Index j : t) m = std::max(m, std::abs(xte(j)));
            rec.max_t.push_back(m);
        }

        const LassoSolution sol = solver.solve(y, lambda);
        rec.certified = sol.certified;
        rec.kkt_residual = sol.kkt_residual;
        rec.duality_gap = sol.duality_gap;
        rec.e_size = static_cast<Index>(sol.equi_set.size());
        const SupportEvents ev = support_events(sol, model.support, t0_sets);
        rec.e_empty = ev.empty;
        rec.e_eq_s0 = ev.equals_s0;
        for (bool b : ev.contained) rec.e_in_t0.push_back(b ? 1 : 0);
        if (!sol.certified) return;

        const Matrix gram_e = sol.equi_set.empty() ? Matrix() : restricted_gram(x, sol.equi_set);
        const Vector lasso_fit_err = detail::sparse_product(x, sol.beta - model.beta0);
        for (double c : s.c_values) {
            const RefinedEstimate ref = refine(x, sol, c, sol.equi_set.empty() ? nullptr : &gram_e);
            const Vector correction = detail::sparse_product(x, ref.delta_hat);
            RefineRecord rr;
            rr.c = c;
            rr.lambda_r = ref.lambda_r;
            rr.h = ref.h_value;
            rr.l1_delta = ref.l1_delta;
            rr.signs_aligned = ref.signs_aligned;
            rr.pred_err_lasso = lasso_fit_err.squaredNorm() * inv_n;
            rr.pred_err_refined = (lasso_fit_err + correction).squaredNorm() * inv_n;
            rr.delta_gap = rr.pred_err_lasso - rr.pred_err_refined;
            const double interaction = 2.0 * correction.dot(eps) * inv_n;
            rr.identity_residual = std::abs(rr.delta_gap - (rr.h - interaction));
            rec.per_c.push_back(rr);
        }
    });

    // Aggregate in replication order.
    DmseSummary& sum = result.summary;
    sum.scenario_id = s.id;
    sum.n = n;
    sum.p = p;
    sum.sigma = s.noise.sigma;
    sum.lambda_l = lambda;
    sum.replications = s.replications;
    if (design.spec.kind == DesignKind::clustered) {
        sum.realized_clusters = design.num_clusters();
        sum.cluster_radius = max_cluster_radius(design);
    }
    if (fixed) {
        const Vector sb = design.x.transpose() * shared_signal * inv_n;
        sum.sigma_beta0_inf = sb.lpNorm<Eigen::Infinity>();
        if (s.noise.kind == NoiseKind::gaussian && s.noise.sigma > 0.0)
            sum.empty_bound = empty_set_probability_bound(sum.sigma_beta0_inf, lambda, s.noise.sigma, n);
    }

    std::vector<double> nonempty, empty, eq_s0;
    std::vector<std::vector<double>> contain(s.t0.size()), max_t(s.t0.size());
    std::vector<double> max_full, max_sq;
    for (const auto& rec : result.reps) {
        max_full.push_back(rec.max_full);
        max_sq.push_back(rec.max_full * rec.max_full);
        for (std::size_t k = 0; k < s.t0.size(); ++k) max_t[k].push_back(rec.max_t[k]);
        if (!rec.certified) {
            ++sum.excluded;
            continue;
        }
        ++sum.certified;
        nonempty.push_back(rec.e_empty ? 0.0 : 1.0);
        empty.push_back(rec.e_empty ? 1.0 : 0.0);
        eq_s0.push_back(rec.e_eq_s0 ? 1.0 : 0.0);
        for (std::size_t k = 0; k < s.t0.size(); ++k) contain[k].push_back(rec.e_in_t0[k] ? 1.0 : 0.0);
    }
    if (sum.certified == 0) throw ScenarioError("scenario '" + s.id + "': no replication produced a certified Lasso solve");
    if (static_cast<double>(sum.excluded) > opt.max_exclusion_fraction * static_cast<double>(s.replications))
        throw ScenarioError("scenario '" + s.id + "': " + std::to_string(sum.excluded) + " of " +
                            std::to_string(s.replications) + " Lasso solves were not certified");

    sum.p_nonempty = proportion(nonempty);
    sum.p_empty = proportion(empty);
    sum.p_eq_s0 = proportion(eq_s0);
    for (std::size_t k = 0; k < s.t0.size(); ++k) {
        sum.t0_names.push_back(s.t0[k].name);
        sum.t0_sizes.push_back(fixed ? static_cast<Index>(shared_t0[k].size()) : -1);
        sum.p_contain.push_back(proportion(contain[k]));
        sum.exp_max_t.push_back(mean_and_se(max_t[k]));
    }
    sum.exp_max_full = mean_and_se(max_full);
    sum.second_moment = mean_and_se(max_sq);
    sum.sqrt_second_moment = std::sqrt(sum.second_moment.mean);

    for (std::size_t ci = 0; ci < s.c_values.size(); ++ci) {
        PerCSummary pc;
        pc.c = s.c_values[ci];
        std::vector<double> gaps, hs, l1s;
        for (const auto& rec : result.reps) {
            if (!rec.certified) continue;
            const RefineRecord& rr = rec.per_c[ci];
            gaps.push_back(rr.delta_gap);
            hs.push_back(rr.h);
            l1s.push_back(rr.l1_delta);
            pc.max_identity_residual = std::max(pc.max_identity_residual, rr.identity_residual / (1.0 + std::abs(rr.delta_gap)));
            if (!rr.signs_aligned && rec.e_size > 0) ++pc.sign_misaligned;
        }
        pc.dmse = mean_and_se(gaps);
        pc.ci95_lo = pc.dmse.mean - 1.959963984540054 * pc.dmse.se;
        pc.ci95_hi = pc.dmse.mean + 1.959963984540054 * pc.dmse.se;
        pc.h = mean_and_se(hs);
        pc.mean_l1_delta = pairwise_sum(l1s) / static_cast<double>(l1s.size());
        sum.per_c.push_back(pc);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Verdicts
// ---------------------------------------------------------------------------

enum class Status { pass, vacuous, fail };

inline std::string to_string(Status s)
{
    switch (s) {
    case Status::pass: return "PASS";
    case Status::vacuous: return "VACUOUS";
    case Status::fail: return "FAIL";
    }
    return "?";
}

/// One comparison. DMSE checks ("cor35", "thm31", "thm314") need
/// estimate >= bound - 3 se; noise checks ("gmax", "gmax_sq",
/// "two_step", "empty_set") need estimate <= bound + 3 se.
struct Verdict {
    std::string check;
    double c = std::nan("");
    std::string t0;
    double bound = 0.0;
    double estimate = 0.0;
    double se = 0.0;
    double margin = 0.0;
    Status status = Status::pass;
};

inline constexpr double kSeMultiplier = 3.0;

// Relative floating-point slack for comparisons that are exact in real
// arithmetic (se == 0, e.g. noiseless scenarios).
inline constexpr double kRoundingSlack = 1e-9;

inline Verdict lower_bound_verdict(std::string check, double c, double bound, const MeanSe& est)
{
    Verdict v;
    v.check = std::move(check);
    v.c = c;
    v.bound = bound;
    v.estimate = est.mean;
    v.se = est.se;
    v.margin = est.mean - bound;
    const double slack = kSeMultiplier * est.se + kRoundingSlack * std::max(std::abs(bound), std::abs(est.mean));
    if (est.mean < bound - slack) v.status = Status::fail;
    else if (bound <= 0.0) v.status = Status::vacuous;
    else v.status = Status::pass;
    return v;
}

inline Verdict upper_bound_verdict(std::string check, double bound, const MeanSe& est)
{
    Verdict v;
    v.check = std::move(check);
    v.bound = bound;
    v.estimate = est.mean;
    v.se = est.se;
    v.margin = bound - est.mean;
    const double slack = kSeMultiplier * est.se + kRoundingSlack * std::max(std::abs(bound), std::abs(est.mean));
    v.status = est.mean <= bound + slack ? Status::pass : Status::fail;
    return v;
}

inline std::vector<Verdict> compare_bounds(const DmseSummary& sum, const Scenario& s)
{
    std::vector<Verdict> out;
    const double lam = sum.lambda_l;
    for (const auto& pc : sum.per_c) {
        if (s.wants(BoundKind::cor35)) {
            const double b = bound_cor35(lam, pc.c, sum.p_nonempty.mean, sum.exp_max_full.mean);
            out.push_back(lower_bound_verdict("cor35", pc.c, b, pc.dmse));
        }
        if (s.wants(BoundKind::thm31)) {
            double best = -std::numeric_limits<double>::infinity();
            std::string best_name;
            for (std::size_t k = 0; k < sum.t0_names.size(); ++k) {
                BoundInputs in;
                in.lambda_l = lam;
                in.c = pc.c;
                in.n = sum.n;
                in.p = sum.p;
                in.sigma = sum.sigma;
                in.p_nonempty = sum.p_nonempty.mean;
                in.exp_max_t0 = sum.exp_max_t[k].mean;
                in.exp_max_full = sum.exp_max_full.mean;
                in.sqrt_second_moment = sum.sqrt_second_moment;
                in.p_not_contained = std::clamp(1.0 - sum.p_contain[k].mean, 0.0, 1.0);
                const double b = bound_thm31(in);
                if (b > best) {
                    best = b;
                    best_name = sum.t0_names[k];
                }
            }
            Verdict v = lower_bound_verdict("thm31", pc.c, best, pc.dmse);
            v.t0 = best_name;
            out.push_back(v);
        }
        if (s.wants(BoundKind::thm314)) {
            const double b = bound_thm314(lam, pc.c, sum.sigma, sum.n, sum.p_nonempty.mean,
                                          std::clamp(1.0 - sum.p_eq_s0.mean, 0.0, 1.0));
            out.push_back(lower_bound_verdict("thm314", pc.c, b, pc.dmse));
        }
    }

    if (s.noise.kind == NoiseKind::gaussian && s.noise.sigma > 0.0) {
        out.push_back(upper_bound_verdict("gmax", gaussian_max_bound(sum.p, sum.n, sum.sigma), sum.exp_max_full));
        out.push_back(upper_bound_verdict("gmax_sq", second_moment_bound(sum.p, sum.n, sum.sigma), sum.second_moment));
        if (sum.realized_clusters > 0)
            out.push_back(upper_bound_verdict(
                "two_step", two_step_bound(sum.realized_clusters, sum.p, sum.n, sum.sigma, s.design.delta), sum.exp_max_full));
        if (std::isfinite(sum.empty_bound)) out.push_back(upper_bound_verdict("empty_set", sum.empty_bound, sum.p_empty));
    }
    return out;
}

inline bool any_failure(const std::vector<Verdict>& vs)
{
    return std::any_of(vs.begin(), vs.end(), [](const Verdict& v) { return v.status == Status::fail; });
}

} // namespace lrb
