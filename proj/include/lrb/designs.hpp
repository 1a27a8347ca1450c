#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <lrb/format.hpp>
#include <lrb/random.hpp>
#include <lrb/types.hpp>

namespace lrb {

// ---------------------------------------------------------------------------
// Design matrices
// ---------------------------------------------------------------------------

enum class DesignKind { iid_gaussian, equicorrelated, ar1, clustered, orthogonal };

inline std::string to_string(DesignKind k)
{
    switch (k) {
    case DesignKind::iid_gaussian: return "iid_gaussian";
    case DesignKind::equicorrelated: return "equicorrelated";
    case DesignKind::ar1: return "ar1";
    case DesignKind::clustered: return "clustered";
    case DesignKind::orthogonal: return "orthogonal";
    }
    return "unknown";
}

inline DesignKind design_kind_from_string(std::string_view s)
{
    if (s == "iid_gaussian") return DesignKind::iid_gaussian;
    if (s == "equicorrelated") return DesignKind::equicorrelated;
    if (s == "ar1") return DesignKind::ar1;
    if (s == "clustered") return DesignKind::clustered;
    if (s == "orthogonal") return DesignKind::orthogonal;
    throw DomainError("unknown design kind '" + std::string(s) + "'");
}

/// Generation parameters. `rho` is used by equicorrelated and ar1;
/// `clusters`, `delta` and `rank` by clustered (clusters == 0 means 2^rank).
struct DesignSpec {
    DesignKind kind = DesignKind::iid_gaussian;
    double rho = 0.0;
    int clusters = 0;
    double delta = 0.2;
    int rank = 3;

    bool operator==(const DesignSpec&) const = default;
};

struct DesignMatrix {
    Matrix x;
    DesignSpec spec;
    // Clustered designs only: column -> cluster, and representatives v_l as columns (norm sqrt(n)).
    std::vector<int> cluster_of;
    Matrix representatives;
    bool rank_deficient = false;

    Index n() const { return x.rows(); }
    Index p() const { return x.cols(); }
    int num_clusters() const { return static_cast<int>(representatives.cols()); }
};

namespace detail {

inline bool normalize_column(Eigen::Ref<Vector> col)
{
    const double norm = col.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) return false;
    col *= std::sqrt(static_cast<double>(col.size())) / norm;
    return true;
}

inline Matrix random_orthonormal(Index n, Index k, Rng& rng)
{
    Matrix g(n, k);
    for (Index j = 0; j < k; ++j)
        for (Index i = 0; i < n; ++i) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(n, k);
    // Fix signs so the basis is a deterministic function of g.
    const Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    for (Index j = 0; j < k; ++j)
        if (r(j, j) < 0) q.col(j) *= -1.0;
    return q;
}

inline void fill_raw(Matrix& x, const DesignSpec& spec, Rng& rng)
{
    const Index n = x.rows();
    const Index p = x.cols();
    switch (spec.kind) {
    case DesignKind::iid_gaussian:
        for (Index j = 0; j < p; ++j)
            for (Index i = 0; i < n; ++i) x(i, j) = rng.normal();
        break;
    case DesignKind::equicorrelated: {
        const double shared = std::sqrt(spec.rho);
        const double own = std::sqrt(1.0 - spec.rho);
        Vector common(n);
        for (Index i = 0; i < n; ++i) common(i) = rng.normal();
        for (Index j = 0; j < p; ++j)
            for (Index i = 0; i < n; ++i) x(i, j) = shared * common(i) + own * rng.normal();
        break;
    }
    case DesignKind::ar1: {
        const double innov = std::sqrt(1.0 - spec.rho * spec.rho);
        for (Index i = 0; i < n; ++i) x(i, 0) = rng.normal();
        for (Index j = 1; j < p; ++j)
            for (Index i = 0; i < n; ++i) x(i, j) = spec.rho * x(i, j - 1) + innov * rng.normal();
        break;
    }
    default:
        throw DomainError("fill_raw: kind handled elsewhere");
    }
}

} // namespace detail

/// Numerical general-position proxy: random column subsets of size
/// min(n, p) must have full numerical rank.
inline bool general_position_check(const Matrix& x, int trials, std::uint64_t seed)
{
    const Index n = x.rows();
    const Index p = x.cols();
    const Index m = std::min(n, p);
    Rng rng(seed);
    std::vector<Index> idx(static_cast<std::size_t>(p));
    std::iota(idx.begin(), idx.end(), Index{0});
    for (int t = 0; t < trials; ++t) {
        std::shuffle(idx.begin(), idx.end(), rng.engine());
        Matrix sub(n, m);
        for (Index k = 0; k < m; ++k) sub.col(k) = x.col(idx[static_cast<std::size_t>(k)]);
        Eigen::ColPivHouseholderQR<Matrix> qr(sub);
        qr.setThreshold(1e-10);
        if (qr.rank() < m) return false;
    }
    return true;
}

inline double clustered_k_bound(int rank, double delta)
{
    return std::pow(1.0 + 2.0 / delta, rank);
}

/// Greedy farthest-point selection of `k` unit vectors in R^dim from a
/// random candidate cloud. The first pick is the first candidate.
inline Matrix greedy_sphere_packing(int dim, int k, Rng& rng, int candidates = 0)
{
    if (candidates <= 0) candidates = std::max(512, 64 * k);
    Matrix cloud(dim, candidates);
    for (int c = 0; c < candidates; ++c) {
        Vector v(dim);
        do {
            for (int i = 0; i < dim; ++i) v(i) = rng.normal();
        } while (v.norm() == 0.0);
        cloud.col(c) = v / v.norm();
    }
    Matrix chosen(dim, k);
    std::vector<double> nearest(static_cast<std::size_t>(candidates), std::numeric_limits<double>::infinity());
    int pick = 0;
    for (int l = 0; l < k; ++l) {
        chosen.col(l) = cloud.col(pick);
        int best = 0;
        double best_dist = -1.0;
        for (int c = 0; c < candidates; ++c) {
            const double d = (cloud.col(c) - chosen.col(l)).norm();
            auto& near = nearest[static_cast<std::size_t>(c)];
            near = std::min(near, d);
            if (near > best_dist) {
                best_dist = near;
                best = c;
            }
        }
        pick = best;
    }
    return chosen;
}

/// Columns clustered around K representatives of norm sqrt(n) lying in a
/// random r-dimensional subspace; every column stays within delta*sqrt(n)
/// of its representative. clusters == 0 picks K = min(p, 2^r).
inline DesignMatrix generate_clustered_design(Index n, Index p, int rank, double delta, std::uint64_t seed,
                                              int clusters = 0)
{
    if (n < 2 || p < 1) throw DomainError("generate_clustered_design: need n >= 2 and p >= 1");
    if (rank < 1 || rank > n) throw DomainError("generate_clustered_design: rank must satisfy 1 <= r <= n");
    if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("generate_clustered_design: delta must lie in (0, 1]");

    const double k_bound = clustered_k_bound(rank, delta);
    int k = clusters > 0 ? clusters : static_cast<int>(std::min<double>(static_cast<double>(p), std::ldexp(1.0, rank)));
    if (k > p) throw DomainError("generate_clustered_design: more clusters than columns");
    if (static_cast<double>(k) > k_bound)
        throw DomainError("generate_clustered_design: K exceeds the covering bound (1 + 2/delta)^r");

    Rng rng(seed);
    const double root_n = std::sqrt(static_cast<double>(n));
    const Matrix basis = detail::random_orthonormal(n, rank, rng);
    const Matrix coords = greedy_sphere_packing(rank, k, rng);

    DesignMatrix out;
    out.spec = DesignSpec{DesignKind::clustered, 0.0, k, delta, rank};
    out.representatives = root_n * (basis * coords);
    out.x.resize(n, p);
    out.cluster_of.resize(static_cast<std::size_t>(p));

    const double max_radius = delta * (1.0 - 1e-6);
    for (Index j = 0; j < p; ++j) {
        const int l = static_cast<int>(j % k);
        out.cluster_of[static_cast<std::size_t>(j)] = l;
        const auto v = out.representatives.col(l);
        Vector w(n);
        double wn = 0.0;
        do {
            for (Index i = 0; i < n; ++i) w(i) = rng.normal();
            w -= v * (v.dot(w) / static_cast<double>(n));
            wn = w.norm();
        } while (!(wn > 0.0));
        // Orthogonal perturbation of relative size rho; renormalizing v + w
        // moves the column by sqrt(2 - 2/sqrt(1 + rho^2)) <= rho.
        const double rho = max_radius * rng.uniform(0.5, 1.0);
        Vector col = v + w * (rho * root_n / wn);
        detail::normalize_column(col);
        out.x.col(j) = col;
    }

    for (Index j = 0; j < p; ++j) {
        const double dist = (out.x.col(j) - out.representatives.col(out.cluster_of[static_cast<std::size_t>(j)])).norm();
        if (dist > delta * root_n) throw NumericError("generate_clustered_design: delta-tightness violated");
    }
    out.rank_deficient = !general_position_check(out.x, 3, splitmix64(seed ^ 0x5eedULL));
    return out;
}

inline DesignMatrix generate_design(Index n, Index p, const DesignSpec& spec, std::uint64_t seed)
{
    if (n < 2 || p < 1) throw DomainError("generate_design: need n >= 2 and p >= 1");
    switch (spec.kind) {
    case DesignKind::clustered:
        return generate_clustered_design(n, p, spec.rank, spec.delta, seed, spec.clusters);
    case DesignKind::equicorrelated:
        if (!(spec.rho >= 0.0 && spec.rho < 1.0))
            throw DomainError("generate_design: equicorrelated rho must lie in [0, 1)");
        break;
    case DesignKind::ar1:
        if (!(spec.rho > -1.0 && spec.rho < 1.0)) throw DomainError("generate_design: ar1 rho must lie in (-1, 1)");
        break;
    case DesignKind::orthogonal:
        if (p > n) throw DomainError("generate_design: orthogonal design needs p <= n");
        break;
    case DesignKind::iid_gaussian:
        break;
    }

    DesignMatrix out;
    out.spec = spec;
    Rng rng(seed);
    if (spec.kind == DesignKind::orthogonal) {
        out.x = std::sqrt(static_cast<double>(n)) * detail::random_orthonormal(n, p, rng);
        return out;
    }

    out.x.resize(n, p);
    detail::fill_raw(out.x, spec, rng);
    for (Index j = 0; j < p; ++j) {
        std::uint64_t retry = 0;
        while (!detail::normalize_column(out.x.col(j))) {
            // Degenerate column: redraw it independently.
            Rng fix(splitmix64(seed + 0x9e37ULL * static_cast<std::uint64_t>(j + 1) + ++retry));
            for (Index i = 0; i < n; ++i) out.x(i, j) = fix.normal();
        }
    }
    return out;
}

/// Largest |(||X_j||^2 / n) - 1| over columns.
inline double max_normalization_error(const Matrix& x)
{
    const double n = static_cast<double>(x.rows());
    return (x.colwise().squaredNorm().array() / n - 1.0).abs().maxCoeff();
}

/// Largest ||X_j - v_{r(j)}|| / sqrt(n); meaningful for clustered designs.
inline double max_cluster_radius(const DesignMatrix& d)
{
    double worst = 0.0;
    for (Index j = 0; j < d.p(); ++j)
        worst = std::max(worst, (d.x.col(j) - d.representatives.col(d.cluster_of[static_cast<std::size_t>(j)])).norm());
    return worst / std::sqrt(static_cast<double>(d.n()));
}

// CSV: one comment line "# n=<n>,p=<p>,kind=<kind>", then n rows of p values.
inline void write_design_csv(std::ostream& os, const DesignMatrix& d)
{
    os << "# n=" << d.n() << ",p=" << d.p() << ",kind=" << to_string(d.spec.kind) << '\n';
    for (Index i = 0; i < d.n(); ++i) {
        for (Index j = 0; j < d.p(); ++j) {
            if (j) os << ',';
            os << format_double(d.x(i, j));
        }
        os << '\n';
    }
}

inline DesignMatrix read_design_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line.rfind("# ", 0) != 0) throw DomainError("design csv: missing header line");
    Index n = -1, p = -1;
    std::string kind;
    std::stringstream header(line.substr(2));
    std::string field;
    while (std::getline(header, field, ',')) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) throw DomainError("design csv: malformed header field '" + field + "'");
        const std::string key = field.substr(0, eq);
        const std::string value = field.substr(eq + 1);
        if (key == "n") n = std::stol(value);
        else if (key == "p") p = std::stol(value);
        else if (key == "kind") kind = value;
    }
    if (n < 1 || p < 1 || kind.empty()) throw DomainError("design csv: header must carry n, p and kind");

    DesignMatrix d;
    d.spec.kind = design_kind_from_string(kind);
    d.x.resize(n, p);
    for (Index i = 0; i < n; ++i) {
        if (!std::getline(is, line)) throw DomainError("design csv: expected " + std::to_string(n) + " rows");
        std::stringstream row(line);
        Index j = 0;
        while (std::getline(row, field, ',')) {
            if (j >= p) throw DomainError("design csv: too many values in row " + std::to_string(i + 1));
            d.x(i, j++) = parse_double(field);
        }
        if (j != p) throw DomainError("design csv: too few values in row " + std::to_string(i + 1));
    }
    return d;
}

// ---------------------------------------------------------------------------
// True coefficients
// ---------------------------------------------------------------------------

struct TrueModel {
    Vector beta0;
    IndexSet support;
    double magnitude = 0.0;
    std::vector<int> signs;
};

enum class SupportPlacement { first, random };

/// beta0 with equal magnitudes on the support; signs alternate +,-,+,...
/// unless `alternate_signs` is false.
inline TrueModel make_true_model(Index p, Index support_size, double magnitude, SupportPlacement placement,
                                 std::uint64_t seed, bool alternate_signs = true)
{
    if (support_size < 0 || support_size > p) throw DomainError("make_true_model: support size must lie in [0, p]");
    TrueModel m;
    m.magnitude = magnitude;
    m.beta0 = Vector::Zero(p);
    std::vector<Index> idx(static_cast<std::size_t>(p));
    std::iota(idx.begin(), idx.end(), Index{0});
    if (placement == SupportPlacement::random) {
        Rng rng(seed);
        std::shuffle(idx.begin(), idx.end(), rng.engine());
    }
    m.support.assign(idx.begin(), idx.begin() + support_size);
    std::sort(m.support.begin(), m.support.end());
    if (magnitude == 0.0) m.support.clear();
    for (std::size_t k = 0; k < m.support.size(); ++k) {
        const int sign = (alternate_signs && k % 2 == 1) ? -1 : 1;
        m.signs.push_back(sign);
        m.beta0(m.support[k]) = sign * magnitude;
    }
    return m;
}

// ---------------------------------------------------------------------------
// Noise
// ---------------------------------------------------------------------------

enum class NoiseKind { gaussian, martingale_arch, rademacher };

inline std::string to_string(NoiseKind k)
{
    switch (k) {
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::martingale_arch: return "martingale_arch";
    case NoiseKind::rademacher: return "rademacher";
    }
    return "unknown";
}

inline NoiseKind noise_kind_from_string(std::string_view s)
{
    if (s == "gaussian") return NoiseKind::gaussian;
    if (s == "martingale_arch") return NoiseKind::martingale_arch;
    if (s == "rademacher") return NoiseKind::rademacher;
    throw DomainError("unknown noise kind '" + std::string(s) + "'");
}

/// martingale_arch: eps_i = tau_i z_i with
/// tau_i^2 = sigma^2 min(1, a + b eps_{i-1}^2 / sigma^2), eps_0 = 0.
struct NoiseSpec {
    NoiseKind kind = NoiseKind::gaussian;
    double sigma = 1.0;
    double a = 1.0;
    double b = 0.0;

    bool operator==(const NoiseSpec&) const = default;

    void validate() const
    {
        if (!(sigma >= 0.0)) throw DomainError("noise: sigma must be nonnegative");
        if (kind == NoiseKind::martingale_arch && (a < 0.0 || b < 0.0 || a + b > 1.0))
            throw DomainError("noise: martingale_arch requires a >= 0, b >= 0 and a + b <= 1");
    }
};

inline void fill_noise(Eigen::Ref<Vector> out, const NoiseSpec& spec, Rng& rng)
{
    const Index n = out.size();
    switch (spec.kind) {
    case NoiseKind::gaussian:
        for (Index i = 0; i < n; ++i) out(i) = spec.sigma * rng.normal();
        break;
    case NoiseKind::rademacher:
        for (Index i = 0; i < n; ++i) out(i) = (rng.next() & 1ULL) ? spec.sigma : -spec.sigma;
        break;
    case NoiseKind::martingale_arch: {
        const double s2 = spec.sigma * spec.sigma;
        double prev = 0.0;
        for (Index i = 0; i < n; ++i) {
            const double z = rng.normal();
            double tau2 = 0.0;
            if (s2 > 0.0) tau2 = s2 * std::min(1.0, spec.a + spec.b * prev * prev / s2);
            prev = std::sqrt(tau2) * z;
            out(i) = prev;
        }
        break;
    }
    }
}

inline Vector generate_noise(Index n, const NoiseSpec& spec, std::uint64_t seed)
{
    if (n < 1) throw DomainError("generate_noise: n must be positive");
    spec.validate();
    Vector eps(n);
    Rng rng(seed);
    fill_noise(eps, spec, rng);
    return eps;
}

} // namespace lrb
