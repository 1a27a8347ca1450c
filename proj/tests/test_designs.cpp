#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include <lrb/designs.hpp>
#include <lrb/numerics.hpp>

using namespace lrb;

TEST(Design, ColumnsNormalizedForEveryKind)
{
    const DesignSpec specs[] = {{DesignKind::iid_gaussian}, {DesignKind::equicorrelated, 0.5}, {DesignKind::ar1, -0.6},
                                {DesignKind::clustered, 0.0, 4, 0.3, 2}, {DesignKind::orthogonal}};
    for (const auto& spec : specs) {
        const DesignMatrix d = generate_design(60, 40, spec, 17);
        EXPECT_EQ(d.n(), 60);
        EXPECT_EQ(d.p(), 40);
        EXPECT_LE(max_normalization_error(d.x), 1e-12) << to_string(spec.kind);
    }
}

TEST(Design, DeterministicInSeed)
{
    const DesignSpec spec{DesignKind::ar1, 0.4};
    EXPECT_EQ(generate_design(30, 20, spec, 5).x, generate_design(30, 20, spec, 5).x);
    EXPECT_NE(generate_design(30, 20, spec, 5).x, generate_design(30, 20, spec, 6).x);
}

TEST(Design, EquicorrelatedOffDiagonalMean)
{
    // Population correlation 0.8; the average sample off-diagonal over 100 seeds is close to it.
    std::vector<double> means;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const Matrix x = generate_design(200, 10, {DesignKind::equicorrelated, 0.8}, seed).x;
        const Matrix g = x.transpose() * x / 200.0;
        means.push_back((g.sum() - g.trace()) / 90.0);
    }
    EXPECT_NEAR(mean_and_se(means).mean, 0.8, 0.15);
}

TEST(Design, Ar1LagOneCorrelation)
{
    std::vector<double> lag1;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Matrix x = generate_design(400, 6, {DesignKind::ar1, 0.6}, seed).x;
        for (Index j = 0; j + 1 < 6; ++j) lag1.push_back(x.col(j).dot(x.col(j + 1)) / 400.0);
    }
    EXPECT_NEAR(mean_and_se(lag1).mean, 0.6, 0.05);
}

TEST(Design, OrthogonalGram)
{
    const Matrix x = generate_design(100, 10, {DesignKind::orthogonal}, 3).x;
    EXPECT_LE((x.transpose() * x / 100.0 - Matrix::Identity(10, 10)).norm(), 1e-12);
    EXPECT_THROW(generate_design(5, 10, {DesignKind::orthogonal}, 3), DomainError);
}

TEST(Design, RejectsBadParameters)
{
    EXPECT_THROW(generate_design(10, 5, {DesignKind::equicorrelated, 1.0}, 1), DomainError);
    EXPECT_THROW(generate_design(10, 5, {DesignKind::ar1, -1.0}, 1), DomainError);
    EXPECT_THROW(generate_design(1, 5, {}, 1), DomainError);
}

TEST(Design, GeneralPosition)
{
    const Matrix x = generate_design(20, 50, {}, 9).x;
    EXPECT_TRUE(general_position_check(x, 5, 1));
    Matrix dup = x;
    dup.col(1) = dup.col(0);
    // Duplicated columns lose rank once both are sampled; with 50 trials on 20 of 50 columns it happens.
    EXPECT_FALSE(general_position_check(dup, 50, 1));
}

TEST(Clustered, TightnessAndCount)
{
    const DesignMatrix d = generate_clustered_design(100, 500, 3, 0.2, 21);
    EXPECT_EQ(d.num_clusters(), 8);
    EXPECT_LE(max_cluster_radius(d), 0.2);
    EXPECT_LE(max_normalization_error(d.x), 1e-12);
    // Representatives span an r-dimensional subspace.
    const Eigen::ColPivHouseholderQR<Matrix> qr(d.representatives);
    EXPECT_EQ(qr.rank(), 3);
    for (Index l = 0; l < d.num_clusters(); ++l) EXPECT_NEAR(d.representatives.col(l).norm(), 10.0, 1e-10);
}

TEST(Clustered, KBound)
{
    EXPECT_DOUBLE_EQ(clustered_k_bound(3, 0.2), 1331.0);
    EXPECT_THROW(generate_clustered_design(50, 100, 1, 1.0, 1, 4), DomainError);  // (1 + 2)^1 = 3 < 4
    EXPECT_THROW(generate_clustered_design(50, 5, 2, 0.5, 1, 6), DomainError);   // K > p
}

TEST(Clustered, PackingSpreadsPoints)
{
    Rng rng(4);
    const Matrix pts = greedy_sphere_packing(2, 4, rng, 4000);
    double min_dist = 10.0;
    for (int a = 0; a < 4; ++a) {
        EXPECT_NEAR(pts.col(a).norm(), 1.0, 1e-12);
        for (int b = a + 1; b < 4; ++b) min_dist = std::min(min_dist, (pts.col(a) - pts.col(b)).norm());
    }
    // Four points on the circle: the optimum is sqrt(2); greedy is within a few percent.
    EXPECT_GT(min_dist, 1.3);
}

TEST(DesignCsv, RoundTripIsExact)
{
    const DesignMatrix d = generate_design(7, 4, {DesignKind::ar1, 0.3}, 8);
    std::stringstream ss;
    write_design_csv(ss, d);
    const DesignMatrix back = read_design_csv(ss);
    EXPECT_EQ(back.x, d.x);
    EXPECT_EQ(back.spec.kind, DesignKind::ar1);

    std::stringstream bad("# n=2,p=2,kind=iid_gaussian\n1,2\n3\n");
    EXPECT_THROW(read_design_csv(bad), DomainError);
}

TEST(TrueModel, SupportAndSigns)
{
    const TrueModel m = make_true_model(10, 4, 2.0, SupportPlacement::first, 1);
    EXPECT_EQ(m.support, (IndexSet{0, 1, 2, 3}));
    EXPECT_EQ(m.beta0(0), 2.0);
    EXPECT_EQ(m.beta0(1), -2.0);
    EXPECT_EQ(m.beta0(4), 0.0);

    const TrueModel r = make_true_model(50, 5, 1.0, SupportPlacement::random, 3);
    EXPECT_EQ(r.support.size(), 5u);
    EXPECT_TRUE(std::is_sorted(r.support.begin(), r.support.end()));
    EXPECT_EQ(r.beta0.lpNorm<1>(), 5.0);

    EXPECT_TRUE(make_true_model(10, 3, 0.0, SupportPlacement::first, 1).support.empty());
    EXPECT_THROW(make_true_model(3, 4, 1.0, SupportPlacement::first, 1), DomainError);
}

TEST(Noise, GaussianScale)
{
    NoiseSpec spec;
    spec.sigma = 2.0;
    const Vector e = generate_noise(100000, spec, 12);
    EXPECT_NEAR(e.mean(), 0.0, 4.0 * 2.0 / std::sqrt(1e5));
    EXPECT_NEAR(e.squaredNorm() / 1e5, 4.0, 0.1);
    spec.sigma = 0.0;
    EXPECT_EQ(generate_noise(10, spec, 1), Vector::Zero(10));
}

TEST(Noise, RademacherValues)
{
    NoiseSpec spec{NoiseKind::rademacher, 0.5};
    const Vector e = generate_noise(1000, spec, 2);
    for (Index i = 0; i < e.size(); ++i) EXPECT_EQ(std::abs(e(i)), 0.5);
    EXPECT_NEAR(e.mean(), 0.0, 0.1);
}

TEST(Noise, ArchMartingaleMoments)
{
    // Conditional variance is capped at sigma^2; successive terms are uncorrelated,
    // squares are positively correlated when b > 0. Unclamped stationary variance a sigma^2 / (1 - b).
    NoiseSpec spec{NoiseKind::martingale_arch, 1.0, 0.5, 0.4};
    const int n = 400000;
    const Vector e = generate_noise(n, spec, 31);
    const double var = e.squaredNorm() / n;
    EXPECT_LE(var, 1.0);
    EXPECT_LE(var, 0.5 / 0.6 + 0.01);
    EXPECT_GE(var, 0.5);
    double lag = 0.0, sq_lag = 0.0;
    for (int i = 1; i < n; ++i) {
        lag += e(i) * e(i - 1);
        sq_lag += (e(i) * e(i) - var) * (e(i - 1) * e(i - 1) - var);
    }
    EXPECT_NEAR(lag / n, 0.0, 0.01);
    EXPECT_GT(sq_lag / n, 0.0);

    // b = 0, a = 1 reduces to Gaussian noise.
    NoiseSpec flat{NoiseKind::martingale_arch, 1.0, 1.0, 0.0};
    EXPECT_NEAR(generate_noise(n, flat, 5).squaredNorm() / n, 1.0, 0.01);
    EXPECT_THROW((NoiseSpec{NoiseKind::martingale_arch, 1.0, 0.8, 0.4}.validate()), DomainError);
}
