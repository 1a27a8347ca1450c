#include <cmath>

#include <gtest/gtest.h>

#include <lrb/bounds.hpp>

using namespace lrb;

TEST(Factors, ClosedForms)
{
    EXPECT_DOUBLE_EQ(factor_f1(1.0, 3.0), 7.0 / 16.0);
    EXPECT_DOUBLE_EQ(factor_f2(3.0), 21.0 / 16.0);
    EXPECT_DOUBLE_EQ(factor_f3(2.0, 2.0), 1.0 / 8.0);
    EXPECT_DOUBLE_EQ(factor_f4(1.0), 3.0 / 4.0);
    EXPECT_DOUBLE_EQ(thm31_leading_factor(3.0), 21.0 / 32.0);
}

TEST(Factors, F4PeakMatchesStationaryPoint)
{
    // d/dx log f4 = 1/(2x) + 2/(2x+1) - 2/(x+1) = 0  <=>  2x^2 - 3x - 1 = 0,
    // so the peak is at x* = (3 + sqrt(17)) / 4.
    const double x_star = (3.0 + std::sqrt(17.0)) / 4.0;
    const ScalarMax m = f4_maximum();
    EXPECT_NEAR(m.argmax, x_star, 1e-6);
    EXPECT_NEAR(m.value, factor_f4(x_star), 1e-12);
    EXPECT_GE(m.argmax, 1.77);
    EXPECT_LE(m.argmax, 1.79);
    EXPECT_GE(m.value, 0.78);
    EXPECT_LE(m.value, 0.80);
}

TEST(Factors, F2MonotoneWithLimitTwo)
{
    double prev = -1.0;
    for (double x = 0.0; x < 1000.0; x += 0.37) {
        const double v = factor_f2(x);
        EXPECT_GT(v, prev);
        EXPECT_LT(v, 2.0);
        prev = v;
    }
    EXPECT_NEAR(factor_f2(1e9), 2.0, 1e-8);
}

TEST(Factors, GoldenSectionOnParabola)
{
    const ScalarMax m = golden_section_max([](double x) { return -(x - 0.3) * (x - 0.3) + 2.0; }, -1.0, 4.0);
    // Function comparisons resolve the argmax only to about sqrt(eps).
    EXPECT_NEAR(m.argmax, 0.3, 1e-7);
    EXPECT_NEAR(m.value, 2.0, 1e-14);
}

TEST(Bounds, Cor35Formula)
{
    // (2 lam / c) (c(2c+1)/(2(c+1)^2) lam P - m)
    const double lam = 0.1, c = 3.0, p = 0.9, m = 0.02;
    const double expect = 2 * lam / c * (c * (2 * c + 1) / (2 * (c + 1) * (c + 1)) * lam * p - m);
    EXPECT_NEAR(bound_cor35(lam, c, p, m), expect, 1e-17);
    EXPECT_THROW(bound_cor35(lam, 2.0, p, m), DomainError);
    EXPECT_THROW(bound_cor35(lam, 3.0, 1.5, m), DomainError);
}

TEST(Bounds, Thm31ReducesToCor35)
{
    // T0 = full set gives P(E not in T0) = 0 and exp_max_t0 = exp_max_full.
    BoundInputs in;
    in.lambda_l = 0.2;
    in.c = 4.0;
    in.n = 100;
    in.p = 50;
    in.sigma = 1.0;
    in.p_nonempty = 0.8;
    in.exp_max_t0 = in.exp_max_full = 0.05;
    in.sqrt_second_moment = 0.07;
    in.p_not_contained = 0.0;
    EXPECT_NEAR(bound_thm31(in), bound_cor35(0.2, 4.0, 0.8, 0.05), 1e-16);

    in.exp_max_t0 = 0.01;
    in.p_not_contained = 0.04;
    const double expect = 2 * 0.2 / 4.0 * (factor_f2(4.0) / 2 * 0.2 * 0.8 - 0.01 - 0.07 * 0.2);
    EXPECT_NEAR(bound_thm31(in), expect, 1e-16);
    in.c = 2.0;
    EXPECT_THROW(bound_thm31(in), DomainError);
}

TEST(Bounds, Thm314Formula)
{
    const double lam = 0.5, c = 1.78, sigma = 1.0, p = 1.0, q = 0.01;
    const Index n = 100;
    const double expect = lam / std::sqrt(c) * (factor_f4(c) * lam * p - sigma * 1.1 * std::sqrt(q));
    EXPECT_NEAR(bound_thm314(lam, c, sigma, n, p, q), expect, 1e-15);
    // Exact recovery with certainty: bound = f4(c) lam^2 / sqrt(c).
    EXPECT_NEAR(bound_thm314(lam, c, sigma, n, 1.0, 0.0), factor_f4(c) * lam * lam / std::sqrt(c), 1e-15);
}

TEST(Bounds, NoiseMaximumBounds)
{
    EXPECT_NEAR(gaussian_max_bound(500, 200, 0.1), 0.1 * std::sqrt(2 * std::log(1000.0) / 200), 1e-16);
    EXPECT_NEAR(second_moment_bound(50, 100, 2.0), 4.0 * (2 * std::log(200.0) + 1) / 100, 1e-15);
    EXPECT_NEAR(two_step_bound(8, 500, 100, 1.0, 0.2), 0.1 * (std::sqrt(2 * std::log(16.0)) + 0.2 * std::sqrt(2 * std::log(1000.0))), 1e-15);
    // K = 8 beats the plain union bound at p = 500; K = p never does.
    EXPECT_LT(two_step_bound(8, 500, 100, 1.0, 0.2), gaussian_max_bound(500, 100, 1.0));
    EXPECT_GT(two_step_bound(500, 500, 100, 1.0, 0.2), gaussian_max_bound(500, 100, 1.0));
    EXPECT_THROW(two_step_bound(0, 500, 100, 1.0, 0.2), DomainError);
    EXPECT_THROW(two_step_bound(8, 500, 100, 1.0, 0.0), DomainError);
}

TEST(Bounds, PositivityThreshold)
{
    const double m = 0.03, p = 0.7, c = 3.0;
    const double t = cor35_positivity_threshold(m, p, c);
    EXPECT_NEAR(bound_cor35(t, c, p, m), 0.0, 1e-15);
    EXPECT_GT(bound_cor35(1.01 * t, c, p, m), 0.0);
    EXPECT_LT(bound_cor35(0.99 * t, c, p, m), 0.0);
}

TEST(Bounds, EvaluateReport)
{
    BoundInputs in;
    in.lambda_l = 0.3;
    in.c = 1.78;
    in.n = 100;
    in.p = 10;
    in.sigma = 1.0;
    const BoundReport r = evaluate_bounds(in);
    EXPECT_FALSE(r.thm31_applicable);
    EXPECT_TRUE(std::isnan(r.thm31_bound));
    EXPECT_TRUE(std::isnan(r.cor35_bound));
    EXPECT_TRUE(std::isnan(r.two_step_bound));
    EXPECT_NEAR(r.thm314_bound, bound_thm314(0.3, 1.78, 1.0, 100, 1.0, 0.0), 1e-16);

    in.c = 3.0;
    const BoundReport r3 = evaluate_bounds(in, 4, 0.5);
    EXPECT_TRUE(r3.thm31_applicable);
    EXPECT_NEAR(r3.cor35_bound, bound_cor35(0.3, 3.0, 1.0, 0.0), 1e-16);
    EXPECT_NEAR(r3.two_step_bound, two_step_bound(4, 10, 100, 1.0, 0.5), 1e-16);

    in.p_nonempty = 1.2;
    EXPECT_THROW(evaluate_bounds(in), DomainError);
}
