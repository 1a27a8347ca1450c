#include <cmath>

#include <gtest/gtest.h>

#include <lrb/designs.hpp>
#include <lrb/lasso.hpp>
#include <lrb/refine.hpp>
#include <lrb/verify.hpp>

using namespace lrb;

namespace {

// A solution with a prescribed E and signs; only equi_set, signs and lambda matter to refine().
LassoSolution fake_solution(Index p, const IndexSet& e, const std::vector<int>& s, double lambda)
{
    LassoSolution sol;
    sol.beta = Vector::Zero(p);
    sol.equi_set = e;
    sol.signs = s;
    sol.lambda = lambda;
    sol.certified = true;
    return sol;
}

} // namespace

TEST(Refine, ScalarCase)
{
    const Matrix x = generate_design(40, 5, {}, 1).x;
    const double lambda = 0.3, c = 3.0;
    const auto sol = fake_solution(5, {2}, {-1}, lambda);
    const RefinedEstimate ref = refine(x, sol, c);
    const double lr = c;
    EXPECT_DOUBLE_EQ(ref.lambda_r, lr);
    EXPECT_NEAR(ref.delta_hat(2), -lambda / (1.0 + lr), 1e-15);
    EXPECT_NEAR(ref.h_value, lambda * lambda * (1.0 + 2.0 * lr) / ((1.0 + lr) * (1.0 + lr)), 1e-15);
    for (Index j : {0, 1, 3, 4}) EXPECT_EQ(ref.delta_hat(j), 0.0);
}

TEST(Refine, EmptySet)
{
    const Matrix x = generate_design(20, 5, {}, 1).x;
    const RefinedEstimate ref = refine(x, fake_solution(5, {}, {}, 0.2), 3.0);
    EXPECT_TRUE(ref.delta_hat.isZero(0.0));
    EXPECT_EQ(ref.lambda_r, 0.0);
    EXPECT_EQ(ref.h_value, 0.0);
    EXPECT_THROW(refine(x, fake_solution(5, {}, {}, 0.2), 0.0), DomainError);
}

TEST(Refine, OrthonormalBlock)
{
    // Sigma_E = I: H = lambda^2 k (1 + 2ck) / (1 + ck)^2.
    const Matrix x = generate_design(100, 10, {DesignKind::orthogonal}, 2).x;
    const double lambda = 0.25, c = 2.5;
    const IndexSet e{1, 4, 7};
    const auto sol = fake_solution(10, e, {1, -1, 1}, lambda);
    const RefinedEstimate ref = refine(x, sol, c);
    const double k = 3.0;
    const double expect = lambda * lambda * k * (1.0 + 2.0 * c * k) / ((1.0 + c * k) * (1.0 + c * k));
    EXPECT_NEAR(ref.h_value, expect, 1e-14);
    EXPECT_NEAR(h_definitional(x, sol, ref), expect, 1e-14);
}

TEST(Refine, ClosedFormMatchesDirectRidge)
{
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        const Instance in = sample_instance(seed, {20, 80, 10, 150});
        for (double c : {0.5, 1.78, 3.0, 10.0}) {
            const RefinedEstimate ref = refine(in.x, in.sol, c);
            const Vector closed = select_rows(ref.delta_hat, in.sol.equi_set);
            const Vector direct = direct_ridge_delta(in.x, in.y, in.sol, ref.lambda_r);
            EXPECT_LE((closed - direct).norm(), 1e-8 * (1.0 + closed.norm())) << seed;
        }
    }
}

TEST(Refine, SignAlignmentAndBounds)
{
    for (std::uint64_t seed = 100; seed < 160; ++seed) {
        const Instance in = sample_instance(seed, {20, 80, 10, 150});
        const double lam = in.sol.lambda;
        for (double c : {2.1, 3.0, 5.0}) {
            const RefinedEstimate ref = refine(in.x, in.sol, c);
            EXPECT_TRUE(ref.signs_aligned);
            EXPECT_NEAR(ref.l1_delta, select_rows(ref.delta_hat, in.sol.equi_set).dot(in.sol.sign_vector()), 1e-14);
            EXPECT_LE(ref.l1_delta, lam / c * (1 + 1e-12));
            EXPECT_GE(ref.h_value, lam * lam * (2 * c + 1) / ((c + 1) * (c + 1)) * (1 - 1e-12));
            EXPECT_NEAR(ref.h_value, h_definitional(in.x, in.sol, ref), 1e-9 * ref.h_value);
        }
    }
}

TEST(Refine, DecompositionIdentity)
{
    for (std::uint64_t seed = 200; seed < 240; ++seed) {
        const Instance in = sample_instance(seed, {20, 80, 10, 150});
        const RefinedEstimate ref = refine(in.x, in.sol, 3.0);
        const double gap = prediction_gap(in.x, in.beta0, in.sol, ref);
        const double rhs = ref.h_value - noise_interaction(in.x, ref, in.eps);
        EXPECT_LE(std::abs(gap - rhs), 1e-9 * (1.0 + std::abs(gap))) << seed;
    }
}

TEST(Refine, NoiselessGapEqualsH)
{
    const Matrix x = generate_design(50, 100, {}, 3).x;
    const TrueModel m = make_true_model(100, 4, 1.0, SupportPlacement::first, 1);
    const Vector y = x * m.beta0;
    const LassoSolution sol = solve_lasso(x, y, 0.1);
    ASSERT_TRUE(sol.certified);
    ASSERT_FALSE(sol.empty());
    for (double c : {2.5, 3.0, 10.0}) {
        const RefinedEstimate ref = refine(x, sol, c);
        const double gap = prediction_gap(x, m.beta0, sol, ref);
        EXPECT_LE(std::abs(gap - ref.h_value), 1e-9 * std::abs(ref.h_value));
    }
}

TEST(Refine, SmallCMayBreakSignAlignment)
{
    // Sigma_E = [[1, .8, 0], [.8, 1, .5], [0, .5, 1]]: Sigma^{-1} 1 has a negative middle entry,
    // so a tiny lambda_R flips the sign there while lambda_R = 3|E| keeps it.
    Matrix sigma(3, 3);
    sigma << 1, 0.8, 0, 0.8, 1, 0.5, 0, 0.5, 1;
    const Matrix x = std::sqrt(3.0) * Matrix(sigma.llt().matrixU());
    ASSERT_LE((x.transpose() * x / 3.0 - sigma).norm(), 1e-14);
    const auto sol = fake_solution(3, {0, 1, 2}, {1, 1, 1}, 1.0);
    EXPECT_FALSE(refine(x, sol, 0.001).signs_aligned);
    EXPECT_TRUE(refine(x, sol, 3.0).signs_aligned);
}
