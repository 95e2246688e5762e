#include <gtest/gtest.h>

#include "oracles/brute_force.hpp"
#include "pstorm/prox.hpp"
#include "test_util.hpp"

using namespace pstorm;
using pstorm::testing::bitwise_equal;
using pstorm::testing::random_feasible;
using pstorm::testing::random_vector;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST(SoftThreshold, ZeroLambdaIsGradientStep) {
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const Vector x = random_vector(rng, 6), d = random_vector(rng, 6);
    EXPECT_TRUE(bitwise_equal(soft_threshold(x, d, 0.7, 0.0), Vector(x - 0.7 * d)));
  }
}

TEST(SoftThreshold, ScalarExamples) {
  // z = x - eta d with eta = 1, d = 0
  EXPECT_NEAR(soft_threshold(vec({1.0}), vec({0.0}), 1.0, 0.3)[0], 0.7, 1e-15);
  EXPECT_EQ(soft_threshold(vec({-0.2}), vec({0.0}), 1.0, 0.3)[0], 0.0);
  EXPECT_NEAR(oracles::l1_prox_grid(1.0, 0.0, 1.0, 0.3), 0.7, 1e-6);
  EXPECT_NEAR(oracles::l1_prox_grid(-0.2, 0.0, 1.0, 0.3), 0.0, 1e-6);
}

TEST(SoftThreshold, ThresholdedEntriesAreExactZeros) {
  const Vector out = soft_threshold(vec({0.3, -0.3, 0.1, -1e-17, 0.31}), Vector::Zero(5), 1.0, 0.3);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(out[i], 0.0);
    EXPECT_FALSE(std::signbit(out[i])) << i;
  }
  EXPECT_GT(out[4], 0.0);
}

TEST(SoftThreshold, OddSymmetry) {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const Vector x = random_vector(rng, 5), d = random_vector(rng, 5);
    const Vector a = soft_threshold(x, d, 0.4, 0.5);
    const Vector b = soft_threshold(-x, -d, 0.4, 0.5);
    for (Eigen::Index i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], -b[i]);
  }
}

TEST(SoftThreshold, MatchesGridOracle) {
  Rng rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0), pos(0.05, 1.5);
  for (int t = 0; t < 20; ++t) {
    const double x = u(rng), d = u(rng), eta = pos(rng), lambda = pos(rng);
    EXPECT_NEAR(soft_threshold(vec({x}), vec({d}), eta, lambda)[0], oracles::l1_prox_grid(x, d, eta, lambda), 1e-6);
  }
}

TEST(SoftThreshold, DensityMonotoneInThreshold) {
  Rng rng(4);
  const Vector x = random_vector(rng, 200), d = Vector::Zero(200);
  double prev = 101.0;
  for (double lambda = 0.0; lambda < 3.0; lambda += 0.05) {
    const double dens = density_pct(soft_threshold(x, d, 1.0, lambda));
    EXPECT_LE(dens, prev);
    prev = dens;
  }
}

TEST(SoftThreshold, RejectsBadParameters) {
  EXPECT_THROW(soft_threshold(vec({1.0}), vec({1.0}), 0.0, 0.1), ParameterError);
  EXPECT_THROW(soft_threshold(vec({1.0}), vec({1.0}), 1.0, -0.1), ParameterError);
}

TEST(ProjectNonnegBall, Examples) {
  const Vector inside = vec({0.2, 0.3, 0.0});
  EXPECT_TRUE(bitwise_equal(project_nonneg_ball(inside), inside));
  const Vector p = project_nonneg_ball(vec({3.0, 4.0, -1.0}));
  EXPECT_NEAR(p[0], 0.6, 1e-15);
  EXPECT_NEAR(p[1], 0.8, 1e-15);
  EXPECT_EQ(p[2], 0.0);
  EXPECT_EQ(project_nonneg_ball(Vector::Zero(3)), Vector::Zero(3));
  Rng rng(5);
  EXPECT_LE(oracles::projection_vi_violation(vec({3.0, 4.0, -1.0}), p, rng), 1e-12);
}

TEST(ProjectNonnegBall, SatisfiesOptimalityCondition) {
  Rng rng(6);
  for (int t = 0; t < 30; ++t) {
    const Vector z = random_vector(rng, 6, 1.5);
    const Vector p = project_nonneg_ball(z);
    EXPECT_LE(oracles::projection_vi_violation(z, p, rng, 200), 1e-12);
  }
}

TEST(ProjectNonnegBall, Idempotent) {
  Rng rng(7);
  for (int t = 0; t < 100; ++t) {
    const Vector p = project_nonneg_ball(random_vector(rng, 8, 2.0));
    EXPECT_TRUE(bitwise_equal(project_nonneg_ball(p), p));
  }
}

TEST(Regularizers, Values) {
  const Vector x = vec({1.0, -2.0, 0.0});
  EXPECT_EQ(ZeroRegularizer().value(x), 0.0);
  EXPECT_EQ(L1Regularizer(0.5).value(x), 1.5);
  EXPECT_THROW(L1Regularizer(-1.0), ParameterError);
  NonnegBallIndicator ball;
  EXPECT_EQ(ball.value(vec({0.6, 0.8})), 0.0);
  EXPECT_TRUE(std::isinf(ball.value(vec({0.6, -0.1}))));
  EXPECT_TRUE(std::isinf(ball.value(vec({1.0, 0.1}))));
  EXPECT_GT(ball.domain_violation(vec({-0.5, 0.0})), 0.0);
  EXPECT_EQ(ball.domain_violation(vec({0.5, 0.0})), 0.0);
}

TEST(Regularizers, ZeroSolveIsGradientStep) {
  const Vector x = vec({1.0, 2.0}), d = vec({0.5, -1.0});
  EXPECT_TRUE(bitwise_equal(ZeroRegularizer().mirror_prox_solve(x, d, 0.3), Vector(x - 0.3 * d)));
}

TEST(Regularizers, SolveSatisfiesFirstOrderCondition) {
  Rng rng(8);
  std::vector<std::shared_ptr<Regularizer>> regs = {std::make_shared<ZeroRegularizer>(),
                                                     std::make_shared<L1Regularizer>(0.4),
                                                     std::make_shared<NonnegBallIndicator>()};
  for (const auto& r : regs) {
    const bool ball = r->name() == "nonneg-ball";
    for (int t = 0; t < 100; ++t) {
      const Vector x = ball ? random_feasible(rng, 5) : random_vector(rng, 5);
      const Vector d = random_vector(rng, 5);
      const double eta = std::uniform_real_distribution<double>(0.05, 2.0)(rng);
      const Vector ys = r->mirror_prox_solve(x, d, eta);
      EXPECT_EQ(r->value(ys), r->value(ys)) << "solution outside domain";
      EXPECT_FALSE(std::isinf(r->value(ys)));
      for (int probe = 0; probe < 100; ++probe) {
        const Vector y = ball ? random_feasible(rng, 5) : random_vector(rng, 5, 2.0);
        const double lhs = (d + (ys - x) / eta).dot(y - ys) + r->value(y) - r->value(ys);
        EXPECT_GE(lhs, -1e-8) << r->name();
      }
    }
  }
}

TEST(Regularizers, MidpointConvexity) {
  Rng rng(9);
  L1Regularizer l1(0.7);
  NonnegBallIndicator ball;
  for (int t = 0; t < 100; ++t) {
    const Vector a = random_vector(rng, 4), b = random_vector(rng, 4);
    EXPECT_LE(l1.value(0.5 * (a + b)), 0.5 * (l1.value(a) + l1.value(b)) + 1e-12);
    const Vector p = random_feasible(rng, 4), q = random_feasible(rng, 4);
    EXPECT_EQ(ball.value(0.5 * (p + q)), 0.0);
  }
}
