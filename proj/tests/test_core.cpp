#include <gtest/gtest.h>

#include <limits>

#include "pstorm/core.hpp"
#include "pstorm/problems/npca.hpp"
#include "pstorm/prox.hpp"
#include "test_util.hpp"

using namespace pstorm;
using pstorm::testing::QuadraticFiniteSum;
using pstorm::testing::random_feasible;
using pstorm::testing::random_vector;

namespace {

std::shared_ptr<const SmoothOracle> quad(Rng& rng, Eigen::Index n, Eigen::Index N) {
  return std::make_shared<QuadraticFiniteSum>(pstorm::testing::random_matrix(rng, n, N));
}

std::vector<std::shared_ptr<const Regularizer>> shipped_regularizers() {
  return {std::make_shared<ZeroRegularizer>(), std::make_shared<L1Regularizer>(0.3),
          std::make_shared<NonnegBallIndicator>()};
}

Vector point_in_domain(Rng& rng, const Regularizer& r, Eigen::Index n) {
  return r.name() == "nonneg-ball" ? random_feasible(rng, n) : random_vector(rng, n);
}

}  // namespace

TEST(GradientMapping, ZeroRegularizerReturnsDirection) {
  Rng rng(1);
  CompositeProblem p(quad(rng, 5, 3), std::make_shared<ZeroRegularizer>());
  for (int t = 0; t < 20; ++t) {
    const Vector x = random_vector(rng, 5);
    const Vector d = random_vector(rng, 5);
    const Vector g = gradient_mapping(p, x, d, 0.5);
    EXPECT_LT((g - d).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(GradientMapping, BallCornerIsFixedPoint) {
  Rng rng(2);
  CompositeProblem p(quad(rng, 2, 3), std::make_shared<NonnegBallIndicator>());
  const Vector g = gradient_mapping(p, Vector::Unit(2, 0), Vector(Eigen::Vector2d(-1.0, 0.0)), 1.0);
  EXPECT_EQ(g[0], 0.0);
  EXPECT_EQ(g[1], 0.0);
}

TEST(GradientMapping, RejectsBadInputs) {
  Rng rng(3);
  CompositeProblem p(quad(rng, 3, 3), std::make_shared<ZeroRegularizer>());
  const Vector x = Vector::Zero(3);
  EXPECT_THROW(gradient_mapping(p, x, Vector::Ones(3), 0.0), ParameterError);
  EXPECT_THROW(gradient_mapping(p, x, Vector::Ones(3), -1.0), ParameterError);
  Vector d = Vector::Ones(3);
  d[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(gradient_mapping(p, x, d, 1.0), InputError);
  d[1] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(gradient_mapping(p, x, d, 1.0), InputError);
}

TEST(GradientMapping, VanishesAtStationaryPoint) {
  Rng rng(4);
  auto f = quad(rng, 4, 6);
  CompositeProblem p(f, std::make_shared<ZeroRegularizer>());
  const Vector xstar = f->full_gradient(Vector::Zero(4)) * -1.0;  // the mean of the centers
  EXPECT_LT(gradient_mapping(p, xstar, f->full_gradient(xstar), 1.0).norm(), 1e-14);
}

TEST(Stationarity, UnconstrainedEqualsGradientNorm) {
  Rng rng(5);
  auto f = quad(rng, 6, 4);
  CompositeProblem p(f, std::make_shared<ZeroRegularizer>());
  for (int t = 0; t < 10; ++t) {
    const Vector x = random_vector(rng, 6);
    EXPECT_NEAR(stationarity_violation(p, x), f->full_gradient(x).norm(), 1e-14);
  }
}

TEST(Stationarity, SingleSampleNpcaAtSample) {
  Matrix z = Matrix::Zero(3, 1);
  z(0, 0) = 1.0;
  auto f = std::make_shared<NpcaFiniteSumOracle>(NpcaFiniteSumOracle::from_dense(z));
  CompositeProblem p(f, std::make_shared<NonnegBallIndicator>());
  const Vector e1 = Vector::Unit(3, 0);
  EXPECT_EQ(f->full_gradient(e1), -e1);
  EXPECT_EQ(stationarity_violation(p, e1), 0.0);
}

TEST(Stationarity, ZeroAtUnconstrainedMinimizer) {
  Matrix c = Matrix::Zero(2, 2);
  c(0, 0) = 1.0;
  c(0, 1) = -1.0;
  CompositeProblem p(std::make_shared<QuadraticFiniteSum>(c), std::make_shared<ZeroRegularizer>());
  EXPECT_EQ(stationarity_violation(p, Vector::Zero(2)), 0.0);
}

TEST(Properties, MappingIsNonexpansiveInDirection) {
  Rng rng(6);
  for (const auto& r : shipped_regularizers()) {
    CompositeProblem p(quad(rng, 7, 3), r);
    for (int t = 0; t < 100; ++t) {
      const Vector x = point_in_domain(rng, *r, 7);
      const Vector d1 = random_vector(rng, 7, 2.0);
      const Vector d2 = random_vector(rng, 7, 2.0);
      const double eta = std::uniform_real_distribution<double>(0.01, 3.0)(rng);
      const double lhs = (gradient_mapping(p, x, d1, eta) - gradient_mapping(p, x, d2, eta)).norm();
      EXPECT_LE(lhs, (d1 - d2).norm() + 1e-12) << r->name();
    }
  }
}

TEST(Properties, DescentInequality) {
  Rng rng(7);
  for (const auto& r : shipped_regularizers()) {
    CompositeProblem p(quad(rng, 7, 3), r);
    for (int t = 0; t < 100; ++t) {
      const Vector x = point_in_domain(rng, *r, 7);
      const Vector d = random_vector(rng, 7, 2.0);
      const double eta = std::uniform_real_distribution<double>(0.01, 3.0)(rng);
      const Vector P = gradient_mapping(p, x, d, eta);
      const Vector x_plus = r->mirror_prox_solve(x, d, eta);
      EXPECT_GE(d.dot(P), P.squaredNorm() + (r->value(x_plus) - r->value(x)) / eta - 1e-10) << r->name();
    }
  }
}

TEST(Properties, SampleGradientsAreUnbiased) {
  Rng rng(8);
  const std::size_t N = 50;
  auto f = std::make_shared<NpcaFiniteSumOracle>(
      NpcaFiniteSumOracle::from_dense([&] {
        Matrix z(10, N);
        for (std::size_t i = 0; i < N; ++i) z.col(static_cast<Eigen::Index>(i)) = npca_generate_sample(rng, 10);
        return z;
      }()));
  const Vector x = random_feasible(rng, 10);
  const int draws = 100000;
  Vector sum = Vector::Zero(10), sq = Vector::Zero(10);
  for (int t = 0; t < draws; ++t) {
    const Vector g = f->sample_gradient(x, rng, 1);
    sum += g;
    sq += g.cwiseProduct(g);
  }
  const Vector mean = sum / draws;
  const Vector var = sq / draws - mean.cwiseProduct(mean);
  const Vector full = f->full_gradient(x);
  for (Eigen::Index i = 0; i < 10; ++i) EXPECT_LE(std::abs(mean[i] - full[i]), 4.0 * std::sqrt(var[i] / draws));
}

TEST(CompositeProblem, RejectsNullAndDimensionMismatch) {
  Rng rng(9);
  auto f = quad(rng, 3, 2);
  EXPECT_THROW(CompositeProblem(nullptr, std::make_shared<ZeroRegularizer>()), ParameterError);
  EXPECT_THROW(CompositeProblem(f, nullptr), ParameterError);
  CompositeProblem ok(f, std::make_shared<L1Regularizer>(1.0));
  EXPECT_EQ(ok.dim(), 3u);
}

TEST(CompositeProblem, ValueAddsRegularizer) {
  Rng rng(10);
  auto f = quad(rng, 3, 2);
  CompositeProblem p(f, std::make_shared<L1Regularizer>(2.0));
  const Vector x = Eigen::Vector3d(1.0, -2.0, 0.5);
  EXPECT_DOUBLE_EQ(p.value(x), f->objective(x) + 7.0);
}

TEST(Density, CountsExactNonzeros) {
  EXPECT_EQ(density_pct(Vector::Zero(4)), 0.0);
  EXPECT_EQ(density_pct(Vector::Ones(4)), 100.0);
  Vector x = Vector::Zero(4);
  x[2] = 1e-300;
  EXPECT_EQ(density_pct(x), 25.0);
  EXPECT_EQ(density_pct(Vector()), 0.0);
}
