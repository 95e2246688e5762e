#ifndef PSTORM_PROX_HPP
#define PSTORM_PROX_HPP

#include <algorithm>
#include <cmath>
#include <limits>

#include "pstorm/core.hpp"

namespace pstorm {

/// Euclidean prox of lambda*|.|_1 applied at z = x - eta*d.
///
/// Entries with |z_i| <= eta*lambda are stored as exact zeros; the density
/// metric counts them.
inline Vector soft_threshold(const Vector& x, const Vector& d, double eta, double lambda) {
  if (!(eta > 0.0)) throw ParameterError("soft_threshold: eta must be positive");
  if (!(lambda >= 0.0)) throw ParameterError("soft_threshold: lambda must be nonnegative");
  require_finite(x, "soft_threshold: x");
  require_finite(d, "soft_threshold: d");
  Vector z = x - eta * d;
  if (lambda == 0.0) return z;
  const double t = eta * lambda;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double zi = z[i];
    if (std::abs(zi) <= t)
      z[i] = 0.0;
    else
      z[i] = zi > 0.0 ? zi - t : zi + t;
  }
  return z;
}

/// Projection onto {p : |p| <= 1, p >= 0}: clip negatives, then rescale.
inline Vector project_nonneg_ball(const Vector& z) {
  require_finite(z, "project_nonneg_ball: z");
  Vector p(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) p[i] = z[i] > 0.0 ? z[i] : 0.0;
  const double norm = p.norm();
  if (norm > 1.0) {
    p /= norm;
    // rounding can leave |p| a few ulps above 1; shrink so the result is a
    // fixed point of the projection
    while (p.norm() > 1.0) p *= std::nextafter(1.0, 0.0);
  }
  return p;
}

class ZeroRegularizer final : public Regularizer {
 public:
  double value(const Vector&) const override { return 0.0; }

  Vector mirror_prox_solve(const Vector& x, const Vector& d, double eta) const override {
    return x - eta * d;
  }

  std::string name() const override { return "zero"; }
};

class L1Regularizer final : public Regularizer {
 public:
  explicit L1Regularizer(double lambda) : lambda_(lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ParameterError("L1Regularizer: lambda must be >= 0");
  }

  double lambda() const { return lambda_; }

  double value(const Vector& x) const override { return lambda_ * x.lpNorm<1>(); }

  Vector mirror_prox_solve(const Vector& x, const Vector& d, double eta) const override {
    return soft_threshold(x, d, eta, lambda_);
  }

  std::string name() const override { return "l1"; }

 private:
  double lambda_;
};

// Indicator of the unit ball intersected with the nonnegative orthant.
class NonnegBallIndicator final : public Regularizer {
 public:
  // Points produced by the projection itself (norm 1 up to rounding) count
  // as inside the domain.
  double value(const Vector& x) const override {
    return domain_violation(x) <= kDomainTolerance ? 0.0 : std::numeric_limits<double>::infinity();
  }

  Vector mirror_prox_solve(const Vector& x, const Vector& d, double eta) const override {
    if (!(eta > 0.0)) throw ParameterError("mirror_prox_solve: eta must be positive");
    return project_nonneg_ball(x - eta * d);
  }

  double domain_violation(const Vector& x) const override {
    double v = std::max(0.0, x.norm() - 1.0);
    if (x.size() > 0) v = std::max(v, -x.minCoeff());
    return v;
  }

  Vector project_domain(const Vector& x) const override { return project_nonneg_ball(x); }

  std::string name() const override { return "nonneg-ball"; }
};

}  // namespace pstorm

#endif  // PSTORM_PROX_HPP
