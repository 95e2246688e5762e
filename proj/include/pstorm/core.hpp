#ifndef PSTORM_CORE_HPP
#define PSTORM_CORE_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pstorm/error.hpp"

namespace pstorm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Every random quantity in a run comes from one of these, seeded once.
using Rng = std::mt19937_64;

inline bool all_finite(const Vector& v) { return v.allFinite(); }

inline void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw InputError(std::string(what) + " has non-finite entries");
}

// m i.i.d. draws of the random variable, with replacement. Finite-sum oracles
// record sample indices; stochastic oracles record the realizations
// themselves, one column per draw.
struct MinibatchDraw {
  std::vector<std::size_t> indices;
  Matrix samples;

  std::size_t size() const {
    return indices.empty() ? static_cast<std::size_t>(samples.cols()) : indices.size();
  }
};

// Smooth part F(x) = E[f(x; xi)] of a composite problem.
//
// Implementations are read-only after construction, so all methods may be
// called concurrently. batch_gradient evaluates the average sample gradient
// over an existing draw, which is how two points share the same draws.
class SmoothOracle {
 public:
  virtual ~SmoothOracle() = default;

  virtual std::size_t dim() const = 0;

  // Mean-squared smoothness constant L.
  virtual double smoothness() const = 0;

  virtual MinibatchDraw draw(Rng& rng, std::size_t m) const = 0;

  virtual Vector batch_gradient(const Vector& x, const MinibatchDraw& batch) const = 0;

  // Exact for finite sums; for stochastic oracles this is the gradient of a
  // fixed sample-approximation problem (see evaluation_samples()).
  virtual Vector full_gradient(const Vector& x) const = 0;

  virtual double objective(const Vector& x) const = 0;

  // Number of components N for finite-sum oracles, empty for stochastic ones.
  virtual std::optional<std::size_t> num_samples() const = 0;

  // Size of the sample set behind full_gradient/objective.
  virtual std::size_t evaluation_samples() const = 0;

  // Identifies the problem instance for reference-value caching.
  virtual std::string fingerprint() const = 0;

  Vector sample_gradient(const Vector& x, Rng& rng, std::size_t m) const {
    return batch_gradient(x, draw(rng, m));
  }
};

inline constexpr double kDomainTolerance = 1e-12;

// Closed convex r(x) together with the closed-form solve of
//   argmin_y <d, y> + V(y, x) / eta + r(y)
// under the geometry the regularizer ships with (Euclidean for all shipped
// instances, V(y, x) = |y - x|^2 / 2).
class Regularizer {
 public:
  virtual ~Regularizer() = default;

  // +infinity outside dom(r).
  virtual double value(const Vector& x) const = 0;

  virtual Vector mirror_prox_solve(const Vector& x, const Vector& d, double eta) const = 0;

  // Distance-like measure of how far x is outside dom(r); 0 inside. Values up
  // to kDomainTolerance count as rounding and are projected away.
  virtual double domain_violation(const Vector&) const { return 0.0; }

  // Map onto dom(r). Identity for regularizers with full domain.
  virtual Vector project_domain(const Vector& x) const { return x; }

  // Fixed dimension if the regularizer has one.
  virtual std::optional<std::size_t> dim() const { return std::nullopt; }

  virtual std::string name() const = 0;
};

// Phi(x) = F(x) + r(x).
class CompositeProblem {
 public:
  CompositeProblem(std::shared_ptr<const SmoothOracle> smooth, std::shared_ptr<const Regularizer> reg)
      : smooth_(std::move(smooth)), reg_(std::move(reg)) {
    if (!smooth_ || !reg_) throw ParameterError("composite problem needs an oracle and a regularizer");
    if (reg_->dim() && *reg_->dim() != smooth_->dim())
      throw ParameterError("regularizer dimension does not match oracle dimension");
  }

  const SmoothOracle& smooth() const { return *smooth_; }
  const Regularizer& reg() const { return *reg_; }
  std::shared_ptr<const SmoothOracle> smooth_ptr() const { return smooth_; }
  std::shared_ptr<const Regularizer> reg_ptr() const { return reg_; }

  std::size_t dim() const { return smooth_->dim(); }

  double value(const Vector& x) const { return smooth_->objective(x) + reg_->value(x); }

 private:
  std::shared_ptr<const SmoothOracle> smooth_;
  std::shared_ptr<const Regularizer> reg_;
};

// Proximal gradient mapping P(x, d, eta) = (x - x+) / eta.
inline Vector gradient_mapping(const CompositeProblem& problem, const Vector& x, const Vector& d,
                               double eta) {
  if (!(eta > 0.0)) throw ParameterError("gradient_mapping: eta must be positive");
  require_finite(d, "gradient_mapping: d");
  if (x.size() != d.size()) throw InputError("gradient_mapping: dimension mismatch");
  const Vector x_plus = problem.reg().mirror_prox_solve(x, d, eta);
  return (x - x_plus) / eta;
}

// |P(x, grad F(x), eta)|, eta = 1 unless the caller asks otherwise.
inline double stationarity_violation(const CompositeProblem& problem, const Vector& x, double eta = 1.0) {
  return gradient_mapping(problem, x, problem.smooth().full_gradient(x), eta).norm();
}

// Percentage of exactly nonzero entries.
inline double density_pct(const Vector& x) {
  if (x.size() == 0) return 0.0;
  std::size_t nnz = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x[i] != 0.0) ++nnz;
  return 100.0 * static_cast<double>(nnz) / static_cast<double>(x.size());
}

}  // namespace pstorm

#endif  // PSTORM_CORE_HPP
