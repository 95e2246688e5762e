#ifndef PSTORM_PROBLEMS_REFERENCE_HPP
#define PSTORM_PROBLEMS_REFERENCE_HPP

#include <cstddef>
#include <map>
#include <mutex>
#include <string>
#include <utility>

#include "pstorm/core.hpp"

namespace pstorm {

struct ReferenceSolution {
  Vector x;
  double objective = 0.0;
};

/// Deterministic proximal (projected) gradient: x <- prox(x, grad F(x), eta),
/// `iters` times from x0. The final objective stands in for the optimum.
inline ReferenceSolution reference_solution(const CompositeProblem& problem, Vector x0, std::size_t iters, double eta) {
  if (!(eta > 0.0)) throw ParameterError("reference_solution: eta must be positive");
  Vector x = std::move(x0);
  for (std::size_t i = 0; i < iters; ++i) x = problem.reg().mirror_prox_solve(x, problem.smooth().full_gradient(x), eta);
  const double obj = problem.smooth().objective(x);
  return {std::move(x), obj};
}

// Process-wide memo of reference objectives keyed by problem fingerprint and
// solver settings. Safe to use from concurrent runs.
class ReferenceCache {
 public:
  static ReferenceCache& instance() {
    static ReferenceCache cache;
    return cache;
  }

  double objective(const CompositeProblem& problem, const Vector& x0, std::size_t iters, double eta) {
    const std::string key = problem.smooth().fingerprint() + "|" + problem.reg().name() + "|" +
                            std::to_string(iters) + "|" + std::to_string(eta);
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (auto it = values_.find(key); it != values_.end()) return it->second;
    }
    const double v = reference_solution(problem, x0, iters, eta).objective;
    std::lock_guard<std::mutex> lock(mu_);
    values_.emplace(key, v);
    return v;
  }

 private:
  std::mutex mu_;
  std::map<std::string, double> values_;
};

}  // namespace pstorm

#endif  // PSTORM_PROBLEMS_REFERENCE_HPP
