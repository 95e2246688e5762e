#ifndef PSTORM_OPTIM_HPP
#define PSTORM_OPTIM_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "pstorm/core.hpp"
#include "pstorm/schedules.hpp"

namespace pstorm {

// x^k, the gradient estimator and the bookkeeping each step function carries
// forward. The rng is owned by the state: identical (seed, config) gives an
// identical trajectory.
struct OptimizerState {
  Vector x;
  Vector d;       // estimator: d^k (PStorm), v^{k-1} (Spiderboost), v^k (Hybrid-SGD); unused by prox-SGD
  Vector x_prev;  // previous iterate, kept by Spiderboost
  std::size_t k = 0;
  Rng rng;
  std::uint64_t samples_consumed = 0;
};

namespace detail {

inline void check_state(const OptimizerState& state, const CompositeProblem& problem) {
  if (static_cast<std::size_t>(state.x.size()) != problem.dim())
    throw InputError("optimizer state dimension does not match problem");
}

inline void check_batch(std::size_t m, const char* who) {
  if (m == 0) throw ParameterError(std::string(who) + ": batch size must be positive");
}

}  // namespace detail

/// Samples an initial batch of m0 costs: on a finite-sum oracle a batch of
/// N or more is replaced by one pass over the data.
inline std::uint64_t initial_batch_cost(const SmoothOracle& f, std::size_t m0) {
  const auto n = f.num_samples();
  return (n && m0 >= *n) ? *n : m0;
}

/// Start of the momentum method: d^0 is the average of m0 sample gradients at
/// x0 (the exact gradient when m0 >= N on a finite sum).
inline OptimizerState pstorm_init(const CompositeProblem& problem, Vector x0, std::size_t m0, Rng rng) {
  if (m0 == 0) throw ParameterError("pstorm_init: m0 must be positive");
  if (static_cast<std::size_t>(x0.size()) != problem.dim()) throw InputError("pstorm_init: x0 has wrong dimension");
  require_finite(x0, "pstorm_init: x0");
  if (const double v = problem.reg().domain_violation(x0); v > 0.0) {
    if (v > kDomainTolerance) throw InputError("pstorm_init: x0 is outside dom(r)");
    x0 = problem.reg().project_domain(x0);
  }
  const SmoothOracle& f = problem.smooth();
  OptimizerState state;
  state.rng = std::move(rng);
  const auto n = f.num_samples();
  if (n && m0 >= *n) {
    state.d = f.full_gradient(x0);
  } else {
    state.d = f.batch_gradient(x0, f.draw(state.rng, m0));
  }
  state.x = std::move(x0);
  state.samples_consumed = initial_batch_cost(f, m0);
  return state;
}

/// One PStorm iteration:
///   x^{k+1} = prox(x^k, d^k, eta_k)
///   v, u    = batch gradients at x^{k+1}, x^k over one fresh batch
///   d^{k+1} = v + (1 - beta_k)(d^k - u)
///
/// beta_k = 1 collapses the estimator to v (plain proximal SGD); beta_k = 0
/// gives the recursive (SARAH-type) estimator.
inline OptimizerState pstorm_step(OptimizerState state, const CompositeProblem& problem, double eta_k, double beta_k,
                                  std::size_t m) {
  detail::check_state(state, problem);
  detail::check_batch(m, "pstorm_step");
  if (!(beta_k >= 0.0 && beta_k <= 1.0)) throw ScheduleError("pstorm_step: beta_k outside [0, 1]");
  Vector x_next = problem.reg().mirror_prox_solve(state.x, state.d, eta_k);
  const MinibatchDraw batch = problem.smooth().draw(state.rng, m);
  Vector v = problem.smooth().batch_gradient(x_next, batch);
  if (beta_k == 1.0) {
    state.d = std::move(v);
  } else {
    const Vector u = problem.smooth().batch_gradient(state.x, batch);
    state.d = v + (1.0 - beta_k) * (state.d - u);
  }
  state.x = std::move(x_next);
  state.k += 1;
  state.samples_consumed += m;
  return state;
}

inline OptimizerState pstorm_step(OptimizerState state, const CompositeProblem& problem, const Schedule& schedule,
                                  std::size_t m) {
  const std::size_t k = state.k;
  return pstorm_step(std::move(state), problem, schedule.eta_at(k), schedule.beta_at(k), m);
}

/// Vanilla proximal SGD: x^{k+1} = prox(x^k, g, eta_k), g a fresh m-sample average at x^k.
inline OptimizerState proxsgd_step(OptimizerState state, const CompositeProblem& problem, double eta_k, std::size_t m) {
  detail::check_state(state, problem);
  detail::check_batch(m, "proxsgd_step");
  if (!(eta_k >= 0.0)) throw ParameterError("proxsgd_step: eta_k must be nonnegative");
  const MinibatchDraw batch = problem.smooth().draw(state.rng, m);
  const Vector g = problem.smooth().batch_gradient(state.x, batch);
  if (eta_k > 0.0) state.x = problem.reg().mirror_prox_solve(state.x, g, eta_k);
  state.k += 1;
  state.samples_consumed += m;
  return state;
}

/// Number of samples a Spiderboost checkpoint consumes. big_batch = 0, or any
/// value >= N on a finite-sum oracle, means the exact full gradient.
inline std::uint64_t spiderboost_checkpoint_cost(const SmoothOracle& oracle, std::size_t big_batch) {
  const auto n = oracle.num_samples();
  if (n && (big_batch == 0 || big_batch >= *n)) return *n;
  if (big_batch == 0) throw ParameterError("spiderboost: big_batch = 0 needs a finite-sum oracle");
  return big_batch;
}

/// Spiderboost with constant stepsize. Every q-th iteration rebuilds the
/// estimator from a big batch, the others update it with a small batch of
/// gradient differences evaluated on shared draws.
inline OptimizerState spiderboost_step(OptimizerState state, const CompositeProblem& problem, double eta, std::size_t q,
                                       std::size_t big_batch, std::size_t small_batch) {
  detail::check_state(state, problem);
  if (q == 0) throw ParameterError("spiderboost_step: q must be positive");
  if (!(eta > 0.0)) throw ParameterError("spiderboost_step: eta must be positive");
  const SmoothOracle& f = problem.smooth();
  Vector v;
  if (state.k % q == 0) {
    const std::uint64_t cost = spiderboost_checkpoint_cost(f, big_batch);
    if (f.num_samples() && cost == *f.num_samples()) {
      v = f.full_gradient(state.x);
    } else {
      v = f.batch_gradient(state.x, f.draw(state.rng, big_batch));
    }
    state.samples_consumed += cost;
  } else {
    detail::check_batch(small_batch, "spiderboost_step");
    const MinibatchDraw batch = f.draw(state.rng, small_batch);
    v = f.batch_gradient(state.x, batch) - f.batch_gradient(state.x_prev, batch) + state.d;
    state.samples_consumed += small_batch;
  }
  Vector x_next = problem.reg().mirror_prox_solve(state.x, v, eta);
  state.x_prev = std::move(state.x);
  state.x = std::move(x_next);
  state.d = std::move(v);
  state.k += 1;
  return state;
}

struct HybridSgdParams {
  double gamma = 0.95;
  double beta = 0.0;
  double eta = 0.5;
  std::size_t m0 = 1;
};

/// Constant parameters for Hybrid-SGD:
///   gamma = 3 c0 m^{3/4} / (sqrt(13) m0 (K+1)^{1/4}),  beta = 1 - sqrt(m) / sqrt(m0 K),
///   eta = 2 / (L (3 + gamma)),                           m0 = c1^2 ceil(m (K+1)^{1/3}).
/// With finite_sum_cap set, gamma is fixed at 0.95 and m0 is capped at that
/// value (the dataset size).
inline HybridSgdParams hybrid_sgd_params(double c0, double c1, std::size_t m, std::size_t K, double L,
                                         std::optional<std::size_t> finite_sum_cap = std::nullopt) {
  if (!(c0 > 0.0) || !(c1 > 0.0) || m == 0 || K == 0 || !(L > 0.0))
    throw ParameterError("hybrid_sgd_params: all inputs must be positive");
  const double md = static_cast<double>(m);
  const double kd = static_cast<double>(K);
  HybridSgdParams p;
  const double m0 = c1 * c1 * std::ceil(md * std::cbrt(kd + 1.0));
  p.m0 = static_cast<std::size_t>(std::max(1.0, std::ceil(m0)));
  if (finite_sum_cap) {
    p.m0 = std::min(p.m0, *finite_sum_cap);
    p.gamma = 0.95;
  } else {
    p.gamma = 3.0 * c0 * std::pow(md, 0.75) / (std::sqrt(13.0) * static_cast<double>(p.m0) * std::pow(kd + 1.0, 0.25));
  }
  p.beta = 1.0 - std::sqrt(md) / std::sqrt(static_cast<double>(p.m0) * kd);
  p.eta = 2.0 / (L * (3.0 + p.gamma));
  if (!(p.gamma > 0.0 && p.gamma <= 1.0)) throw ParameterError("hybrid_sgd_params: gamma outside (0, 1]");
  if (!(p.beta >= 0.0 && p.beta <= 1.0)) throw ParameterError("hybrid_sgd_params: beta outside [0, 1]");
  return p;
}

/// Parameter law used for network training: gamma = 0.95, beta = 1 - 1/sqrt(K+1),
/// eta = 2 / (4 + L gamma), user-chosen m0.
inline HybridSgdParams hybrid_sgd_params_network(std::size_t m0, std::size_t K, double L) {
  if (m0 == 0 || K == 0 || !(L > 0.0)) throw ParameterError("hybrid_sgd_params_network: inputs must be positive");
  HybridSgdParams p;
  p.gamma = 0.95;
  p.beta = 1.0 - 1.0 / std::sqrt(static_cast<double>(K) + 1.0);
  p.eta = 2.0 / (4.0 + L * p.gamma);
  p.m0 = m0;
  return p;
}

/// One Hybrid-SGD iteration:
///   xhat    = prox(x^k, v^k, eta),  x^{k+1} = (1 - gamma) x^k + gamma xhat
///   v^{k+1} = beta v^k + beta (grad(x^{k+1}; xi) - grad(x^k; xi)) + (1 - beta) grad(x^{k+1}; zeta)
/// with independent batches xi and zeta. share_batches reuses xi for zeta.
inline OptimizerState hybrid_sgd_step(OptimizerState state, const CompositeProblem& problem, double gamma, double beta,
                                      double eta, std::size_t m, bool count_both = true, bool share_batches = false) {
  detail::check_state(state, problem);
  detail::check_batch(m, "hybrid_sgd_step");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ParameterError("hybrid_sgd_step: gamma outside (0, 1]");
  if (!(beta >= 0.0 && beta <= 1.0)) throw ParameterError("hybrid_sgd_step: beta outside [0, 1]");
  const SmoothOracle& f = problem.smooth();
  Vector x_hat = problem.reg().mirror_prox_solve(state.x, state.d, eta);
  Vector x_next = gamma == 1.0 ? std::move(x_hat) : Vector((1.0 - gamma) * state.x + gamma * x_hat);
  const double violation = problem.reg().domain_violation(x_next);
  if (violation > 0.0) {
    if (violation > kDomainTolerance) throw InputError("hybrid_sgd_step: iterate left dom(r)");
    x_next = problem.reg().project_domain(x_next);
  }

  const MinibatchDraw xi = f.draw(state.rng, m);
  const Vector a = f.batch_gradient(x_next, xi);
  const Vector b = f.batch_gradient(state.x, xi);
  Vector v = beta * a + beta * (state.d - b);
  if (beta != 1.0) {
    if (share_batches) {
      v += (1.0 - beta) * a;
    } else {
      const MinibatchDraw zeta = f.draw(state.rng, m);
      v += (1.0 - beta) * f.batch_gradient(x_next, zeta);
    }
  } else if (!share_batches) {
    // zeta is still drawn so the rng stream does not depend on beta
    (void)f.draw(state.rng, m);
  }
  state.samples_consumed += (share_batches || !count_both) ? m : 2 * m;
  state.x = std::move(x_next);
  state.d = std::move(v);
  state.k += 1;
  return state;
}

// ---------------------------------------------------------------------------
// Run driver

struct PstormConfig {
  Schedule schedule;
  std::size_t m = 1;
  std::size_t m0 = 1;
};

struct ProxSgdConfig {
  std::function<double(std::size_t)> stepsize;
  std::size_t m = 1;

  // eta / sqrt(k + 1)
  static std::function<double(std::size_t)> inv_sqrt(double eta) {
    return [eta](std::size_t k) { return eta / std::sqrt(static_cast<double>(k) + 1.0); };
  }
  static std::function<double(std::size_t)> constant(double eta) {
    return [eta](std::size_t) { return eta; };
  }
};

struct SpiderboostConfig {
  double eta = 0.5;
  std::size_t q = 1;
  std::size_t big_batch = 0;  // 0: full dataset (finite-sum only)
  std::size_t small_batch = 1;
};

struct HybridSgdConfig {
  HybridSgdParams params;
  std::size_t m = 1;
  bool count_both = true;
};

using MethodConfig = std::variant<PstormConfig, ProxSgdConfig, SpiderboostConfig, HybridSgdConfig>;

inline std::string method_name(const MethodConfig& c) {
  switch (c.index()) {
    case 0: return "pstorm";
    case 1: return "proxsgd";
    case 2: return "spiderboost";
    case 3: return "hybrid-sgd";
  }
  return "?";
}

enum class OutputRule { Uniform, TauWeights, Last };

struct MetricsRow {
  std::uint64_t epoch = 0;
  std::uint64_t samples = 0;
  double objective = 0.0;
  double obj_error = std::numeric_limits<double>::quiet_NaN();
  double stationarity = 0.0;
  double density_pct = 0.0;
  std::int64_t wall_ms = 0;
};

struct RunOptions {
  Vector x0;
  std::uint64_t seed = 0;
  std::optional<std::size_t> max_iterations;
  std::optional<std::uint64_t> max_samples;
  std::uint64_t samples_per_epoch = 0;
  OutputRule output_rule = OutputRule::Uniform;
  double stationarity_eta = 1.0;
  std::optional<double> reference_objective;
  bool record_wall_time = false;
};

struct RunResult {
  Vector selected;
  std::size_t tau = 0;
  std::size_t iterations = 0;
  std::uint64_t samples = 0;
  Vector final_x;
  std::vector<MetricsRow> rows;
};

namespace detail {

inline std::uint64_t init_cost(const MethodConfig& c, const SmoothOracle& f) {
  if (const auto* p = std::get_if<PstormConfig>(&c)) return initial_batch_cost(f, p->m0);
  if (const auto* h = std::get_if<HybridSgdConfig>(&c)) return initial_batch_cost(f, h->params.m0);
  return 0;
}

inline std::uint64_t step_cost(const MethodConfig& c, const SmoothOracle& f, std::size_t k) {
  return std::visit(
      [&](const auto& cfg) -> std::uint64_t {
        using T = std::decay_t<decltype(cfg)>;
        if constexpr (std::is_same_v<T, PstormConfig> || std::is_same_v<T, ProxSgdConfig>) {
          return cfg.m;
        } else if constexpr (std::is_same_v<T, SpiderboostConfig>) {
          return k % cfg.q == 0 ? spiderboost_checkpoint_cost(f, cfg.big_batch) : cfg.small_batch;
        } else {
          return cfg.count_both ? 2 * cfg.m : cfg.m;
        }
      },
      c);
}

}  // namespace detail

/// Number of iterations that fit in the budget. Costs depend only on k, so
/// this is known before the run starts.
inline std::size_t iterations_for_budget(const MethodConfig& config, const SmoothOracle& f,
                                         std::optional<std::size_t> max_iterations,
                                         std::optional<std::uint64_t> max_samples) {
  if (!max_iterations && !max_samples) throw ConfigError("run: no budget given");
  if (!max_samples) return *max_iterations;
  std::uint64_t used = detail::init_cost(config, f);
  if (used > *max_samples) return 0;
  std::size_t k = 0;
  const std::size_t cap = max_iterations.value_or(std::numeric_limits<std::size_t>::max());
  while (k < cap) {
    const std::uint64_t c = detail::step_cost(config, f, k);
    if (c == 0) throw ParameterError("run: step consumes no samples");
    if (used + c > *max_samples) break;
    used += c;
    ++k;
  }
  return k;
}

inline OptimizerState init_state(const CompositeProblem& problem, const MethodConfig& config, const Vector& x0,
                                 Rng rng) {
  if (const auto* p = std::get_if<PstormConfig>(&config)) return pstorm_init(problem, x0, p->m0, std::move(rng));
  if (const auto* h = std::get_if<HybridSgdConfig>(&config))
    return pstorm_init(problem, x0, h->params.m0, std::move(rng));
  if (static_cast<std::size_t>(x0.size()) != problem.dim()) throw InputError("run: x0 has wrong dimension");
  OptimizerState s;
  s.x = x0;
  s.rng = std::move(rng);
  return s;
}

inline OptimizerState advance(OptimizerState state, const CompositeProblem& problem, const MethodConfig& config) {
  return std::visit(
      [&](const auto& cfg) -> OptimizerState {
        using T = std::decay_t<decltype(cfg)>;
        if constexpr (std::is_same_v<T, PstormConfig>) {
          return pstorm_step(std::move(state), problem, cfg.schedule, cfg.m);
        } else if constexpr (std::is_same_v<T, ProxSgdConfig>) {
          const double eta = cfg.stepsize(state.k);
          return proxsgd_step(std::move(state), problem, eta, cfg.m);
        } else if constexpr (std::is_same_v<T, SpiderboostConfig>) {
          return spiderboost_step(std::move(state), problem, cfg.eta, cfg.q, cfg.big_batch, cfg.small_batch);
        } else {
          return hybrid_sgd_step(std::move(state), problem, cfg.params.gamma, cfg.params.beta, cfg.params.eta, cfg.m,
                                 cfg.count_both);
        }
      },
      config);
}

/// Runs K iterations (K from the iteration or sample budget), recording one
/// MetricsRow at the start and one per completed epoch, and returns x^tau
/// with tau chosen by the output rule.
///
/// The selection stream is seeded from the first value of the state rng, so
/// tau is fixed before the run and only x^tau needs to be retained.
inline RunResult run(const CompositeProblem& problem, const MethodConfig& config, const RunOptions& opt) {
  if (opt.samples_per_epoch == 0) throw ConfigError("run: samples_per_epoch must be positive");
  const SmoothOracle& f = problem.smooth();
  const std::string name = method_name(config);
  const std::size_t K = iterations_for_budget(config, f, opt.max_iterations, opt.max_samples);

  Rng rng(opt.seed);
  Rng select_rng(rng());

  std::size_t tau = 0;
  switch (opt.output_rule) {
    case OutputRule::Last:
      tau = K;
      break;
    case OutputRule::Uniform:
      if (K > 0) tau = std::uniform_int_distribution<std::size_t>(0, K - 1)(select_rng);
      break;
    case OutputRule::TauWeights: {
      const auto* p = std::get_if<PstormConfig>(&config);
      if (!p) throw ConfigError("run: tau-weights output needs the pstorm method");
      if (K > 0) {
        const std::vector<double> w = tau_weights(p->schedule, K);
        tau = std::discrete_distribution<std::size_t>(w.begin(), w.end())(select_rng);
      }
      break;
    }
  }

  const auto t_start = std::chrono::steady_clock::now();
  RunResult result;
  result.tau = tau;

  std::size_t last_eval_k = std::numeric_limits<std::size_t>::max();
  MetricsRow last_eval;
  auto record = [&](const OptimizerState& s, std::uint64_t epoch) {
    MetricsRow row;
    if (s.k == last_eval_k) {
      row = last_eval;
    } else {
      try {
        row.objective = f.objective(s.x);
        row.stationarity = stationarity_violation(problem, s.x, opt.stationarity_eta);
        row.density_pct = density_pct(s.x);
      } catch (const std::exception& e) {
        throw Error(name + ", iteration " + std::to_string(s.k) + ": metric evaluation failed: " + e.what());
      }
      if (opt.reference_objective) row.obj_error = row.objective - *opt.reference_objective;
      last_eval_k = s.k;
      last_eval = row;
    }
    row.epoch = epoch;
    row.samples = s.samples_consumed;
    if (opt.record_wall_time)
      row.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t_start)
                        .count();
    result.rows.push_back(row);
  };

  // A zero budget draws nothing: the single row reports x0 at zero samples.
  OptimizerState state;
  if (K > 0) {
    state = init_state(problem, config, opt.x0, std::move(rng));
  } else {
    state.x = opt.x0;
    detail::check_state(state, problem);
  }
  if (tau == 0) result.selected = state.x;
  record(state, 0);
  std::uint64_t epoch = 0;

  for (std::size_t k = 0; k < K; ++k) {
    state = advance(std::move(state), problem, config);
    if (!state.x.allFinite())
      throw InputError(name + ", iteration " + std::to_string(state.k) + ": iterate became non-finite");
    if (state.k == tau) result.selected = state.x;
    const std::uint64_t now = state.samples_consumed / opt.samples_per_epoch;
    while (epoch < now) record(state, ++epoch);
  }
  if (K > 0 && last_eval_k != state.k) record(state, epoch + 1);

  result.iterations = K;
  result.samples = state.samples_consumed;
  result.final_x = std::move(state.x);
  return result;
}

}  // namespace pstorm

#endif  // PSTORM_OPTIM_HPP
