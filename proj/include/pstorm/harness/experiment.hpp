#ifndef PSTORM_HARNESS_EXPERIMENT_HPP
#define PSTORM_HARNESS_EXPERIMENT_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pstorm/core.hpp"
#include "pstorm/dataio.hpp"
#include "pstorm/harness/config.hpp"
#include "pstorm/harness/csv.hpp"
#include "pstorm/optim.hpp"
#include "pstorm/problems/mlp.hpp"
#include "pstorm/problems/npca.hpp"
#include "pstorm/problems/reference.hpp"
#include "pstorm/prox.hpp"
#include "pstorm/schedules.hpp"

namespace pstorm {

struct ProblemInstance {
  std::shared_ptr<CompositeProblem> problem;
  Vector x0;
  std::uint64_t samples_per_epoch = 0;
  std::optional<double> reference_objective;
  // network problems only
  std::optional<MlpShape> shape;
  std::optional<DenseDataset> test;
};

inline ProblemInstance build_problem(const RunConfig& c) {
  ProblemInstance inst;
  switch (c.problem) {
    case ProblemKind::NpcaRandom:
    case ProblemKind::NpcaLibsvm: {
      std::shared_ptr<const SmoothOracle> oracle;
      if (c.problem == ProblemKind::NpcaRandom) {
        const std::uint64_t eval_seed = c.eval_seed.value_or(c.seed + 0x9E3779B97F4A7C15ULL);
        oracle = std::make_shared<NpcaStochasticOracle>(c.n, *c.eval_samples, eval_seed);
        inst.samples_per_epoch = *c.samples_per_epoch;
      } else {
        SparseDataset ds = normalize_rows(parse_libsvm_file(c.data));
        const std::size_t n = ds.features.n_cols;
        auto fs = std::make_shared<NpcaFiniteSumOracle>(std::move(ds.features), n);
        inst.samples_per_epoch = c.samples_per_epoch.value_or(*fs->num_samples());
        oracle = fs;
      }
      inst.problem = std::make_shared<CompositeProblem>(oracle, std::make_shared<NonnegBallIndicator>());
      inst.x0 = npca_initial_point(oracle->dim());
      if (c.npca_random_start) {
        Rng init_rng(c.seed ^ 0xA5A5A5A5DEADBEEFULL);
        inst.x0 = npca_random_point(init_rng, oracle->dim());
      }
      const double ref_eta = c.reference_eta.value_or(1.0 / oracle->smoothness());
      inst.reference_objective =
          ReferenceCache::instance().objective(*inst.problem, inst.x0, c.reference_iters, ref_eta);
      break;
    }
    case ProblemKind::MlpSynth:
    case ProblemKind::MlpMnist: {
      DenseDataset train;
      if (c.problem == ProblemKind::MlpSynth) {
        Rng data_rng(c.data_seed);
        train = gen_synthetic_classes(data_rng, c.synth_n, c.synth_dim, c.synth_classes, c.synth_separation);
        if (c.synth_test_n > 0)
          inst.test = gen_synthetic_classes(data_rng, c.synth_test_n, c.synth_dim, c.synth_classes, c.synth_separation);
      } else {
        train = read_idx_files(c.train_images, c.train_labels);
        if (!c.test_images.empty()) inst.test = read_idx_files(c.test_images, c.test_labels);
      }
      int classes = 0;
      for (int y : train.labels) classes = std::max(classes, y);
      const MlpShape shape{static_cast<std::size_t>(train.features.rows()), c.hidden1, c.hidden2,
                           c.problem == ProblemKind::MlpSynth ? c.synth_classes : static_cast<std::size_t>(classes)};
      auto oracle = std::make_shared<MlpOracle>(std::move(train), shape, c.L);
      inst.samples_per_epoch = c.samples_per_epoch.value_or(*oracle->num_samples());
      std::shared_ptr<const Regularizer> reg;
      if (c.lambda > 0.0)
        reg = std::make_shared<L1Regularizer>(c.lambda);
      else
        reg = std::make_shared<ZeroRegularizer>();
      inst.problem = std::make_shared<CompositeProblem>(oracle, reg);
      Rng init_rng(c.seed ^ 0xA5A5A5A5DEADBEEFULL);
      inst.x0 = mlp_init(init_rng, shape);
      inst.shape = shape;
      break;
    }
  }
  return inst;
}

struct PreparedMethod {
  MethodConfig method = ProxSgdConfig{};
  std::size_t K = 0;
  std::vector<std::string> notes;  // validator warnings, derived parameters
};

namespace detail {

inline std::optional<std::uint64_t> sample_budget(const RunConfig& c, std::uint64_t samples_per_epoch) {
  if (c.samples) return *c.samples;
  if (c.epochs) return static_cast<std::uint64_t>(std::llround(*c.epochs * static_cast<double>(samples_per_epoch)));
  return std::nullopt;
}

inline std::optional<std::size_t> iteration_budget(const RunConfig& c) {
  if (c.iterations) return static_cast<std::size_t>(*c.iterations);
  return std::nullopt;
}

}  // namespace detail

/// Turns the method part of a config into a MethodConfig, resolving derived
/// parameters (horizon K, Spiderboost batches, Hybrid-SGD law) and running
/// the schedule validators. Throws ScheduleError when a validator fails and
/// force is not set.
inline PreparedMethod prepare_method(const RunConfig& c, const ProblemInstance& inst) {
  const SmoothOracle& f = inst.problem->smooth();
  const auto samples = detail::sample_budget(c, inst.samples_per_epoch);
  const auto iters = detail::iteration_budget(c);
  PreparedMethod out;
  auto horizon = [&](const MethodConfig& mc) { return iterations_for_budget(mc, f, iters, samples); };

  switch (c.method) {
    case MethodKind::Pstorm: {
      const std::size_t m0 = c.m0.value_or(c.m);
      const std::size_t K = horizon(PstormConfig{Schedule::fixed(1.0, 1.0), c.m, m0});
      ScheduleSpec spec{c.schedule, c.eta, c.L, c.m, std::max<std::size_t>(K, 1), c.beta};
      // Stepsize bounds of the schedule law are feasibility conditions too.
      auto make_schedule = [&] {
        try {
          return Schedule(spec, true);
        } catch (const ParameterError& e) {
          if (!c.force) throw ScheduleError(e.what());
          out.notes.push_back(std::string("forced: ") + e.what());
          return Schedule(spec, false);
        }
      };
      Schedule schedule = make_schedule();
      if (K > 0) {
        if (c.schedule == ScheduleKind::ConstantII) {
          const Thm5Check chk = validate_thm5(schedule);
          if (!chk.ok) {
            const std::string msg = "constant-II conditions fail: " + chk.describe();
            if (!c.force) throw ScheduleError(msg);
            out.notes.push_back("forced: " + msg);
          }
        } else {
          const Thm1Check chk = validate_thm1(schedule, K);
          if (!chk.ok) {
            const std::string msg = "schedule condition " + chk.describe();
            if (!c.force) throw ScheduleError(msg);
            out.notes.push_back("forced: " + msg);
          }
        }
      }
      for (const auto& w : schedule.warnings()) {
        if (c.strict && !c.force) throw ScheduleError("strict: " + w);
        out.notes.push_back("warning: " + w);
      }
      out.method = PstormConfig{std::move(schedule), c.m, m0};
      out.K = K;
      break;
    }
    case MethodKind::ProxSgd: {
      ProxSgdConfig p;
      p.m = c.m;
      p.stepsize = c.proxsgd_inv_sqrt ? ProxSgdConfig::inv_sqrt(c.eta) : ProxSgdConfig::constant(c.eta);
      out.K = horizon(p);
      out.method = std::move(p);
      break;
    }
    case MethodKind::Spiderboost: {
      SpiderboostConfig s;
      s.eta = c.eta;
      if (const auto n = f.num_samples()) {
        const auto root = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(*n))));
        s.q = c.q ? c.q : root;
        s.small_batch = c.small_batch ? c.small_batch : s.q;
        s.big_batch = c.big_batch;  // 0: full pass
      } else {
        if (!c.spider_eps && (c.q == 0 || c.big_batch == 0))
          throw ConfigError("config: spiderboost on a stochastic problem needs spider-eps or q and big-batch");
        const double eps = c.spider_eps.value_or(0.0);
        s.q = c.q ? c.q : static_cast<std::size_t>(std::llround(1.0 / eps));
        s.small_batch = c.small_batch ? c.small_batch : s.q;
        s.big_batch = c.big_batch ? c.big_batch : static_cast<std::size_t>(std::llround(1.0 / (eps * eps)));
      }
      out.notes.push_back("spiderboost: q = " + std::to_string(s.q) + ", small batch = " +
                          std::to_string(s.small_batch) + ", big batch = " +
                          (s.big_batch ? std::to_string(s.big_batch) : std::string("full")));
      out.K = horizon(s);
      out.method = s;
      break;
    }
    case MethodKind::HybridSgd: {
      HybridVariant variant = c.hybrid_variant.value_or(
          c.problem == ProblemKind::NpcaRandom   ? HybridVariant::Random
          : c.problem == ProblemKind::NpcaLibsvm ? HybridVariant::FiniteSum
                                                 : HybridVariant::Network);
      auto params_for = [&](std::size_t K) {
        K = std::max<std::size_t>(K, 1);
        switch (variant) {
          case HybridVariant::Random: return hybrid_sgd_params(c.c0, c.c1, c.m, K, c.L);
          case HybridVariant::FiniteSum: {
            const auto n = f.num_samples();
            if (!n) throw ConfigError("config: finite-sum hybrid variant needs a finite-sum problem");
            return hybrid_sgd_params(c.c0, c.c1, c.m, K, c.L, *n);
          }
          case HybridVariant::Network:
            if (!c.m0) throw ConfigError("config: network hybrid variant needs m0");
            return hybrid_sgd_params_network(*c.m0, K, c.hybrid_L);
        }
        return HybridSgdParams{};
      };
      // m0 depends on K and K on m0: iterate to a fixed point.
      std::size_t per_step = c.hybrid_count_both ? 2 * c.m : c.m;
      std::size_t K = iters ? *iters : static_cast<std::size_t>(samples.value_or(0) / per_step);
      HybridSgdConfig h{params_for(K), c.m, c.hybrid_count_both};
      for (int it = 0; it < 8; ++it) {
        const std::size_t next = horizon(h);
        if (next == K) break;
        K = next;
        h.params = params_for(K);
      }
      out.K = horizon(h);
      std::ostringstream os;
      os.precision(8);
      os << "hybrid-sgd: gamma = " << h.params.gamma << ", beta = " << h.params.beta << ", eta = " << h.params.eta
         << ", m0 = " << h.params.m0;
      out.notes.push_back(os.str());
      out.method = h;
      break;
    }
  }
  return out;
}

struct ExperimentResult {
  std::string method;
  std::vector<MetricsRow> rows;
  RunResult run;
  std::optional<double> test_accuracy;
  std::vector<std::string> notes;
};

// Mean of the last five rows (fewer if the run is shorter).
inline MetricsRow last_five_average(const std::vector<MetricsRow>& rows) {
  MetricsRow avg;
  if (rows.empty()) return avg;
  const std::size_t n = std::min<std::size_t>(5, rows.size());
  avg.objective = avg.obj_error = avg.stationarity = avg.density_pct = 0.0;
  for (std::size_t i = rows.size() - n; i < rows.size(); ++i) {
    avg.objective += rows[i].objective;
    avg.obj_error += rows[i].obj_error;
    avg.stationarity += rows[i].stationarity;
    avg.density_pct += rows[i].density_pct;
  }
  avg.objective /= static_cast<double>(n);
  avg.obj_error /= static_cast<double>(n);
  avg.stationarity /= static_cast<double>(n);
  avg.density_pct /= static_cast<double>(n);
  avg.epoch = rows.back().epoch;
  avg.samples = rows.back().samples;
  return avg;
}

inline ExperimentResult execute(const RunConfig& c, const ProblemInstance& inst) {
  validate(c);
  PreparedMethod prepared = prepare_method(c, inst);
  RunOptions opt;
  opt.x0 = inst.x0;
  opt.seed = c.seed;
  opt.max_iterations = prepared.K;
  opt.samples_per_epoch = inst.samples_per_epoch;
  opt.output_rule = c.output_rule;
  opt.stationarity_eta = c.stationarity_eta;
  opt.reference_objective = inst.reference_objective;
  opt.record_wall_time = c.timing;
  ExperimentResult res;
  res.method = to_string(c.method);
  res.notes = std::move(prepared.notes);
  res.run = run(*inst.problem, prepared.method, opt);
  res.rows = res.run.rows;
  if (inst.shape && inst.test) res.test_accuracy = mlp_accuracy(res.run.selected, *inst.shape, *inst.test);
  return res;
}

inline ExperimentResult execute(const RunConfig& c) {
  validate(c);
  return execute(c, build_problem(c));
}

inline std::string summary_line(const RunConfig& c, const ExperimentResult& r) {
  const MetricsRow avg = last_five_average(r.rows);
  std::ostringstream os;
  os << "problem=" << to_string(c.problem) << " method=" << r.method << " seed=" << c.seed
     << " iterations=" << r.run.iterations << " samples=" << r.run.samples << " epochs=" << avg.epoch
     << " objective=" << csv::format_double(avg.objective) << " obj_error=" << csv::format_double(avg.obj_error)
     << " stationarity=" << csv::format_double(avg.stationarity)
     << " density_pct=" << csv::format_double(avg.density_pct);
  if (r.test_accuracy) os << " test_acc=" << csv::format_double(*r.test_accuracy);
  return os.str();
}

/// Runs one configuration, writes its metrics CSV (when an output path is
/// set) and returns the summary line built from the last five epochs.
inline std::string run_experiment(const RunConfig& c, ExperimentResult* result_out = nullptr) {
  ExperimentResult r = execute(c);
  if (!c.output.empty()) {
    std::ofstream out(c.output);
    if (!out) throw ConfigError("cannot write " + c.output);
    csv::write_metrics(out, r.rows);
  }
  std::string line = summary_line(c, r);
  if (result_out) *result_out = std::move(r);
  return line;
}

// ---------------------------------------------------------------------------
// compare

struct ComparisonRow {
  std::string method;
  MetricsRow median;
};

struct SummaryRow {
  std::string method;
  double train = 0.0;
  double test = std::numeric_limits<double>::quiet_NaN();
  double grad = 0.0;
  double density = 0.0;
};

struct Comparison {
  std::vector<ComparisonRow> trajectory;
  std::vector<SummaryRow> summary;
  // cells[i][s]: config i, seed s
  std::vector<std::vector<ExperimentResult>> cells;
};

inline double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end(), [](double a, double b) {
    if (std::isnan(a)) return false;
    if (std::isnan(b)) return true;
    return a < b;
  });
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace detail {

inline bool same_problem(const RunConfig& a, const RunConfig& b) {
  return a.problem == b.problem && a.n == b.n && a.eval_samples == b.eval_samples && a.eval_seed == b.eval_seed &&
         a.samples_per_epoch == b.samples_per_epoch && a.data == b.data && a.train_images == b.train_images &&
         a.synth_n == b.synth_n && a.synth_dim == b.synth_dim && a.synth_classes == b.synth_classes &&
         a.synth_separation == b.synth_separation && a.data_seed == b.data_seed && a.hidden1 == b.hidden1 &&
         a.hidden2 == b.hidden2 && a.lambda == b.lambda && a.npca_random_start == b.npca_random_start;
}

}  // namespace detail

/// Runs every (config, seed) cell, possibly in parallel, and merges the
/// results in (config, seed, epoch) order. Per method the trajectory is the
/// per-epoch median over seeds; the summary is the median over seeds of the
/// last-five-epoch averages.
inline Comparison compare(const std::vector<RunConfig>& configs, const std::vector<std::uint64_t>& seeds,
                          unsigned threads = 0) {
  if (configs.empty()) throw ConfigError("compare: no configurations");
  if (seeds.empty()) throw ConfigError("compare: no seeds");
  for (const auto& c : configs) {
    validate(c);
    if (!detail::same_problem(c, configs.front())) throw ConfigError("compare: configurations use different problems");
  }
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());

  Comparison out;
  out.cells.assign(configs.size(), std::vector<ExperimentResult>(seeds.size()));
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t i = 0; i < configs.size(); ++i)
    for (std::size_t s = 0; s < seeds.size(); ++s) jobs.emplace_back(i, s);

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs.size());
  auto worker = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < jobs.size();) {
      const auto [i, s] = jobs[j];
      try {
        RunConfig c = configs[i];
        c.seed = seeds[s];
        out.cells[i][s] = execute(c);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < std::min<std::size_t>(threads, jobs.size()); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto& runs = out.cells[i];
    const std::string name = to_string(configs[i].method);
    std::size_t len = runs.front().rows.size();
    for (const auto& r : runs) len = std::min(len, r.rows.size());
    for (std::size_t e = 0; e < len; ++e) {
      auto col = [&](auto field) {
        std::vector<double> v;
        for (const auto& r : runs) v.push_back(static_cast<double>(field(r.rows[e])));
        return median_of(std::move(v));
      };
      MetricsRow m;
      m.epoch = runs.front().rows[e].epoch;
      m.samples = static_cast<std::uint64_t>(col([](const MetricsRow& r) { return r.samples; }));
      m.objective = col([](const MetricsRow& r) { return r.objective; });
      m.obj_error = col([](const MetricsRow& r) { return r.obj_error; });
      m.stationarity = col([](const MetricsRow& r) { return r.stationarity; });
      m.density_pct = col([](const MetricsRow& r) { return r.density_pct; });
      m.wall_ms = static_cast<std::int64_t>(col([](const MetricsRow& r) { return r.wall_ms; }));
      out.trajectory.push_back({name, m});
    }
    SummaryRow s;
    s.method = name;
    std::vector<double> train, test, grad, density;
    for (const auto& r : runs) {
      const MetricsRow avg = last_five_average(r.rows);
      train.push_back(avg.objective);
      grad.push_back(avg.stationarity);
      density.push_back(avg.density_pct);
      if (r.test_accuracy) test.push_back(*r.test_accuracy);
    }
    s.train = median_of(train);
    s.grad = median_of(grad);
    s.density = median_of(density);
    if (!test.empty()) s.test = median_of(test);
    out.summary.push_back(s);
  }
  return out;
}

inline void write_comparison(std::ostream& out, const Comparison& cmp) {
  out << "method," << csv::kMetricsHeader << '\n';
  for (const auto& r : cmp.trajectory) {
    out << r.method << ',';
    csv::write_row(out, r.median);
  }
}

inline void write_summary(std::ostream& out, const Comparison& cmp) {
  out << "method,train,test,grad,density\n";
  for (const auto& s : cmp.summary)
    out << s.method << ',' << csv::format_double(s.train) << ',' << csv::format_double(s.test) << ','
        << csv::format_double(s.grad) << ',' << csv::format_double(s.density) << '\n';
}

}  // namespace pstorm

#endif  // PSTORM_HARNESS_EXPERIMENT_HPP
