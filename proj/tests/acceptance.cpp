// Acceptance checks 1-10. Prints one PASS/FAIL/SKIP line per criterion.
// Usage: acceptance [criterion...]; exits 0 when every selected criterion
// passes or is skipped, 1 otherwise, 77 when a single selected criterion is
// skipped.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "oracles/brute_force.hpp"
#include "oracles/finite_diff.hpp"
#include "oracles/mlp_reference.hpp"
#include "pstorm/dataio.hpp"
#include "pstorm/harness/experiment.hpp"
#include "pstorm/optim.hpp"
#include "pstorm/problems/full_batch.hpp"
#include "pstorm/problems/mlp.hpp"
#include "pstorm/problems/npca.hpp"
#include "pstorm/prox.hpp"
#include "pstorm/schedules.hpp"

using namespace pstorm;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status = Status::Fail;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // runtime limit; 0 means none
  std::function<Outcome()> check;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

Outcome verdict(bool ok, const std::string& detail) { return {ok ? Status::Pass : Status::Fail, detail}; }

bool bitwise_equal(const Vector& a, const Vector& b) {
  return a.size() == b.size() && std::equal(a.data(), a.data() + a.size(), b.data(), [](double x, double y) {
           return std::memcmp(&x, &y, sizeof(double)) == 0;
         });
}

std::shared_ptr<NpcaFiniteSumOracle> npca_finite_sum(Rng& rng, std::size_t n, std::size_t N) {
  Matrix z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(N));
  for (std::size_t j = 0; j < N; ++j) z.col(static_cast<Eigen::Index>(j)) = npca_generate_sample(rng, n);
  return std::make_shared<NpcaFiniteSumOracle>(NpcaFiniteSumOracle::from_dense(z));
}

// -- 1 --------------------------------------------------------------------------------

Outcome prox_correctness() {
  Rng rng(101);
  std::uniform_real_distribution<double> coord(-2.0, 2.0), step(0.05, 1.0), lam(0.0, 1.0);
  double worst_l1 = 0.0;
  for (int t = 0; t < 100; ++t) {
    const double x = coord(rng), d = coord(rng), eta = step(rng), lambda = lam(rng);
    Vector xv(1), dv(1);
    xv << x;
    dv << d;
    const double closed = soft_threshold(xv, dv, eta, lambda)[0];
    worst_l1 = std::max(worst_l1, std::abs(closed - oracles::l1_prox_grid(x, d, eta, lambda)));
  }
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> dim(2, 30);
  double worst_vi = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < 100; ++t) {
    Vector z(dim(rng));
    for (auto& v : z) v = (t % 3 == 0 ? 0.2 : 2.0) * g(rng);
    worst_vi = std::max(worst_vi, oracles::projection_vi_violation(z, project_nonneg_ball(z), rng, 1000));
  }
  return verdict(worst_l1 <= 1e-6 && worst_vi <= 1e-6,
                 "soft-threshold max |err| = " + fmt(worst_l1) + ", projection max VI violation = " + fmt(worst_vi));
}

// -- 2 --------------------------------------------------------------------------------

Outcome gradient_correctness() {
  Rng rng(202);
  double worst_npca = 0.0, worst_mlp = 0.0;
  const std::size_t n = 30;
  std::uniform_int_distribution<Eigen::Index> npca_coord(0, static_cast<Eigen::Index>(n) - 1);
  for (int p = 0; p < 10; ++p) {
    const Vector x = npca_random_point(rng, n);
    const Vector z = npca_generate_sample(rng, n);
    const Vector g = npca_sample_gradient(x, z);
    auto f = [&](const Vector& y) {
      const double t = z.dot(y);
      return -0.5 * t * t;
    };
    for (int c = 0; c < 20; ++c) {
      const Eigen::Index i = npca_coord(rng);
      worst_npca = std::max(worst_npca, oracles::relative_error(oracles::central_difference(f, x, i), g[i]));
    }
  }
  const MlpShape s{64, 32, 16, 4};
  const DenseDataset data = gen_synthetic_classes(rng, 10, 64, 4, 3.0);
  std::uniform_int_distribution<Eigen::Index> mlp_coord(0, static_cast<Eigen::Index>(s.num_params()) - 1);
  for (int p = 0; p < 10; ++p) {
    const Vector theta = mlp_init(rng, s);
    const Vector x = data.features.col(p);
    const int y = data.labels[static_cast<std::size_t>(p)];
    const Vector g = mlp_sample_gradient(theta, s, x, y);
    for (int c = 0; c < 20; ++c) {
      const Eigen::Index i = mlp_coord(rng);
      const double fd = oracles::mlp_loss_central_difference(theta, s, x, y, i);
      const double scale = std::max(std::abs(fd), std::abs(g[i]));
      if (scale > 0.0) worst_mlp = std::max(worst_mlp, std::abs(fd - g[i]) / scale);
    }
  }
  return verdict(worst_npca <= 1e-5 && worst_mlp <= 1e-5,
                 "max relative error NPCA = " + fmt(worst_npca) + ", MLP = " + fmt(worst_mlp));
}

// -- 3 --------------------------------------------------------------------------------

Outcome unbiasedness() {
  Rng rng(303);
  const std::size_t n = 10;
  const auto f = npca_finite_sum(rng, n, 200);
  const Vector x = npca_random_point(rng, n);
  const int draws = 100000;
  Vector sum = Vector::Zero(static_cast<Eigen::Index>(n)), sq = sum;
  for (int t = 0; t < draws; ++t) {
    const Vector g = f->batch_gradient(x, f->draw(rng, 1));
    sum += g;
    sq += g.cwiseProduct(g);
  }
  const Vector mean = sum / draws;
  const Vector var = sq / draws - mean.cwiseProduct(mean);
  const Vector full = f->full_gradient(x);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < mean.size(); ++i) {
    const double se = std::sqrt(std::max(var[i], 0.0) / draws);
    worst = std::max(worst, std::abs(mean[i] - full[i]) / std::max(se, 1e-300));
  }
  return verdict(worst <= 4.0, "max |mean - full| / SE = " + fmt(worst));
}

// -- 4 --------------------------------------------------------------------------------

Outcome reduction_identity() {
  Rng rng(404);
  const auto f = npca_finite_sum(rng, 20, 500);
  const CompositeProblem problem(f, std::make_shared<NonnegBallIndicator>());
  const Vector x0 = npca_random_point(rng, 20);
  const std::size_t K = 1000, m = 10;

  // step level, decaying stepsizes
  OptimizerState a = pstorm_init(problem, x0, m, Rng(9));
  OptimizerState b;
  b.x = x0;
  b.rng = Rng(9);
  std::size_t step_mismatch = 0;
  for (std::size_t k = 0; k < K; ++k) {
    const double eta = 0.5 / std::sqrt(static_cast<double>(k) + 1.0);
    a = pstorm_step(std::move(a), problem, eta, 1.0, m);
    b = proxsgd_step(std::move(b), problem, eta, m);
    if (!bitwise_equal(a.x, b.x)) ++step_mismatch;
  }

  // driver level, constant stepsize
  RunOptions opt;
  opt.x0 = x0;
  opt.seed = 17;
  opt.max_iterations = K;
  opt.samples_per_epoch = 500;
  opt.output_rule = OutputRule::Last;
  const RunResult rp = run(problem, PstormConfig{Schedule::fixed(0.3, 1.0), m, m}, opt);
  ProxSgdConfig sgd;
  sgd.m = m;
  sgd.stepsize = ProxSgdConfig::constant(0.3);
  const RunResult rs = run(problem, sgd, opt);
  // PStorm also counts its m0-sample initial draw, so only the iterates are compared.
  const bool final_equal = bitwise_equal(rp.final_x, rs.final_x);
  return verdict(step_mismatch == 0 && final_equal,
                 std::to_string(step_mismatch) + " mismatched steps of " + std::to_string(K) +
                     "; driver final iterates " + (final_equal ? "identical" : "differ"));
}

// -- 5 --------------------------------------------------------------------------------

Outcome schedule_theory() {
  std::vector<std::string> failures;
  for (const std::size_t m : {std::size_t{1}, std::size_t{10}}) {
    const Schedule s(ScheduleSpec{ScheduleKind::Varying, varying_eta_max(), 1.0, m, 10000});
    const Thm1Check chk = validate_thm1(s, 10000);
    if (!chk.ok) failures.push_back("(a) m=" + std::to_string(m) + ": " + chk.describe());
  }
  for (const std::size_t K : {std::size_t{100}, std::size_t{1000}}) {
    const Schedule s(ScheduleSpec{ScheduleKind::ConstantII, 0.25, 1.0, 1, K});
    const Thm5Check chk = validate_thm5(s);
    if (!chk.ok) failures.push_back("(b) K=" + std::to_string(K) + ": " + chk.describe());
  }
  {
    const Schedule s(ScheduleSpec{ScheduleKind::ConstantII, 0.25, 1.0, 1, 1000});
    for (std::size_t k = 0; k < 1000; ++k)
      if (!lemma5_bound_check(s, k)) {
        failures.push_back("(c) k=" + std::to_string(k));
        break;
      }
  }
  {
    const Schedule s(ScheduleSpec{ScheduleKind::ConstantII, 0.25, 1.0, 1, 1000000});
    for (std::size_t k = 0; k < 1000000; ++k) {
      const double b = s.beta_at(k), kk = static_cast<double>(k);
      if (b < std::pow(kk + 3.0, -2.0 / 3.0) || b > std::pow(kk + 2.0, -2.0 / 3.0)) {
        failures.push_back("(d) k=" + std::to_string(k));
        break;
      }
    }
  }
  std::string detail = "(a) (b) (c) (d) checked";
  if (!failures.empty()) {
    detail = "failed:";
    for (const auto& f : failures) detail += " " + f;
  }
  return verdict(failures.empty(), detail);
}

// -- 6 --------------------------------------------------------------------------------

// Runs K noiseless steps with beta = 1 and returns min_k stationarity^2 and the
// largest objective increase seen.
std::pair<double, double> noiseless_run(const CompositeProblem& problem, const Vector& x0, std::size_t K, double eta) {
  OptimizerState s = pstorm_init(problem, x0, 1, Rng(1));
  double best = std::numeric_limits<double>::infinity();
  double worst_increase = 0.0;
  double prev = problem.value(s.x);
  for (std::size_t k = 0; k < K; ++k) {
    const double st = stationarity_violation(problem, s.x);
    best = std::min(best, st * st);
    s = pstorm_step(std::move(s), problem, eta, 1.0, 1);
    const double now = problem.value(s.x);
    worst_increase = std::max(worst_increase, now - prev);
    prev = now;
  }
  return {best, worst_increase};
}

Outcome noiseless_descent() {
  Rng rng(606);
  const auto inner = npca_finite_sum(rng, 50, 400);
  const auto f = std::make_shared<FullBatchOracle>(inner);
  const CompositeProblem problem(f, std::make_shared<NonnegBallIndicator>());
  const Vector x0 = npca_random_point(rng, 50);
  const double eta = 0.4 / f->smoothness();
  const auto [short_best, short_inc] = noiseless_run(problem, x0, 100, eta);
  const auto [long_best, long_inc] = noiseless_run(problem, x0, 1000, eta);
  const double ratio = short_best / long_best;
  const double inc = std::max(short_inc, long_inc);
  return verdict(inc <= 1e-12 && ratio >= 4.0, "max objective increase = " + fmt(inc) +
                                                   ", min stationarity^2 K=100: " + fmt(short_best) +
                                                   ", K=1000: " + fmt(long_best) + ", ratio " + fmt(ratio));
}

// -- 7 --------------------------------------------------------------------------------

RunConfig npca_random_config(MethodKind method, double eta) {
  RunConfig c;
  c.problem = ProblemKind::NpcaRandom;
  c.method = method;
  c.n = 100;
  c.m = 10;
  c.samples = 1000000;
  c.eval_samples = 100000;
  c.samples_per_epoch = 10000;
  c.eta = eta;
  c.c0 = 10.0;
  c.c1 = 5.0;
  return c;
}

struct NpcaMedians {
  double pstorm, proxsgd, hybrid;
};

NpcaMedians npca_random_medians(bool random_start) {
  std::vector<RunConfig> configs{npca_random_config(MethodKind::Pstorm, 0.1),
                                 npca_random_config(MethodKind::ProxSgd, 0.5),
                                 npca_random_config(MethodKind::HybridSgd, 0.1)};
  for (auto& c : configs) c.npca_random_start = random_start;
  const Comparison cmp = compare(configs, {1, 2, 3, 4, 5});
  auto final_median = [&](std::size_t i) {
    std::vector<double> v;
    for (const auto& r : cmp.cells[i]) v.push_back(r.rows.back().stationarity);
    return median_of(v);
  };
  return {final_median(0), final_median(1), final_median(2)};
}

std::string describe(const NpcaMedians& m) {
  return "median final stationarity pstorm = " + fmt(m.pstorm) + ", proxsgd = " + fmt(m.proxsgd) +
         ", hybrid-sgd = " + fmt(m.hybrid) + " (pstorm/hybrid = " + fmt(m.pstorm / m.hybrid, 3) + ")";
}

Outcome npca_random_replication() {
  const NpcaMedians m = npca_random_medians(false);
  return verdict(m.pstorm < m.proxsgd && m.pstorm <= 1.05 * m.hybrid, describe(m));
}

// -- 8 --------------------------------------------------------------------------------

Outcome sparse_mlp() {
  auto config = [](MethodKind method) {
    RunConfig c;
    c.problem = ProblemKind::MlpSynth;
    c.method = method;
    c.synth_n = 2000;
    c.synth_dim = 64;
    c.synth_classes = 4;
    c.hidden1 = 32;
    c.hidden2 = 16;
    c.m = 32;
    c.lambda = 5e-4;
    c.epochs = 100;
    c.eta = varying_eta_max();
    return c;
  };
  const Comparison cmp = compare({config(MethodKind::Pstorm), config(MethodKind::ProxSgd)}, {1, 2, 3});
  const SummaryRow& p = cmp.summary[0];
  const SummaryRow& s = cmp.summary[1];
  const bool matched = p.train <= 1.1 * s.train;
  return verdict(p.density < s.density && matched,
                 "density pstorm = " + fmt(p.density) + "%, proxsgd = " + fmt(s.density) + "%; training loss pstorm = " +
                     fmt(p.train) + ", proxsgd = " + fmt(s.train) + "; test accuracy " + fmt(p.test) + " vs " +
                     fmt(s.test));
}

// -- 9 --------------------------------------------------------------------------------

Outcome mnist_full_scale() {
  const char* dir = std::getenv("PSTORM_MNIST_DIR");
  if (!dir) return {Status::Skip, "set PSTORM_MNIST_DIR to the directory holding the four MNIST IDX files"};
  const std::string d(dir);
  RunConfig c;
  c.problem = ProblemKind::MlpMnist;
  c.method = MethodKind::Pstorm;
  c.train_images = d + "/train-images-idx3-ubyte";
  c.train_labels = d + "/train-labels-idx1-ubyte";
  c.test_images = d + "/t10k-images-idx3-ubyte";
  c.test_labels = d + "/t10k-labels-idx1-ubyte";
  c.hidden1 = 120;
  c.hidden2 = 84;
  c.m = 32;
  c.lambda = 0.0;
  c.epochs = 100;
  c.eta = varying_eta_max();
  const ExperimentResult r = execute(c);
  const double acc = r.test_accuracy.value_or(0.0);
  return verdict(std::abs(acc - 98.01) <= 0.5, "test accuracy = " + fmt(acc) + " (target 98.01 +- 0.5)");
}

// -- 10 -------------------------------------------------------------------------------

std::string fuzz_libsvm_corpus(Rng& rng, SparseDataset& expected) {
  std::uniform_int_distribution<int> label(-5, 12), count(0, 15), gap(1, 50), pick(0, 9);
  std::normal_distribution<double> g(0.0, 1.0);
  std::ostringstream text;
  char buf[64];
  for (int line = 0; line < 1000; ++line) {
    if (pick(rng) == 0) text << "# comment " << line << "\n";
    if (pick(rng) == 1) text << "   \n";
    const int y = label(rng);
    text << (pick(rng) < 2 && y >= 0 ? "+" : "") << y;
    std::vector<std::pair<std::size_t, double>> row;
    std::size_t idx = 0;
    for (int k = count(rng); k > 0; --k) {
      idx += static_cast<std::size_t>(gap(rng));
      double v = 0.0;
      switch (pick(rng)) {
        case 0: v = std::round(g(rng) * 10.0); break;
        case 1: v = g(rng) * 1e-200; break;
        case 2: v = g(rng) * 1e200; break;
        case 3: v = std::ldexp(1.0, -1074); break;
        default: v = g(rng); break;
      }
      const auto res = std::to_chars(buf, buf + sizeof(buf), v);
      text << (pick(rng) == 0 ? "\t" : " ") << idx << ':' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
      row.emplace_back(idx - 1, v);
    }
    if (pick(rng) == 2) text << "  # trailing";
    text << (pick(rng) == 3 ? "\r\n" : "\n");
    expected.features.push_row(row);
    expected.labels.push_back(y);
  }
  return text.str();
}

void put_be32(std::string& s, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) s.push_back(static_cast<char>((v >> shift) & 0xFF));
}

Outcome format_round_trips() {
  Rng rng(1010);
  SparseDataset expected;
  const std::string corpus = fuzz_libsvm_corpus(rng, expected);
  bool libsvm_ok = false;
  std::string libsvm_note;
  try {
    std::istringstream in(corpus);
    const SparseDataset first = parse_libsvm(in);
    std::ostringstream out;
    write_libsvm(out, first);
    std::istringstream again(out.str());
    const SparseDataset second = parse_libsvm(again);
    libsvm_ok = first.features == expected.features && first.labels == expected.labels &&
                second.features == first.features && second.labels == first.labels;
    libsvm_note = std::to_string(first.size()) + " lines " + (libsvm_ok ? "round-trip exactly" : "differ");
  } catch (const std::exception& e) {
    libsvm_note = std::string("parse failed: ") + e.what();
  }

  std::string images, labels;
  put_be32(images, kIdxImageMagic);
  put_be32(images, 3);
  put_be32(images, 28);
  put_be32(images, 28);
  std::uniform_int_distribution<int> byte(0, 255);
  for (int i = 0; i < 3 * 784; ++i) images.push_back(static_cast<char>(byte(rng)));
  put_be32(labels, kIdxLabelMagic);
  put_be32(labels, 3);
  for (int i = 0; i < 3; ++i) labels.push_back(static_cast<char>(byte(rng) % 10));

  std::size_t mutations = 0, rejected = 0;
  auto expect_reject = [&](const std::string& img, const std::string& lbl) {
    ++mutations;
    try {
      std::istringstream a(img), b(lbl);
      read_idx(a, b);
    } catch (const DataError&) {
      ++rejected;
    }
  };
  for (std::size_t len = 0; len < images.size(); ++len) expect_reject(images.substr(0, len), labels);
  for (std::size_t len = 0; len < labels.size(); ++len) expect_reject(images, labels.substr(0, len));
  for (int b = 0; b < 4; ++b)
    for (int bit = 0; bit < 8; ++bit) {
      std::string img = images, lbl = labels;
      img[static_cast<std::size_t>(b)] = static_cast<char>(img[static_cast<std::size_t>(b)] ^ (1 << bit));
      lbl[static_cast<std::size_t>(b)] = static_cast<char>(lbl[static_cast<std::size_t>(b)] ^ (1 << bit));
      expect_reject(img, labels);
      expect_reject(images, lbl);
    }
  expect_reject(labels, labels);
  expect_reject(images, images);

  bool valid_ok = false;
  try {
    std::istringstream a(images), b(labels);
    valid_ok = read_idx(a, b).size() == 3;
  } catch (const std::exception&) {
  }
  return verdict(libsvm_ok && rejected == mutations && valid_ok,
                 "LIBSVM: " + libsvm_note + "; IDX rejected " + std::to_string(rejected) + "/" +
                     std::to_string(mutations) + " mutations" + (valid_ok ? "" : ", valid file rejected"));
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "prox correctness", 5, prox_correctness},
      {2, "gradient correctness", 10, gradient_correctness},
      {3, "unbiasedness", 10, unbiasedness},
      {4, "reduction identity", 0, reduction_identity},
      {5, "schedule theory checks", 30, schedule_theory},
      {6, "noiseless descent", 0, noiseless_descent},
      {7, "NPCA-random replication", 120, npca_random_replication},
      {8, "desk-scale sparse MLP", 120, sparse_mlp},
      {9, "full-scale MNIST (optional)", 0, mnist_full_scale},
      {10, "format round-trips", 5, format_round_trips},
  };
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  if (selected.empty())
    for (const auto& c : all) selected.push_back(c.id);

  int failed = 0, skipped = 0;
  for (const int id : selected) {
    const auto it = std::find_if(all.begin(), all.end(), [id](const Criterion& c) { return c.id == id; });
    if (it == all.end()) {
      std::cerr << "acceptance: unknown criterion " << id << '\n';
      return 2;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = it->check();
    } catch (const std::exception& e) {
      out = {Status::Fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (out.status == Status::Pass && it->budget_s > 0 && secs > it->budget_s) {
      out.status = Status::Fail;
      out.detail += "; runtime over the " + fmt(it->budget_s) + " s limit";
    }
    const char* tag = out.status == Status::Pass ? "PASS" : out.status == Status::Skip ? "SKIP" : "FAIL";
    std::cout << "criterion " << id << " [" << tag << "] " << it->name << " (" << fmt(secs, 3) << " s): " << out.detail
              << std::endl;
    if (out.status == Status::Fail) ++failed;
    if (out.status == Status::Skip) ++skipped;

    if (id == 7) {
      // Same protocol from a random feasible start; reported, not counted.
      const auto t1 = std::chrono::steady_clock::now();
      try {
        const NpcaMedians m = npca_random_medians(true);
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
        std::cout << "criterion 7 [INFO] init=random, not counted (" << fmt(s, 3) << " s): " << describe(m)
                  << std::endl;
      } catch (const std::exception& e) {
        std::cout << "criterion 7 [INFO] init=random, not counted: exception: " << e.what() << std::endl;
      }
    }
  }
  if (failed) return 1;
  if (selected.size() == 1 && skipped == 1) return 77;
  return 0;
}
