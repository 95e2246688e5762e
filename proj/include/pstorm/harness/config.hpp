#ifndef PSTORM_HARNESS_CONFIG_HPP
#define PSTORM_HARNESS_CONFIG_HPP

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pstorm/error.hpp"
#include "pstorm/optim.hpp"
#include "pstorm/schedules.hpp"

namespace pstorm {

enum class ProblemKind { NpcaRandom, NpcaLibsvm, MlpSynth, MlpMnist };
enum class MethodKind { Pstorm, ProxSgd, Spiderboost, HybridSgd };
enum class HybridVariant { Random, FiniteSum, Network };

inline const char* to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::NpcaRandom: return "npca-random";
    case ProblemKind::NpcaLibsvm: return "npca-libsvm";
    case ProblemKind::MlpSynth: return "mlp-synth";
    case ProblemKind::MlpMnist: return "mlp-mnist";
  }
  return "?";
}

inline const char* to_string(MethodKind k) {
  switch (k) {
    case MethodKind::Pstorm: return "pstorm";
    case MethodKind::ProxSgd: return "proxsgd";
    case MethodKind::Spiderboost: return "spiderboost";
    case MethodKind::HybridSgd: return "hybrid-sgd";
  }
  return "?";
}

// One experiment: exactly one problem, one method, one budget unit.
struct RunConfig {
  ProblemKind problem = ProblemKind::NpcaRandom;
  MethodKind method = MethodKind::Pstorm;

  // budget, exactly one set
  std::optional<std::uint64_t> iterations;
  std::optional<double> epochs;
  std::optional<std::uint64_t> samples;

  std::uint64_t seed = 1;
  std::size_t m = 10;
  std::optional<std::size_t> m0;  // defaults to m
  double eta = 0.1;
  double L = 1.0;
  double lambda = 0.0;

  // pstorm
  ScheduleKind schedule = ScheduleKind::Varying;
  double beta = 1.0;  // fixed schedule only

  // proxsgd
  bool proxsgd_inv_sqrt = true;

  // spiderboost; zeros mean "derive from the problem"
  std::size_t q = 0;
  std::size_t big_batch = 0;
  std::size_t small_batch = 0;
  std::optional<double> spider_eps;

  // hybrid-sgd
  double c0 = 10.0;
  double c1 = 5.0;
  std::optional<HybridVariant> hybrid_variant;  // default follows the problem
  double hybrid_L = 1.0;                        // network variant
  bool hybrid_count_both = true;

  // problems
  std::size_t n = 100;
  bool npca_random_start = false;  // default start: normalized all-ones
  std::optional<std::size_t> eval_samples;
  std::optional<std::uint64_t> eval_seed;
  std::optional<std::uint64_t> samples_per_epoch;
  std::string data;
  std::string test_data;
  std::string train_images, train_labels, test_images, test_labels;
  std::size_t hidden1 = 32;
  std::size_t hidden2 = 16;
  std::size_t synth_n = 2000;
  std::size_t synth_test_n = 1000;
  std::size_t synth_dim = 64;
  std::size_t synth_classes = 4;
  double synth_separation = 3.0;
  std::uint64_t data_seed = 1;

  // evaluation and output
  OutputRule output_rule = OutputRule::Last;
  double stationarity_eta = 1.0;
  std::size_t reference_iters = 1000;
  std::optional<double> reference_eta;
  std::string output;
  bool timing = false;
  bool strict = false;
  bool force = false;
};

// Flat "key = value" file: one pair per line, '#' comments, blank lines ignored.
inline std::map<std::string, std::string> parse_key_values(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    for (char& c : key)
      if (c == '_') c = '-';
    out[key] = value;
  }
  return out;
}

inline std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_key_values(in);
}

namespace detail {

template <class T>
T parse_config_number(const std::string& key, const std::string& v) {
  T out{};
  const char* first = v.data();
  const char* last = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if constexpr (std::is_integral_v<T>) {
    // allow 1e6-style integers
    if (ec != std::errc() || ptr != last) {
      double d = 0.0;
      auto [p2, e2] = std::from_chars(first, last, d);
      if (e2 == std::errc() && p2 == last && d >= 0.0 && d == static_cast<double>(static_cast<T>(d)))
        return static_cast<T>(d);
    }
  }
  if (ec != std::errc() || ptr != last) throw ConfigError("config: bad value for " + key + ": '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("config: bad boolean for " + key + ": '" + v + "'");
}

}  // namespace detail

/// Every key accepted by apply_setting; also the CLI flag names.
inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "problem", "method", "iterations", "epochs", "samples", "seed", "m", "m0", "eta", "L", "lambda",
      "schedule", "beta", "proxsgd-rule", "q", "big-batch", "small-batch", "spider-eps", "c0", "c1",
      "hybrid-variant", "hybrid-L", "hybrid-count", "n", "init", "eval-samples", "eval-seed", "samples-per-epoch",
      "data", "test-data", "train-images", "train-labels", "test-images", "test-labels", "hidden1", "hidden2",
      "synth-n", "synth-test-n", "synth-dim", "synth-classes", "synth-separation", "data-seed", "output-rule",
      "stationarity-eta", "reference-iters", "reference-eta", "output", "timing", "strict", "force"};
  return keys;
}

inline void apply_setting(RunConfig& c, std::string key, const std::string& v) {
  using detail::parse_bool;
  for (char& ch : key)
    if (ch == '_') ch = '-';
  auto u64 = [&] { return detail::parse_config_number<std::uint64_t>(key, v); };
  auto sz = [&] { return detail::parse_config_number<std::size_t>(key, v); };
  auto dbl = [&] { return detail::parse_config_number<double>(key, v); };

  if (key == "problem") {
    if (v == "npca-random") c.problem = ProblemKind::NpcaRandom;
    else if (v == "npca-libsvm") c.problem = ProblemKind::NpcaLibsvm;
    else if (v == "mlp-synth") c.problem = ProblemKind::MlpSynth;
    else if (v == "mlp-mnist") c.problem = ProblemKind::MlpMnist;
    else throw ConfigError("config: unknown problem '" + v + "'");
  } else if (key == "method") {
    if (v == "pstorm") c.method = MethodKind::Pstorm;
    else if (v == "proxsgd") c.method = MethodKind::ProxSgd;
    else if (v == "spiderboost") c.method = MethodKind::Spiderboost;
    else if (v == "hybrid-sgd") c.method = MethodKind::HybridSgd;
    else throw ConfigError("config: unknown method '" + v + "'");
  } else if (key == "iterations") c.iterations = u64();
  else if (key == "epochs") c.epochs = dbl();
  else if (key == "samples") c.samples = u64();
  else if (key == "seed") c.seed = u64();
  else if (key == "m") c.m = sz();
  else if (key == "m0") c.m0 = sz();
  else if (key == "eta") c.eta = dbl();
  else if (key == "L") c.L = dbl();
  else if (key == "lambda") c.lambda = dbl();
  else if (key == "schedule") {
    const auto k = parse_schedule_kind(v);
    if (!k) throw ConfigError("config: unknown schedule '" + v + "'");
    c.schedule = *k;
  } else if (key == "beta") c.beta = dbl();
  else if (key == "proxsgd-rule") {
    if (v == "inv-sqrt") c.proxsgd_inv_sqrt = true;
    else if (v == "constant") c.proxsgd_inv_sqrt = false;
    else throw ConfigError("config: proxsgd-rule must be inv-sqrt or constant");
  } else if (key == "q") c.q = sz();
  else if (key == "big-batch") c.big_batch = sz();
  else if (key == "small-batch") c.small_batch = sz();
  else if (key == "spider-eps") c.spider_eps = dbl();
  else if (key == "c0") c.c0 = dbl();
  else if (key == "c1") c.c1 = dbl();
  else if (key == "hybrid-variant") {
    if (v == "random") c.hybrid_variant = HybridVariant::Random;
    else if (v == "finite-sum") c.hybrid_variant = HybridVariant::FiniteSum;
    else if (v == "network") c.hybrid_variant = HybridVariant::Network;
    else throw ConfigError("config: hybrid-variant must be random, finite-sum or network");
  } else if (key == "hybrid-L") c.hybrid_L = dbl();
  else if (key == "hybrid-count") {
    if (v == "both") c.hybrid_count_both = true;
    else if (v == "one") c.hybrid_count_both = false;
    else throw ConfigError("config: hybrid-count must be both or one");
  } else if (key == "n") c.n = sz();
  else if (key == "init") {
    if (v == "ones") c.npca_random_start = false;
    else if (v == "random") c.npca_random_start = true;
    else throw ConfigError("config: init must be ones or random");
  }
  else if (key == "eval-samples") c.eval_samples = sz();
  else if (key == "eval-seed") c.eval_seed = u64();
  else if (key == "samples-per-epoch") c.samples_per_epoch = u64();
  else if (key == "data") c.data = v;
  else if (key == "test-data") c.test_data = v;
  else if (key == "train-images") c.train_images = v;
  else if (key == "train-labels") c.train_labels = v;
  else if (key == "test-images") c.test_images = v;
  else if (key == "test-labels") c.test_labels = v;
  else if (key == "hidden1") c.hidden1 = sz();
  else if (key == "hidden2") c.hidden2 = sz();
  else if (key == "synth-n") c.synth_n = sz();
  else if (key == "synth-test-n") c.synth_test_n = sz();
  else if (key == "synth-dim") c.synth_dim = sz();
  else if (key == "synth-classes") c.synth_classes = sz();
  else if (key == "synth-separation") c.synth_separation = dbl();
  else if (key == "data-seed") c.data_seed = u64();
  else if (key == "output-rule") {
    if (v == "uniform") c.output_rule = OutputRule::Uniform;
    else if (v == "tau" || v == "tau-weights") c.output_rule = OutputRule::TauWeights;
    else if (v == "last") c.output_rule = OutputRule::Last;
    else throw ConfigError("config: output-rule must be uniform, tau-weights or last");
  } else if (key == "stationarity-eta") c.stationarity_eta = dbl();
  else if (key == "reference-iters") c.reference_iters = sz();
  else if (key == "reference-eta") c.reference_eta = dbl();
  else if (key == "output") c.output = v;
  else if (key == "timing") c.timing = parse_bool(key, v);
  else if (key == "strict") c.strict = parse_bool(key, v);
  else if (key == "force") c.force = parse_bool(key, v);
  else throw ConfigError("config: unknown key '" + key + "'");
}

inline RunConfig config_from(const std::map<std::string, std::string>& kv, RunConfig base = {}) {
  for (const auto& [k, v] : kv) apply_setting(base, k, v);
  return base;
}

inline void validate(const RunConfig& c) {
  const int budgets = int(c.iterations.has_value()) + int(c.epochs.has_value()) + int(c.samples.has_value());
  if (budgets != 1) throw ConfigError("config: give exactly one of iterations, epochs, samples");
  if (c.epochs && !(*c.epochs >= 0.0)) throw ConfigError("config: epochs must be >= 0");
  if (c.m == 0) throw ConfigError("config: m must be positive");
  if (c.m0 && *c.m0 == 0) throw ConfigError("config: m0 must be positive");
  if (!(c.eta > 0.0)) throw ConfigError("config: eta must be positive");
  if (!(c.L > 0.0)) throw ConfigError("config: L must be positive");
  if (!(c.lambda >= 0.0)) throw ConfigError("config: lambda must be >= 0");
  if (!(c.stationarity_eta > 0.0)) throw ConfigError("config: stationarity-eta must be positive");
  switch (c.problem) {
    case ProblemKind::NpcaRandom:
      if (!c.eval_samples) throw ConfigError("config: npca-random needs eval-samples");
      if (!c.samples_per_epoch) throw ConfigError("config: npca-random needs samples-per-epoch");
      if (c.n == 0) throw ConfigError("config: n must be positive");
      break;
    case ProblemKind::NpcaLibsvm:
      if (c.data.empty()) throw ConfigError("config: npca-libsvm needs data");
      break;
    case ProblemKind::MlpSynth:
      if (c.synth_n == 0 || c.synth_dim == 0) throw ConfigError("config: synthetic dataset must be nonempty");
      break;
    case ProblemKind::MlpMnist:
      if (c.train_images.empty() || c.train_labels.empty())
        throw ConfigError("config: mlp-mnist needs train-images and train-labels");
      break;
  }
  if (c.samples_per_epoch && *c.samples_per_epoch == 0) throw ConfigError("config: samples-per-epoch must be positive");
}

}  // namespace pstorm

#endif  // PSTORM_HARNESS_CONFIG_HPP
