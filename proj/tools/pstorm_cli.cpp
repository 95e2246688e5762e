// Command-line front end: run, compare, validate-schedule, parse-check.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "pstorm/dataio.hpp"
#include "pstorm/harness/config.hpp"
#include "pstorm/harness/experiment.hpp"
#include "pstorm/schedules.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 2, kData = 3, kSchedule = 4 };

// Flags mirror RunConfig keys; values are applied on top of the config file.
struct Overrides {
  std::map<std::string, std::string> values;
  std::vector<std::string> flags;  // boolean switches
};

void add_config_flags(CLI::App* app, Overrides& o) {
  for (const auto& key : pstorm::config_keys()) {
    if (key == "timing" || key == "strict" || key == "force") {
      app->add_flag_callback("--" + key, [&o, key] { o.values[key] = "true"; }, "set " + key);
    } else {
      app->add_option_function<std::string>("--" + key, [&o, key](const std::string& v) { o.values[key] = v; },
                                            key);
    }
  }
}

pstorm::RunConfig load_config(const std::string& file, const Overrides& o) {
  pstorm::RunConfig c;
  if (!file.empty()) c = pstorm::config_from(pstorm::read_config_file(file));
  return pstorm::config_from(o.values, c);
}

int report(const char* kind, const std::exception& e, int code) {
  std::cerr << "pstorm: " << kind << ": " << e.what() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proximal stochastic recursive momentum experiments"};
  app.require_subcommand(1);

  std::string config_file;
  Overrides run_o, cmp_o, val_o;

  auto* run = app.add_subcommand("run", "run one configuration and write its metrics CSV");
  run->add_option("--config", config_file, "key = value config file");
  add_config_flags(run, run_o);

  auto* cmp = app.add_subcommand("compare", "run several methods over shared seeds");
  std::vector<std::string> cmp_configs;
  std::vector<std::uint64_t> cmp_seeds{1, 2, 3, 4, 5};
  std::string cmp_out, cmp_summary;
  unsigned cmp_threads = 0;
  cmp->add_option("--configs", cmp_configs, "one config file per method")->required();
  cmp->add_option("--seeds", cmp_seeds, "seed list");
  cmp->add_option("--out", cmp_out, "comparison CSV (median trajectories)");
  cmp->add_option("--summary", cmp_summary, "summary CSV (last-five-epoch medians)");
  cmp->add_option("--threads", cmp_threads, "worker threads (0: hardware)");
  add_config_flags(cmp, cmp_o);

  auto* val = app.add_subcommand("validate-schedule", "check step-size conditions for a pstorm schedule");
  val->add_option("--config", config_file, "key = value config file");
  add_config_flags(val, val_o);

  auto* pc = app.add_subcommand("parse-check", "parse a LIBSVM or IDX file and report its shape");
  std::string pc_path, pc_labels;
  pc->add_option("path", pc_path, "LIBSVM text file or IDX image file")->required();
  pc->add_option("--labels", pc_labels, "IDX label file (enables IDX mode)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const pstorm::RunConfig c = load_config(config_file, run_o);
      pstorm::validate(c);
      pstorm::ExperimentResult r;
      const std::string line = pstorm::run_experiment(c, &r);
      for (const auto& n : r.notes) std::cerr << n << '\n';
      std::cout << line << '\n';
    } else if (*cmp) {
      std::vector<pstorm::RunConfig> configs;
      for (const auto& f : cmp_configs) configs.push_back(load_config(f, cmp_o));
      const auto result = pstorm::compare(configs, cmp_seeds, cmp_threads);
      if (!cmp_out.empty()) {
        std::ofstream out(cmp_out);
        if (!out) throw pstorm::ConfigError("cannot write " + cmp_out);
        pstorm::write_comparison(out, result);
      }
      if (!cmp_summary.empty()) {
        std::ofstream out(cmp_summary);
        if (!out) throw pstorm::ConfigError("cannot write " + cmp_summary);
        pstorm::write_summary(out, result);
      }
      pstorm::write_summary(std::cout, result);
    } else if (*val) {
      pstorm::RunConfig c = load_config(config_file, val_o);
      c.method = pstorm::MethodKind::Pstorm;
      pstorm::validate(c);
      const auto inst = pstorm::build_problem(c);
      const auto prepared = pstorm::prepare_method(c, inst);
      for (const auto& n : prepared.notes) std::cout << n << '\n';
      std::cout << "schedule " << pstorm::to_string(c.schedule) << " K = " << prepared.K << ": ok\n";
    } else if (*pc) {
      if (!pc_labels.empty()) {
        const auto ds = pstorm::read_idx_files(pc_path, pc_labels);
        std::cout << "idx: " << ds.features.cols() << " samples of length " << ds.features.rows() << '\n';
      } else {
        const auto ds = pstorm::parse_libsvm_file(pc_path);
        std::size_t nnz = ds.features.val.size();
        std::cout << "libsvm: " << ds.features.n_rows << " rows, " << ds.features.n_cols << " columns, " << nnz
                  << " nonzeros\n";
      }
    }
  } catch (const pstorm::ScheduleError& e) {
    return report("schedule", e, kSchedule);
  } catch (const pstorm::DataError& e) {
    return report("data", e, kData);
  } catch (const pstorm::ConfigError& e) {
    return report("config", e, kConfig);
  } catch (const pstorm::ParameterError& e) {
    return report("config", e, kConfig);
  } catch (const std::exception& e) {
    return report("error", e, 1);
  }
  return kOk;
}
