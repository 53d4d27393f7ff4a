// Batch CLI: `run` executes a sweep from a JSON config, `report` rebuilds
// tables/plot data from persisted records, `selftest` runs the fast oracle
// suite. Exit codes: 0 success, 1 partial failure, 2 config error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "fiberair/harness.hpp"
#include "fiberair/infotheory.hpp"
#include "fiberair/sigproc.hpp"

namespace {

using namespace fiberair;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig load_config(const std::string& path, bool desk,
                             std::uint64_t* seed_override,
                             const std::vector<std::string>& receiver_subset,
                             const std::string& output_override) {
  ExperimentConfig cfg = parse_experiment_config(read_file(path));
  if (desk) cfg = desk_scale(cfg);
  if (seed_override) cfg.master_seed = *seed_override;
  if (!receiver_subset.empty()) {
    cfg.receivers.clear();
    for (const auto& name : receiver_subset)
      cfg.receivers.push_back(receiver_from_name(name));
  }
  if (!output_override.empty()) cfg.output_dir = output_override;
  return cfg;
}

int selftest() {
  int failures = 0;
  auto check = [&](const char* name, bool ok) {
    std::printf("%-52s %s\n", name, ok ? "PASS" : "FAIL");
    if (!ok) ++failures;
  };

  // Bound ordering and induced-ABC equality on random small channels.
  Rng rng(7);
  auto random_stochastic = [&](int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      double sum = 0;
      for (int j = 0; j < cols; ++j) {
        m(i, j) = -std::log(rng.uniform());
        sum += m(i, j);
      }
      m.row(i) /= sum;
    }
    return m;
  };
  bool afc_ok = true, abc_ok = true, induced_ok = true, matched_ok = true;
  for (int trial = 0; trial < 50; ++trial) {
    DiscreteChannel ch;
    ch.transition = random_stochastic(4, 4);
    ch.input_law = random_stochastic(1, 4).row(0).transpose();
    const Eigen::MatrixXd q = random_stochastic(4, 4);
    const double mi = dmc_mi(ch);
    const double afc = dmc_air_afc(ch, q);
    afc_ok = afc_ok && afc <= mi + 1e-12;
    const Eigen::MatrixXd rq = induced_abc(ch, q);
    induced_ok = induced_ok && std::abs(dmc_air_abc(ch, rq) - afc) < 1e-12;
    const Eigen::MatrixXd posterior = induced_abc(ch, ch.transition);
    matched_ok = matched_ok && std::abs(dmc_air_abc(ch, posterior) - mi) < 1e-12;
    abc_ok = abc_ok && dmc_air_abc(ch, rq) <= mi + 1e-12;
  }
  check("afc bound never exceeds mutual information", afc_ok);
  check("abc bound never exceeds mutual information", abc_ok);
  check("induced abc reproduces the afc bound", induced_ok);
  check("matched abc recovers mutual information", matched_ok);

  // Closed-form segment length.
  SpanConfig span;
  span.dispersion_s_m2 = 16e-12 / (1e-9 * 1e3);  // 16 ps/(nm km)
  span.gamma_w_m = 1.3e-3;
  const double delta = segment_length(1e-3, 14e9, span, 1550e-9, 1e-4);
  check("ssfm segment length matches closed form",
        std::abs(delta - 16878.2065) < 1.0);

  // Constrained capacity against externally computed values.
  const Constellation qam64 = build_square_qam(64);
  const double c10 = constrained_capacity_qam(qam64, std::pow(10.0, 1.0));
  check("64-qam constrained capacity at 10 dB",
        std::abs(c10 - 3.268572354206636) < 1e-6);

  check("awgn capacity at snr 255 is 8 bits",
        std::abs(awgn_capacity(255.0) - 8.0) < 1e-12);

  std::printf("%s\n", failures == 0 ? "selftest: all checks passed"
                                    : "selftest: FAILURES");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fiber-optic AIR estimation: SSFM link simulation with "
               "DBP/SDBP receivers and Monte-Carlo MI lower bounds"};
  app.require_subcommand(1);

  std::string config_path, output_override;
  std::vector<std::string> receiver_subset;
  std::uint64_t seed = 0;
  bool seed_set = false, desk = false;
  int threads = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "JSON experiment config")
        ->required();
    cmd->add_flag("--desk", desk, "desk-scale preset (K=1024, 8 runs, 100 "
                                  "particles, 10 spans)");
    cmd->add_option("--seed", seed, "master seed override")
        ->each([&](const std::string&) { seed_set = true; });
    cmd->add_option("--receivers", receiver_subset,
                    "receiver subset (dbp-iidg dbp-cg sbs-sdbp gmp-sdbp)")
        ->delimiter(',');
    cmd->add_option("--output", output_override, "output directory override");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "run a sweep");
  add_common(run_cmd);
  run_cmd->add_option("--threads", threads, "worker threads (0 = hardware)");

  CLI::App* report_cmd =
      app.add_subcommand("report", "rebuild tables/plot data from records");
  add_common(report_cmd);

  app.add_subcommand("selftest", "fast oracle suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("selftest")) return selftest();

    const ExperimentConfig cfg =
        load_config(config_path, desk, seed_set ? &seed : nullptr,
                    receiver_subset, output_override);

    if (app.got_subcommand("run")) {
      const SweepResult result = run_sweep(cfg, threads, &std::cout);
      std::cout << "results: " << cfg.output_dir << "/results.tsv\n";
      return result.any_failed() ? 1 : 0;
    }
    if (app.got_subcommand("report")) {
      const SweepResult result = report_from_records(cfg);
      if (result.points.empty()) {
        std::cerr << "no records found for this config hash in "
                  << cfg.output_dir << "/records.jsonl\n";
        return 1;
      }
      std::cout << "results: " << cfg.output_dir << "/results.tsv\n";
      return result.any_failed() ? 1 : 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
