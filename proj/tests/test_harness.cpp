#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "fiberair/harness.hpp"

using namespace fiberair;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Micro config: one short noisy span at very high SNR; small enough for
// unit tests, non-degenerate for the Gaussian training.
ExperimentConfig micro_config(const std::string& dir) {
  ExperimentConfig cfg;
  cfg.num_spans = 1;
  cfg.span_length_km = 80;
  cfg.qam_order = 16;
  cfg.inline_filters = false;
  cfg.receiver_filter = false;
  cfg.symbols_per_run = 192;
  cfg.num_runs = 2;
  cfg.training_blocks = 8;
  cfg.num_particles = 8;
  cfg.window_symbols = 32;
  cfg.edge_exclude_symbols = 16;
  cfg.min_train_count = 30;
  cfg.power_grid_dbm = {0.0};
  cfg.master_seed = 42;
  cfg.output_dir = dir;
  return cfg;
}

}  // namespace

TEST_SUITE_BEGIN("harness");

TEST_CASE("config parsing: defaults, overrides, and precise errors") {
  const ExperimentConfig defaults = parse_experiment_config("{}");
  CHECK(defaults.num_spans == 30);
  CHECK(defaults.symbols_per_run == 4096);
  CHECK(defaults.num_particles == 500);
  CHECK(defaults.receivers.size() == 4);

  const ExperimentConfig cfg = parse_experiment_config(R"({
    "link": {"num_spans": 10, "span_length_km": 100},
    "tx": {"symbol_rate_gbd": 28},
    "receivers": ["dbp-cg", "gmp-sdbp"],
    "sweep": {"axis": "spans", "values": [5, 10, 15]},
    "power_grid_dbm": [-1, 1, 3],
    "seed": 7
  })");
  CHECK(cfg.num_spans == 10);
  CHECK(cfg.symbol_rate_gbd == 28);
  CHECK(cfg.receivers == std::vector<Receiver>{Receiver::DbpCg,
                                               Receiver::GmpSdbp});
  CHECK(cfg.sweep_values.size() == 3);
  CHECK(cfg.master_seed == 7);

  // Unknown keys and wrong types name the offending path.
  CHECK_THROWS_WITH_AS(parse_experiment_config(R"({"link": {"nspans": 3}})"),
                       doctest::Contains("link.nspans"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      parse_experiment_config(R"({"tx": {"symbol_rate_gbd": "fast"}})"),
      doctest::Contains("tx.symbol_rate_gbd"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      parse_experiment_config(R"({"receivers": ["dbp-xx"]})"),
      doctest::Contains("receivers[0]"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      parse_experiment_config(R"({"sweep": {"axis": "spans"}})"),
      doctest::Contains("sweep.values"), std::invalid_argument);
  CHECK_THROWS_AS(parse_experiment_config("{nope"), std::invalid_argument);
}

TEST_CASE("desk preset rewrites the CI-relevant knobs") {
  ExperimentConfig cfg;
  cfg = desk_scale(cfg);
  CHECK(cfg.symbols_per_run == 1024);
  CHECK(cfg.num_runs == 8);
  CHECK(cfg.num_particles == 100);
  CHECK(cfg.num_spans == 10);
}

TEST_CASE("config hash: stable, sensitive to physics, blind to output_dir") {
  ExperimentConfig a;
  ExperimentConfig b;
  b.output_dir = "elsewhere";
  CHECK(config_hash(a) == config_hash(b));
  b.num_spans = 29;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("training and evaluation seed streams are disjoint") {
  const std::uint64_t master = 99;
  for (int run = 0; run < 8; ++run) {
    const auto train =
        run_seed(master, 0, 0, run, SeedRole::TrainingChannel);
    const auto eval = run_seed(master, 0, 0, run, SeedRole::EvalChannel);
    const auto sdbp = run_seed(master, 0, 0, run, SeedRole::Sdbp);
    CHECK(train != eval);
    CHECK(eval != sdbp);
    CHECK(run_seed(master, 0, 0, run, SeedRole::EvalChannel) == eval);
    CHECK(run_seed(master, 0, 1, run, SeedRole::EvalChannel) != eval);
  }
}

TEST_CASE("link_for maps units and caps the segment length") {
  ExperimentConfig cfg;
  const LinkConfig link = link_for(cfg, 0.0, 0.0);
  CHECK(link.span.length_m == doctest::Approx(120e3));
  CHECK(link.span.dispersion_s_m2 == doctest::Approx(1.6e-5));
  CHECK(link.span.gamma_w_m == doctest::Approx(1.3e-3));
  CHECK(link.span.alpha_np_m ==
        doctest::Approx(0.2 * std::log(10.0) / 1e4).epsilon(1e-12));
  CHECK(link.span.segment_length_m <= link.span.length_m);
  CHECK(link.bandpass_bandwidth_hz == doctest::Approx(28e9));

  cfg.sweep_axis = "spans";
  CHECK(link_for(cfg, 5, 0.0).num_spans == 5);
  cfg.sweep_axis = "span_length";
  CHECK(link_for(cfg, 90, 0.0).span.length_m == doctest::Approx(90e3));
  cfg.sweep_axis = "symbol_rate";
  CHECK(link_for(cfg, 28, 0.0).bandpass_bandwidth_hz ==
        doctest::Approx(56e9));
}

TEST_CASE("high-SNR micro sweep: every receiver saturates near log2 M") {
  const std::string dir = "test_out_micro";
  fs::remove_all(dir);
  const ExperimentConfig cfg = micro_config(dir);
  const SweepResult result = run_sweep(cfg, 2);
  REQUIRE(result.points.size() == 1);
  REQUIRE(!result.points[0].failed);
  REQUIRE(result.points[0].receivers.size() == 4);
  for (const auto& r : result.points[0].receivers) {
    CHECK(r.air.value_bits_per_symbol > 3.7);
    CHECK(r.air.value_bits_per_symbol <= 4.0 + 1e-9);
    CHECK(r.air.standard_error < 0.05);
  }
  CHECK(result.points[0].snr_proxy_db > 25.0);
  CHECK(fs::exists(dir + "/results.tsv"));
  CHECK(fs::exists(dir + "/air_vs_power.tsv"));
  CHECK(fs::exists(dir + "/records.jsonl"));
  fs::remove_all(dir);
}

TEST_CASE("sweep resume reuses persisted records and reproduces tables") {
  const std::string dir = "test_out_resume";
  fs::remove_all(dir);
  ExperimentConfig cfg = micro_config(dir);
  cfg.receivers = {Receiver::DbpIidg, Receiver::DbpCg};

  const SweepResult first = run_sweep(cfg, 2);
  const std::string table_first = slurp(dir + "/results.tsv");
  REQUIRE(!first.points.empty());

  // Second run must reuse the records (no recompute): byte-identical table.
  const SweepResult second = run_sweep(cfg, 2);
  CHECK(second.points[0].seconds == first.points[0].seconds);
  CHECK(slurp(dir + "/results.tsv") == table_first);

  // report regenerates the same outputs from records alone.
  fs::remove(dir + "/results.tsv");
  report_from_records(cfg);
  CHECK(slurp(dir + "/results.tsv") == table_first);
  fs::remove_all(dir);
}

TEST_CASE("max_air_gain: identical curves cancel, offsets survive") {
  SweepResult result;
  result.axis = "spans";
  for (double power : {-1.0, 0.0, 1.0}) {
    GridPointResult p;
    p.axis_value = 10;
    p.power_dbm = power;
    const double peak = 4.0 - power * power;  // maximum at 0 dBm
    for (Receiver r : {Receiver::DbpIidg, Receiver::DbpCg,
                       Receiver::SbsSdbp, Receiver::GmpSdbp}) {
      ReceiverResult rr;
      rr.receiver = r;
      const double offset = r == Receiver::GmpSdbp ? 0.25 : 0.0;
      rr.air.value_bits_per_symbol = peak + offset;
      rr.air.standard_error = 0.01;
      rr.air.per_run = Eigen::ArrayXd::Constant(4, peak + offset);
      p.receivers.push_back(rr);
    }
    result.points.push_back(p);
  }
  const std::vector<GainRow> rows = max_air_gain(result);
  for (const auto& row : rows) {
    const double expected = row.receiver == Receiver::GmpSdbp ? 0.25 : 0.0;
    CHECK(row.gain_bits == doctest::Approx(expected).epsilon(1e-12));
    CHECK(row.best_power_dbm == 0.0);
    CHECK(row.combined_se ==
          doctest::Approx(std::sqrt(2.0) * 0.01).epsilon(1e-12));
  }
}

TEST_CASE("emit_plot_data writes a header-only file for an empty sweep") {
  const std::string dir = "test_out_empty";
  fs::remove_all(dir);
  fs::create_directories(dir);
  ExperimentConfig cfg;
  SweepResult empty;
  empty.hash = config_hash(cfg);
  empty.axis = "power";
  emit_plot_data(empty, cfg, dir);
  const std::string text = slurp(dir + "/air_vs_power.tsv");
  CHECK(text.find("power_dbm") != std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);  // headers only
  fs::remove_all(dir);
}

TEST_CASE("aux-channel parameters roundtrip through the artifact store") {
  GaussianAuxChannel aux;
  aux.variant = GaussVariant::CorrelatedGaussian;
  aux.means.resize(2);
  aux.means << std::complex<double>(0.5, -0.25), std::complex<double>(-1, 2);
  Eigen::Matrix2d c0, c1;
  c0 << 0.04, 0.01, 0.01, 0.09;
  c1 << 0.2, -0.05, -0.05, 0.3;
  aux.covariances = {c0, c1};
  aux.rebuild_cache();

  const GaussianAuxChannel back = aux_from_json(aux_to_json(aux));
  CHECK(back.variant == GaussVariant::CorrelatedGaussian);
  for (int m = 0; m < 2; ++m) {
    CHECK(back.means[m] == aux.means[m]);
    CHECK((back.covariances[m] - aux.covariances[m]).norm() == 0.0);
  }
  CHECK(q_loglik({0.1, 0.2}, 0, back) ==
        doctest::Approx(q_loglik({0.1, 0.2}, 0, aux)).epsilon(1e-15));
}

TEST_SUITE_END();
