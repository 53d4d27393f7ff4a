#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "fiberair/channel.hpp"
#include "fiberair/infotheory.hpp"

namespace fiberair {

enum class Receiver { DbpIidg, DbpCg, SbsSdbp, GmpSdbp };

const char* receiver_name(Receiver r);
Receiver receiver_from_name(const std::string& name);
bool receiver_needs_training(Receiver r);
bool receiver_uses_particles(Receiver r);

/// Everything a sweep needs. Mirrors the JSON config schema; see
/// parse_experiment_config for field-by-field validation.
struct ExperimentConfig {
  // link
  int num_spans = 30;
  double span_length_km = 120.0;
  double dispersion_ps_nm_km = 16.0;
  double gamma_per_w_km = 1.3;
  double attenuation_db_km = 0.2;
  double edfa_noise_figure_db = 5.5;
  double fbg_insertion_loss_db = 3.0;
  bool dispersion_managed = true;
  bool inline_filters = true;
  bool receiver_filter = true;
  bool noiseless = false;
  double center_wavelength_nm = 1550.0;
  double ssfm_epsilon = 1e-4;
  double span_extra_loss_db = 0.0;

  // tx
  double symbol_rate_gbd = 14.0;
  int qam_order = 64;
  double rolloff = 0.25;
  int pulse_span_symbols = 16;
  int samples_per_symbol = 4;
  int symbols_per_run = 4096;

  // receivers + sweep
  std::vector<Receiver> receivers = {Receiver::DbpIidg, Receiver::DbpCg,
                                     Receiver::SbsSdbp, Receiver::GmpSdbp};
  std::string sweep_axis = "power";  // power | spans | span_length | symbol_rate
  std::vector<double> sweep_values;  // ignored for axis == power
  std::vector<double> power_grid_dbm = {-2, -1, 0, 1, 2, 3, 4, 5, 6, 7, 8};

  // monte carlo
  int num_runs = 16;
  int training_blocks = 4;
  int num_particles = 500;
  int window_symbols = 64;
  int edge_exclude_symbols = 16;
  int min_train_count = 50;

  std::uint64_t master_seed = 1;
  std::string output_dir = "results";
};

/// Parse + validate a JSON config; throws std::invalid_argument with the
/// offending key path in the message.
ExperimentConfig parse_experiment_config(const std::string& json_text);

/// CI-sized preset: K=1024, N_MC=8, N_p=100, N=10 spans.
ExperimentConfig desk_scale(ExperimentConfig cfg);

/// FNV-1a hash of the canonical config serialization, hex encoded.
std::string config_hash(const ExperimentConfig& cfg);
std::string config_to_json(const ExperimentConfig& cfg);

/// Effective sweep-axis values ({0} placeholder when the axis is power).
std::vector<double> axis_values(const ExperimentConfig& cfg);

/// Link/tx objects for one grid point of the sweep. The SSFM segment
/// length depends on the launch power, so both coordinates are needed.
LinkConfig link_for(const ExperimentConfig& cfg, double axis_value,
                    double power_dbm);
TxConfig tx_for(const ExperimentConfig& cfg, double axis_value,
                double power_dbm);

inline double dbm_to_watt(double dbm) {
  return 1e-3 * std::pow(10.0, dbm / 10.0);
}

/// Linear-regime SNR proxy for the reference curves: launch power over
/// accumulated in-band ASE at the matched-filter output.
double snr_proxy_linear(const ExperimentConfig& cfg, double axis_value,
                        double power_dbm);

std::uint64_t run_seed(std::uint64_t master, int axis_index, int power_index,
                       int run_index, SeedRole role);

struct ReceiverResult {
  Receiver receiver;
  AirEstimate air;
};

struct GridPointResult {
  double axis_value = 0.0;
  double power_dbm = 0.0;
  double snr_proxy_db = 0.0;
  double awgn_capacity_bits = 0.0;
  double constellation_capacity_bits = 0.0;
  std::vector<ReceiverResult> receivers;
  double seconds = 0.0;
  bool failed = false;
  std::string error;
};

struct SweepResult {
  std::string hash;
  std::string axis;
  std::uint64_t seed = 0;
  std::vector<GridPointResult> points;

  bool any_failed() const;
};

/// Run the full sweep. Completed grid points found in
/// <output_dir>/records.jsonl with a matching config hash are reused;
/// fresh points are appended there. Per-point failures are recorded and
/// the sweep continues. Writes results.tsv and the plot-data files on
/// completion.
SweepResult run_sweep(const ExperimentConfig& cfg, int num_threads = 0,
                      std::ostream* log = nullptr);

/// One grid point (axis value x power), no persistence. The building
/// block of run_sweep; exposed for tests and the acceptance suite.
GridPointResult evaluate_grid_point(const ExperimentConfig& cfg,
                                    int axis_index, int power_index,
                                    int num_threads = 0);

struct GainRow {
  double axis_value = 0.0;
  Receiver receiver;
  Receiver baseline;
  double gain_bits = 0.0;
  double combined_se = 0.0;
  double best_power_dbm = 0.0;
  double baseline_best_power_dbm = 0.0;
};

/// Per axis value: max AIR over power per receiver, minus the best of
/// each DBP baseline.
std::vector<GainRow> max_air_gain(const SweepResult& result);

/// results.tsv plus one plot-data file per figure-style view.
void write_result_table(const SweepResult& result, const std::string& path);
void emit_plot_data(const SweepResult& result, const ExperimentConfig& cfg,
                    const std::string& dir);

/// Record persistence (JSON lines, append-only).
void append_record(const std::string& path, const ExperimentConfig& cfg,
                   const GridPointResult& point);
std::vector<GridPointResult> load_records(const std::string& path,
                                          const std::string& hash);

/// Rebuild tables/plot data from persisted records.
SweepResult report_from_records(const ExperimentConfig& cfg);

/// Aux-channel parameters as JSON, for the run-artifact store.
std::string aux_to_json(const GaussianAuxChannel& aux);
GaussianAuxChannel aux_from_json(const std::string& text);

}  // namespace fiberair
