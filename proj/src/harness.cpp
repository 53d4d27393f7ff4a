#include "fiberair/harness.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "fiberair/fft_utils.hpp"
#include "fiberair/parallel.hpp"
#include "fiberair/sdbp.hpp"
#include "fiberair/sigproc.hpp"

#include "json.hpp"

namespace fiberair {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  throw std::invalid_argument("config error at " + path + ": " + what);
}

double get_number(const json& j, const std::string& path, const std::string& key,
                  double fallback, bool* present = nullptr) {
  if (!j.contains(key)) {
    if (present) *present = false;
    return fallback;
  }
  if (present) *present = true;
  if (!j[key].is_number())
    config_error(path + "." + key, "expected a number");
  return j[key].get<double>();
}

bool get_bool(const json& j, const std::string& path, const std::string& key,
              bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean()) config_error(path + "." + key, "expected a boolean");
  return j[key].get<bool>();
}

void check_known_keys(const json& j, const std::string& path,
                      std::initializer_list<const char*> known) {
  for (const auto& [key, value] : j.items()) {
    bool found = false;
    for (const char* k : known)
      if (key == k) found = true;
    if (!found) config_error(path + "." + key, "unknown key");
  }
}

}  // namespace

const char* receiver_name(Receiver r) {
  switch (r) {
    case Receiver::DbpIidg: return "dbp-iidg";
    case Receiver::DbpCg: return "dbp-cg";
    case Receiver::SbsSdbp: return "sbs-sdbp";
    case Receiver::GmpSdbp: return "gmp-sdbp";
  }
  return "?";
}

Receiver receiver_from_name(const std::string& name) {
  for (Receiver r : {Receiver::DbpIidg, Receiver::DbpCg, Receiver::SbsSdbp,
                     Receiver::GmpSdbp})
    if (name == receiver_name(r)) return r;
  throw std::invalid_argument("unrecognized receiver name: " + name);
}

bool receiver_needs_training(Receiver r) {
  return r == Receiver::DbpIidg || r == Receiver::DbpCg;
}

bool receiver_uses_particles(Receiver r) {
  return r == Receiver::SbsSdbp || r == Receiver::GmpSdbp;
}

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config error: ") + e.what());
  }
  if (!root.is_object()) config_error("<root>", "expected an object");
  check_known_keys(root, "<root>",
                   {"link", "tx", "mc", "receivers", "sweep",
                    "power_grid_dbm", "seed", "output_dir"});

  ExperimentConfig cfg;
  if (root.contains("link")) {
    const json& link = root["link"];
    if (!link.is_object()) config_error("link", "expected an object");
    check_known_keys(link, "link",
                     {"num_spans", "span_length_km", "dispersion_ps_nm_km",
                      "gamma_per_w_km", "attenuation_db_km",
                      "edfa_noise_figure_db", "fbg_insertion_loss_db",
                      "dispersion_managed", "inline_filters", "receiver_filter",
                      "noiseless", "center_wavelength_nm", "ssfm_epsilon",
                      "span_extra_loss_db"});
    cfg.num_spans = static_cast<int>(
        get_number(link, "link", "num_spans", cfg.num_spans));
    cfg.span_length_km =
        get_number(link, "link", "span_length_km", cfg.span_length_km);
    cfg.dispersion_ps_nm_km = get_number(link, "link", "dispersion_ps_nm_km",
                                         cfg.dispersion_ps_nm_km);
    cfg.gamma_per_w_km =
        get_number(link, "link", "gamma_per_w_km", cfg.gamma_per_w_km);
    cfg.attenuation_db_km =
        get_number(link, "link", "attenuation_db_km", cfg.attenuation_db_km);
    cfg.edfa_noise_figure_db = get_number(link, "link", "edfa_noise_figure_db",
                                          cfg.edfa_noise_figure_db);
    cfg.fbg_insertion_loss_db = get_number(
        link, "link", "fbg_insertion_loss_db", cfg.fbg_insertion_loss_db);
    cfg.dispersion_managed =
        get_bool(link, "link", "dispersion_managed", cfg.dispersion_managed);
    cfg.inline_filters =
        get_bool(link, "link", "inline_filters", cfg.inline_filters);
    cfg.receiver_filter =
        get_bool(link, "link", "receiver_filter", cfg.receiver_filter);
    cfg.noiseless = get_bool(link, "link", "noiseless", cfg.noiseless);
    cfg.center_wavelength_nm = get_number(link, "link", "center_wavelength_nm",
                                          cfg.center_wavelength_nm);
    cfg.ssfm_epsilon = get_number(link, "link", "ssfm_epsilon", cfg.ssfm_epsilon);
    cfg.span_extra_loss_db =
        get_number(link, "link", "span_extra_loss_db", cfg.span_extra_loss_db);
    if (cfg.num_spans < 0) config_error("link.num_spans", "must be >= 0");
    if (cfg.span_length_km <= 0) config_error("link.span_length_km", "must be > 0");
    if (cfg.edfa_noise_figure_db < 3.0 && !cfg.noiseless)
      config_error("link.edfa_noise_figure_db",
                   "physical EDFA needs NF >= 3 dB (or set noiseless)");
    if (cfg.ssfm_epsilon <= 0) config_error("link.ssfm_epsilon", "must be > 0");
  }
  if (root.contains("tx")) {
    const json& tx = root["tx"];
    if (!tx.is_object()) config_error("tx", "expected an object");
    check_known_keys(tx, "tx",
                     {"symbol_rate_gbd", "qam_order", "rolloff",
                      "pulse_span_symbols", "samples_per_symbol",
                      "symbols_per_run"});
    cfg.symbol_rate_gbd =
        get_number(tx, "tx", "symbol_rate_gbd", cfg.symbol_rate_gbd);
    cfg.qam_order =
        static_cast<int>(get_number(tx, "tx", "qam_order", cfg.qam_order));
    cfg.rolloff = get_number(tx, "tx", "rolloff", cfg.rolloff);
    cfg.pulse_span_symbols = static_cast<int>(
        get_number(tx, "tx", "pulse_span_symbols", cfg.pulse_span_symbols));
    cfg.samples_per_symbol = static_cast<int>(
        get_number(tx, "tx", "samples_per_symbol", cfg.samples_per_symbol));
    cfg.symbols_per_run = static_cast<int>(
        get_number(tx, "tx", "symbols_per_run", cfg.symbols_per_run));
    if (cfg.symbol_rate_gbd <= 0) config_error("tx.symbol_rate_gbd", "must be > 0");
    if (cfg.samples_per_symbol < 2)
      config_error("tx.samples_per_symbol", "must be >= 2");
    if (cfg.symbols_per_run <= 0) config_error("tx.symbols_per_run", "must be > 0");
  }
  if (root.contains("mc")) {
    const json& mc = root["mc"];
    if (!mc.is_object()) config_error("mc", "expected an object");
    check_known_keys(mc, "mc",
                     {"num_runs", "training_blocks", "num_particles",
                      "window_symbols", "edge_exclude_symbols",
                      "min_train_count"});
    cfg.num_runs =
        static_cast<int>(get_number(mc, "mc", "num_runs", cfg.num_runs));
    cfg.training_blocks = static_cast<int>(
        get_number(mc, "mc", "training_blocks", cfg.training_blocks));
    cfg.num_particles = static_cast<int>(
        get_number(mc, "mc", "num_particles", cfg.num_particles));
    cfg.window_symbols = static_cast<int>(
        get_number(mc, "mc", "window_symbols", cfg.window_symbols));
    cfg.edge_exclude_symbols = static_cast<int>(get_number(
        mc, "mc", "edge_exclude_symbols", cfg.edge_exclude_symbols));
    cfg.min_train_count = static_cast<int>(
        get_number(mc, "mc", "min_train_count", cfg.min_train_count));
    if (cfg.num_runs <= 0) config_error("mc.num_runs", "must be > 0");
    if (cfg.num_particles <= 1) config_error("mc.num_particles", "must be >= 2");
    if (cfg.training_blocks <= 0) config_error("mc.training_blocks", "must be > 0");
  }
  if (root.contains("receivers")) {
    if (!root["receivers"].is_array())
      config_error("receivers", "expected an array of receiver names");
    cfg.receivers.clear();
    int idx = 0;
    for (const auto& item : root["receivers"]) {
      if (!item.is_string())
        config_error("receivers[" + std::to_string(idx) + "]",
                     "expected a string");
      try {
        cfg.receivers.push_back(receiver_from_name(item.get<std::string>()));
      } catch (const std::invalid_argument& e) {
        config_error("receivers[" + std::to_string(idx) + "]", e.what());
      }
      ++idx;
    }
    if (cfg.receivers.empty()) config_error("receivers", "must not be empty");
  }
  if (root.contains("sweep")) {
    const json& sweep = root["sweep"];
    if (!sweep.is_object()) config_error("sweep", "expected an object");
    check_known_keys(sweep, "sweep", {"axis", "values"});
    if (sweep.contains("axis")) {
      if (!sweep["axis"].is_string()) config_error("sweep.axis", "expected a string");
      cfg.sweep_axis = sweep["axis"].get<std::string>();
      if (cfg.sweep_axis != "power" && cfg.sweep_axis != "spans" &&
          cfg.sweep_axis != "span_length" && cfg.sweep_axis != "symbol_rate")
        config_error("sweep.axis",
                     "must be power | spans | span_length | symbol_rate");
    }
    if (sweep.contains("values")) {
      if (!sweep["values"].is_array())
        config_error("sweep.values", "expected an array of numbers");
      cfg.sweep_values.clear();
      for (const auto& v : sweep["values"]) {
        if (!v.is_number()) config_error("sweep.values", "expected numbers");
        cfg.sweep_values.push_back(v.get<double>());
      }
    }
    if (cfg.sweep_axis != "power" && cfg.sweep_values.empty())
      config_error("sweep.values", "required for non-power axes");
  }
  if (root.contains("power_grid_dbm")) {
    if (!root["power_grid_dbm"].is_array())
      config_error("power_grid_dbm", "expected an array of numbers");
    cfg.power_grid_dbm.clear();
    for (const auto& v : root["power_grid_dbm"]) {
      if (!v.is_number()) config_error("power_grid_dbm", "expected numbers");
      cfg.power_grid_dbm.push_back(v.get<double>());
    }
    if (cfg.power_grid_dbm.empty())
      config_error("power_grid_dbm", "must not be empty");
  }
  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned() && !root["seed"].is_number_integer())
      config_error("seed", "expected an integer");
    cfg.master_seed = root["seed"].get<std::uint64_t>();
  }
  if (root.contains("output_dir")) {
    if (!root["output_dir"].is_string())
      config_error("output_dir", "expected a string");
    cfg.output_dir = root["output_dir"].get<std::string>();
  }
  return cfg;
}

ExperimentConfig desk_scale(ExperimentConfig cfg) {
  cfg.symbols_per_run = 1024;
  cfg.num_runs = 8;
  cfg.num_particles = 100;
  cfg.num_spans = 10;
  cfg.training_blocks = 8;
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  ordered_json j;
  j["link"] = {{"num_spans", cfg.num_spans},
               {"span_length_km", cfg.span_length_km},
               {"dispersion_ps_nm_km", cfg.dispersion_ps_nm_km},
               {"gamma_per_w_km", cfg.gamma_per_w_km},
               {"attenuation_db_km", cfg.attenuation_db_km},
               {"edfa_noise_figure_db", cfg.edfa_noise_figure_db},
               {"fbg_insertion_loss_db", cfg.fbg_insertion_loss_db},
               {"dispersion_managed", cfg.dispersion_managed},
               {"inline_filters", cfg.inline_filters},
               {"receiver_filter", cfg.receiver_filter},
               {"noiseless", cfg.noiseless},
               {"center_wavelength_nm", cfg.center_wavelength_nm},
               {"ssfm_epsilon", cfg.ssfm_epsilon},
               {"span_extra_loss_db", cfg.span_extra_loss_db}};
  j["tx"] = {{"symbol_rate_gbd", cfg.symbol_rate_gbd},
             {"qam_order", cfg.qam_order},
             {"rolloff", cfg.rolloff},
             {"pulse_span_symbols", cfg.pulse_span_symbols},
             {"samples_per_symbol", cfg.samples_per_symbol},
             {"symbols_per_run", cfg.symbols_per_run}};
  j["mc"] = {{"num_runs", cfg.num_runs},
             {"training_blocks", cfg.training_blocks},
             {"num_particles", cfg.num_particles},
             {"window_symbols", cfg.window_symbols},
             {"edge_exclude_symbols", cfg.edge_exclude_symbols},
             {"min_train_count", cfg.min_train_count}};
  std::vector<std::string> names;
  for (Receiver r : cfg.receivers) names.emplace_back(receiver_name(r));
  j["receivers"] = names;
  j["sweep"] = {{"axis", cfg.sweep_axis}, {"values", cfg.sweep_values}};
  j["power_grid_dbm"] = cfg.power_grid_dbm;
  j["seed"] = cfg.master_seed;
  j["output_dir"] = cfg.output_dir;
  return j.dump(2);
}

std::string config_hash(const ExperimentConfig& cfg) {
  // FNV-1a over the canonical serialization, minus output_dir so moving
  // results does not invalidate them.
  ExperimentConfig canon = cfg;
  canon.output_dir = "";
  const std::string text = config_to_json(canon);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<double> axis_values(const ExperimentConfig& cfg) {
  if (cfg.sweep_axis == "power") return {0.0};
  return cfg.sweep_values;
}

LinkConfig link_for(const ExperimentConfig& cfg, double axis_value,
                    double power_dbm) {
  LinkConfig link;
  link.num_spans = cfg.sweep_axis == "spans"
                       ? static_cast<int>(std::lround(axis_value))
                       : cfg.num_spans;
  const double length_km =
      cfg.sweep_axis == "span_length" ? axis_value : cfg.span_length_km;
  const double rs_hz = 1e9 * (cfg.sweep_axis == "symbol_rate"
                                  ? axis_value
                                  : cfg.symbol_rate_gbd);

  SpanConfig& span = link.span;
  span.length_m = length_km * 1e3;
  span.dispersion_s_m2 = cfg.dispersion_ps_nm_km * 1e-6;  // ps/(nm km) -> s/m^2
  span.gamma_w_m = cfg.gamma_per_w_km * 1e-3;
  span.alpha_np_m = cfg.attenuation_db_km * std::log(10.0) / 10.0 / 1e3;
  span.wavelength_m = cfg.center_wavelength_nm * 1e-9;
  span.extra_loss_db = cfg.span_extra_loss_db;

  const double power_w = dbm_to_watt(power_dbm);
  const double delta =
      segment_length(power_w, rs_hz, span, span.wavelength_m, cfg.ssfm_epsilon);
  span.segment_length_m = std::min(delta, span.length_m);

  link.edfa_noise_figure_db = cfg.edfa_noise_figure_db;
  link.fbg_insertion_loss_db = cfg.fbg_insertion_loss_db;
  // "Equivalent low-pass bandwidth equal to the symbol rate" = cutoff at
  // +-Rs, i.e. a two-sided width of 2 Rs. A +-Rs/2 brick wall would clip
  // the root-raised-cosine excess band and distort the signal itself.
  link.bandpass_bandwidth_hz = 2.0 * rs_hz;
  link.dispersion_managed = cfg.dispersion_managed;
  link.inline_filters = cfg.inline_filters;
  link.receiver_filter = cfg.receiver_filter;
  link.noiseless = cfg.noiseless;
  return link;
}

TxConfig tx_for(const ExperimentConfig& cfg, double axis_value,
                double power_dbm) {
  TxConfig tx;
  tx.constellation = build_square_qam(cfg.qam_order);
  tx.pulse = rrc_pulse(cfg.rolloff, cfg.pulse_span_symbols,
                       cfg.samples_per_symbol);
  tx.symbol_rate_hz = 1e9 * (cfg.sweep_axis == "symbol_rate"
                                 ? axis_value
                                 : cfg.symbol_rate_gbd);
  tx.launch_power_w = dbm_to_watt(power_dbm);
  return tx;
}

double snr_proxy_linear(const ExperimentConfig& cfg, double axis_value,
                        double power_dbm) {
  const LinkConfig link = link_for(cfg, axis_value, power_dbm);
  const TxConfig tx = tx_for(cfg, axis_value, power_dbm);
  if (link.num_spans == 0 || link.noiseless)
    return std::numeric_limits<double>::infinity();
  const double fs = tx.symbol_rate_hz * cfg.samples_per_symbol;
  const double sigma2 = edfa_noise_variance(
      link.span_gain_db(), link.edfa_noise_figure_db, fs,
      link.span.wavelength_m);

  // Fraction of the matched-filter noise bandwidth inside the receiver
  // filter, evaluated on the actual simulation grid.
  double band_factor = 1.0;
  if (link.receiver_filter || link.inline_filters) {
    const int live =
        cfg.symbols_per_run * cfg.samples_per_symbol + tx.pulse.length() - 1;
    const int n = next_fast_fft_length(live, cfg.samples_per_symbol);
    Eigen::ArrayXcd taps = Eigen::ArrayXcd::Zero(n);
    taps.head(tx.pulse.length()) = tx.pulse.taps.cast<std::complex<double>>();
    fft_inplace(taps);
    const double bin_hz = fs / n;
    double inband = 0.0;
    for (int i = 0; i < n; ++i) {
      const int k = (i <= (n - 1) / 2) ? i : i - n;
      if (std::abs(k * bin_hz) <= 0.5 * link.bandpass_bandwidth_hz)
        inband += std::norm(taps[i]);
    }
    band_factor = inband / n;  // taps have unit energy
  }
  const double noise_var =
      link.num_spans * sigma2 * band_factor;
  return tx.launch_power_w * cfg.samples_per_symbol / noise_var;
}

std::uint64_t run_seed(std::uint64_t master, int axis_index, int power_index,
                       int run_index, SeedRole role) {
  return derive_seed({master, static_cast<std::uint64_t>(axis_index),
                      static_cast<std::uint64_t>(power_index),
                      static_cast<std::uint64_t>(run_index),
                      static_cast<std::uint64_t>(role)});
}

namespace {

struct TrainedAux {
  GaussianAuxChannel iidg;
  GaussianAuxChannel cg;
};

TrainedAux train_dbp_aux(const ExperimentConfig& cfg, const LinkConfig& link,
                         const TxConfig& tx, int axis_index, int power_index,
                         int num_threads) {
  const int k_count = cfg.symbols_per_run;
  const int edge = cfg.edge_exclude_symbols;
  const int kept = k_count - 2 * edge;
  const int blocks = cfg.training_blocks;

  Eigen::ArrayXcd z_all(static_cast<Eigen::Index>(kept) * blocks);
  SymbolSequence labels(static_cast<Eigen::Index>(kept) * blocks);

  parallel_for(blocks, num_threads, [&](int block) {
    const std::uint64_t seed = run_seed(cfg.master_seed, axis_index,
                                        power_index, block,
                                        SeedRole::TrainingChannel);
    Rng sym_rng(derive_seed({seed, 0x51ULL}));
    const SymbolSequence x =
        random_symbols(k_count, tx.constellation.size(), sym_rng);
    const TransmitResult fw = transmit(x, link, tx, derive_seed({seed, 0xc4ULL}));
    const Eigen::ArrayXcd z = dbp_receive(fw.received, link, tx);
    z_all.segment(static_cast<Eigen::Index>(block) * kept, kept) =
        z.segment(edge, kept);
    labels.segment(static_cast<Eigen::Index>(block) * kept, kept) =
        x.segment(edge, kept);
  });

  TrainOptions opts;
  opts.min_count_per_point = cfg.min_train_count;
  TrainedAux aux;
  aux.iidg = train_gaussian_aux(z_all, labels, tx.constellation.size(),
                                GaussVariant::IidGaussian, opts);
  aux.cg = train_gaussian_aux(z_all, labels, tx.constellation.size(),
                              GaussVariant::CorrelatedGaussian, opts);
  return aux;
}

}  // namespace

GridPointResult evaluate_grid_point(const ExperimentConfig& cfg,
                                    int axis_index, int power_index,
                                    int num_threads) {
  if (num_threads <= 0)
    num_threads = std::max(1u, std::thread::hardware_concurrency());
  const double axis_value = axis_values(cfg).at(axis_index);
  const double power_dbm = cfg.power_grid_dbm.at(power_index);

  GridPointResult point;
  point.axis_value = axis_value;
  point.power_dbm = power_dbm;
  const auto t0 = std::chrono::steady_clock::now();

  try {
    const LinkConfig link = link_for(cfg, axis_value, power_dbm);
    const TxConfig tx = tx_for(cfg, axis_value, power_dbm);
    const Eigen::ArrayXd input_law = uniform_input_law(tx.constellation.size());
    const int edge = cfg.edge_exclude_symbols;

    bool want_training = false, want_particles = false;
    for (Receiver r : cfg.receivers) {
      want_training = want_training || receiver_needs_training(r);
      want_particles = want_particles || receiver_uses_particles(r);
    }
    bool want_sbs = false, want_gmp = false;
    for (Receiver r : cfg.receivers) {
      want_sbs = want_sbs || r == Receiver::SbsSdbp;
      want_gmp = want_gmp || r == Receiver::GmpSdbp;
    }

    TrainedAux aux;
    if (want_training)
      aux = train_dbp_aux(cfg, link, tx, axis_index, power_index, num_threads);

    std::vector<Eigen::ArrayXd> per_run(cfg.receivers.size());
    for (auto& v : per_run) v.resize(cfg.num_runs);

    parallel_for(cfg.num_runs, num_threads, [&](int run) {
      const std::uint64_t seed = run_seed(cfg.master_seed, axis_index,
                                          power_index, run,
                                          SeedRole::EvalChannel);
      Rng sym_rng(derive_seed({seed, 0x51ULL}));
      const SymbolSequence x =
          random_symbols(cfg.symbols_per_run, tx.constellation.size(), sym_rng);
      const TransmitResult fw =
          transmit(x, link, tx, derive_seed({seed, 0xc4ULL}));

      Eigen::ArrayXcd z;
      if (want_training) z = dbp_receive(fw.received, link, tx);

      PosteriorTable sbs, gmp;
      if (want_particles) {
        const std::uint64_t sdbp_seed = run_seed(
            cfg.master_seed, axis_index, power_index, run, SeedRole::Sdbp);
        const ParticleEnsemble ens = sdbp_backward(
            fw.received, link, tx, cfg.num_particles, sdbp_seed, 1);
        if (want_sbs) sbs = sbs_posterior(ens, tx.pulse, tx.constellation);
        if (want_gmp) {
          GmpOptions gopts;
          gopts.window_symbols = cfg.window_symbols;
          gmp = gmp_posterior(ens, tx.pulse, tx.constellation, gopts);
        }
      }

      for (std::size_t ri = 0; ri < cfg.receivers.size(); ++ri) {
        double value = 0.0;
        switch (cfg.receivers[ri]) {
          case Receiver::DbpIidg:
            value = air_dbp(z, x, aux.iidg, input_law, edge);
            break;
          case Receiver::DbpCg:
            value = air_dbp(z, x, aux.cg, input_law, edge);
            break;
          case Receiver::SbsSdbp:
            value = air_abc(sbs, x, input_law, edge);
            break;
          case Receiver::GmpSdbp:
            value = air_abc(gmp, x, input_law, edge);
            break;
        }
        per_run[ri][run] = value;
      }
    });

    for (std::size_t ri = 0; ri < cfg.receivers.size(); ++ri)
      point.receivers.push_back({cfg.receivers[ri], mc_air(per_run[ri])});

    const double snr = snr_proxy_linear(cfg, axis_value, power_dbm);
    point.snr_proxy_db = 10.0 * std::log10(snr);
    point.awgn_capacity_bits = std::isinf(snr)
                                   ? std::numeric_limits<double>::infinity()
                                   : awgn_capacity(snr);
    point.constellation_capacity_bits =
        std::isinf(snr) ? std::log2(static_cast<double>(cfg.qam_order))
                        : constrained_capacity_qam(tx.constellation, snr);
  } catch (const std::exception& e) {
    point.failed = true;
    point.error = e.what();
  }
  point.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return point;
}

bool SweepResult::any_failed() const {
  for (const auto& p : points)
    if (p.failed) return true;
  return false;
}

namespace {

json point_to_json(const ExperimentConfig& cfg, const GridPointResult& p) {
  json rec;
  rec["hash"] = config_hash(cfg);
  rec["seed"] = cfg.master_seed;
  rec["axis"] = cfg.sweep_axis;
  rec["axis_value"] = p.axis_value;
  rec["power_dbm"] = p.power_dbm;
  rec["snr_proxy_db"] = p.snr_proxy_db;
  rec["awgn_bits"] = p.awgn_capacity_bits;
  rec["constellation_bits"] = p.constellation_capacity_bits;
  rec["seconds"] = p.seconds;
  rec["failed"] = p.failed;
  if (p.failed) rec["error"] = p.error;
  json recv = json::array();
  for (const auto& r : p.receivers) {
    json item;
    item["name"] = receiver_name(r.receiver);
    item["air"] = r.air.value_bits_per_symbol;
    item["se"] = r.air.standard_error;
    std::vector<double> runs(r.air.per_run.begin(), r.air.per_run.end());
    item["per_run"] = runs;
    recv.push_back(item);
  }
  rec["receivers"] = recv;
  return rec;
}

GridPointResult point_from_json(const json& rec) {
  // JSON has no infinity; nlohmann dumps non-finite numbers as null.
  const auto num = [&rec](const char* key) {
    const json& v = rec.at(key);
    return v.is_null() ? std::numeric_limits<double>::infinity()
                       : v.get<double>();
  };
  GridPointResult p;
  p.axis_value = num("axis_value");
  p.power_dbm = num("power_dbm");
  p.snr_proxy_db = num("snr_proxy_db");
  p.awgn_capacity_bits = num("awgn_bits");
  p.constellation_capacity_bits = num("constellation_bits");
  p.seconds = num("seconds");
  p.failed = rec.at("failed").get<bool>();
  if (rec.contains("error")) p.error = rec["error"].get<std::string>();
  for (const auto& item : rec.at("receivers")) {
    ReceiverResult r;
    r.receiver = receiver_from_name(item.at("name").get<std::string>());
    const auto runs = item.at("per_run").get<std::vector<double>>();
    r.air.per_run = Eigen::Map<const Eigen::ArrayXd>(runs.data(), runs.size());
    r.air.value_bits_per_symbol = item.at("air").get<double>();
    r.air.standard_error = item.at("se").get<double>();
    p.receivers.push_back(std::move(r));
  }
  return p;
}

}  // namespace

void append_record(const std::string& path, const ExperimentConfig& cfg,
                   const GridPointResult& point) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("cannot open record file: " + path);
  out << point_to_json(cfg, point).dump() << "\n";
}

std::vector<GridPointResult> load_records(const std::string& path,
                                          const std::string& hash) {
  std::vector<GridPointResult> points;
  std::ifstream in(path);
  if (!in) return points;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error&) {
      continue;  // tolerate a truncated trailing line from an interrupted run
    }
    if (rec.value("hash", "") != hash) continue;
    points.push_back(point_from_json(rec));
  }
  return points;
}

SweepResult run_sweep(const ExperimentConfig& cfg, int num_threads,
                      std::ostream* log) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  const std::string records_path = cfg.output_dir + "/records.jsonl";
  const std::string hash = config_hash(cfg);

  {
    std::ofstream cfg_out(cfg.output_dir + "/config.json");
    cfg_out << config_to_json(cfg) << "\n";
  }

  SweepResult result;
  result.hash = hash;
  result.axis = cfg.sweep_axis;
  result.seed = cfg.master_seed;

  const auto existing = load_records(records_path, hash);
  auto find_existing = [&](double av, double p) -> const GridPointResult* {
    for (const auto& e : existing)
      if (e.axis_value == av && e.power_dbm == p && !e.failed) return &e;
    return nullptr;
  };

  const auto avs = axis_values(cfg);
  for (int ai = 0; ai < static_cast<int>(avs.size()); ++ai) {
    for (int pi = 0; pi < static_cast<int>(cfg.power_grid_dbm.size()); ++pi) {
      const double av = avs[ai];
      const double power = cfg.power_grid_dbm[pi];
      if (const GridPointResult* prev = find_existing(av, power)) {
        result.points.push_back(*prev);
        if (log)
          *log << "reuse axis=" << av << " power=" << power << " dBm\n";
        continue;
      }
      GridPointResult point = evaluate_grid_point(cfg, ai, pi, num_threads);
      append_record(records_path, cfg, point);
      if (log) {
        *log << "point axis=" << av << " power=" << power << " dBm";
        if (point.failed) {
          *log << " FAILED: " << point.error << "\n";
        } else {
          for (const auto& r : point.receivers)
            *log << "  " << receiver_name(r.receiver) << "="
                 << r.air.value_bits_per_symbol;
          *log << "  (" << fmt_short(point.seconds) << " s)\n";
        }
      }
      result.points.push_back(std::move(point));
    }
  }

  write_result_table(result, cfg.output_dir + "/results.tsv");
  emit_plot_data(result, cfg, cfg.output_dir);
  return result;
}

SweepResult report_from_records(const ExperimentConfig& cfg) {
  SweepResult result;
  result.hash = config_hash(cfg);
  result.axis = cfg.sweep_axis;
  result.seed = cfg.master_seed;
  result.points =
      load_records(cfg.output_dir + "/records.jsonl", result.hash);
  write_result_table(result, cfg.output_dir + "/results.tsv");
  emit_plot_data(result, cfg, cfg.output_dir);
  return result;
}

std::vector<GainRow> max_air_gain(const SweepResult& result) {
  std::vector<GainRow> rows;
  std::vector<double> avs;
  for (const auto& p : result.points)
    if (std::find(avs.begin(), avs.end(), p.axis_value) == avs.end())
      avs.push_back(p.axis_value);

  for (double av : avs) {
    struct Best {
      bool seen = false;
      double air = 0, se = 0, power = 0;
    };
    Best best[4];
    for (const auto& p : result.points) {
      if (p.axis_value != av || p.failed) continue;
      for (const auto& r : p.receivers) {
        Best& b = best[static_cast<int>(r.receiver)];
        if (!b.seen || r.air.value_bits_per_symbol > b.air) {
          b.seen = true;
          b.air = r.air.value_bits_per_symbol;
          b.se = r.air.standard_error;
          b.power = p.power_dbm;
        }
      }
    }
    for (Receiver rec : {Receiver::DbpIidg, Receiver::DbpCg, Receiver::SbsSdbp,
                         Receiver::GmpSdbp}) {
      for (Receiver base : {Receiver::DbpIidg, Receiver::DbpCg}) {
        if (rec == base) continue;
        const Best& b = best[static_cast<int>(rec)];
        const Best& bb = best[static_cast<int>(base)];
        if (!b.seen || !bb.seen) continue;
        GainRow row;
        row.axis_value = av;
        row.receiver = rec;
        row.baseline = base;
        row.gain_bits = b.air - bb.air;
        row.combined_se = std::sqrt(b.se * b.se + bb.se * bb.se);
        row.best_power_dbm = b.power;
        row.baseline_best_power_dbm = bb.power;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

void write_result_table(const SweepResult& result, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "# fiberair results\n";
  out << "# config_hash=" << result.hash << " seed=" << result.seed
      << " axis=" << result.axis << " format_version=1\n";
  out << "axis_value\tpower_dbm\treceiver\tair_bits\tstd_err\tn_runs\n";
  for (const auto& p : result.points) {
    if (p.failed) {
      out << fmt_short(p.axis_value) << "\t" << fmt_short(p.power_dbm)
          << "\tFAILED\tnan\tnan\t0\n";
      continue;
    }
    for (const auto& r : p.receivers)
      out << fmt_short(p.axis_value) << "\t" << fmt_short(p.power_dbm) << "\t"
          << receiver_name(r.receiver) << "\t"
          << fmt(r.air.value_bits_per_symbol) << "\t"
          << fmt(r.air.standard_error) << "\t" << r.air.runs() << "\n";
    out << fmt_short(p.axis_value) << "\t" << fmt_short(p.power_dbm)
        << "\tawgn-capacity\t" << fmt(p.awgn_capacity_bits) << "\t0\t0\n";
    out << fmt_short(p.axis_value) << "\t" << fmt_short(p.power_dbm)
        << "\tconstellation-capacity\t" << fmt(p.constellation_capacity_bits)
        << "\t0\t0\n";
  }
}

void emit_plot_data(const SweepResult& result, const ExperimentConfig& cfg,
                    const std::string& dir) {
  {
    std::ofstream out(dir + "/air_vs_power.tsv");
    out << "# fiberair plot data: AIR vs launch power\n";
    out << "# config_hash=" << result.hash << " seed=" << result.seed << "\n";
    out << "axis_value\tpower_dbm\tawgn_capacity\tconstellation_capacity";
    for (Receiver r : cfg.receivers)
      out << "\t" << receiver_name(r) << "\t" << receiver_name(r) << "_se";
    out << "\n";
    for (const auto& p : result.points) {
      if (p.failed) continue;
      out << fmt_short(p.axis_value) << "\t" << fmt_short(p.power_dbm) << "\t"
          << fmt(p.awgn_capacity_bits) << "\t"
          << fmt(p.constellation_capacity_bits);
      for (Receiver want : cfg.receivers) {
        bool found = false;
        for (const auto& r : p.receivers)
          if (r.receiver == want) {
            out << "\t" << fmt(r.air.value_bits_per_symbol) << "\t"
                << fmt(r.air.standard_error);
            found = true;
          }
        if (!found) out << "\tnan\tnan";
      }
      out << "\n";
    }
  }

  if (result.axis == "power") return;
  const std::string name = result.axis == "spans" ? "gain_vs_spans.tsv"
                           : result.axis == "span_length"
                               ? "gain_vs_length.tsv"
                               : "gain_vs_rate.tsv";
  std::ofstream out(dir + "/" + name);
  out << "# fiberair plot data: max-AIR gains over DBP baselines\n";
  out << "# config_hash=" << result.hash << " seed=" << result.seed << "\n";
  out << "axis_value\treceiver\tbaseline\tgain_bits\tcombined_se\t"
         "best_power_dbm\tbaseline_best_power_dbm\n";
  for (const auto& row : max_air_gain(result))
    out << fmt_short(row.axis_value) << "\t" << receiver_name(row.receiver)
        << "\t" << receiver_name(row.baseline) << "\t" << fmt(row.gain_bits)
        << "\t" << fmt(row.combined_se) << "\t"
        << fmt_short(row.best_power_dbm) << "\t"
        << fmt_short(row.baseline_best_power_dbm) << "\n";
}

std::string aux_to_json(const GaussianAuxChannel& aux) {
  json j;
  j["variant"] =
      aux.variant == GaussVariant::IidGaussian ? "iidg" : "cg";
  std::vector<double> re, im, covs;
  for (int m = 0; m < aux.size(); ++m) {
    re.push_back(aux.means[m].real());
    im.push_back(aux.means[m].imag());
    covs.push_back(aux.covariances[m](0, 0));
    covs.push_back(aux.covariances[m](0, 1));
    covs.push_back(aux.covariances[m](1, 1));
  }
  j["mean_re"] = re;
  j["mean_im"] = im;
  j["cov_rr_ri_ii"] = covs;
  return j.dump();
}

GaussianAuxChannel aux_from_json(const std::string& text) {
  const json j = json::parse(text);
  GaussianAuxChannel aux;
  aux.variant = j.at("variant").get<std::string>() == "iidg"
                    ? GaussVariant::IidGaussian
                    : GaussVariant::CorrelatedGaussian;
  const auto re = j.at("mean_re").get<std::vector<double>>();
  const auto im = j.at("mean_im").get<std::vector<double>>();
  const auto covs = j.at("cov_rr_ri_ii").get<std::vector<double>>();
  const int m_count = static_cast<int>(re.size());
  aux.means.resize(m_count);
  aux.covariances.resize(m_count);
  for (int m = 0; m < m_count; ++m) {
    aux.means[m] = {re[m], im[m]};
    aux.covariances[m] << covs[3 * m], covs[3 * m + 1], covs[3 * m + 1],
        covs[3 * m + 2];
  }
  aux.rebuild_cache();
  return aux;
}

}  // namespace fiberair
