#include "memesn/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>
#include <tuple>

#include "memesn/errors.hpp"

namespace memesn {
namespace {

Fault fault_kind_from_string(const std::string& s) {
  const Fault f = fault_from_string(s);
  if (f != Fault::stuck_on && f != Fault::stuck_off) {
    throw ConfigError("faults.kind must be stuck_on or stuck_off, got '" + s + "'");
  }
  return f;
}

template <class F>
void parallel_for(std::size_t n, unsigned jobs, F&& body) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  for (unsigned w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

const char* to_string(FaultScope s) { return s == FaultScope::readout ? "readout" : "all"; }

FaultScope fault_scope_from_string(const std::string& s) {
  if (s == "readout") return FaultScope::readout;
  if (s == "all") return FaultScope::all;
  throw ConfigError("unknown fault scope '" + s + "' (expected readout or all)");
}

void ExperimentConfig::validate() const {
  if (dataset.kind != "mackey_glass" && dataset.kind != "narma10" && dataset.kind != "csv") {
    throw ConfigError("dataset.kind must be mackey_glass, narma10 or csv, got '" + dataset.kind + "'");
  }
  if (dataset.kind == "csv" && dataset.path.empty()) throw ConfigError("dataset.path is required for csv");
  if (dataset.kind != "csv" && dataset.length < 2) throw ConfigError("dataset.length must be >= 2");
  if (dataset.smooth_window < 1) throw ConfigError("dataset.smooth_window must be >= 1");
  esn.validate();
  if (esn.n_u != 1 || esn.n_o != 1) throw ConfigError("esn: univariate forecasting needs n_u = n_o = 1");
  trainer.validate();
  hardware.validate();
  if (!(faults.rate >= 0.0 && faults.rate <= 1.0)) throw ConfigError("faults.rate must be in [0, 1]");
  if (faults.kind != Fault::stuck_on && faults.kind != Fault::stuck_off) {
    throw ConfigError("faults.kind must be stuck_on or stuck_off");
  }
  if (faults.rate > 0.0 && esn.mode != Mode::hardware) {
    throw ConfigError("faults need esn.mode = hardware");
  }
  if (faults.mitigate && hardware.structure != Structure::two_m) {
    throw ConfigError("faults.mitigate needs hardware.structure = two_m");
  }
  if (hardware.structure == Structure::one_m_one_r && hardware.write_scheme == WriteScheme::alternating) {
    throw ConfigError("hardware.write_scheme = alternating needs hardware.structure = two_m");
  }
}

ExperimentConfig ExperimentConfig::mackey_glass_profile() {
  ExperimentConfig c;
  c.dataset.kind = "mackey_glass";
  c.esn.mode = Mode::hardware;
  c.esn.leak_delta = 0.1;
  c.trainer.alpha = 0.5;
  c.trainer.lambda = 2e-3;
  c.trainer.theta_auto = false;
  c.trainer.theta = 0.0;
  return c;
}

ExperimentConfig ExperimentConfig::narma10_profile() {
  ExperimentConfig c = mackey_glass_profile();
  c.dataset.kind = "narma10";
  c.trainer.alpha = 0.2;
  c.trainer.lambda = 1e-2;
  return c;
}

ExperimentConfig ExperimentConfig::from_keyvalue(const KeyValueFile& kv, const ExperimentConfig& base) {
  for (const auto& key : kv.keys()) {
    if (!is_experiment_key(key) && key.rfind("pso.", 0) != 0 && key.rfind("lifespan.", 0) != 0 &&
        key.rfind("sweep.", 0) != 0) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  ExperimentConfig c = base;
  auto size = [&](const std::string& key, std::size_t fallback) {
    const long long v = kv.get_int(key, static_cast<long long>(fallback));
    if (v < 0) throw ConfigError("key '" + key + "' must be >= 0");
    return static_cast<std::size_t>(v);
  };

  c.dataset.kind = kv.get_or("dataset.kind", c.dataset.kind);
  c.dataset.length = size("dataset.length", c.dataset.length);
  c.dataset.path = kv.get_or("dataset.path", c.dataset.path.string());
  c.dataset.column = kv.get_or("dataset.column", c.dataset.column);
  c.dataset.smooth_window = size("dataset.smooth_window", c.dataset.smooth_window);
  c.dataset.seed = size("dataset.seed", c.dataset.seed);

  c.esn.n_r = size("esn.n_r", c.esn.n_r);
  c.esn.sparsity = kv.get_double("esn.sparsity", c.esn.sparsity);
  c.esn.leak_delta = kv.get_double("esn.leak_delta", c.esn.leak_delta);
  c.esn.spectral_radius = kv.get_double("esn.spectral_radius", c.esn.spectral_radius);
  c.esn.input_scale = kv.get_double("esn.input_scale", c.esn.input_scale);
  c.esn.activation_gain = kv.get_double("esn.activation_gain", c.esn.activation_gain);
  c.esn.weight_limit = kv.get_double("esn.weight_limit", c.esn.weight_limit);
  c.esn.n_p = static_cast<int>(kv.get_int("esn.n_p", c.esn.n_p));
  c.esn.washout = size("esn.washout", c.esn.washout);
  c.esn.eval_fraction = kv.get_double("esn.eval_fraction", c.esn.eval_fraction);
  c.esn.mode = mode_from_string(kv.get_or("esn.mode", to_string(c.esn.mode)));
  c.esn.seed = size("esn.seed", c.esn.seed);

  c.trainer.enabled = kv.get_bool("trainer.enabled", c.trainer.enabled);
  c.trainer.alpha = kv.get_double("trainer.alpha", c.trainer.alpha);
  c.trainer.lambda = kv.get_double("trainer.lambda", c.trainer.lambda);
  if (kv.has("trainer.theta")) {
    if (kv.get("trainer.theta") == "auto") {
      c.trainer.theta_auto = true;
    } else {
      c.trainer.theta_auto = false;
      c.trainer.theta = kv.get_double("trainer.theta", c.trainer.theta);
    }
  }
  c.trainer.theta_percentile = kv.get_double("trainer.theta_percentile", c.trainer.theta_percentile);
  c.trainer.n_up = size("trainer.n_up", c.trainer.n_up);
  c.trainer.reg_sign = reg_sign_from_string(kv.get_or("trainer.reg_sign", to_string(c.trainer.reg_sign)));

  HardwareConfig& h = c.hardware;
  h.structure = structure_from_string(kv.get_or("hardware.structure", to_string(h.structure)));
  h.write_scheme = write_scheme_from_string(kv.get_or("hardware.write_scheme", to_string(h.write_scheme)));
  h.adc_bits = static_cast<int>(kv.get_int("hardware.adc_bits", h.adc_bits));
  h.gradient_full_scale = kv.get_double("hardware.gradient_full_scale", h.gradient_full_scale);
  h.v_test = kv.get_double("hardware.v_test", h.v_test);
  h.droop_rate = kv.get_double("hardware.droop_rate", h.droop_rate);
  h.hold_time = kv.get_double("hardware.hold_time", h.hold_time);
  h.dc_offset = kv.get_double("hardware.dc_offset", h.dc_offset);
  h.device_variation = kv.get_bool("hardware.device_variation", h.device_variation);
  h.cycle_noise = kv.get_bool("hardware.cycle_noise", h.cycle_noise);
  h.ideal_write = kv.get_bool("hardware.ideal_write", h.ideal_write);
  h.ideal_leakage = kv.get_bool("hardware.ideal_leakage", h.ideal_leakage);
  h.leakage_m_z = kv.get_double("hardware.leakage_m_z", h.leakage_m_z);
  h.leakage_m_y = kv.get_double("hardware.leakage_m_y", h.leakage_m_y);
  h.verify_passes = static_cast<int>(kv.get_int("hardware.verify_passes", h.verify_passes));
  h.device = read_device_params(kv, "device.", h.device);
  h.leakage_device = read_device_params(kv, "leakage_device.", h.leakage_device);

  c.faults.rate = kv.get_double("faults.rate", c.faults.rate);
  if (kv.has("faults.kind")) c.faults.kind = fault_kind_from_string(kv.get("faults.kind"));
  c.faults.scope = fault_scope_from_string(kv.get_or("faults.scope", to_string(c.faults.scope)));
  c.faults.mitigate = kv.get_bool("faults.mitigate", c.faults.mitigate);
  c.faults.seed = size("faults.seed", c.faults.seed);

  c.out_dir = kv.get_or("output.dir", c.out_dir.string());
  c.validate();
  return c;
}

KeyValueFile ExperimentConfig::to_keyvalue() const {
  KeyValueFile kv;
  auto num = [&](const std::string& key, double v) { kv.set(key, v); };
  auto count = [&](const std::string& key, std::uint64_t v) { kv.set(key, std::to_string(v)); };
  auto flag = [&](const std::string& key, bool v) { kv.set(key, v ? "true" : "false"); };

  kv.set("dataset.kind", dataset.kind);
  count("dataset.length", dataset.length);
  kv.set("dataset.path", dataset.path.string());
  kv.set("dataset.column", dataset.column);
  count("dataset.smooth_window", dataset.smooth_window);
  count("dataset.seed", dataset.seed);

  count("esn.n_r", esn.n_r);
  num("esn.sparsity", esn.sparsity);
  num("esn.leak_delta", esn.leak_delta);
  num("esn.spectral_radius", esn.spectral_radius);
  num("esn.input_scale", esn.input_scale);
  num("esn.activation_gain", esn.activation_gain);
  num("esn.weight_limit", esn.weight_limit);
  kv.set("esn.n_p", std::to_string(esn.n_p));
  count("esn.washout", esn.washout);
  num("esn.eval_fraction", esn.eval_fraction);
  kv.set("esn.mode", to_string(esn.mode));
  count("esn.seed", esn.seed);

  flag("trainer.enabled", trainer.enabled);
  num("trainer.alpha", trainer.alpha);
  num("trainer.lambda", trainer.lambda);
  if (trainer.theta_auto) {
    kv.set("trainer.theta", "auto");
  } else {
    num("trainer.theta", trainer.theta);
  }
  num("trainer.theta_percentile", trainer.theta_percentile);
  count("trainer.n_up", trainer.n_up);
  kv.set("trainer.reg_sign", to_string(trainer.reg_sign));

  kv.set("hardware.structure", to_string(hardware.structure));
  kv.set("hardware.write_scheme", to_string(hardware.write_scheme));
  kv.set("hardware.adc_bits", std::to_string(hardware.adc_bits));
  num("hardware.gradient_full_scale", hardware.gradient_full_scale);
  num("hardware.v_test", hardware.v_test);
  num("hardware.droop_rate", hardware.droop_rate);
  num("hardware.hold_time", hardware.hold_time);
  num("hardware.dc_offset", hardware.dc_offset);
  flag("hardware.device_variation", hardware.device_variation);
  flag("hardware.cycle_noise", hardware.cycle_noise);
  flag("hardware.ideal_write", hardware.ideal_write);
  flag("hardware.ideal_leakage", hardware.ideal_leakage);
  num("hardware.leakage_m_z", hardware.leakage_m_z);
  num("hardware.leakage_m_y", hardware.leakage_m_y);
  kv.set("hardware.verify_passes", std::to_string(hardware.verify_passes));
  write_device_params(kv, hardware.device, "device.");
  write_device_params(kv, hardware.leakage_device, "leakage_device.");

  num("faults.rate", faults.rate);
  kv.set("faults.kind", to_string(faults.kind));
  kv.set("faults.scope", to_string(faults.scope));
  flag("faults.mitigate", faults.mitigate);
  count("faults.seed", faults.seed);

  kv.set("output.dir", out_dir.string());
  return kv;
}

bool is_experiment_key(const std::string& key) {
  static const KeyValueFile known = ExperimentConfig{}.to_keyvalue();
  return known.has(key);
}

SeriesDataset load_dataset(const DatasetSpec& spec, std::uint64_t network_seed, int n_p) {
  SeriesDataset ds;
  if (spec.kind == "mackey_glass") {
    MackeyGlassParams p;
    p.n = spec.length;
    const auto raw = mackey_glass_raw(p);
    ds = minmax_scale(spec.smooth_window > 1 ? moving_average(raw, spec.smooth_window) : raw,
                      "mackey_glass");
  } else if (spec.kind == "narma10") {
    const NarmaSeries s = narma10(spec.length, spec.seed != 0 ? spec.seed : network_seed);
    ds = spec.smooth_window > 1 ? minmax_scale(moving_average(s.raw_outputs, spec.smooth_window), "narma10")
                                : s.outputs;
  } else if (spec.kind == "csv") {
    const auto raw = load_csv(spec.path, spec.column);
    if (raw.empty()) throw DataError("dataset '" + spec.path.string() + "' has no rows");
    if (spec.smooth_window > raw.size()) throw DataError("dataset.smooth_window exceeds the series length");
    ds = minmax_scale(spec.smooth_window > 1 ? moving_average(raw, spec.smooth_window) : raw,
                      spec.path.stem().string());
  } else {
    throw ConfigError("unknown dataset kind '" + spec.kind + "'");
  }
  ds.n_p = n_p;
  return ds;
}

std::pair<std::size_t, std::size_t> apply_faults(EchoStateNetwork& net, const FaultSpec& spec) {
  HardwareFabric* hw = net.hardware();
  if (hw == nullptr) throw ConfigError("fault injection needs a hardware network");
  std::vector<Crossbar*> layers{&hw->readout_layer()};
  if (spec.scope == FaultScope::all) {
    layers.push_back(&hw->reservoir_layer());
    layers.push_back(&hw->input_layer());
  }
  const std::uint64_t base = spec.seed != 0 ? spec.seed : net.config().seed;
  std::size_t faulted = 0, mitigated = 0;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    faulted += layers[k]->inject_faults(spec.rate, spec.kind, mix_seed(base, 0xfa0 + k));
    if (spec.mitigate) mitigated += layers[k]->mitigate_sparsify().cells_sparsified;
  }
  net.sync_weights();
  return {faulted, mitigated};
}

RunOutcome run_experiment(const ExperimentConfig& config, const SeriesDataset& series) {
  config.validate();
  EchoStateNetwork net(config.esn, config.hardware);
  RunOutcome out;
  if (config.faults.rate > 0.0) {
    std::tie(out.faulted_devices, out.mitigated_cells) = apply_faults(net, config.faults);
  }
  std::vector<std::uint64_t> events0;
  std::vector<double> counts0;
  if (const HardwareFabric* hw = net.hardware()) {
    events0 = hw->readout_layer().device_events();
    counts0 = hw->readout_layer().device_switch_counts();
  }
  OnlineTrainer trainer(config.trainer, config.esn.n_o, config.esn.n_r);
  out.forecast = forecast_run(series, net, &trainer);
  if (const HardwareFabric* hw = net.hardware()) {
    out.readout_events = hw->readout_layer().device_events();
    out.readout_switch_counts = hw->readout_layer().device_switch_counts();
    for (std::size_t i = 0; i < events0.size(); ++i) {
      out.readout_events[i] -= events0[i];
      out.readout_switch_counts[i] -= counts0[i];
    }
  }
  return out;
}

RunOutcome run_experiment(const ExperimentConfig& config) {
  return run_experiment(config, load_dataset(config.dataset, config.esn.seed, config.esn.n_p));
}

std::vector<FaultRow> fault_sweep(const ExperimentConfig& base, const std::vector<FaultCase>& cases,
                                  const std::vector<std::uint64_t>& seeds, unsigned jobs) {
  std::vector<FaultRow> rows(cases.size());
  for (std::size_t c = 0; c < cases.size(); ++c) {
    rows[c].fault_case = cases[c];
    rows[c].wmape.assign(seeds.size(), 0.0);
  }
  // One dataset per seed, shared read-only by the workers.
  std::vector<SeriesDataset> data;
  for (std::uint64_t s : seeds) data.push_back(load_dataset(base.dataset, s, base.esn.n_p));

  parallel_for(cases.size() * seeds.size(), jobs, [&](std::size_t k) {
    const std::size_t c = k / seeds.size(), s = k % seeds.size();
    ExperimentConfig cfg = base;
    cfg.esn.mode = Mode::hardware;
    cfg.esn.seed = seeds[s];
    cfg.hardware.structure = cases[c].structure;
    if (cfg.hardware.structure == Structure::one_m_one_r) cfg.hardware.write_scheme = WriteScheme::plain;
    cfg.faults.kind = cases[c].kind;
    cfg.faults.rate = cases[c].rate;
    cfg.faults.mitigate = cases[c].mitigate;
    try {
      rows[c].wmape[s] = run_experiment(cfg, data[s]).forecast.eval_wmape;
    } catch (const DivergenceError&) {
      rows[c].wmape[s] = std::numeric_limits<double>::infinity();
    }
  });
  for (auto& r : rows) r.median = median(r.wmape);
  return rows;
}

void write_fault_table_csv(std::ostream& out, const std::vector<FaultRow>& rows) {
  out << "# memesn fault sweep v1\n";
  out << "structure,mitigated,kind,rate,median_wmape";
  const std::size_t n = rows.empty() ? 0 : rows.front().wmape.size();
  for (std::size_t s = 0; s < n; ++s) out << ",wmape_" << s;
  out << '\n';
  for (const auto& r : rows) {
    out << to_string(r.fault_case.structure) << ',' << (r.fault_case.mitigate ? 1 : 0) << ','
        << to_string(r.fault_case.kind) << ',' << format_double(r.fault_case.rate) << ','
        << format_double(r.median);
    for (double w : r.wmape) out << ',' << format_double(w);
    out << '\n';
  }
}

LifespanReport measure_lifespan(const ExperimentConfig& config, const SeriesDataset& series,
                                WriteScheme scheme, double sample_period) {
  if (!(sample_period > 0.0)) throw ConfigError("lifespan: sample period must be > 0");
  ExperimentConfig cfg = config;
  cfg.esn.mode = Mode::hardware;
  cfg.hardware.structure = Structure::two_m;
  cfg.hardware.write_scheme = scheme;
  const RunOutcome run = run_experiment(cfg, series);

  LifespanReport r;
  r.scheme = scheme;
  r.updates = run.forecast.updates.size();
  r.sample_period = sample_period;
  std::size_t programmed = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < run.readout_switch_counts.size(); ++i) {
    r.max_switch_count = std::max(r.max_switch_count, run.readout_switch_counts[i]);
    if (run.readout_events[i] > 0) {
      sum += run.readout_switch_counts[i];
      ++programmed;
    }
  }
  r.mean_switch_count = programmed ? sum / static_cast<double>(programmed) : 0.0;
  const double steps = static_cast<double>(series.size() - static_cast<std::size_t>(cfg.esn.n_p));
  r.update_frequency = effective_update_frequency(run.readout_events, steps * sample_period);
  const double e_d = cfg.hardware.device.endurance;
  r.lifespan = lifespan(e_d, cfg.hardware.device.endurance_sigma * e_d, r.update_frequency);
  return r;
}

void write_lifespan_csv(std::ostream& out, const std::vector<LifespanReport>& reports) {
  out << "# memesn lifespan v1\n";
  out << "scheme,updates,max_switch_count,mean_switch_count,update_frequency_hz,sample_period_s,"
         "lifespan_low_years,lifespan_nominal_years,lifespan_high_years\n";
  for (const auto& r : reports) {
    out << to_string(r.scheme) << ',' << r.updates << ',' << format_double(r.max_switch_count) << ','
        << format_double(r.mean_switch_count) << ',' << format_double(r.update_frequency) << ','
        << format_double(r.sample_period) << ',' << format_double(r.lifespan.low) << ','
        << format_double(r.lifespan.nominal) << ',' << format_double(r.lifespan.high) << '\n';
  }
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace memesn
