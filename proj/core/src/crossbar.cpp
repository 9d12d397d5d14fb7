#include "memesn/crossbar.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "memesn/analog.hpp"

namespace memesn {

const char* to_string(Structure s) { return s == Structure::two_m ? "2m" : "1m1r"; }

Structure structure_from_string(const std::string& s) {
  if (s == "2m" || s == "two_m") return Structure::two_m;
  if (s == "1m1r" || s == "one_m_one_r") return Structure::one_m_one_r;
  throw ConfigError("unknown crossbar structure '" + s + "' (expected 2m or 1m1r)");
}

const char* to_string(WriteScheme s) { return s == WriteScheme::plain ? "plain" : "alternating"; }

WriteScheme write_scheme_from_string(const std::string& s) {
  if (s == "plain") return WriteScheme::plain;
  if (s == "alternating") return WriteScheme::alternating;
  throw ConfigError("unknown write scheme '" + s + "' (expected plain or alternating)");
}

void CrossbarConfig::validate() const {
  if (rows == 0 || cols == 0) throw ConfigError("crossbar: rows and cols must be >= 1");
  if (adc_bits < 0) throw ConfigError("crossbar: adc_bits must be >= 0");
  if (!(r_f >= 0.0)) throw ConfigError("crossbar: r_f must be > 0");
  if (!(v_test > 0.0)) throw ConfigError("crossbar: v_test must be > 0");
  if (!(time_resolution >= 0.0)) throw ConfigError("crossbar: time_resolution must be >= 0");
}

double normalize_rf(Structure structure, const DeviceParams& p) {
  const double span = p.g_on - p.g_off;
  return structure == Structure::two_m ? 1.0 / span : 2.0 / span;
}

double reference_resistance(const DeviceParams& p) { return 2.0 / (p.g_on + p.g_off); }

Crossbar::Crossbar(CrossbarConfig config, const DeviceParams& nominal, std::uint64_t seed)
    : config_(config), nominal_(nominal), noise_(mix_seed(seed, 0xC2C)) {
  nominal_.validate();
  if (config_.r_f == 0.0) config_.r_f = normalize_rf(config_.structure, nominal_);
  if (config_.r_ref == 0.0) config_.r_ref = reference_resistance(nominal_);
  if (config_.adc_full_scale == 0.0) {
    const double spread = config_.device_variation ? 1.0 + 3.0 * nominal_.variability_sigma : 1.0;
    config_.adc_full_scale = config_.v_test * config_.r_f * nominal_.g_on * spread;
  }
  config_.validate();

  const std::size_t n = config_.rows * config_.cols;
  cells_.resize(n);
  std::uint64_t stream = 1;
  for (auto& c : cells_) {
    for (DeviceSite* dev : {&c.plus, &c.minus}) {
      if (config_.device_variation) {
        const SampledDevice s = sample_device(nominal_, mix_seed(seed, stream));
        dev->state = s.state;
        dev->params = s.params;
      } else {
        dev->params = nominal_;
        dev->params.variability_sigma = 0.0;
        dev->state.endurance_limit = nominal_.endurance;
      }
      if (!config_.cycle_noise) dev->params.variability_sigma = 0.0;
      dev->state.w = 0.5 * dev->params.d;
      ++stream;
    }
  }
  weights_.resize(config_.rows, config_.cols);
  for (std::size_t i = 0; i < config_.rows; ++i) {
    for (std::size_t j = 0; j < config_.cols; ++j) refresh(i, j);
  }
}

double Crossbar::compute_weight(const Cell& c) const {
  const double gp = conductance(c.plus.state, c.plus.params);
  if (config_.structure == Structure::one_m_one_r) return config_.r_f * (gp - 1.0 / config_.r_ref);
  const double gm = conductance(c.minus.state, c.minus.params);
  return config_.r_f * (gp - gm);
}

void Crossbar::refresh(std::size_t i, std::size_t j) {
  weights_(i, j) = compute_weight(cells_[index(i, j)]);
}

void Crossbar::set_cell(std::size_t i, std::size_t j, const Cell& cell) {
  cells_.at(index(i, j)) = cell;
  refresh(i, j);
}

Eigen::VectorXd Crossbar::mac(const Eigen::VectorXd& inputs) const {
  if (static_cast<std::size_t>(inputs.size()) != config_.rows) {
    throw std::invalid_argument("crossbar mac: expected " + std::to_string(config_.rows) +
                                " inputs, got " + std::to_string(inputs.size()));
  }
  return weights_.transpose() * inputs;
}

double Crossbar::move_device(DeviceSite& dev, double dx, ProgramResult& result) {
  if (!dev.state.healthy() || dx == 0.0) return dx;
  const double d = dev.params.d;
  const double headroom = dx > 0.0 ? (d - dev.state.w) / d : dev.state.w / d;
  if (headroom <= 0.0) return dx;
  const double take = std::copysign(std::min(std::abs(dx), headroom), dx);

  // Nominal conversion of the required state change into pulse time.
  double duration = std::abs(take) * nominal_.pulses_full_switch * nominal_.pulse_width;
  if (config_.ideal_write) {
    dev.state.w = std::clamp(dev.state.w + take * d, 0.0, d);
    dev.state.switch_count += std::abs(take);
    if (dev.state.switch_count > dev.state.endurance_limit) {
      dev.state.frozen_g = conductance(dev.state, dev.params);
      dev.state.fault = Fault::stuck_at;
    }
  } else {
    if (config_.time_resolution > 0.0) {
      duration = std::round(duration / config_.time_resolution) * config_.time_resolution;
    }
    if (duration <= 0.0) return dx - take;
    const Polarity pol = take > 0.0 ? Polarity::set : Polarity::reset;
    dev.state = apply_pulse(dev.state, pol, duration, dev.params,
                            dev.params.variability_sigma > 0.0 ? &noise_ : nullptr);
  }
  ++dev.events;
  ++result.devices_programmed;
  result.duration += duration;
  return dx - take;
}

ProgramResult Crossbar::adjust_weight(std::size_t i, std::size_t j, double delta) {
  Cell& c = cells_.at(index(i, j));
  bool minus_first = false;
  if (config_.write_scheme == WriteScheme::alternating && delta != 0.0 && !c.pruned) {
    minus_first = c.next_minus;
    c.next_minus = !c.next_minus;
  }
  return adjust_cell(i, j, delta, minus_first);
}

ProgramResult Crossbar::adjust_cell(std::size_t i, std::size_t j, double delta, bool minus_first) {
  ProgramResult result;
  Cell& c = cells_.at(index(i, j));
  if (delta == 0.0) return result;
  if (c.pruned) {
    result.skipped = true;
    return result;
  }
  // Required state change, in units of d, at nominal conductance span.
  const double dx = delta / (config_.r_f * (nominal_.g_on - nominal_.g_off));

  if (config_.structure == Structure::one_m_one_r) {
    if (!c.plus.state.healthy()) {
      result.skipped = true;
      return result;
    }
    move_device(c.plus, dx, result);
  } else {
    if (!c.plus.state.healthy() && !c.minus.state.healthy()) {
      result.skipped = true;
      return result;
    }
    // The minus device moves opposite to the weight change.
    if (minus_first) {
      const double rest = -move_device(c.minus, -dx, result);
      move_device(c.plus, rest, result);
    } else {
      const double rest = move_device(c.plus, dx, result);
      move_device(c.minus, -rest, result);
    }
  }
  refresh(i, j);
  return result;
}

ProgramResult Crossbar::program_weight(std::size_t i, std::size_t j, double target,
                                       int verify_passes) {
  target = std::clamp(target, -1.0, 1.0);
  ProgramResult total;
  for (int pass = 0; pass < std::max(1, verify_passes); ++pass) {
    const double delta = target - weight(i, j);
    if (std::abs(delta) < 1e-12) break;
    const ProgramResult r = adjust_cell(i, j, delta, pass % 2 == 1);
    total.duration += r.duration;
    total.devices_programmed += r.devices_programmed;
    total.skipped = total.skipped || r.skipped;
    if (r.skipped || r.devices_programmed == 0) break;
  }
  return total;
}

double Crossbar::read_resistance(std::size_t i, std::size_t j, Slot slot) const {
  if (slot == Slot::minus && config_.structure == Structure::one_m_one_r) {
    throw std::invalid_argument("1M1R cells have no minus device");
  }
  const Cell& c = cells_.at(index(i, j));
  const DeviceSite& dev = slot == Slot::plus ? c.plus : c.minus;
  const double g = conductance(dev.state, dev.params);
  const double v_out = config_.v_test * config_.r_f * g;
  const double v_q = quantize_adc(v_out, config_.adc_bits, config_.adc_full_scale);
  if (v_q <= 0.0) {
    throw UnreadableDevice("device (" + std::to_string(i) + "," + std::to_string(j) +
                           ") reads 0 V at the ADC; increase v_test or reduce full scale");
  }
  return config_.r_f * config_.v_test / v_q;
}

double Crossbar::read_weight(std::size_t i, std::size_t j) const {
  const double gp = 1.0 / read_resistance(i, j, Slot::plus);
  if (config_.structure == Structure::one_m_one_r) return config_.r_f * (gp - 1.0 / config_.r_ref);
  const double gm = 1.0 / read_resistance(i, j, Slot::minus);
  return config_.r_f * (gp - gm);
}

std::size_t Crossbar::inject_faults(double rate, Fault kind, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw std::invalid_argument("fault rate must be in [0, 1]");
  if (kind != Fault::stuck_on && kind != Fault::stuck_off) {
    throw std::invalid_argument("fault injection supports stuck_on and stuck_off");
  }
  const std::size_t per_cell = config_.structure == Structure::two_m ? 2 : 1;
  const std::size_t total = cells_.size() * per_cell;
  const auto count = static_cast<std::size_t>(std::llround(rate * static_cast<double>(total)));
  std::vector<std::size_t> ids(total);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  Rng rng(seed);
  // Partial Fisher-Yates: the first `count` entries are a uniform sample.
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t pick = k + static_cast<std::size_t>(rng.index(total - k));
    std::swap(ids[k], ids[pick]);
    const std::size_t cell_id = ids[k] / per_cell;
    Cell& c = cells_[cell_id];
    DeviceSite& dev = ids[k] % per_cell == 0 ? c.plus : c.minus;
    dev.state.fault = kind;
    refresh(cell_id / config_.cols, cell_id % config_.cols);
  }
  return count;
}

MitigationReport Crossbar::mitigate_sparsify() {
  MitigationReport report;
  if (config_.structure != Structure::two_m) {
    report.applicable = false;
    return report;
  }
  for (std::size_t id = 0; id < cells_.size(); ++id) {
    Cell& c = cells_[id];
    const bool pf = !c.plus.state.healthy();
    const bool mf = !c.minus.state.healthy();
    if (pf && mf) {
      ++report.double_faulted;
      continue;
    }
    if (!pf && !mf) continue;
    if (c.pruned) continue;
    DeviceSite& bad = pf ? c.plus : c.minus;
    DeviceSite& good = pf ? c.minus : c.plus;
    const double g_target = conductance(bad.state, bad.params);
    const double w_new = state_for_conductance(g_target, good.params);
    good.state.switch_count += std::abs(w_new - good.state.w) / good.params.d;
    good.state.w = w_new;
    ++good.events;
    c.pruned = true;
    ++report.cells_sparsified;
    refresh(id / config_.cols, id % config_.cols);
  }
  return report;
}

CrossbarStats Crossbar::stats() const {
  CrossbarStats s;
  double sum = 0.0;
  for (const auto& c : cells_) {
    for (const DeviceSite* dev : {&c.plus, &c.minus}) {
      if (dev == &c.minus && config_.structure == Structure::one_m_one_r) continue;
      ++s.devices;
      if (!dev->state.healthy()) ++s.faulted_devices;
      s.total_events += dev->events;
      if (dev->events > 0) {
        ++s.programmed_devices;
        sum += dev->state.switch_count;
      }
      s.max_switch_count = std::max(s.max_switch_count, dev->state.switch_count);
    }
  }
  if (s.programmed_devices > 0) s.mean_switch_count = sum / static_cast<double>(s.programmed_devices);
  return s;
}

std::vector<std::uint64_t> Crossbar::device_events() const {
  std::vector<std::uint64_t> out;
  for (const auto& c : cells_) {
    out.push_back(c.plus.events);
    if (config_.structure == Structure::two_m) out.push_back(c.minus.events);
  }
  return out;
}

std::vector<double> Crossbar::device_switch_counts() const {
  std::vector<double> out;
  for (const auto& c : cells_) {
    out.push_back(c.plus.state.switch_count);
    if (config_.structure == Structure::two_m) out.push_back(c.minus.state.switch_count);
  }
  return out;
}

void Crossbar::write_fault_map(std::ostream& out) const {
  out << "# memesn-faultmap v1\n# row col device kind frozen_g\n";
  for (std::size_t id = 0; id < cells_.size(); ++id) {
    const Cell& c = cells_[id];
    for (const DeviceSite* dev : {&c.plus, &c.minus}) {
      if (dev->state.healthy()) continue;
      if (dev == &c.minus && config_.structure == Structure::one_m_one_r) continue;
      out << id / config_.cols << ' ' << id % config_.cols << ' '
          << (dev == &c.plus ? "plus" : "minus") << ' ' << to_string(dev->state.fault) << ' '
          << format_double(dev->state.frozen_g) << '\n';
    }
  }
}

void Crossbar::read_fault_map(std::istream& in) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::size_t row = 0, col = 0;
    std::string device, kind;
    double frozen = 0.0;
    if (!(ss >> row >> col >> device >> kind)) {
      throw ConfigError("fault map line " + std::to_string(lineno) + ": malformed record");
    }
    ss >> frozen;
    if (row >= config_.rows || col >= config_.cols) {
      throw ConfigError("fault map line " + std::to_string(lineno) + ": cell out of range");
    }
    Cell& c = cells_[index(row, col)];
    if (device != "plus" && device != "minus") {
      throw ConfigError("fault map line " + std::to_string(lineno) + ": bad device '" + device + "'");
    }
    DeviceSite& dev = device == "plus" ? c.plus : c.minus;
    dev.state.fault = fault_from_string(kind);
    dev.state.frozen_g = frozen;
    refresh(row, col);
  }
}

}  // namespace memesn
