#include "memesn/device.hpp"

#include <algorithm>
#include <cmath>

namespace memesn {
namespace {

double clamp_state(double w, double d) { return std::clamp(w, 0.0, d); }

double noise_factor(Rng* noise, double sigma) {
  if (noise == nullptr || sigma <= 0.0) return 1.0;
  return 1.0 + sigma * noise->truncated_normal(3.0);
}

// Geometric bisection for the boundary of a monotone predicate on k > 0.
// `too_fast(k)` must be false at lo and true at hi.
template <typename Pred>
double bisect_log(double lo, double hi, Pred too_fast) {
  for (int i = 0; i < 200 && hi / lo > 1.0 + 1e-14; ++i) {
    const double mid = std::sqrt(lo * hi);
    if (too_fast(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return std::sqrt(lo * hi);
}

// Magnitude of k needed for `pulses` pulses, for one polarity.
double calibrate_one(DeviceParams params, Polarity polarity) {
  const int target = params.pulses_full_switch;
  auto count_with = [&](double k) {
    DeviceParams p = params;
    if (polarity == Polarity::set) {
      p.k_off = k;
    } else {
      p.k_on = -k;
    }
    return pulses_to_full_switch(p, polarity, 10 * target + 100);
  };
  auto reaches_within = [&](int n) {
    return [&, n](double k) {
      const int c = count_with(k);
      return c >= 0 && c <= n;
    };
  };
  double lo = 1e-3, hi = 1e3;
  while (reaches_within(target)(lo)) lo /= 10.0;
  while (!reaches_within(target)(hi)) hi *= 10.0;
  // Smallest k reaching in `target` pulses, smallest k reaching in target-1.
  const double k_target = bisect_log(lo, hi, reaches_within(target));
  const double k_faster = bisect_log(k_target, hi * 10.0, reaches_within(target - 1));
  return std::sqrt(k_target * k_faster);
}

}  // namespace

DeviceParams DeviceParams::reservoir() {
  static const DeviceParams calibrated = [] {
    DeviceParams p;
    p.g_on = 1.0 / 200e3;
    p.g_off = 1.0 / 2e6;
    p.pulses_full_switch = 41;
    return calibrate_rates(p);
  }();
  return calibrated;
}

DeviceParams DeviceParams::leakage_cell() {
  static const DeviceParams calibrated = [] {
    DeviceParams p;
    p.g_on = 1.0 / 100e3;
    p.g_off = 1.0 / 10e6;
    p.pulses_full_switch = 67;
    return calibrate_rates(p);
  }();
  return calibrated;
}

void DeviceParams::validate() const {
  if (!(g_on > g_off && g_off > 0.0)) throw ConfigError("device: require g_on > g_off > 0");
  if (!(v_on < 0.0 && v_off > 0.0)) throw ConfigError("device: require v_on < 0 < v_off");
  if (!(d > 0.0)) throw ConfigError("device: require d > 0");
  if (!(endurance > 0.0)) throw ConfigError("device: require endurance > 0");
  if (!(k_off > 0.0 && k_on < 0.0)) throw ConfigError("device: require k_off > 0 > k_on");
  if (!(pulse_width > 0.0 && substep > 0.0)) throw ConfigError("device: pulse timing must be > 0");
  if (variability_sigma < 0.0 || endurance_sigma < 0.0) {
    throw ConfigError("device: variability must be >= 0");
  }
  if (pulses_full_switch < 2) throw ConfigError("device: pulses_full_switch must be >= 2");
}

const char* to_string(Fault f) {
  switch (f) {
    case Fault::healthy: return "healthy";
    case Fault::stuck_on: return "stuck_on";
    case Fault::stuck_off: return "stuck_off";
    case Fault::stuck_at: return "stuck_at";
  }
  return "?";
}

Fault fault_from_string(const std::string& s) {
  if (s == "healthy") return Fault::healthy;
  if (s == "stuck_on") return Fault::stuck_on;
  if (s == "stuck_off") return Fault::stuck_off;
  if (s == "stuck_at") return Fault::stuck_at;
  throw ConfigError("unknown fault kind '" + s + "'");
}

double conductance(const MemristorState& state, const DeviceParams& params) {
  switch (state.fault) {
    case Fault::stuck_on: return params.g_on;
    case Fault::stuck_off: return params.g_off;
    case Fault::stuck_at: return state.frozen_g;
    case Fault::healthy: break;
  }
  const double x = state.w / params.d;
  return x * params.g_on + (1.0 - x) * params.g_off;
}

double state_for_conductance(double g, const DeviceParams& params) {
  const double x = (g - params.g_off) / (params.g_on - params.g_off);
  return clamp_state(x * params.d, params.d);
}

double z_window(double w, const DeviceParams& params) {
  const WindowParams& win = params.window;
  const double s = w / params.d - win.delta;
  return win.k * std::pow(1.0 - 2.0 * s, win.p) / std::exp(win.tau * std::pow(s, win.p));
}

double state_velocity(double w, double v, const DeviceParams& params) {
  if (v > params.v_off) {
    return params.k_off * std::pow(v / params.v_off - 1.0, params.alpha_off) * z_window(w, params);
  }
  if (v < params.v_on) {
    return params.k_on * std::pow(v / params.v_on - 1.0, params.alpha_on) * z_window(w, params);
  }
  return 0.0;
}

MemristorState state_step(MemristorState state, double v, double dt, const DeviceParams& params,
                          Rng* noise) {
  if (!state.healthy()) return state;
  const double rate = state_velocity(state.w, v, params);
  if (rate == 0.0) return state;
  const double dw = rate * dt * noise_factor(noise, params.variability_sigma);
  state.w = clamp_state(state.w + dw, params.d);
  return state;
}

MemristorState apply_pulse(MemristorState state, Polarity polarity, double duration,
                           const DeviceParams& params, Rng* noise) {
  if (!state.healthy() || duration <= 0.0) return state;
  const double v = polarity == Polarity::set ? params.v_train : -params.v_train;
  double travelled = 0.0;

  const double steps = duration / params.substep;
  auto full = static_cast<long long>(std::floor(steps + 1e-9));
  const double remainder = std::max(0.0, duration - static_cast<double>(full) * params.substep);
  const long long per_slice =
      std::max<long long>(1, std::llround(params.pulse_width / params.substep));

  double factor = 1.0;
  for (long long k = 0; k < full; ++k) {
    if (k % per_slice == 0) factor = noise_factor(noise, params.variability_sigma);
    const double before = state.w;
    const double dw = state_velocity(state.w, v, params) * params.substep * factor;
    state.w = clamp_state(state.w + dw, params.d);
    travelled += std::abs(state.w - before);
  }
  if (remainder > 1e-6 * params.substep) {
    if (full % per_slice == 0) factor = noise_factor(noise, params.variability_sigma);
    const double before = state.w;
    const double dw = state_velocity(state.w, v, params) * remainder * factor;
    state.w = clamp_state(state.w + dw, params.d);
    travelled += std::abs(state.w - before);
  }

  state.switch_count += travelled / params.d;
  if (state.switch_count > state.endurance_limit) {
    state.frozen_g = conductance(state, params);
    state.fault = Fault::stuck_at;
  }
  return state;
}

SampledDevice sample_device(const DeviceParams& nominal, std::uint64_t seed) {
  SampledDevice out{MemristorState{}, nominal};
  out.state.endurance_limit = nominal.endurance;
  Rng rng(seed);
  const double s = nominal.variability_sigma;
  if (s > 0.0) {
    // Draw order is part of the determinism contract.
    out.params.v_on = nominal.v_on * (1.0 + s * rng.truncated_normal());
    out.params.v_off = nominal.v_off * (1.0 + s * rng.truncated_normal());
    out.params.g_on = nominal.g_on * (1.0 + s * rng.truncated_normal());
    out.params.g_off = nominal.g_off * (1.0 + s * rng.truncated_normal());
  }
  if (nominal.endurance_sigma > 0.0) {
    out.state.endurance_limit =
        nominal.endurance * (1.0 + nominal.endurance_sigma * rng.truncated_normal());
  }
  return out;
}

int pulses_to_full_switch(const DeviceParams& params, Polarity polarity, int cap) {
  MemristorState s;
  s.endurance_limit = HUGE_VAL;
  s.w = polarity == Polarity::set ? 0.0 : params.d;
  const double goal = polarity == Polarity::set ? params.d : 0.0;
  for (int n = 1; n <= cap; ++n) {
    s = apply_pulse(s, polarity, params.pulse_width, params);
    if (s.w == goal) return n;
  }
  return -1;
}

DeviceParams calibrate_rates(DeviceParams params) {
  params.k_off = calibrate_one(params, Polarity::set);
  params.k_on = -calibrate_one(params, Polarity::reset);
  return params;
}

void write_device_params(KeyValueFile& kv, const DeviceParams& p, const std::string& prefix) {
  kv.set(prefix + "range_low_ohm", 1.0 / p.g_on);
  kv.set(prefix + "range_high_ohm", 1.0 / p.g_off);
  kv.set(prefix + "v_threshold", p.v_off);
  kv.set(prefix + "v_threshold_reset", p.v_on);
  kv.set(prefix + "pulses_full_switch", p.pulses_full_switch);
  kv.set(prefix + "v_train", p.v_train);
  kv.set(prefix + "endurance", p.endurance);
  kv.set(prefix + "switch_time_ns", p.pulse_width * 1e9);
  kv.set(prefix + "substep_ns", p.substep * 1e9);
  kv.set(prefix + "k_on", p.k_on);
  kv.set(prefix + "k_off", p.k_off);
  kv.set(prefix + "alpha_on", p.alpha_on);
  kv.set(prefix + "alpha_off", p.alpha_off);
  kv.set(prefix + "window_k", p.window.k);
  kv.set(prefix + "window_p", p.window.p);
  kv.set(prefix + "window_tau", p.window.tau);
  kv.set(prefix + "window_delta", p.window.delta);
  kv.set(prefix + "variability_sigma", p.variability_sigma);
  kv.set(prefix + "endurance_sigma", p.endurance_sigma);
}

DeviceParams read_device_params(const KeyValueFile& kv, const std::string& prefix,
                                const DeviceParams& base) {
  DeviceParams p = base;
  auto get = [&](const char* key, double fallback) { return kv.get_double(prefix + key, fallback); };
  p.g_on = 1.0 / get("range_low_ohm", 1.0 / base.g_on);
  p.g_off = 1.0 / get("range_high_ohm", 1.0 / base.g_off);
  p.v_off = get("v_threshold", base.v_off);
  p.v_on = get("v_threshold_reset", kv.has(prefix + "v_threshold") ? -p.v_off : base.v_on);
  p.pulses_full_switch =
      static_cast<int>(kv.get_int(prefix + "pulses_full_switch", base.pulses_full_switch));
  p.v_train = get("v_train", base.v_train);
  p.endurance = get("endurance", base.endurance);
  p.pulse_width = get("switch_time_ns", base.pulse_width * 1e9) * 1e-9;
  p.substep = get("substep_ns", base.substep * 1e9) * 1e-9;
  p.alpha_on = get("alpha_on", base.alpha_on);
  p.alpha_off = get("alpha_off", base.alpha_off);
  p.window.k = get("window_k", base.window.k);
  p.window.p = get("window_p", base.window.p);
  p.window.tau = get("window_tau", base.window.tau);
  p.window.delta = get("window_delta", base.window.delta);
  p.variability_sigma = get("variability_sigma", base.variability_sigma);
  p.endurance_sigma = get("endurance_sigma", base.endurance_sigma);

  const bool explicit_rates = kv.has(prefix + "k_on") && kv.has(prefix + "k_off");
  if (explicit_rates) {
    p.k_on = get("k_on", base.k_on);
    p.k_off = get("k_off", base.k_off);
  } else {
    const bool changed = p.pulses_full_switch != base.pulses_full_switch ||
                         p.v_train != base.v_train || p.v_off != base.v_off ||
                         p.v_on != base.v_on || p.pulse_width != base.pulse_width ||
                         p.substep != base.substep || p.alpha_on != base.alpha_on ||
                         p.alpha_off != base.alpha_off || p.window.k != base.window.k ||
                         p.window.p != base.window.p || p.window.tau != base.window.tau ||
                         p.window.delta != base.window.delta;
    if (changed) p = calibrate_rates(p);
  }
  p.validate();
  return p;
}

}  // namespace memesn
