#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "memesn/keyvalue.hpp"
#include "memesn/rng.hpp"

namespace memesn {

/// Shape of the state-velocity window f_z(w).
///
/// f_z = k * [1 - 2(w/d - delta)]^p / exp(tau * (w/d - delta)^p)
///
/// The defaults place the numerator zero at w/d = 2, outside the operating
/// range, and pick tau so f_z(0) == f_z(1); f_z(0.5) == 1.
struct WindowParams {
  double k = 1.0 / 4.5;
  double p = 2.0;
  double tau = 0.69314718055994531;  // ln 2
  double delta = 1.5;
};

/// Nominal (or sampled) parameters of one voltage-threshold memristor.
struct DeviceParams {
  double g_on = 1.0 / 200e3;   // S, maximum conductance
  double g_off = 1.0 / 2e6;    // S, minimum conductance
  double v_on = -1.0;          // V, negative (reset) threshold
  double v_off = 1.0;          // V, positive (set) threshold
  double k_on = -1.0;          // 1/s, negative: drives w toward 0
  double k_off = 1.0;          // 1/s
  double alpha_on = 1.0 / 6.0;
  double alpha_off = 1.0 / 6.0;
  double d = 1.0;              // normalized state thickness
  WindowParams window;
  double endurance = 1e9;           // full switching cycles
  double endurance_sigma = 0.1;     // fraction of endurance
  double variability_sigma = 0.1;   // d2d and c2c spread, fraction of mean
  double v_train = 1.2;             // V, programming amplitude
  double pulse_width = 10e-9;       // s
  double substep = 1e-9;            // s, Euler step inside a pulse
  int pulses_full_switch = 41;      // calibration target

  /// Reservoir/readout device: 200 kOhm - 2 MOhm, 41 pulses full range.
  static DeviceParams reservoir();
  /// Leakage-cell device: 100 kOhm - 10 MOhm, 67 pulses full range.
  static DeviceParams leakage_cell();

  /// Throws ConfigError when an invariant is violated.
  void validate() const;
};

enum class Fault { healthy, stuck_on, stuck_off, stuck_at };

const char* to_string(Fault f);
Fault fault_from_string(const std::string& s);

struct MemristorState {
  double w = 0.0;
  double switch_count = 0.0;
  double endurance_limit = 1e9;
  Fault fault = Fault::healthy;
  double frozen_g = 0.0;  // used when fault == stuck_at

  bool healthy() const { return fault == Fault::healthy; }
};

enum class Polarity { set, reset };

double conductance(const MemristorState& state, const DeviceParams& params);

/// Inverse of the healthy conductance map, clamped to [0, d].
double state_for_conductance(double g, const DeviceParams& params);

double z_window(double w, const DeviceParams& params);

/// Instantaneous dw/dt at voltage v (zero inside the threshold dead zone).
double state_velocity(double w, double v, const DeviceParams& params);

/// One explicit Euler step of the state equation. When `noise` is given the
/// step is scaled by a truncated Gaussian factor (1 + sigma z).
MemristorState state_step(MemristorState state, double v, double dt, const DeviceParams& params,
                          Rng* noise = nullptr);

/// Fixed-amplitude programming pulse of the given duration, integrated in
/// `params.substep` sub-steps. One noise factor is drawn per `pulse_width`
/// slice. Switch count grows by |dw|/d; crossing the endurance limit freezes
/// the device (stuck_at).
MemristorState apply_pulse(MemristorState state, Polarity polarity, double duration,
                           const DeviceParams& params, Rng* noise = nullptr);

struct SampledDevice {
  MemristorState state;
  DeviceParams params;
};

/// Device-to-device variation: thresholds and conductance range drawn from
/// N(mean, sigma*mean) truncated at 3 sigma, endurance from
/// N(E_d, endurance_sigma*E_d). Deterministic in `seed`.
SampledDevice sample_device(const DeviceParams& nominal, std::uint64_t seed);

/// Number of `pulse_width` pulses needed to traverse the full state range
/// (0 -> d for set, d -> 0 for reset). Returns -1 if not reached in `cap`.
int pulses_to_full_switch(const DeviceParams& params, Polarity polarity, int cap = 100000);

/// Bracketing search for k_off / k_on so a full switch takes exactly
/// `params.pulses_full_switch` pulses in each direction.
DeviceParams calibrate_rates(DeviceParams params);

/// Key-value form; keys follow the device datasheet naming (range_low_ohm,
/// range_high_ohm, v_threshold, pulses_full_switch, v_train, endurance,
/// switch_time_ns) plus model coefficients.
void write_device_params(KeyValueFile& kv, const DeviceParams& params,
                         const std::string& prefix = {});

/// Missing keys keep the values of `base`. If pulses_full_switch or the
/// range changes and no explicit k_on/k_off is given, rates are recalibrated.
DeviceParams read_device_params(const KeyValueFile& kv, const std::string& prefix = {},
                                const DeviceParams& base = DeviceParams::reservoir());

}  // namespace memesn
