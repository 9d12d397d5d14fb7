#pragma once

#include <stdexcept>
#include <utility>

namespace memesn {

/// Uniform mid-rise quantizer over [-full_scale, +full_scale] with 2^bits
/// levels at (k + 1/2) LSB. Saturates at the outermost levels. bits == 0
/// means an ideal pass-through converter.
double quantize_adc(double v, int bits, double full_scale);

/// Three-memristor divider that blends the new activation and the previous
/// output without an op-amp. Resistances in ohms.
struct LeakageCell {
  double m_x = 100e3;
  double m_y = 100e3;
  double m_z = 10e6;
};

struct LeakageCoefficients {
  double delta;            // weight on the new activation
  double one_minus_delta;  // weight on the previous output
};

LeakageCoefficients leakage_coefficients(const LeakageCell& cell);

/// Bound on |delta + (1 - delta) - 1| implied by the m_z ratio.
double leakage_sum_tolerance(const LeakageCell& cell);

struct LeakageRange {
  double r_min = 100e3;
  double r_max = 10e6;
};

/// Achievable delta interval when m_y is held at `m_y` and m_x sweeps the range.
std::pair<double, double> leakage_feasible_interval(double m_z, double m_y = 200e3,
                                                    LeakageRange range = {});

/// Solves m_x by bisection (m_y fixed) so leakage_coefficients(cell).delta
/// matches `target_delta`. Throws std::domain_error naming the feasible
/// interval when the target is out of reach.
LeakageCell solve_leakage_cell(double target_delta, double m_z, double m_y = 200e3,
                               LeakageRange range = {});

/// Smallest m_y in range for which `target_delta` is feasible. Small m_x, m_y
/// keep delta + (1 - delta) closest to one.
double auto_leakage_m_y(double target_delta, double m_z, LeakageRange range = {});

/// Sample-and-hold with a DC level shift (so stored charge is non-negative)
/// and linear droop while holding.
struct SampleHold {
  double stored = 0.0;
  double dc_offset = 1.0;
  double droop_rate = 0.0;  // V/s

  void write(double value) { stored = value + dc_offset; }
  double read(double elapsed) const { return stored - droop_rate * elapsed - dc_offset; }
};

}  // namespace memesn
