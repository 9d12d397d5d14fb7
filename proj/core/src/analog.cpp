#include "memesn/analog.hpp"

#include <cmath>
#include <sstream>

namespace memesn {
namespace {

double parallel(double a, double b) { return a * b / (a + b); }

double delta_for(double m_x, double m_y, double m_z) {
  return leakage_coefficients({m_x, m_y, m_z}).delta;
}

}  // namespace

double quantize_adc(double v, int bits, double full_scale) {
  if (bits <= 0) return v;
  const double levels = std::ldexp(1.0, bits);
  const double lsb = 2.0 * full_scale / levels;
  const double half_codes = levels / 2.0;
  double code = std::floor(v / lsb);
  if (code < -half_codes) code = -half_codes;
  if (code > half_codes - 1.0) code = half_codes - 1.0;
  return (code + 0.5) * lsb;
}

LeakageCoefficients leakage_coefficients(const LeakageCell& c) {
  const double zy = parallel(c.m_z, c.m_y);
  const double zx = parallel(c.m_z, c.m_x);
  return {zy / (zy + c.m_x), zx / (zx + c.m_y)};
}

double leakage_sum_tolerance(const LeakageCell& c) {
  return 2.0 * std::max(c.m_x, c.m_y) / c.m_z;
}

std::pair<double, double> leakage_feasible_interval(double m_z, double m_y, LeakageRange range) {
  return {delta_for(range.r_max, m_y, m_z), delta_for(range.r_min, m_y, m_z)};
}

LeakageCell solve_leakage_cell(double target_delta, double m_z, double m_y, LeakageRange range) {
  const auto [lo_delta, hi_delta] = leakage_feasible_interval(m_z, m_y, range);
  if (!(target_delta >= lo_delta && target_delta <= hi_delta)) {
    std::ostringstream msg;
    msg << "leakage rate " << target_delta << " not achievable; feasible interval is ["
        << lo_delta << ", " << hi_delta << "] for m_z=" << m_z << " ohm, m_y=" << m_y << " ohm";
    throw std::domain_error(msg.str());
  }
  // delta decreases monotonically in m_x.
  double lo = range.r_min, hi = range.r_max;
  for (int i = 0; i < 200; ++i) {
    const double mid = std::sqrt(lo * hi);
    if (delta_for(mid, m_y, m_z) > target_delta) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi / lo < 1.0 + 1e-15) break;
  }
  return {std::sqrt(lo * hi), m_y, m_z};
}

double auto_leakage_m_y(double target_delta, double m_z, LeakageRange range) {
  if (target_delta <= delta_for(range.r_min, range.r_min, m_z)) return range.r_min;
  if (target_delta > delta_for(range.r_min, range.r_max, m_z)) {
    std::ostringstream msg;
    msg << "leakage rate " << target_delta << " not achievable with m_z=" << m_z << " ohm";
    throw std::domain_error(msg.str());
  }
  // With m_x at its minimum, delta increases monotonically in m_y.
  double lo = range.r_min, hi = range.r_max;
  for (int i = 0; i < 200; ++i) {
    const double mid = std::sqrt(lo * hi);
    if (delta_for(range.r_min, mid, m_z) < target_delta) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi / lo < 1.0 + 1e-15) break;
  }
  return hi;
}

}  // namespace memesn
