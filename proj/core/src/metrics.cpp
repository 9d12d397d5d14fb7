#include "memesn/metrics.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "memesn/keyvalue.hpp"

namespace memesn {

double wmape(std::span<const double> y, std::span<const double> y_hat,
             std::span<const double> weights) {
  if (y.size() != y_hat.size() || y.empty()) {
    throw std::invalid_argument("wmape: targets and predictions must have equal, non-zero length");
  }
  if (!weights.empty() && weights.size() != y.size()) {
    throw std::invalid_argument("wmape: weights length mismatch");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    num += w * std::abs(y[i] - y_hat[i]);
    den += w * std::abs(y[i]);
  }
  if (!(den > 0.0)) throw std::invalid_argument("wmape: undefined for all-zero targets");
  return num / den;
}

MetricTrace rolling_wmape(std::span<const double> y, std::span<const double> y_hat,
                          std::size_t stride) {
  if (stride == 0) throw std::invalid_argument("rolling_wmape: stride must be >= 1");
  if (y.size() != y_hat.size()) throw std::invalid_argument("rolling_wmape: length mismatch");
  MetricTrace trace;
  for (std::size_t end = stride; end <= y.size(); end += stride) {
    trace.checkpoints.push_back(
        {end, wmape(y.subspan(end - stride, stride), y_hat.subspan(end - stride, stride))});
  }
  return trace;
}

void write_trace_csv(std::ostream& out, const MetricTrace& trace) {
  out << "sample_index,wmape\n";
  for (const auto& c : trace.checkpoints) out << c.sample_index << ',' << format_double(c.wmape) << '\n';
}

double seconds_per_year(YearConvention years) {
  return 86400.0 * (years == YearConvention::days_360 ? 360.0 : 365.0);
}

Lifespan lifespan(double endurance, double sigma, double update_frequency, YearConvention years) {
  if (update_frequency < 0.0) throw std::invalid_argument("lifespan: negative update frequency");
  if (update_frequency == 0.0) {
    const double inf = std::numeric_limits<double>::infinity();
    return {inf, inf, inf};
  }
  const double scale = 1.0 / (update_frequency * seconds_per_year(years));
  return {(endurance - sigma) * scale, endurance * scale, (endurance + sigma) * scale};
}

double effective_update_frequency(std::span<const std::uint64_t> events, double elapsed) {
  if (!(elapsed > 0.0)) throw std::invalid_argument("effective_update_frequency: elapsed must be > 0");
  std::uint64_t total = 0;
  std::size_t active = 0;
  for (auto e : events) {
    if (e == 0) continue;
    total += e;
    ++active;
  }
  if (active == 0) return 0.0;
  return static_cast<double>(total) / static_cast<double>(active) / elapsed;
}

}  // namespace memesn
