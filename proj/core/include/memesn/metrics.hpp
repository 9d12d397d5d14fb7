#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace memesn {

/// sum w|y - y_hat| / sum w|y|. Unit weights when `weights` is empty.
/// Throws std::invalid_argument on length mismatch or a zero denominator.
double wmape(std::span<const double> targets, std::span<const double> predictions,
             std::span<const double> weights = {});

struct MetricCheckpoint {
  std::size_t sample_index;  // samples seen when the block closed
  double wmape;
};

struct MetricTrace {
  std::vector<MetricCheckpoint> checkpoints;
};

/// wMAPE of each complete `stride`-sized block; a trailing partial block is dropped.
MetricTrace rolling_wmape(std::span<const double> targets, std::span<const double> predictions,
                          std::size_t stride = 250);

void write_trace_csv(std::ostream& out, const MetricTrace& trace);

enum class YearConvention { days_360, days_365 };

struct Lifespan {
  double low;
  double nominal;
  double high;
};

/// (E_d -/+ sigma) / U_f, in years. `update_frequency` is in updates per
/// second; `sigma` is in cycles. A zero frequency gives infinite lifespan.
Lifespan lifespan(double endurance, double sigma, double update_frequency,
                  YearConvention years = YearConvention::days_360);

double seconds_per_year(YearConvention years);

/// Mean programming events per device per second, over the devices that
/// were programmed at least once.
double effective_update_frequency(std::span<const std::uint64_t> events_per_device,
                                  double elapsed_seconds);

}  // namespace memesn
