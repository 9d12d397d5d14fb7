#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "memesn/errors.hpp"

namespace memesn {

/// Univariate series scaled to [0, 1], with the anchors to undo the scaling.
struct SeriesDataset {
  std::string name;
  std::vector<double> values;
  double raw_min = 0.0;
  double raw_max = 1.0;
  int n_p = 50;

  std::size_t size() const { return values.size(); }
};

/// Affine map to [0, 1]. A constant series maps to all 0.5.
SeriesDataset minmax_scale(std::span<const double> raw, std::string name = {});
std::vector<double> unscale(const SeriesDataset& dataset, std::span<const double> values);

struct MackeyGlassParams {
  std::size_t n = 4000;
  double beta = 0.25;
  double gamma = 0.1;
  double tau = 18.0;
  int exponent = 10;
  double dt = 1.0;
  double x0 = 1.2;  // constant history for t <= 0
};

/// Explicit Euler integration of the delayed feedback equation, one sample
/// per unit time, first sample x(0). Integer powers are evaluated by
/// repeated multiplication so output is bit-identical across platforms.
std::vector<double> mackey_glass_raw(const MackeyGlassParams& params);
SeriesDataset mackey_glass(const MackeyGlassParams& params);

/// NARMA10 outputs for the given input sequence, y(0) = 0 and zero history.
std::vector<double> narma10_recurrence(std::span<const double> inputs);

struct NarmaSeries {
  std::vector<double> inputs;
  std::vector<double> raw_outputs;
  SeriesDataset outputs;
  std::uint64_t seed_used = 0;
  int attempts = 1;
};

/// Inputs i.i.d. uniform on [0, 0.5]. A run whose |y| exceeds 10 is
/// regenerated with the next seed; DivergenceError after 10 attempts.
NarmaSeries narma10(std::size_t n, std::uint64_t seed);

/// Reads one numeric column (by header name, or the single/last column when
/// `column` is empty). Lines starting with '#' are skipped. Throws DataError
/// listing the offending line numbers.
std::vector<double> load_csv(const std::filesystem::path& path, const std::string& column = {});
std::vector<double> read_csv(std::istream& in, const std::string& column = {},
                             const std::string& source = "<stream>");

/// Centered moving average; the window shrinks at the edges.
std::vector<double> moving_average(std::span<const double> series, std::size_t window);

/// Two-column `index,value` CSV.
void write_series_csv(std::ostream& out, std::span<const double> values);

}  // namespace memesn
