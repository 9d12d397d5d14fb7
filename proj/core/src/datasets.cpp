#include "memesn/datasets.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "memesn/keyvalue.hpp"
#include "memesn/rng.hpp"

namespace memesn {
namespace {

double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    const auto a = field.find_first_not_of(" \t\r\"");
    const auto b = field.find_last_not_of(" \t\r\"");
    out.push_back(a == std::string::npos ? std::string{} : field.substr(a, b - a + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

SeriesDataset minmax_scale(std::span<const double> raw, std::string name) {
  SeriesDataset ds;
  ds.name = std::move(name);
  if (raw.empty()) return ds;
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  ds.raw_min = *lo;
  ds.raw_max = *hi;
  ds.values.reserve(raw.size());
  const double span = ds.raw_max - ds.raw_min;
  for (double v : raw) ds.values.push_back(span > 0.0 ? (v - ds.raw_min) / span : 0.5);
  return ds;
}

std::vector<double> unscale(const SeriesDataset& ds, std::span<const double> values) {
  std::vector<double> out;
  out.reserve(values.size());
  const double span = ds.raw_max - ds.raw_min;
  for (double v : values) out.push_back(span > 0.0 ? ds.raw_min + v * span : ds.raw_min);
  return out;
}

std::vector<double> mackey_glass_raw(const MackeyGlassParams& p) {
  const auto per_sample = static_cast<std::size_t>(std::max(1L, std::lround(1.0 / p.dt)));
  const auto delay = static_cast<std::size_t>(std::max(1L, std::lround(p.tau / p.dt)));
  // Ring buffer of the last `delay` states; slot k holds x(t - delay) when read.
  std::vector<double> ring(delay, p.x0);
  std::size_t head = 0;
  double x = p.x0;
  std::vector<double> out;
  out.reserve(p.n);
  for (std::size_t step = 0; out.size() < p.n; ++step) {
    if (step % per_sample == 0) out.push_back(x);
    const double lagged = ring[head];
    const double dx = p.beta * lagged / (1.0 + ipow(lagged, p.exponent)) - p.gamma * x;
    ring[head] = x;
    head = (head + 1) % delay;
    x += p.dt * dx;
  }
  return out;
}

SeriesDataset mackey_glass(const MackeyGlassParams& params) {
  return minmax_scale(mackey_glass_raw(params), "mackey_glass");
}

std::vector<double> narma10_recurrence(std::span<const double> s) {
  const std::size_t n = s.size();
  std::vector<double> y(n, 0.0);
  for (std::size_t t = 0; t + 1 < n; ++t) {
    double window = 0.0;
    for (std::size_t i = 0; i <= 9 && i <= t; ++i) window += y[t - i];
    const double s_lag = t >= 9 ? s[t - 9] : 0.0;
    y[t + 1] = 0.3 * y[t] + 0.05 * y[t] * window + 1.5 * s_lag * s[t] + 0.1;
  }
  return y;
}

NarmaSeries narma10(std::size_t n, std::uint64_t seed) {
  constexpr int kMaxAttempts = 10;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const std::uint64_t s = seed + static_cast<std::uint64_t>(attempt);
    Rng rng(s);
    std::vector<double> inputs(n);
    for (double& v : inputs) v = rng.uniform(0.0, 0.5);
    std::vector<double> y = narma10_recurrence(inputs);
    const bool bounded = std::all_of(y.begin(), y.end(),
                                     [](double v) { return std::isfinite(v) && std::abs(v) <= 10.0; });
    if (!bounded) continue;
    NarmaSeries out;
    out.outputs = minmax_scale(y, "narma10");
    out.inputs = std::move(inputs);
    out.raw_outputs = std::move(y);
    out.seed_used = s;
    out.attempts = attempt + 1;
    return out;
  }
  throw DivergenceError("narma10 diverged for seeds " + std::to_string(seed) + ".." +
                        std::to_string(seed + kMaxAttempts - 1));
}

std::vector<double> read_csv(std::istream& in, const std::string& column, const std::string& source) {
  std::string line;
  int lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    header = split_csv_line(line);
    break;
  }
  if (header.empty()) throw DataError(source + ": no header line");
  std::size_t col = header.size() - 1;
  if (!column.empty()) {
    const auto it = std::find(header.begin(), header.end(), column);
    if (it == header.end()) throw DataError(source + ": no column named '" + column + "'");
    col = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<double> values;
  std::vector<int> bad;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_csv_line(line);
    bool ok = col < fields.size() && !fields[col].empty();
    double v = 0.0;
    if (ok) {
      errno = 0;
      char* end = nullptr;
      v = std::strtod(fields[col].c_str(), &end);
      ok = end == fields[col].c_str() + fields[col].size() && errno == 0 && std::isfinite(v);
    }
    if (!ok) {
      bad.push_back(lineno);
      continue;
    }
    values.push_back(v);
  }
  if (!bad.empty()) {
    std::ostringstream msg;
    msg << source << ": " << bad.size() << " unparseable row(s) at line(s) ";
    for (std::size_t k = 0; k < bad.size() && k < 20; ++k) msg << (k ? ", " : "") << bad[k];
    if (bad.size() > 20) msg << ", ...";
    throw DataError(msg.str());
  }
  return values;
}

std::vector<double> load_csv(const std::filesystem::path& path, const std::string& column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file '" + path.string() + "'");
  return read_csv(in, column, path.string());
}

std::vector<double> moving_average(std::span<const double> series, std::size_t window) {
  if (window == 0 || window > std::max<std::size_t>(series.size(), 1)) {
    throw std::invalid_argument("moving_average: window must be in [1, length]");
  }
  const std::size_t n = series.size();
  const std::size_t before = (window - 1) / 2;
  const std::size_t after = window / 2;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= before ? i - before : 0;
    const std::size_t hi = std::min(n - 1, i + after);
    double sum = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) sum += series[k];
    out[i] = sum / static_cast<double>(hi - lo + 1);
  }
  return out;
}

void write_series_csv(std::ostream& out, std::span<const double> values) {
  out << "index,value\n";
  for (std::size_t i = 0; i < values.size(); ++i) out << i << ',' << format_double(values[i]) << '\n';
}

}  // namespace memesn
