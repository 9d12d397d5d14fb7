#include "memesn/forecast.hpp"

#include <algorithm>
#include <cmath>

#include "memesn/errors.hpp"

namespace memesn {

ForecastResult forecast_run(const SeriesDataset& series, EchoStateNetwork& net,
                            OnlineTrainer* trainer, const ForecastOptions& options) {
  const EsnConfig& cfg = net.config();
  if (cfg.n_u != 1 || cfg.n_o != 1) {
    throw ConfigError("forecast_run: univariate series need n_u = n_o = 1");
  }
  const auto n_p = static_cast<std::size_t>(cfg.n_p);
  if (series.size() <= cfg.washout + n_p) {
    throw DataError("series '" + series.name + "' too short: " + std::to_string(series.size()) +
                    " samples, need more than washout (" + std::to_string(cfg.washout) +
                    ") + horizon (" + std::to_string(n_p) + ")");
  }
  const bool learning = trainer != nullptr && trainer->config().enabled;
  const std::size_t steps = std::min(series.size() - n_p, options.stop_step);

  ForecastResult out;
  out.first_step = std::max(cfg.washout, options.start_step);
  if (steps > out.first_step) {
    out.predictions.reserve(steps - out.first_step);
    out.targets.reserve(steps - out.first_step);
  }

  Eigen::VectorXd u(1), y(1);
  for (std::size_t t = options.start_step; t < steps; ++t) {
    u[0] = series.values[t];
    y[0] = series.values[t + n_p];
    net.step(u);
    const Eigen::VectorXd y_hat = net.predict();
    if (!std::isfinite(y_hat[0])) {
      throw DivergenceError("non-finite prediction at step " + std::to_string(t));
    }
    if (t < cfg.washout) {
      if (learning) trainer->observe_washout(net.state().x, y_hat, y);
      continue;
    }
    if (t == cfg.washout && learning) trainer->freeze_theta();
    out.predictions.push_back(y_hat[0]);
    out.targets.push_back(y[0]);
    if (learning) {
      trainer->accumulate(net.state().x, y_hat, y);
      if (trainer->update_due()) out.updates.push_back(trainer->apply_update(net, t));
    }
  }

  const std::size_t n = out.predictions.size();
  if (n == 0) return out;
  out.eval_begin = n - static_cast<std::size_t>(std::ceil(cfg.eval_fraction * static_cast<double>(n)));
  if (out.eval_begin >= n) out.eval_begin = n - 1;
  const std::span<const double> tgt(out.targets), pred(out.predictions);
  out.eval_wmape = wmape(tgt.subspan(out.eval_begin), pred.subspan(out.eval_begin));
  out.trace = rolling_wmape(tgt, pred, options.trace_stride);
  return out;
}

}  // namespace memesn
