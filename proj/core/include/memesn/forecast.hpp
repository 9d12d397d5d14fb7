#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "memesn/datasets.hpp"
#include "memesn/esn.hpp"
#include "memesn/learning.hpp"
#include "memesn/metrics.hpp"

namespace memesn {

struct ForecastOptions {
  std::size_t trace_stride = 250;
  std::size_t start_step = 0;  // resume point (network restored from a checkpoint)
  std::size_t stop_step = std::numeric_limits<std::size_t>::max();  // exclusive
};

struct ForecastResult {
  std::vector<double> predictions;  // post-washout, aligned with targets
  std::vector<double> targets;
  std::size_t first_step = 0;       // series index of predictions[0]
  std::size_t eval_begin = 0;       // index into predictions where scoring starts
  double eval_wmape = 0.0;
  MetricTrace trace;
  std::vector<UpdateRecord> updates;
};

/// Drives the network through `series`: the target at step t is the value
/// n_p steps ahead. Washout steps update the reservoir only. With a trainer,
/// the readout learns online after washout. Throws DataError when the series
/// is too short and DivergenceError on a non-finite prediction.
/// start_step/stop_step run a slice of the loop, so a run interrupted at k
/// and resumed from a checkpoint at k reproduces the uninterrupted run.
ForecastResult forecast_run(const SeriesDataset& series, EchoStateNetwork& net,
                            OnlineTrainer* trainer = nullptr, const ForecastOptions& options = {});

}  // namespace memesn
