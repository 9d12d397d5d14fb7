#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "memesn/datasets.hpp"
#include "memesn/experiment.hpp"
#include "memesn/keyvalue.hpp"
#include "memesn/rng.hpp"

namespace memesn {

struct Dimension {
  std::string name;
  double lo = 0.0;
  double hi = 0.0;
  bool integer = false;  // rounded at evaluation
};

using SearchBounds = std::vector<Dimension>;

struct PsoConfig {
  std::size_t particles = 50;
  std::size_t iterations = 30;
  double inertia = 0.72;
  double cognitive = 1.49;
  double social = 1.49;
  std::uint64_t seed = 1;
  unsigned jobs = 1;  // concurrent objective evaluations

  void validate() const;
};

/// Smaller is better. Exceptions and non-finite values count as infeasible.
using Objective = std::function<double(const std::vector<double>&)>;

struct PsoIteration {
  std::size_t iteration = 0;  // 0 = initial swarm
  double best_value = 0.0;
  std::vector<double> best_position;
};

struct PsoResult {
  std::vector<double> best_position;
  double best_value = 0.0;
  std::vector<PsoIteration> history;  // non-increasing best_value
  std::size_t evaluations = 0;
};

/// Global-best particle swarm over a box. Each particle owns a random
/// stream derived from the master seed, so results do not depend on the
/// number of worker threads.
class ParticleSwarm {
 public:
  ParticleSwarm(SearchBounds bounds, PsoConfig config);

  const SearchBounds& bounds() const { return bounds_; }
  const PsoConfig& config() const { return config_; }

  /// Evaluates the initial swarm on the first call, then moves and
  /// re-evaluates every particle once per call.
  void step(const Objective& objective);
  bool done() const;
  /// Runs step() until done().
  PsoResult run(const Objective& objective);
  PsoResult result() const;

  /// Position as evaluated: integer dimensions rounded.
  std::vector<double> evaluated(const std::vector<double>& x) const;

  /// Text form of the full swarm, for resuming an interrupted search.
  void save(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
  /// Throws DataError on malformed input or a bounds/size mismatch.
  void load(std::istream& in);
  void load(const std::filesystem::path& path);

 private:
  bool collapsed() const;
  void evaluate_all(const Objective& objective);

  SearchBounds bounds_;
  PsoConfig config_;
  std::size_t iteration_ = 0;  // completed evaluation batches
  std::vector<std::vector<double>> x_, v_, pbest_x_;
  std::vector<double> pbest_f_, f_;
  std::vector<Rng> rng_;
  std::vector<double> gbest_x_;
  double gbest_f_ = 0.0;
  std::vector<PsoIteration> history_;
  std::size_t evaluations_ = 0;
};

PsoResult pso_optimize(const SearchBounds& bounds, const Objective& objective,
                       const PsoConfig& config);

void write_pso_history_csv(std::ostream& out, const SearchBounds& bounds,
                           const std::vector<PsoIteration>& history);

/// Default ESN search space: n_r, n_up, sparsity, leak_delta, lambda, alpha.
/// leak_delta is limited to what a leakage cell can realize.
SearchBounds esn_search_space(const ExperimentConfig& base);

/// Overrides from `pso.<dimension> = lo, hi` keys; PSO settings from
/// pso.particles, pso.iterations, pso.inertia, pso.cognitive, pso.social,
/// pso.seed. Throws ConfigError on malformed or infeasible bounds.
SearchBounds read_search_space(const KeyValueFile& kv, const ExperimentConfig& base);
PsoConfig read_pso_config(const KeyValueFile& kv, const PsoConfig& base = {});

/// Delta interval a leakage cell can realize with devices in range.
std::pair<double, double> leakage_delta_bounds(const HardwareConfig& hw);

/// `base` with the candidate's hyperparameters applied and hardware
/// constraints enforced (delta snapped into the realizable interval).
ExperimentConfig apply_candidate(const ExperimentConfig& base, const SearchBounds& bounds,
                                 const std::vector<double>& position);

/// Evaluation-partition wMAPE of an online-learning forecast run.
Objective objective_forecast(SeriesDataset series, ExperimentConfig base, SearchBounds bounds);

}  // namespace memesn
