#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "memesn/crossbar.hpp"
#include "memesn/datasets.hpp"
#include "memesn/esn.hpp"
#include "memesn/forecast.hpp"
#include "memesn/keyvalue.hpp"
#include "memesn/learning.hpp"
#include "memesn/metrics.hpp"

namespace memesn {

struct DatasetSpec {
  std::string kind = "mackey_glass";  // mackey_glass | narma10 | csv
  std::size_t length = 4000;          // generated samples
  std::filesystem::path path;         // csv only
  std::string column;                 // csv only; empty = last column
  std::size_t smooth_window = 1;      // moving average before scaling
  std::uint64_t seed = 0;             // narma10; 0 = the network seed
};

/// Which crossbars receive injected faults.
enum class FaultScope { readout, all };

const char* to_string(FaultScope s);
FaultScope fault_scope_from_string(const std::string& s);

struct FaultSpec {
  double rate = 0.0;
  Fault kind = Fault::stuck_on;
  FaultScope scope = FaultScope::readout;
  bool mitigate = false;  // 2M only
  std::uint64_t seed = 0; // 0 = derived from the network seed
};

struct ExperimentConfig {
  DatasetSpec dataset;
  EsnConfig esn;
  TrainerConfig trainer;
  HardwareConfig hardware;
  FaultSpec faults;
  std::filesystem::path out_dir = "memesn-out";

  /// Throws ConfigError on any invalid field.
  void validate() const;

  /// Unknown keys are a ConfigError, so typos never pass silently.
  static ExperimentConfig from_keyvalue(const KeyValueFile& kv,
                                        const ExperimentConfig& base = mackey_glass_profile());
  KeyValueFile to_keyvalue() const;

  /// Tuned settings for the two synthetic benchmarks (hardware mode).
  static ExperimentConfig mackey_glass_profile();
  static ExperimentConfig narma10_profile();
};

/// Keys accepted by ExperimentConfig::from_keyvalue (besides pso.* and lifespan.*).
bool is_experiment_key(const std::string& key);

SeriesDataset load_dataset(const DatasetSpec& spec, std::uint64_t network_seed, int n_p);

struct RunOutcome {
  ForecastResult forecast;
  std::size_t faulted_devices = 0;
  std::size_t mitigated_cells = 0;
  /// Hardware only: readout crossbar events and switch counts accrued
  /// during the run (initial programming excluded), one entry per device.
  std::vector<std::uint64_t> readout_events;
  std::vector<double> readout_switch_counts;
};

/// Builds the network, injects the configured faults, runs the forecast.
RunOutcome run_experiment(const ExperimentConfig& config, const SeriesDataset& series);
RunOutcome run_experiment(const ExperimentConfig& config);

/// Injects `spec` into the fabric of a hardware network (and mitigates when
/// requested), then refreshes the realized weights. Returns (faulted, mitigated).
std::pair<std::size_t, std::size_t> apply_faults(EchoStateNetwork& net, const FaultSpec& spec);

struct FaultCase {
  Structure structure = Structure::one_m_one_r;
  bool mitigate = false;
  Fault kind = Fault::stuck_on;
  double rate = 0.0;
};

struct FaultRow {
  FaultCase fault_case;
  std::vector<double> wmape;  // per seed
  double median = 0.0;
};

/// Runs every case for every seed; cases are spread over `jobs` threads.
std::vector<FaultRow> fault_sweep(const ExperimentConfig& base, const std::vector<FaultCase>& cases,
                                  const std::vector<std::uint64_t>& seeds, unsigned jobs = 1);

void write_fault_table_csv(std::ostream& out, const std::vector<FaultRow>& rows);

struct LifespanReport {
  WriteScheme scheme = WriteScheme::plain;
  std::size_t updates = 0;
  double max_switch_count = 0.0;       // busiest readout device, training only
  double mean_switch_count = 0.0;      // over programmed devices
  double update_frequency = 0.0;       // events per device per second
  double sample_period = 0.0;          // s of wall time per forecast step
  Lifespan lifespan;                   // years at the measured event rate
};

/// Trains a hardware network with the given scheme and turns the readout
/// device activity into a lifespan estimate, assuming one forecast step
/// every `sample_period` seconds.
LifespanReport measure_lifespan(const ExperimentConfig& config, const SeriesDataset& series,
                                WriteScheme scheme, double sample_period);

void write_lifespan_csv(std::ostream& out, const std::vector<LifespanReport>& reports);

double median(std::vector<double> values);

}  // namespace memesn
