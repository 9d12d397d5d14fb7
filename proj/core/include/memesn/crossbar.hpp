#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "memesn/device.hpp"
#include "memesn/rng.hpp"

namespace memesn {

enum class Structure { two_m, one_m_one_r };
enum class WriteScheme { plain, alternating };
enum class Slot { plus, minus };

const char* to_string(Structure s);
Structure structure_from_string(const std::string& s);
const char* to_string(WriteScheme s);
WriteScheme write_scheme_from_string(const std::string& s);

struct CrossbarConfig {
  std::size_t rows = 1;
  std::size_t cols = 1;
  Structure structure = Structure::two_m;
  double r_f = 0.0;             // ohm; 0 selects normalize_rf()
  double r_ref = 0.0;           // ohm; 0 selects the mid-range reference (1M1R)
  double v_test = 0.05;         // V, readback test voltage
  int adc_bits = 6;             // readback ADC; 0 = ideal
  double adc_full_scale = 0.0;  // V; 0 selects the largest readback voltage (+3 sigma)
  WriteScheme write_scheme = WriteScheme::plain;
  bool ideal_write = false;     // program exact state changes, no pulse granularity
  double time_resolution = 1e-9;  // s, pulse-duration granularity of the controller
  bool device_variation = true;   // device-to-device
  bool cycle_noise = true;        // cycle-to-cycle

  void validate() const;
};

/// Feedback resistance mapping the device conductance span onto weights in [-1, 1].
double normalize_rf(Structure structure, const DeviceParams& params);

/// Mid-range reference resistance for the 1M1R reference column.
double reference_resistance(const DeviceParams& params);

struct DeviceSite {
  MemristorState state;
  DeviceParams params;
  std::uint64_t events = 0;  // programming operations applied
};

struct Cell {
  DeviceSite plus;
  DeviceSite minus;     // unused for 1M1R
  bool pruned = false;  // forced to zero weight by sparsity mitigation
  bool next_minus = false;
};

struct ProgramResult {
  double duration = 0.0;        // s, total pulse time
  int devices_programmed = 0;
  bool skipped = false;         // no healthy device could take the change
};

struct MitigationReport {
  bool applicable = true;
  std::size_t cells_sparsified = 0;
  std::size_t double_faulted = 0;
};

struct CrossbarStats {
  std::size_t devices = 0;
  std::size_t programmed_devices = 0;
  std::size_t faulted_devices = 0;
  double max_switch_count = 0.0;
  double mean_switch_count = 0.0;  // over programmed devices
  std::uint64_t total_events = 0;
  double total_pulse_time = 0.0;
};

/// Raised when the readback voltage quantizes to zero.
class UnreadableDevice : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Grid of programmable memristors computing column-wise weighted sums.
///
/// Row i is an input line, column j an output line; cell (i, j) holds
/// weight(i, j). Weights are cached and refreshed whenever a cell changes.
class Crossbar {
 public:
  Crossbar(CrossbarConfig config, const DeviceParams& nominal, std::uint64_t seed);

  const CrossbarConfig& config() const { return config_; }
  const DeviceParams& nominal() const { return nominal_; }
  std::size_t rows() const { return config_.rows; }
  std::size_t cols() const { return config_.cols; }
  double r_f() const { return config_.r_f; }
  double r_ref() const { return config_.r_ref; }

  const Cell& cell(std::size_t i, std::size_t j) const { return cells_[index(i, j)]; }

  /// Replace a cell wholesale (tests, checkpoint restore).
  void set_cell(std::size_t i, std::size_t j, const Cell& cell);

  double weight(std::size_t i, std::size_t j) const { return weights_(i, j); }
  const Eigen::MatrixXd& weights() const { return weights_; }

  /// Column sums: out[j] = sum_i weight(i, j) * in[i]. Throws
  /// std::invalid_argument on a length mismatch.
  Eigen::VectorXd mac(const Eigen::VectorXd& inputs) const;

  /// Open-loop change of weight(i, j) by `delta`: the change is converted
  /// into a pulse duration and applied to one device of the pair (chosen
  /// by the write scheme), spilling to the partner when the first device
  /// runs out of range.
  ProgramResult adjust_weight(std::size_t i, std::size_t j, double delta);

  /// adjust_weight() toward `target`, repeated up to `verify_passes` times
  /// with the true weight as feedback. Successive 2M passes alternate the
  /// leading device, so a device that barely moves is backed by its partner.
  ProgramResult program_weight(std::size_t i, std::size_t j, double target,
                               int verify_passes = 1);

  /// Resistance estimate of one device from a test-voltage read through the
  /// ADC: M = r_f * v_test / quantize(v_test * r_f * G).
  double read_resistance(std::size_t i, std::size_t j, Slot slot) const;

  /// Weight estimate from readback of the device(s) of a cell.
  double read_weight(std::size_t i, std::size_t j) const;

  /// Marks round(rate * devices) distinct devices faulted. Returns the count.
  std::size_t inject_faults(double rate, Fault kind, std::uint64_t seed);

  /// Equalizes the intact partner of every single-faulted 2M cell with its
  /// faulted device, fixing the weight at zero.
  MitigationReport mitigate_sparsify();

  /// Cycle-to-cycle noise stream (checkpointing).
  const Rng& noise_source() const { return noise_; }
  void set_noise_source(const Rng& rng) { noise_ = rng; }

  CrossbarStats stats() const;
  std::vector<std::uint64_t> device_events() const;
  std::vector<double> device_switch_counts() const;

  void write_fault_map(std::ostream& out) const;
  /// Applies fault records `row col device kind [frozen_g]`.
  void read_fault_map(std::istream& in);

 private:
  std::size_t index(std::size_t i, std::size_t j) const { return i * config_.cols + j; }
  DeviceSite& site(Cell& c, Slot s) { return s == Slot::plus ? c.plus : c.minus; }
  double compute_weight(const Cell& c) const;
  void refresh(std::size_t i, std::size_t j);
  double move_device(DeviceSite& dev, double dx, ProgramResult& result);
  ProgramResult adjust_cell(std::size_t i, std::size_t j, double delta, bool minus_first);

  CrossbarConfig config_;
  DeviceParams nominal_;
  std::vector<Cell> cells_;
  Eigen::MatrixXd weights_;
  Rng noise_;
};

}  // namespace memesn
