#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "memesn/analog.hpp"
#include "memesn/crossbar.hpp"
#include "memesn/device.hpp"

namespace memesn {

enum class Mode { software, hardware };

const char* to_string(Mode m);
Mode mode_from_string(const std::string& s);

struct EsnConfig {
  std::size_t n_u = 1;
  std::size_t n_r = 105;
  std::size_t n_o = 1;
  double sparsity = 0.9;         // fraction of zero recurrent weights
  double leak_delta = 0.1;       // 1 = point neurons
  double spectral_radius = 0.95;
  double input_scale = 1.0;
  double activation_gain = 1.0;  // tanh(gain * s)
  double weight_limit = 1.0;     // |w_or| bound in software mode (2M range)
  int n_p = 50;
  std::size_t washout = 100;
  double eval_fraction = 0.5;    // trailing share of post-washout steps scored
  Mode mode = Mode::software;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Analog non-idealities of the hardware path.
struct HardwareConfig {
  Structure structure = Structure::two_m;
  WriteScheme write_scheme = WriteScheme::plain;
  int adc_bits = 6;                  // gradient and readback ADC; 0 = ideal
  double gradient_full_scale = 0.125;
  double v_test = 0.05;
  double droop_rate = 2e3;           // V/s while holding
  double hold_time = 1e-6;           // s between write and read of a sample
  double dc_offset = 1.0;
  bool device_variation = true;
  bool cycle_noise = true;
  bool ideal_write = false;
  bool ideal_leakage = false;        // use the configured delta exactly
  double leakage_m_z = 10e6;
  double leakage_m_y = 0.0;          // 0 = smallest feasible (auto_leakage_m_y)
  int verify_passes = 4;             // write-verify passes for fixed weights
  DeviceParams device = DeviceParams::reservoir();
  DeviceParams leakage_device = DeviceParams::leakage_cell();

  /// Every non-ideality off: the hardware path reproduces the software path.
  static HardwareConfig ideal();

  void validate() const;
};

struct ReservoirState {
  Eigen::VectorXd x;      // outputs
  Eigen::VectorXd x_hat;  // internal (pre-leak) activations
};

struct WeightSet {
  Eigen::MatrixXd w_ri;  // n_r x n_u
  Eigen::MatrixXd w_rr;  // n_r x n_r
  Eigen::MatrixXd w_or;  // n_o x n_r
};

double spectral_radius(const Eigen::MatrixXd& m);

/// Uniform weights, exact-count random zero mask on w_rr, then w_rr rescaled
/// to the configured spectral radius. Deterministic in config.seed.
WeightSet init_weights(const EsnConfig& config);

ReservoirState zero_state(const EsnConfig& config);

/// Software reservoir update:
/// x_hat = tanh(W_ri u + W_rr x), x = (1 - delta) x + delta x_hat.
ReservoirState reservoir_step(const ReservoirState& state, const WeightSet& weights,
                              const Eigen::VectorXd& u, const EsnConfig& config);

/// sigmoid(W_or x).
Eigen::VectorXd readout(const ReservoirState& state, const WeightSet& weights);

/// Crossbars, leakage cells and sample-and-hold stages of the accelerator.
class HardwareFabric {
 public:
  HardwareFabric(const EsnConfig& esn, const HardwareConfig& hw, const WeightSet& targets);

  const HardwareConfig& config() const { return hw_; }

  /// Crossbar layouts: rows are inputs, so each stores the transpose of
  /// the corresponding weight matrix.
  Crossbar& input_layer() { return xb_ri_; }
  Crossbar& reservoir_layer() { return xb_rr_; }
  Crossbar& readout_layer() { return xb_or_; }
  const Crossbar& input_layer() const { return xb_ri_; }
  const Crossbar& reservoir_layer() const { return xb_rr_; }
  const Crossbar& readout_layer() const { return xb_or_; }

  const std::vector<LeakageCoefficients>& leakage() const { return leak_; }
  const std::vector<LeakageCell>& leakage_cells() const { return cells_; }

  /// Realized weights read from the crossbars.
  WeightSet realized_weights() const;

  /// One reservoir update; the previous outputs come from the feedback holds.
  ReservoirState step(const Eigen::VectorXd& u, const EsnConfig& config);
  Eigen::VectorXd readout(const ReservoirState& state) const;

  /// Hold contents (restored from checkpoints).
  std::vector<SampleHold>& feedback_holds() { return feedback_; }
  std::vector<SampleHold>& input_holds() { return input_; }
  const std::vector<SampleHold>& feedback_holds() const { return feedback_; }
  const std::vector<SampleHold>& input_holds() const { return input_; }

  std::size_t programming_skips() const { return init_skips_; }

 private:
  HardwareConfig hw_;
  Crossbar xb_ri_;
  Crossbar xb_rr_;
  Crossbar xb_or_;
  std::vector<LeakageCell> cells_;
  std::vector<LeakageCoefficients> leak_;
  std::vector<SampleHold> input_;
  std::vector<SampleHold> feedback_;
  std::size_t init_skips_ = 0;
};

/// An echo state network running on either the software or hardware path.
class EchoStateNetwork {
 public:
  explicit EchoStateNetwork(EsnConfig config, HardwareConfig hw = {});

  const EsnConfig& config() const { return config_; }
  const ReservoirState& state() const { return state_; }
  void set_state(ReservoirState state);

  /// Software mode: the working weights. Hardware mode: the realized
  /// weights, refreshed after every readout update.
  const WeightSet& weights() const { return weights_; }

  /// The weights drawn at initialization (hardware programming targets).
  const WeightSet& target_weights() const { return targets_; }

  HardwareFabric* hardware() { return fabric_ ? &*fabric_ : nullptr; }
  const HardwareFabric* hardware() const { return fabric_ ? &*fabric_ : nullptr; }

  void step(const Eigen::VectorXd& u);
  Eigen::VectorXd predict() const;

  /// Software mode only.
  Eigen::MatrixXd& mutable_readout();

  /// Re-read the realized weights from the crossbars (after fault
  /// injection or mitigation).
  void sync_weights();
  /// Re-read only the readout weights.
  void sync_readout();

 private:
  EsnConfig config_;
  WeightSet targets_;
  WeightSet weights_;
  ReservoirState state_;
  std::optional<HardwareFabric> fabric_;
};

}  // namespace memesn
