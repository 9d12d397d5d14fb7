#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace memesn {

class EchoStateNetwork;

/// Sign applied to the regularization term of the readout update:
/// decay subtracts lambda*W (weight decay), as_printed adds it.
enum class RegSign { as_printed, decay };

const char* to_string(RegSign s);
RegSign reg_sign_from_string(const std::string& s);

struct TrainerConfig {
  bool enabled = true;
  double alpha = 0.5;
  double lambda = 2e-3;
  double theta = 0.0;            // used when theta_auto is false
  bool theta_auto = true;        // percentile of washout gradients
  double theta_percentile = 0.10;
  std::size_t n_up = 1;
  RegSign reg_sign = RegSign::decay;

  void validate() const;
};

struct TrainerState {
  Eigen::MatrixXd grad;  // n_o x n_r
  std::size_t count = 0;
  double theta = 0.0;
  Eigen::MatrixXd shadow;  // washout accumulator for theta_auto
  std::size_t shadow_count = 0;
  std::vector<double> washout_samples;
};

/// One line of the training trace.
struct UpdateRecord {
  std::size_t step = 0;
  std::size_t entries_updated = 0;
  std::size_t devices_programmed = 0;
  double pulse_time = 0.0;  // s
  double mean_abs_dw = 0.0;
  std::size_t skipped = 0;
};

/// Zeroes entries with |grad| < theta in place; returns the survivors.
std::size_t sparsify(Eigen::MatrixXd& grad, double theta);

/// -alpha * grad / n_up -/+ lambda * W (sign per reg_sign).
Eigen::MatrixXd lms_delta(const Eigen::MatrixXd& grad, const Eigen::MatrixXd& w,
                          const TrainerConfig& config);

/// Periodic LMS(+L2) trainer for the readout layer.
class OnlineTrainer {
 public:
  OnlineTrainer(TrainerConfig config, std::size_t n_o, std::size_t n_r);

  const TrainerConfig& config() const { return config_; }
  const TrainerState& state() const { return state_; }
  void set_state(TrainerState state) { state_ = std::move(state); }
  double theta() const { return state_.theta; }
  void set_theta(double theta) { state_.theta = theta; }

  /// grad += (y_hat - y) x^T; count += 1.
  void accumulate(const Eigen::VectorXd& x, const Eigen::VectorXd& y_hat, const Eigen::VectorXd& y);

  bool update_due() const { return state_.count > 0 && state_.count % config_.n_up == 0; }

  /// Sparsify, update the readout (software matrix or crossbar programming,
  /// one device at a time), clear the accumulator.
  UpdateRecord apply_update(EchoStateNetwork& net, std::size_t step);

  /// Washout observation used to freeze theta when theta_auto is set.
  void observe_washout(const Eigen::VectorXd& x, const Eigen::VectorXd& y_hat,
                       const Eigen::VectorXd& y);
  void freeze_theta();

 private:
  UpdateRecord apply_software(Eigen::MatrixXd& w_or, double limit, std::size_t step);
  UpdateRecord apply_hardware(EchoStateNetwork& net, std::size_t step);

  TrainerConfig config_;
  TrainerState state_;
};

/// W = Y X^T (X X^T + lambda I)^{-1}, solved with a Cholesky factorization.
/// X is n_r x T, Y is n_o x T. Throws std::domain_error when the system is
/// singular (lambda = 0 with rank-deficient X).
Eigen::MatrixXd ridge_fit(const Eigen::MatrixXd& states, const Eigen::MatrixXd& targets,
                          double lambda);

void write_training_trace_csv(std::ostream& out, const std::vector<UpdateRecord>& trace);

}  // namespace memesn
