#include "memesn/learning.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "memesn/analog.hpp"
#include "memesn/errors.hpp"
#include "memesn/esn.hpp"
#include "memesn/keyvalue.hpp"

namespace memesn {

const char* to_string(RegSign s) { return s == RegSign::decay ? "decay" : "as_printed"; }

RegSign reg_sign_from_string(const std::string& s) {
  if (s == "decay") return RegSign::decay;
  if (s == "as_printed") return RegSign::as_printed;
  throw ConfigError("unknown reg_sign '" + s + "' (expected decay or as_printed)");
}

void TrainerConfig::validate() const {
  if (!(alpha > 0.0)) throw ConfigError("trainer: alpha must be > 0");
  if (!(lambda >= 0.0)) throw ConfigError("trainer: lambda must be >= 0");
  if (!(theta >= 0.0)) throw ConfigError("trainer: theta must be >= 0");
  if (n_up < 1) throw ConfigError("trainer: n_up must be >= 1");
  if (!(theta_percentile >= 0.0 && theta_percentile <= 1.0)) {
    throw ConfigError("trainer: theta_percentile must be in [0, 1]");
  }
}

std::size_t sparsify(Eigen::MatrixXd& grad, double theta) {
  std::size_t kept = 0;
  for (Eigen::Index k = 0; k < grad.size(); ++k) {
    double& g = grad.data()[k];
    if (std::abs(g) < theta) {
      g = 0.0;
    } else if (g != 0.0) {
      ++kept;
    }
  }
  return kept;
}

Eigen::MatrixXd lms_delta(const Eigen::MatrixXd& grad, const Eigen::MatrixXd& w,
                          const TrainerConfig& c) {
  const double s = c.reg_sign == RegSign::decay ? -1.0 : 1.0;
  return -c.alpha * grad / static_cast<double>(c.n_up) + s * c.lambda * w;
}

OnlineTrainer::OnlineTrainer(TrainerConfig config, std::size_t n_o, std::size_t n_r)
    : config_(config) {
  config_.validate();
  const auto o = static_cast<Eigen::Index>(n_o), r = static_cast<Eigen::Index>(n_r);
  state_.grad = Eigen::MatrixXd::Zero(o, r);
  state_.theta = config_.theta;
  state_.shadow = Eigen::MatrixXd::Zero(o, r);
}

void OnlineTrainer::accumulate(const Eigen::VectorXd& x, const Eigen::VectorXd& y_hat,
                               const Eigen::VectorXd& y) {
  state_.grad.noalias() += (y_hat - y) * x.transpose();
  ++state_.count;
}

void OnlineTrainer::observe_washout(const Eigen::VectorXd& x, const Eigen::VectorXd& y_hat,
                                    const Eigen::VectorXd& y) {
  auto& sh = state_.shadow;
  sh.noalias() += (y_hat - y) * x.transpose();
  if (++state_.shadow_count % config_.n_up == 0) {
    for (Eigen::Index k = 0; k < sh.size(); ++k) state_.washout_samples.push_back(std::abs(sh.data()[k]));
    sh.setZero();
  }
}

void OnlineTrainer::freeze_theta() {
  if (!config_.theta_auto || state_.washout_samples.empty()) return;
  auto& v = state_.washout_samples;
  const auto k = static_cast<std::size_t>(
      std::floor(config_.theta_percentile * static_cast<double>(v.size() - 1)));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  state_.theta = v[k];
  v.clear();
  v.shrink_to_fit();
}

UpdateRecord OnlineTrainer::apply_update(EchoStateNetwork& net, std::size_t step) {
  UpdateRecord rec = net.hardware()
                         ? apply_hardware(net, step)
                         : apply_software(net.mutable_readout(), net.config().weight_limit, step);
  state_.grad.setZero();
  state_.count = 0;
  return rec;
}

UpdateRecord OnlineTrainer::apply_software(Eigen::MatrixXd& w_or, double limit, std::size_t step) {
  UpdateRecord rec;
  rec.step = step;
  Eigen::MatrixXd g = state_.grad;
  sparsify(g, state_.theta);
  Eigen::MatrixXd dw = lms_delta(g, w_or, config_);
  // Entries whose gradient was sparsified away are left untouched.
  for (Eigen::Index k = 0; k < dw.size(); ++k) {
    double& w = w_or.data()[k];
    if (g.data()[k] == 0.0) {
      dw.data()[k] = 0.0;
      continue;
    }
    const double next = std::clamp(w + dw.data()[k], -limit, limit);
    dw.data()[k] = next - w;
    w = next;
  }
  double sum = 0.0;
  for (Eigen::Index k = 0; k < dw.size(); ++k) {
    if (dw.data()[k] != 0.0) {
      ++rec.entries_updated;
      sum += std::abs(dw.data()[k]);
    }
  }
  if (rec.entries_updated > 0) rec.mean_abs_dw = sum / static_cast<double>(rec.entries_updated);
  return rec;
}

UpdateRecord OnlineTrainer::apply_hardware(EchoStateNetwork& net, std::size_t step) {
  UpdateRecord rec;
  rec.step = step;
  HardwareFabric& hw = *net.hardware();
  Crossbar& xb = hw.readout_layer();
  const HardwareConfig& hc = hw.config();
  Eigen::MatrixXd g = state_.grad;
  sparsify(g, state_.theta);
  const double s = config_.reg_sign == RegSign::decay ? -1.0 : 1.0;
  const double n_up = static_cast<double>(config_.n_up);
  double sum = 0.0;
  // Sequential: one cell (and one device, barring spill-over) at a time.
  for (Eigen::Index o = 0; o < g.rows(); ++o) {
    for (Eigen::Index r = 0; r < g.cols(); ++r) {
      if (g(o, r) == 0.0) continue;
      const auto row = static_cast<std::size_t>(r), col = static_cast<std::size_t>(o);
      const double g_digital = quantize_adc(g(o, r) / n_up, hc.adc_bits, hc.gradient_full_scale);
      double w_est = 0.0;
      if (config_.lambda != 0.0) w_est = xb.read_weight(row, col);
      const double phi = -config_.alpha * g_digital + s * config_.lambda * w_est;
      const double before = xb.weight(row, col);
      const ProgramResult res = xb.adjust_weight(row, col, phi);
      if (res.skipped) {
        ++rec.skipped;
        continue;
      }
      if (res.devices_programmed == 0) continue;
      ++rec.entries_updated;
      rec.devices_programmed += static_cast<std::size_t>(res.devices_programmed);
      rec.pulse_time += res.duration;
      sum += std::abs(xb.weight(row, col) - before);
    }
  }
  if (rec.entries_updated > 0) rec.mean_abs_dw = sum / static_cast<double>(rec.entries_updated);
  net.sync_readout();
  return rec;
}

Eigen::MatrixXd ridge_fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double lambda) {
  if (x.cols() < 1 || x.cols() != y.cols()) {
    throw std::invalid_argument("ridge_fit: states and targets need the same number (>= 1) of columns");
  }
  if (lambda < 0.0) throw std::invalid_argument("ridge_fit: lambda must be >= 0");
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd gram = x * x.transpose();
  gram.diagonal().array() += lambda;
  const Eigen::LLT<Eigen::MatrixXd> llt(gram);
  const double scale = std::max(1.0, gram.diagonal().cwiseAbs().maxCoeff());
  bool singular = llt.info() != Eigen::Success;
  if (!singular) {
    const Eigen::VectorXd d = llt.matrixL().toDenseMatrix().diagonal();
    singular = d.minCoeff() <= std::sqrt(scale) * 1e-7;
  }
  if (singular) {
    throw std::domain_error("ridge_fit: X X^T + lambda I is singular (" + std::to_string(n) +
                            " states, " + std::to_string(x.cols()) +
                            " samples); use lambda > 0");
  }
  // Solve (X X^T + lambda I) W^T = X Y^T.
  return llt.solve(x * y.transpose()).transpose();
}

void write_training_trace_csv(std::ostream& out, const std::vector<UpdateRecord>& trace) {
  out << "step,entries_updated,pulses_issued,pulse_time_s,mean_abs_dw,skipped\n";
  for (const auto& r : trace) {
    out << r.step << ',' << r.entries_updated << ',' << r.devices_programmed << ','
        << format_double(r.pulse_time) << ',' << format_double(r.mean_abs_dw) << ',' << r.skipped << '\n';
  }
}

}  // namespace memesn
