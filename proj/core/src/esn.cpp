#include "memesn/esn.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "memesn/errors.hpp"
#include "memesn/rng.hpp"

namespace memesn {
namespace {

enum Stream : std::uint64_t { kInput = 1, kRecurrent, kMask, kReadout, kFabric, kLeak };

Eigen::MatrixXd uniform_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
  Eigen::MatrixXd m(rows, cols);
  // Row-major fill so the draw order does not depend on Eigen's storage.
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
  }
  return m;
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

void check_length(const Eigen::VectorXd& u, std::size_t n, const char* what) {
  if (static_cast<std::size_t>(u.size()) != n) {
    throw std::invalid_argument(std::string(what) + ": expected length " + std::to_string(n) +
                                ", got " + std::to_string(u.size()));
  }
}

}  // namespace

const char* to_string(Mode m) { return m == Mode::software ? "software" : "hardware"; }

Mode mode_from_string(const std::string& s) {
  if (s == "software") return Mode::software;
  if (s == "hardware") return Mode::hardware;
  throw ConfigError("unknown mode '" + s + "' (expected software or hardware)");
}

void EsnConfig::validate() const {
  if (n_u < 1 || n_r < 1 || n_o < 1) throw ConfigError("esn: layer sizes must be >= 1");
  if (!(sparsity >= 0.0 && sparsity <= 1.0)) throw ConfigError("esn: sparsity must be in [0, 1]");
  if (!(leak_delta >= 0.0 && leak_delta <= 1.0)) throw ConfigError("esn: leak_delta must be in [0, 1]");
  if (!(spectral_radius >= 0.0)) throw ConfigError("esn: spectral_radius must be >= 0");
  if (!(weight_limit > 0.0)) throw ConfigError("esn: weight_limit must be > 0");
  if (n_p < 0) throw ConfigError("esn: n_p must be >= 0");
  if (!(eval_fraction > 0.0 && eval_fraction <= 1.0)) {
    throw ConfigError("esn: eval_fraction must be in (0, 1]");
  }
}

HardwareConfig HardwareConfig::ideal() {
  HardwareConfig hw;
  hw.adc_bits = 0;
  hw.droop_rate = 0.0;
  hw.device_variation = false;
  hw.cycle_noise = false;
  hw.ideal_write = true;
  hw.ideal_leakage = true;
  return hw;
}

void HardwareConfig::validate() const {
  if (adc_bits < 0) throw ConfigError("hardware: adc_bits must be >= 0");
  if (!(gradient_full_scale > 0.0)) throw ConfigError("hardware: gradient_full_scale must be > 0");
  if (!(droop_rate >= 0.0 && hold_time >= 0.0)) throw ConfigError("hardware: droop/hold must be >= 0");
  if (!(dc_offset >= 0.0)) throw ConfigError("hardware: dc_offset must be >= 0");
  if (verify_passes < 1) throw ConfigError("hardware: verify_passes must be >= 1");
  if (!(leakage_m_y >= 0.0 && leakage_m_z > 0.0)) throw ConfigError("hardware: leakage_m_y must be >= 0 and leakage_m_z > 0");
  device.validate();
  leakage_device.validate();
}

double spectral_radius(const Eigen::MatrixXd& m) {
  if (m.size() == 0 || m.isZero(0.0)) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(m, /*computeEigenvectors=*/false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

WeightSet init_weights(const EsnConfig& config) {
  config.validate();
  const auto n_r = static_cast<Eigen::Index>(config.n_r);
  const auto n_u = static_cast<Eigen::Index>(config.n_u);
  const auto n_o = static_cast<Eigen::Index>(config.n_o);

  WeightSet w;
  Rng in_rng(mix_seed(config.seed, kInput));
  w.w_ri = uniform_matrix(in_rng, n_r, n_u, -1.0, 1.0) * config.input_scale;

  Rng rr_rng(mix_seed(config.seed, kRecurrent));
  w.w_rr = uniform_matrix(rr_rng, n_r, n_r, -0.1, 0.1);
  const std::size_t total = config.n_r * config.n_r;
  const auto zeros = static_cast<std::size_t>(std::llround(config.sparsity * static_cast<double>(total)));
  std::vector<std::size_t> ids(total);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  Rng mask_rng(mix_seed(config.seed, kMask));
  for (std::size_t k = 0; k < zeros; ++k) {
    const std::size_t pick = k + static_cast<std::size_t>(mask_rng.index(total - k));
    std::swap(ids[k], ids[pick]);
    w.w_rr(static_cast<Eigen::Index>(ids[k] / config.n_r), static_cast<Eigen::Index>(ids[k] % config.n_r)) = 0.0;
  }
  const double rho = spectral_radius(w.w_rr);
  if (rho > 0.0) w.w_rr *= config.spectral_radius / rho;

  Rng or_rng(mix_seed(config.seed, kReadout));
  w.w_or = uniform_matrix(or_rng, n_o, n_r, -1.0, 1.0);
  return w;
}

ReservoirState zero_state(const EsnConfig& config) {
  const auto n = static_cast<Eigen::Index>(config.n_r);
  return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
}

ReservoirState reservoir_step(const ReservoirState& state, const WeightSet& w,
                              const Eigen::VectorXd& u, const EsnConfig& config) {
  check_length(u, config.n_u, "reservoir_step input");
  check_length(state.x, config.n_r, "reservoir_step state");
  ReservoirState next;
  const Eigen::VectorXd s = w.w_ri * u + w.w_rr * state.x;
  next.x_hat = (config.activation_gain * s).array().tanh();
  next.x = (1.0 - config.leak_delta) * state.x + config.leak_delta * next.x_hat;
  return next;
}

Eigen::VectorXd readout(const ReservoirState& state, const WeightSet& w) {
  return (w.w_or * state.x).unaryExpr([](double v) { return sigmoid(v); });
}

// --- hardware -------------------------------------------------------------

namespace {

CrossbarConfig layer_config(const HardwareConfig& hw, std::size_t rows, std::size_t cols) {
  CrossbarConfig c;
  c.rows = rows;
  c.cols = cols;
  c.structure = hw.structure;
  c.v_test = hw.v_test;
  c.adc_bits = hw.adc_bits;
  c.write_scheme = hw.write_scheme;
  c.ideal_write = hw.ideal_write;
  c.device_variation = hw.device_variation;
  c.cycle_noise = hw.cycle_noise;
  return c;
}

// Resistance realized by a leakage-cell device programmed (against its
// nominal map) to `target_ohm`.
double realize_resistance(double target_ohm, const HardwareConfig& hw, std::uint64_t seed) {
  if (!hw.device_variation) return target_ohm;
  const SampledDevice dev = sample_device(hw.leakage_device, seed);
  MemristorState s = dev.state;
  s.w = state_for_conductance(1.0 / target_ohm, hw.leakage_device);
  return 1.0 / conductance(s, dev.params);
}

}  // namespace

HardwareFabric::HardwareFabric(const EsnConfig& esn, const HardwareConfig& hw,
                               const WeightSet& targets)
    : hw_(hw),
      xb_ri_(layer_config(hw, esn.n_u, esn.n_r), hw.device, mix_seed(esn.seed, kFabric + 100)),
      xb_rr_(layer_config(hw, esn.n_r, esn.n_r), hw.device, mix_seed(esn.seed, kFabric + 200)),
      xb_or_(layer_config(hw, esn.n_r, esn.n_o), hw.device, mix_seed(esn.seed, kFabric + 300)) {
  hw_.validate();
  auto program = [&](Crossbar& xb, const Eigen::MatrixXd& m) {
    // Crossbar cell (i, j) carries m(j, i).
    for (std::size_t i = 0; i < xb.rows(); ++i) {
      for (std::size_t j = 0; j < xb.cols(); ++j) {
        const auto r = xb.program_weight(i, j, m(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)),
                                         hw_.verify_passes);
        if (r.skipped) ++init_skips_;
      }
    }
  };
  program(xb_ri_, targets.w_ri);
  program(xb_rr_, targets.w_rr);
  program(xb_or_, targets.w_or);

  const std::size_t n_r = esn.n_r;
  leak_.assign(n_r, {esn.leak_delta, 1.0 - esn.leak_delta});
  if (esn.leak_delta < 1.0 && !hw_.ideal_leakage) {
    const double m_y = hw_.leakage_m_y > 0.0 ? hw_.leakage_m_y : auto_leakage_m_y(esn.leak_delta, hw_.leakage_m_z);
    const LeakageCell nominal = solve_leakage_cell(esn.leak_delta, hw_.leakage_m_z, m_y);
    cells_.reserve(n_r);
    for (std::size_t i = 0; i < n_r; ++i) {
      const std::uint64_t base = mix_seed(esn.seed, kLeak) + 3 * i;
      LeakageCell c{realize_resistance(nominal.m_x, hw_, base),
                    realize_resistance(nominal.m_y, hw_, base + 1),
                    realize_resistance(nominal.m_z, hw_, base + 2)};
      cells_.push_back(c);
      leak_[i] = leakage_coefficients(c);
    }
  }

  const SampleHold proto{0.0, hw_.dc_offset, hw_.droop_rate};
  input_.assign(esn.n_u, proto);
  feedback_.assign(n_r, proto);
  for (auto& h : feedback_) h.write(0.0);
}

WeightSet HardwareFabric::realized_weights() const {
  return {xb_ri_.weights().transpose(), xb_rr_.weights().transpose(), xb_or_.weights().transpose()};
}

ReservoirState HardwareFabric::step(const Eigen::VectorXd& u, const EsnConfig& config) {
  check_length(u, config.n_u, "reservoir_step input");
  const auto n_r = static_cast<Eigen::Index>(config.n_r);
  Eigen::VectorXd u_held(u.size());
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    input_[static_cast<std::size_t>(k)].write(u[k]);
    u_held[k] = input_[static_cast<std::size_t>(k)].read(hw_.hold_time);
  }
  Eigen::VectorXd x_prev(n_r);
  for (Eigen::Index i = 0; i < n_r; ++i) x_prev[i] = feedback_[static_cast<std::size_t>(i)].read(hw_.hold_time);

  const Eigen::VectorXd s = xb_ri_.mac(u_held) + xb_rr_.mac(x_prev);
  ReservoirState next;
  next.x_hat = (config.activation_gain * s).array().tanh();
  next.x.resize(n_r);
  for (Eigen::Index i = 0; i < n_r; ++i) {
    const auto& c = leak_[static_cast<std::size_t>(i)];
    next.x[i] = c.one_minus_delta * x_prev[i] + c.delta * next.x_hat[i];
    feedback_[static_cast<std::size_t>(i)].write(next.x[i]);
  }
  return next;
}

Eigen::VectorXd HardwareFabric::readout(const ReservoirState& state) const {
  return xb_or_.mac(state.x).unaryExpr([](double v) { return sigmoid(v); });
}

// --- network --------------------------------------------------------------

EchoStateNetwork::EchoStateNetwork(EsnConfig config, HardwareConfig hw)
    : config_(config), targets_(init_weights(config)), weights_(targets_), state_(zero_state(config)) {
  if (config_.mode == Mode::hardware) {
    fabric_.emplace(config_, hw, targets_);
    weights_ = fabric_->realized_weights();
  }
}

void EchoStateNetwork::set_state(ReservoirState state) {
  check_length(state.x, config_.n_r, "set_state");
  if (fabric_) {
    auto& holds = fabric_->feedback_holds();
    for (std::size_t i = 0; i < holds.size(); ++i) holds[i].write(state.x[static_cast<Eigen::Index>(i)]);
  }
  state_ = std::move(state);
}

void EchoStateNetwork::step(const Eigen::VectorXd& u) {
  state_ = fabric_ ? fabric_->step(u, config_) : reservoir_step(state_, weights_, u, config_);
}

Eigen::VectorXd EchoStateNetwork::predict() const {
  return fabric_ ? fabric_->readout(state_) : readout(state_, weights_);
}

Eigen::MatrixXd& EchoStateNetwork::mutable_readout() {
  if (fabric_) throw std::logic_error("readout weights live in the crossbar in hardware mode");
  return weights_.w_or;
}

void EchoStateNetwork::sync_weights() {
  if (fabric_) weights_ = fabric_->realized_weights();
}

void EchoStateNetwork::sync_readout() {
  if (fabric_) weights_.w_or = fabric_->readout_layer().weights().transpose();
}

}  // namespace memesn
