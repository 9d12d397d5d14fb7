#include <gtest/gtest.h>

#include <cmath>

#include "memesn/esn.hpp"

using namespace memesn;

namespace {

EsnConfig small_config(std::uint64_t seed = 1) {
  EsnConfig c;
  c.n_r = 30;
  c.seed = seed;
  return c;
}

Eigen::VectorXd scalar(double v) { return Eigen::VectorXd::Constant(1, v); }

}  // namespace

TEST(Init, SpectralRadiusIsRescaled) {
  for (std::uint64_t seed : {1, 2, 3}) {
    EsnConfig c;
    c.seed = seed;
    const WeightSet w = init_weights(c);
    EXPECT_NEAR(spectral_radius(w.w_rr), 0.95, 1e-6);
  }
}

TEST(Init, ShapesAndRanges) {
  EsnConfig c = small_config();
  c.n_u = 2;
  c.n_o = 3;
  const WeightSet w = init_weights(c);
  EXPECT_EQ(w.w_ri.rows(), 30);
  EXPECT_EQ(w.w_ri.cols(), 2);
  EXPECT_EQ(w.w_rr.rows(), 30);
  EXPECT_EQ(w.w_or.rows(), 3);
  EXPECT_LE(w.w_ri.cwiseAbs().maxCoeff(), 1.0);
  EXPECT_LE(w.w_or.cwiseAbs().maxCoeff(), 1.0);
}

TEST(Init, SparsityIsExactCount) {
  EsnConfig c = small_config();
  c.sparsity = 0.8;
  const WeightSet w = init_weights(c);
  const auto zeros = (w.w_rr.array() == 0.0).count();
  EXPECT_EQ(zeros, std::llround(0.8 * 900));
}

TEST(Init, FullSparsityGivesZeroRecurrence) {
  EsnConfig c = small_config();
  c.sparsity = 1.0;
  const WeightSet w = init_weights(c);
  EXPECT_TRUE(w.w_rr.isZero(0.0));
  EXPECT_EQ(spectral_radius(w.w_rr), 0.0);
}

TEST(Init, DeterministicInSeed) {
  const WeightSet a = init_weights(small_config(5)), b = init_weights(small_config(5));
  const WeightSet c = init_weights(small_config(6));
  EXPECT_EQ(a.w_rr, b.w_rr);
  EXPECT_EQ(a.w_ri, b.w_ri);
  EXPECT_EQ(a.w_or, b.w_or);
  EXPECT_NE(a.w_rr, c.w_rr);
}

TEST(Init, InvalidConfigRejected) {
  EsnConfig c = small_config();
  c.sparsity = 1.5;
  EXPECT_THROW(init_weights(c), ConfigError);
  c = small_config();
  c.leak_delta = -0.1;
  EXPECT_THROW(init_weights(c), ConfigError);
}

TEST(Step, MatchesDirectFormula) {
  const EsnConfig c = small_config();
  const WeightSet w = init_weights(c);
  ReservoirState s = zero_state(c);
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const double u = rng.uniform();
    const ReservoirState next = reservoir_step(s, w, scalar(u), c);
    for (Eigen::Index i = 0; i < 30; ++i) {
      double sum = w.w_ri(i, 0) * u;
      for (Eigen::Index k = 0; k < 30; ++k) sum += w.w_rr(i, k) * s.x(k);
      const double x_hat = std::tanh(sum);
      EXPECT_NEAR(next.x_hat(i), x_hat, 1e-14);
      EXPECT_NEAR(next.x(i), 0.9 * s.x(i) + 0.1 * x_hat, 1e-14);
    }
    s = next;
  }
}

TEST(Step, PointNeuronsAndFrozenLeak) {
  EsnConfig c = small_config();
  const WeightSet w = init_weights(c);
  ReservoirState s = zero_state(c);
  s.x.setConstant(0.3);
  c.leak_delta = 1.0;
  const ReservoirState point = reservoir_step(s, w, scalar(0.7), c);
  EXPECT_EQ(point.x, point.x_hat);
  c.leak_delta = 0.0;
  const ReservoirState frozen = reservoir_step(s, w, scalar(0.7), c);
  EXPECT_EQ(frozen.x, s.x);
}

TEST(Step, LengthMismatchThrows) {
  const EsnConfig c = small_config();
  const WeightSet w = init_weights(c);
  EXPECT_THROW(reservoir_step(zero_state(c), w, Eigen::VectorXd::Zero(2), c), std::invalid_argument);
}

TEST(Step, StatesStayBounded) {
  EsnConfig c = small_config();
  c.spectral_radius = 3.0;
  const WeightSet w = init_weights(c);
  ReservoirState s = zero_state(c);
  Rng rng(9);
  for (int t = 0; t < 2000; ++t) {
    s = reservoir_step(s, w, scalar(rng.uniform(-50.0, 50.0)), c);
    ASSERT_LE(s.x.cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(Step, EchoStatePropertyForgetsInitialState) {
  const EsnConfig c = small_config();
  const WeightSet w = init_weights(c);
  ReservoirState a = zero_state(c), b = zero_state(c);
  Rng init(1);
  for (Eigen::Index i = 0; i < 30; ++i) b.x(i) = init.uniform(-1.0, 1.0);
  const double d0 = (a.x - b.x).norm();
  Rng rng(2);
  for (int t = 0; t < 1000; ++t) {
    const Eigen::VectorXd u = scalar(rng.uniform());
    a = reservoir_step(a, w, u, c);
    b = reservoir_step(b, w, u, c);
  }
  EXPECT_LT((a.x - b.x).norm(), 1e-6 * d0);
}

TEST(Readout, ZeroWeightsGiveOneHalf) {
  EsnConfig c = small_config();
  c.n_o = 2;
  WeightSet w = init_weights(c);
  w.w_or.setZero();
  ReservoirState s = zero_state(c);
  s.x.setConstant(0.8);
  const Eigen::VectorXd y = readout(s, w);
  EXPECT_EQ(y(0), 0.5);
  EXPECT_EQ(y(1), 0.5);
}

TEST(Readout, SigmoidOfWeightedSum) {
  const EsnConfig c = small_config();
  const WeightSet w = init_weights(c);
  ReservoirState s = zero_state(c);
  s.x.setLinSpaced(30, -1.0, 1.0);
  const double z = w.w_or.row(0).dot(s.x);
  EXPECT_NEAR(readout(s, w)(0), 1.0 / (1.0 + std::exp(-z)), 1e-15);
}

TEST(Hardware, IdealFabricReproducesSoftware) {
  EsnConfig sw = small_config();
  EsnConfig hwc = sw;
  hwc.mode = Mode::hardware;
  EchoStateNetwork a(sw), b(hwc, HardwareConfig::ideal());
  EXPECT_LE((a.weights().w_rr - b.weights().w_rr).cwiseAbs().maxCoeff(), 1e-12);
  Rng rng(4);
  for (int t = 0; t < 500; ++t) {
    const Eigen::VectorXd u = scalar(rng.uniform());
    a.step(u);
    b.step(u);
    ASSERT_LE((a.state().x - b.state().x).cwiseAbs().maxCoeff(), 1e-9);
    ASSERT_LE(std::abs(a.predict()(0) - b.predict()(0)), 1e-9);
  }
}

TEST(Hardware, RealizedWeightsCloseToTargets) {
  EsnConfig c = small_config();
  c.mode = Mode::hardware;
  EchoStateNetwork net(c);
  const WeightSet& t = net.target_weights();
  const WeightSet& r = net.weights();
  EXPECT_LT((t.w_ri - r.w_ri).cwiseAbs().mean(), 0.02);
  EXPECT_LT((t.w_rr - r.w_rr).cwiseAbs().mean(), 0.02);
  EXPECT_LT((t.w_or - r.w_or).cwiseAbs().mean(), 0.02);
  EXPECT_LT((t.w_or - r.w_or).cwiseAbs().maxCoeff(), 0.15);
  EXPECT_EQ(net.hardware()->programming_skips(), 0u);
}

TEST(Hardware, LeakageCellsRealizeDelta) {
  EsnConfig c = small_config();
  c.mode = Mode::hardware;
  HardwareConfig hw;
  hw.device_variation = false;
  EchoStateNetwork net(c, hw);
  for (const auto& k : net.hardware()->leakage()) {
    EXPECT_NEAR(k.delta, 0.1, 1e-9);
    EXPECT_NEAR(k.one_minus_delta, 0.9, 0.05);
  }
}

TEST(Hardware, SoftwareReadoutOnlyInSoftwareMode) {
  EsnConfig c = small_config();
  c.mode = Mode::hardware;
  EchoStateNetwork net(c);
  EXPECT_THROW(net.mutable_readout(), std::logic_error);
}

TEST(Hardware, StatesStayBounded) {
  EsnConfig c = small_config();
  c.mode = Mode::hardware;
  EchoStateNetwork net(c);
  Rng rng(2);
  for (int t = 0; t < 500; ++t) {
    net.step(scalar(rng.uniform()));
    ASSERT_LE(net.state().x.cwiseAbs().maxCoeff(), 1.5);
    ASSERT_TRUE(net.state().x.allFinite());
  }
}
