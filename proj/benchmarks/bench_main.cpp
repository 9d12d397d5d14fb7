#include <benchmark/benchmark.h>

#include "memesn/crossbar.hpp"
#include "memesn/datasets.hpp"
#include "memesn/device.hpp"
#include "memesn/esn.hpp"
#include "memesn/forecast.hpp"
#include "memesn/learning.hpp"

using namespace memesn;

static void BM_CrossbarMac(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  CrossbarConfig cfg;
  cfg.rows = n;
  cfg.cols = n;
  Crossbar xb(cfg, DeviceParams::reservoir(), 7);
  Rng rng(3);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) xb.program_weight(i, j, rng.uniform(-0.5, 0.5));
  }
  Eigen::VectorXd in = Eigen::VectorXd::Random(static_cast<Eigen::Index>(n));
  for (auto _ : state) benchmark::DoNotOptimize(xb.mac(in));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}
BENCHMARK(BM_CrossbarMac)->Arg(16)->Arg(105)->Arg(256);

static void BM_ApplyPulse(benchmark::State& state) {
  const DeviceParams p = DeviceParams::reservoir();
  Rng noise(11);
  MemristorState s;
  const double duration = static_cast<double>(state.range(0)) * p.pulse_width;
  bool up = true;
  for (auto _ : state) {
    s = apply_pulse(s, up ? Polarity::set : Polarity::reset, duration, p, &noise);
    up = !up;
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_ApplyPulse)->Arg(1)->Arg(10)->Arg(41);

static void BM_ReservoirStep(benchmark::State& state) {
  EsnConfig cfg;
  cfg.n_r = static_cast<std::size_t>(state.range(0));
  cfg.mode = state.range(1) ? Mode::hardware : Mode::software;
  EchoStateNetwork net(cfg);
  Eigen::VectorXd u(1);
  double t = 0.0;
  for (auto _ : state) {
    u[0] = 0.5 + 0.4 * std::sin(t += 0.1);
    net.step(u);
    benchmark::DoNotOptimize(net.state().x.data());
  }
}
BENCHMARK(BM_ReservoirStep)->Args({105, 0})->Args({105, 1})->Args({200, 1});

static void BM_ForecastRun(benchmark::State& state) {
  MackeyGlassParams mg;
  mg.n = 1000;
  const SeriesDataset series = mackey_glass(mg);
  EsnConfig cfg;
  cfg.mode = state.range(0) ? Mode::hardware : Mode::software;
  TrainerConfig tc;
  tc.theta_auto = false;
  for (auto _ : state) {
    EchoStateNetwork net(cfg);
    OnlineTrainer trainer(tc, 1, cfg.n_r);
    benchmark::DoNotOptimize(forecast_run(series, net, &trainer).eval_wmape);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(series.size()));
}
BENCHMARK(BM_ForecastRun)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
