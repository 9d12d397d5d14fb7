#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "memesn/metrics.hpp"
#include "memesn/rng.hpp"

using namespace memesn;

TEST(Wmape, KnownValues) {
  const std::vector<double> y{1, 2, 3, 4}, p{1.1, 1.8, 3.3, 3.6};
  EXPECT_NEAR(wmape(y, p), 1.0 / 10.0, 1e-15);
  EXPECT_EQ(wmape(y, y), 0.0);
  const std::vector<double> zero(4, 0.0);
  EXPECT_NEAR(wmape(y, zero), 1.0, 1e-15);
}

TEST(Wmape, WeightsAndScaleInvariance) {
  const std::vector<double> y{1, 2}, p{2, 2}, w{3, 1};
  EXPECT_NEAR(wmape(y, p, w), 3.0 / 5.0, 1e-15);
  Rng rng(1);
  std::vector<double> a(100), b(100), a2(100), b2(100);
  for (std::size_t i = 0; i < 100; ++i) {
    a[i] = rng.uniform(0.1, 1.0);
    b[i] = rng.uniform(0.1, 1.0);
    a2[i] = 7.5 * a[i];
    b2[i] = 7.5 * b[i];
  }
  EXPECT_NEAR(wmape(a, b), wmape(a2, b2), 1e-14);
}

TEST(Wmape, InvalidInputs) {
  const std::vector<double> y{0, 0}, p{1, 1}, short_p{1};
  EXPECT_THROW(wmape(y, p), std::invalid_argument);
  EXPECT_THROW(wmape(p, short_p), std::invalid_argument);
  EXPECT_THROW(wmape({}, {}), std::invalid_argument);
}

TEST(Rolling, BlocksAndPartialTail) {
  std::vector<double> y(10, 1.0), p(10, 1.0);
  p[0] = 2.0;
  p[5] = 1.5;
  const MetricTrace t = rolling_wmape(y, p, 4);
  ASSERT_EQ(t.checkpoints.size(), 2u);
  EXPECT_EQ(t.checkpoints[0].sample_index, 4u);
  EXPECT_NEAR(t.checkpoints[0].wmape, 0.25, 1e-15);
  EXPECT_EQ(t.checkpoints[1].sample_index, 8u);
  EXPECT_NEAR(t.checkpoints[1].wmape, 0.125, 1e-15);
  std::ostringstream out;
  write_trace_csv(out, t);
  EXPECT_EQ(out.str(), "sample_index,wmape\n4,0.25\n8,0.125\n");
}

TEST(Lifespan, HourlyUpdatesOnBillionCycleDevice) {
  const Lifespan l = lifespan(1e9, 0.0, 1.0 / 3600.0);
  EXPECT_NEAR(l.nominal, 115740.74, 0.01);
  EXPECT_EQ(l.low, l.nominal);
}

TEST(Lifespan, HundredMillisecondUpdates) {
  EXPECT_NEAR(lifespan(1e9, 0.0, 10.0).nominal, 3.215, 0.001);
  EXPECT_NEAR(lifespan(1e9, 0.0, 10.0, YearConvention::days_365).nominal, 3.171, 0.001);
}

TEST(Lifespan, InverseInFrequencyLinearInEndurance) {
  const double base = lifespan(1e9, 0.0, 2.0).nominal;
  EXPECT_NEAR(lifespan(1e9, 0.0, 4.0).nominal, base / 2, 1e-12 * base);
  EXPECT_NEAR(lifespan(2e9, 0.0, 2.0).nominal, 2 * base, 1e-12 * base);
  const Lifespan band = lifespan(1e9, 1e8, 2.0);
  EXPECT_NEAR(band.low, 0.9 * base, 1e-9 * base);
  EXPECT_NEAR(band.high, 1.1 * base, 1e-9 * base);
  EXPECT_TRUE(std::isinf(lifespan(1e9, 0.0, 0.0).nominal));
  EXPECT_THROW(lifespan(1e9, 0.0, -1.0), std::invalid_argument);
}

TEST(UpdateFrequency, AveragesOverProgrammedDevices) {
  const std::vector<std::uint64_t> events{10, 0, 30, 0};
  EXPECT_DOUBLE_EQ(effective_update_frequency(events, 2.0), 10.0);
  const std::vector<std::uint64_t> none{0, 0};
  EXPECT_EQ(effective_update_frequency(none, 1.0), 0.0);
  EXPECT_THROW(effective_update_frequency(events, 0.0), std::invalid_argument);
}
