#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "memesn/datasets.hpp"
#include "memesn/rng.hpp"

using namespace memesn;

namespace {

const std::filesystem::path kData = MEMESN_TEST_DATA_DIR;
const std::filesystem::path kGolden = MEMESN_TEST_GOLDEN_DIR;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Straightforward NARMA10 recurrence over explicit history buffers.
std::vector<double> narma_oracle(const std::vector<double>& u) {
  std::vector<double> y(u.size(), 0.0);
  auto Y = [&](long t) { return t < 0 ? 0.0 : y[static_cast<std::size_t>(t)]; };
  auto U = [&](long t) { return t < 0 ? 0.0 : u[static_cast<std::size_t>(t)]; };
  for (long t = 0; t + 1 < static_cast<long>(u.size()); ++t) {
    double sum = 0.0;
    for (long i = 0; i < 10; ++i) sum += Y(t - i);
    y[static_cast<std::size_t>(t + 1)] = 0.3 * Y(t) + 0.05 * Y(t) * sum + 1.5 * U(t - 9) * U(t) + 0.1;
  }
  return y;
}

}  // namespace

TEST(MackeyGlass, EquilibriumIsFixedPoint) {
  MackeyGlassParams p;
  p.n = 500;
  p.x0 = std::pow(1.5, 0.1);
  for (double v : mackey_glass_raw(p)) ASSERT_NEAR(v, p.x0, 1e-12);
}

TEST(MackeyGlass, ZeroHistoryStaysZero) {
  MackeyGlassParams p;
  p.n = 300;
  p.x0 = 0.0;
  for (double v : mackey_glass_raw(p)) ASSERT_EQ(v, 0.0);
}

TEST(MackeyGlass, FirstStepsMatchEuler) {
  MackeyGlassParams p;
  p.n = 5;
  const auto x = mackey_glass_raw(p);
  EXPECT_EQ(x[0], 1.2);
  // History is constant 1.2 for the first tau steps.
  double expect = 1.2;
  for (int k = 1; k < 5; ++k) {
    expect += 0.25 * 1.2 / (1.0 + std::pow(1.2, 10)) - 0.1 * expect;
    EXPECT_NEAR(x[static_cast<std::size_t>(k)], expect, 1e-14);
  }
}

TEST(MackeyGlass, ChaoticSeriesIsAperiodicAndBounded) {
  const auto x = mackey_glass_raw({});
  ASSERT_EQ(x.size(), 4000u);
  for (double v : x) {
    ASSERT_GT(v, 0.0);
    ASSERT_LT(v, 2.0);
  }
  // No exact repetition of a short window anywhere in the tail.
  for (std::size_t lag = 1; lag < 500; ++lag) {
    double diff = 0.0;
    for (std::size_t t = 3000; t < 3100; ++t) diff += std::abs(x[t] - x[t - lag]);
    ASSERT_GT(diff, 1e-6) << "lag " << lag;
  }
}

TEST(MackeyGlass, ScaledToUnitInterval) {
  const SeriesDataset ds = mackey_glass({});
  EXPECT_EQ(*std::min_element(ds.values.begin(), ds.values.end()), 0.0);
  EXPECT_EQ(*std::max_element(ds.values.begin(), ds.values.end()), 1.0);
}

TEST(Narma, PrefixFromZeroHistory) {
  const std::vector<double> u(12, 0.3);
  const auto y = narma10_recurrence(u);
  EXPECT_EQ(y[0], 0.0);
  EXPECT_NEAR(y[1], 0.1, 1e-15);
  EXPECT_NEAR(y[2], 0.1305, 1e-15);
}

TEST(Narma, MatchesOracle) {
  Rng rng(4);
  std::vector<double> u(300);
  for (double& v : u) v = rng.uniform(0.0, 0.5);
  const auto y = narma10_recurrence(u), o = narma_oracle(u);
  for (std::size_t t = 0; t < u.size(); ++t) ASSERT_NEAR(y[t], o[t], 1e-13);
}

TEST(Narma, DeterministicAndInRange) {
  const NarmaSeries a = narma10(2000, 7), b = narma10(2000, 7);
  EXPECT_EQ(a.inputs, b.inputs);
  EXPECT_EQ(a.raw_outputs, b.raw_outputs);
  for (double v : a.inputs) {
    ASSERT_GE(v, 0.0);
    ASSERT_LT(v, 0.5);
  }
  EXPECT_EQ(a.raw_outputs, narma10_recurrence(a.inputs));
  EXPECT_EQ(a.seed_used, 7u + static_cast<std::uint64_t>(a.attempts - 1));
}

TEST(Csv, ReadsNamedAndLastColumns) {
  std::istringstream in("# comment\ntime,load,temp\n0,1.5,20\n1,2.5,21\n\n2,3.5,22\n");
  EXPECT_EQ(read_csv(in, "load"), (std::vector<double>{1.5, 2.5, 3.5}));
  std::istringstream again("time,load,temp\n0,1.5,20\n1,2.5,21\n");
  EXPECT_EQ(read_csv(again), (std::vector<double>{20, 21}));
}

TEST(Csv, ReportsBadLineNumbers) {
  std::istringstream in("a,b\n1,2\n3,x\n5,6\n7,\n");
  try {
    read_csv(in, "b");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2 unparseable"), std::string::npos) << msg;
    EXPECT_NE(msg.find("3, 5"), std::string::npos) << msg;
  }
  std::istringstream missing("a,b\n1,2\n");
  EXPECT_THROW(read_csv(missing, "c"), DataError);
  std::istringstream empty("");
  EXPECT_THROW(read_csv(empty), DataError);
}

TEST(Csv, LoadsFixtureFiles) {
  const auto good = load_csv(kData / "toy_load.csv", "load_mw");
  EXPECT_EQ(good.size(), 48u);
  EXPECT_THROW(load_csv(kData / "toy_bad.csv", "value"), DataError);
  EXPECT_THROW(load_csv(kData / "does_not_exist.csv"), DataError);
}

TEST(MovingAverage, CenteredWithShrinkingEdges) {
  const std::vector<double> s{1, 2, 3, 4, 5};
  const auto m = moving_average(s, 3);
  EXPECT_EQ(m, (std::vector<double>{1.5, 2, 3, 4, 4.5}));
  EXPECT_EQ(moving_average(s, 1), s);
  const auto even = moving_average(s, 2);
  EXPECT_EQ(even, (std::vector<double>{1.5, 2.5, 3.5, 4.5, 5}));
  EXPECT_THROW(moving_average(s, 0), std::invalid_argument);
  EXPECT_THROW(moving_average(s, 6), std::invalid_argument);
}

TEST(MovingAverage, PreservesMeanOfConstant) {
  const std::vector<double> s(50, 3.25);
  for (double v : moving_average(s, 7)) EXPECT_DOUBLE_EQ(v, 3.25);
}

TEST(Scaling, RoundTripAndConstant) {
  const std::vector<double> raw{-3, 0, 5, 2};
  const SeriesDataset ds = minmax_scale(raw);
  EXPECT_EQ(ds.values, (std::vector<double>{0.0, 0.375, 1.0, 0.625}));
  const auto back = unscale(ds, ds.values);
  for (std::size_t i = 0; i < raw.size(); ++i) EXPECT_NEAR(back[i], raw[i], 1e-12);
  const std::vector<double> flat(4, 7.0);
  const SeriesDataset c = minmax_scale(flat);
  for (double v : c.values) EXPECT_EQ(v, 0.5);
  EXPECT_EQ(unscale(c, c.values), flat);
}

TEST(Golden, MackeyGlassSeries) {
  std::ostringstream out;
  write_series_csv(out, mackey_glass_raw({}));
  EXPECT_EQ(out.str(), slurp(kGolden / "mackey_glass.csv"));
}

TEST(Golden, Narma10Series) {
  std::ostringstream out;
  write_series_csv(out, narma10(4000, 1).raw_outputs);
  EXPECT_EQ(out.str(), slurp(kGolden / "narma10.csv"));
}
