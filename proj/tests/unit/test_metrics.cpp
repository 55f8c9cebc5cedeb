// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "tricity/metrics.hpp"

namespace tricity {
namespace {

HeightGrid random_grid(int w, int h, std::uint64_t seed, double nodata_frac = 0.0) {
  HeightGrid g(w, h);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  for (float& v : g.values) v = u(rng) < nodata_frac ? g.nodata : float(30.0 * u(rng));
  return g;
}

TEST(Metrics, IdenticalGrids) {
  const HeightGrid g = random_grid(20, 10, 1);
  const DepthMetrics m = depth_metrics(g, g);
  EXPECT_EQ(m.mae, 0.0);
  EXPECT_EQ(m.rmse, 0.0);
  EXPECT_EQ(m.pct_lt_2_5, 100.0);
  EXPECT_EQ(m.pct_lt_7_5, 100.0);
  EXPECT_EQ(m.valid_fraction, 1.0);
}

TEST(Metrics, ConstantOffset) {
  HeightGrid gt(16, 16, 5.0f), pred(16, 16, 8.0f);
  DepthMetrics m = depth_metrics(pred, gt);
  EXPECT_DOUBLE_EQ(m.mae, 3.0);
  EXPECT_DOUBLE_EQ(m.rmse, 3.0);
  EXPECT_EQ(m.pct_lt_2_5, 0.0);
  EXPECT_EQ(m.pct_lt_7_5, 100.0);
  m = depth_metrics(pred, gt, Align::Median);
  EXPECT_EQ(m.mae, 0.0);
  EXPECT_DOUBLE_EQ(m.offset, -3.0);
}

TEST(Metrics, MatchesNaiveRecomputation) {
  const HeightGrid gt = random_grid(40, 30, 2, 0.1), pred = random_grid(40, 30, 3, 0.1);
  const DepthMetrics m = depth_metrics(pred, gt);
  double sa = 0, s2 = 0;
  int n = 0, a = 0, b = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt.is_nodata(gt.values[i]) || pred.is_nodata(pred.values[i])) continue;
    const double e = std::abs(double(pred.values[i]) - double(gt.values[i]));
    sa += e;
    s2 += e * e;
    a += e < 2.5;
    b += e < 7.5;
    ++n;
  }
  EXPECT_EQ(m.valid_count, std::size_t(n));
  EXPECT_NEAR(m.mae, sa / n, 1e-12);
  EXPECT_NEAR(m.rmse, std::sqrt(s2 / n), 1e-12);
  EXPECT_NEAR(m.pct_lt_2_5, 100.0 * a / n, 1e-12);
  EXPECT_NEAR(m.pct_lt_7_5, 100.0 * b / n, 1e-12);
  EXPECT_NEAR(m.valid_fraction, double(n) / gt.size(), 1e-15);
  EXPECT_LE(m.mae, m.rmse);
  EXPECT_LE(m.pct_lt_2_5, m.pct_lt_7_5);
}

TEST(Metrics, MedianAlignmentIsOffsetInvariant) {
  const HeightGrid gt = random_grid(25, 25, 4), pred = random_grid(25, 25, 5);
  HeightGrid shifted = pred;
  for (float& v : shifted.values) v += 17.0f;
  const DepthMetrics a = depth_metrics(pred, gt, Align::Median);
  const DepthMetrics b = depth_metrics(shifted, gt, Align::Median);
  EXPECT_NEAR(a.mae, b.mae, 1e-5);
  EXPECT_NEAR(a.rmse, b.rmse, 1e-5);
}

TEST(Metrics, Errors) {
  HeightGrid a(4, 4), b(4, 5);
  EXPECT_THROW(depth_metrics(a, b), DomainError);
  HeightGrid c(4, 4, std::numeric_limits<float>::quiet_NaN());
  EXPECT_THROW(depth_metrics(a, c), DomainError);
  EXPECT_THROW(parse_align("mean"), ConfigError);
  EXPECT_EQ(parse_align("median"), Align::Median);
}

TEST(Metrics, Psnr) {
  Image a(10, 10, 3, 0.5), b(10, 10, 3, 0.6);
  EXPECT_NEAR(psnr(a, b), 20.0, 1e-9);
  EXPECT_TRUE(std::isinf(psnr(a, a)));
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 1);
  Image c(13, 7, 3), d(13, 7, 3);
  for (double& v : c.data) v = u(rng);
  for (double& v : d.data) v = u(rng);
  double se = 0;
  for (int y = 0; y < 7; ++y)
    for (int x = 0; x < 13; ++x)
      for (int ch = 0; ch < 3; ++ch) se += std::pow(c.at(x, y, ch) - d.at(x, y, ch), 2);
  EXPECT_NEAR(psnr(c, d), 10.0 * std::log10(1.0 / (se / (13 * 7 * 3))), 1e-9);
  EXPECT_THROW(psnr(a, Image(10, 9, 3)), DomainError);
}

TEST(Metrics, JsonRecord) {
  DepthMetrics m;
  m.mae = 1.25;
  m.rmse = std::numeric_limits<double>::infinity();
  const std::string s = metrics_json(m);
  EXPECT_NE(s.find("\"mae\":1.25"), std::string::npos) << s;
  EXPECT_NE(s.find("\"inf\""), std::string::npos) << s;
  EXPECT_EQ(s.find('\n'), std::string::npos);
}

}  // namespace
}  // namespace tricity
