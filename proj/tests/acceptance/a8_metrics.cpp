// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>
#include <sstream>

#include "acceptance.hpp"
#include "tricity/metrics.hpp"

namespace tricity::acceptance {

Outcome run_a8(const Options&) {
  std::mt19937_64 rng(808);
  std::normal_distribution<double> n(0.0, 4.0);
  std::uniform_real_distribution<double> u(0.0, 60.0);
  double worst_mae = 0, worst_rmse = 0, worst_pct = 0, worst_psnr = 0;
  for (int trial = 0; trial < 20; ++trial) {
    HeightGrid gt(40, 30), pred(40, 30);
    for (std::size_t i = 0; i < gt.values.size(); ++i) {
      gt.values[i] = float(u(rng));
      pred.values[i] = float(gt.values[i] + n(rng));
      if (i % 17 == 3) pred.values[i] = pred.nodata;
      if (i % 23 == 5) gt.values[i] = gt.nodata;
    }
    const DepthMetrics dm = depth_metrics(pred, gt);
    // Naive recomputation in long double.
    long double sa = 0, ss = 0;
    std::size_t c = 0, lt25 = 0, lt75 = 0;
    for (std::size_t i = 0; i < gt.values.size(); ++i) {
      if (std::isnan(gt.values[i]) || std::isnan(pred.values[i])) continue;
      const long double e = (long double)pred.values[i] - gt.values[i];
      sa += std::fabs(e);
      ss += e * e;
      lt25 += std::fabs(e) < 2.5L;
      lt75 += std::fabs(e) < 7.5L;
      ++c;
    }
    worst_mae = std::max(worst_mae, double(std::fabs(dm.mae - sa / c)));
    worst_rmse = std::max(worst_rmse, double(std::fabs(dm.rmse - std::sqrt(ss / c))));
    worst_pct = std::max({worst_pct, std::abs(dm.pct_lt_2_5 - 100.0 * lt25 / c),
                          std::abs(dm.pct_lt_7_5 - 100.0 * lt75 / c)});

    Image a(13, 11, 3), b(13, 11, 3);
    std::uniform_real_distribution<double> px(0.0, 1.0);
    for (std::size_t i = 0; i < a.data.size(); ++i) {
      a.data[i] = px(rng);
      b.data[i] = px(rng);
    }
    long double mse = 0;
    for (std::size_t i = 0; i < a.data.size(); ++i) mse += (long double)(a.data[i] - b.data[i]) * (a.data[i] - b.data[i]);
    mse /= a.data.size();
    worst_psnr = std::max(worst_psnr, std::abs(psnr(a, b) - double(10.0L * std::log10(1.0L / mse))));
  }

  HeightGrid gt(32, 32), pred(32, 32);
  std::uniform_int_distribution<int> q(0, 4096);
  for (std::size_t i = 0; i < gt.values.size(); ++i) {
    gt.values[i] = float(q(rng)) / 64.0f;
    pred.values[i] = gt.values[i] + 3.0f;
  }
  const DepthMetrics off = depth_metrics(pred, gt);
  const bool exact = off.mae == 3.0 && off.rmse == 3.0 && off.pct_lt_2_5 == 0.0 && off.pct_lt_7_5 == 100.0;

  Outcome o;
  o.pass = worst_mae <= 1e-12 && worst_rmse <= 1e-12 && worst_pct <= 1e-12 && worst_psnr <= 1e-9 && exact;
  std::ostringstream m;
  m << "max |dMAE|=" << worst_mae << " |dRMSE|=" << worst_rmse << " |dPct|=" << worst_pct
    << " (tol 1e-12), |dPSNR|=" << worst_psnr << " dB (tol 1e-9); +3 m offset -> (" << off.mae << ", "
    << off.rmse << ", " << off.pct_lt_2_5 << "%, " << off.pct_lt_7_5 << "%)";
  o.message = m.str();
  return o;
}

}  // namespace tricity::acceptance
