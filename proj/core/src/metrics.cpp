// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#include "tricity/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <nlohmann/json.hpp>

#include "tricity/parallel.hpp"

namespace tricity {

Align parse_align(const std::string& s) {
  if (s == "none") return Align::None;
  if (s == "median") return Align::Median;
  throw ConfigError("unknown alignment '" + s + "' (use none or median)");
}

DepthMetrics depth_metrics(const HeightGrid& pred, const HeightGrid& gt, Align align) {
  if (pred.width != gt.width || pred.height != gt.height)
    throw DomainError("depth_metrics: grids differ in size");
  if (pred.crs != Crs::Local && gt.crs != Crs::Local && pred.crs != gt.crs)
    throw DomainError("depth_metrics: grids use different CRSs");
  std::vector<double> diff;  // gt - pred
  diff.reserve(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const float p = pred.values[i], g = gt.values[i];
    if (pred.is_nodata(p) || gt.is_nodata(g) || !std::isfinite(p) || !std::isfinite(g)) continue;
    diff.push_back(double(g) - double(p));
  }
  if (diff.empty()) throw DomainError("depth_metrics: no pixel is valid in both grids");
  DepthMetrics m;
  m.valid_count = diff.size();
  m.valid_fraction = double(diff.size()) / double(pred.size());
  if (align == Align::Median) {
    std::vector<double> s = diff;
    const std::size_t h = s.size() / 2;
    std::nth_element(s.begin(), s.begin() + h, s.end());
    double med = s[h];
    if (s.size() % 2 == 0) med = 0.5 * (med + *std::max_element(s.begin(), s.begin() + h));
    m.offset = med;
  }
  std::vector<double> abs_err(diff.size()), sq(diff.size());
  std::size_t lt25 = 0, lt75 = 0;
  for (std::size_t i = 0; i < diff.size(); ++i) {
    const double e = std::abs(diff[i] - m.offset);
    abs_err[i] = e;
    sq[i] = e * e;
    lt25 += e < 2.5;
    lt75 += e < 7.5;
  }
  const double n = double(diff.size());
  m.mae = pairwise_sum(abs_err) / n;
  m.rmse = std::sqrt(pairwise_sum(sq) / n);
  m.pct_lt_2_5 = 100.0 * double(lt25) / n;
  m.pct_lt_7_5 = 100.0 * double(lt75) / n;
  return m;
}

double psnr(const Image& pred, const Image& gt) {
  if (!pred.same_shape(gt)) throw DomainError("psnr: image shape mismatch");
  if (pred.data.empty()) throw DomainError("psnr: empty image");
  std::vector<double> sq(pred.data.size());
  for (std::size_t i = 0; i < sq.size(); ++i) {
    const double d = pred.data[i] - gt.data[i];
    sq[i] = d * d;
  }
  const double mse = pairwise_sum(sq) / double(sq.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

namespace {

nlohmann::ordered_json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

}  // namespace

std::string metrics_json(const DepthMetrics& m) {
  nlohmann::ordered_json j;
  j["mae"] = number(m.mae);
  j["rmse"] = number(m.rmse);
  j["pct_lt_2_5"] = number(m.pct_lt_2_5);
  j["pct_lt_7_5"] = number(m.pct_lt_7_5);
  j["valid_fraction"] = number(m.valid_fraction);
  j["valid_count"] = m.valid_count;
  j["offset"] = number(m.offset);
  return j.dump();
}

}  // namespace tricity
