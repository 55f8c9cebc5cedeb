// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "tricity/geodata.hpp"
#include "tricity/image.hpp"

namespace tricity {

enum class Align { None, Median };
Align parse_align(const std::string& s);

struct DepthMetrics {
  double mae = 0.0;         // m
  double rmse = 0.0;        // m
  double pct_lt_2_5 = 0.0;  // % of valid pixels with error < 2.5 m
  double pct_lt_7_5 = 0.0;  // % of valid pixels with error < 7.5 m
  double valid_fraction = 0.0;
  std::size_t valid_count = 0;
  double offset = 0.0;  // added to pred before comparison (median alignment)
};

/// Pixels are valid where both grids hold data. Throws DomainError on a
/// lattice mismatch or when no pixel is valid.
DepthMetrics depth_metrics(const HeightGrid& pred, const HeightGrid& gt, Align align = Align::None);

/// 10 log10(1 / MSE) over all elements; +infinity for identical images.
double psnr(const Image& pred, const Image& gt);

/// Single-line JSON record; infinities are written as the string "inf".
std::string metrics_json(const DepthMetrics& m);

}  // namespace tricity
