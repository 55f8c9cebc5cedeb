// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <random>
#include <vector>

#include "tricity/field.hpp"
#include "tricity/image.hpp"
#include "tricity/params.hpp"

namespace tricity {

struct LossWeights {
  double rgb = 1.0;
  double grav = 3.5;
  double sky_op = 1.0;
  double sky_l1 = 1.0;
  double depth = 0.1;
  double grad = 0.5;  // gradient-matching weight inside the depth loss

  void validate() const;
};

struct GravityConfig {
  int samples = 1024;
  /// Maximum upward offset in meters; unset means 10% of the cube height.
  std::optional<double> delta_max;
  double epsilon = 1.0;

  void validate() const;
  double resolved_delta_max(const SceneExtent& extent) const;
};

/// A point and its upward offset dz in (0, delta_max].
struct GravityPair {
  Vec3 x;
  double dz = 0.0;
};

std::vector<GravityPair> sample_gravity_pairs(const SceneExtent& extent, const GravityConfig& cfg,
                                              std::mt19937_64& rng);

/// Mean of ReLU(sigma(x + dz) - sigma(x) - eps) for an arbitrary density.
template <class DensityFn>
double gravity_loss(const DensityFn& density, const std::vector<GravityPair>& pairs,
                    double epsilon) {
  if (pairs.empty()) return 0.0;
  std::vector<double> terms(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Vec3& x = pairs[i].x;
    const double up = density(Vec3(x.x(), x.y(), x.z() + pairs[i].dz));
    terms[i] = std::max(0.0, up - density(x) - epsilon);
  }
  double s = 0.0;
  for (double t : terms) s += t;
  return s / static_cast<double>(pairs.size());
}

/// Field version; adds `scale` times the loss gradient into grads (planes and
/// decoder) when grads is non-null.
double gravity_loss(const TriPlaneField& field, const std::vector<GravityPair>& pairs,
                    double epsilon, ParamSet* grads = nullptr, double scale = 1.0);

/// Value plus gradient with respect to the prediction (same shape).
struct LossValue {
  double value = 0.0;
  Image grad;
  bool flagged = false;  // degenerate fit / empty mask
};

struct ScaleShift {
  double s = 1.0;
  double t = 0.0;
  bool degenerate = false;
};

/// Least-squares (s, t) minimizing sum (s*pred + t - target)^2 over mask.
ScaleShift fit_scale_shift(const Image& pred, const Image& target, const Image* mask);

/// Mean aligned L1 plus lambda_grad times the forward-difference gradient
/// L1, both normalized by the valid pixel count. The gradient differentiates
/// through (s, t).
LossValue depth_loss(const Image& pred, const Image& target, const Image* mask,
                     double lambda_grad, ScaleShift* fitted = nullptr);

/// Mean squared error over valid pixels and channels. mask is single-channel.
LossValue photometric_loss(const Image& pred, const Image& gt, const Image* mask);

/// Mean BCE with t_out as the probability of sky.
LossValue sky_opacity_bce(const Image& t_out, const Image& sky_mask);

/// Mean absolute error over sky pixels and channels.
LossValue sky_masked_l1(const Image& pred, const Image& gt, const Image& sky_mask);

struct LossTerms {
  double rgb = 0.0;
  double grav = 0.0;
  double sky_op = 0.0;
  double sky_l1 = 0.0;
  double depth = 0.0;
};

double total_loss(const LossTerms& terms, const LossWeights& weights);

struct LossReport {
  LossTerms terms;
  double total = 0.0;
  ParamSet grads;
  bool depth_degenerate = false;
  bool sky_empty = false;
};

}  // namespace tricity
