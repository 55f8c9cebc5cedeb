// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

namespace tricity {

enum class ParamGroup { Planes = 0, Decoder = 1, Sky = 2, Codes = 3 };

inline constexpr std::array<ParamGroup, 4> kAllGroups = {
    ParamGroup::Planes, ParamGroup::Decoder, ParamGroup::Sky, ParamGroup::Codes};

std::string_view group_name(ParamGroup g);

/// Named parameter groups of a tri-plane field. The same type holds
/// gradients and optimizer moments, so shapes always mirror each other.
struct ParamSet {
  std::vector<double> planes;
  std::vector<double> decoder;
  std::vector<double> sky;
  std::vector<double> codes;

  std::vector<double>& group(ParamGroup g);
  const std::vector<double>& group(ParamGroup g) const;

  ParamSet zeros_like() const;
  void set_zero();
  bool same_shape(const ParamSet& o) const;
  std::size_t total_size() const;

  /// this += scale * o
  void axpy(double scale, const ParamSet& o);
  /// Throws NumericError naming the first group holding a NaN/Inf.
  void check_finite(std::string_view what) const;
};

/// Adam optimizer state (first/second moments and step counter).
struct AdamState {
  ParamSet m;
  ParamSet v;
  long step = 0;

  static AdamState for_params(const ParamSet& p) { return {p.zeros_like(), p.zeros_like(), 0}; }
};

struct AdamConfig {
  double lr = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Per-group learning-rate multipliers (planes, decoder, sky, codes).
  std::array<double, 4> group_lr_scale = {1.0, 1.0, 1.0, 1.0};
};

/// One bias-corrected Adam update. Throws NumericError (naming the group)
/// on a non-finite gradient before touching any parameter.
void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state, const AdamConfig& cfg);

}  // namespace tricity
