// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "tricity/cameras.hpp"
#include "tricity/field.hpp"
#include "tricity/losses.hpp"
#include "tricity/renderer.hpp"

namespace tricity {

struct SatelliteView {
  OrthographicCamera camera;
  Image rgb;
  std::optional<Image> depth_label;  // relative depth pseudo-label (any affine scale)
};

struct PanoramaView {
  PanoramaCamera camera;
  Image rgb;
  std::optional<Image> sky_mask;  // 1 = sky
};

/// Supervision for one scene. Illumination codes are indexed satellites
/// first, then panoramas; perspective crops reuse their panorama's code.
struct ViewSet {
  std::vector<SatelliteView> satellites;
  std::vector<PanoramaView> panoramas;

  int n_codes() const { return int(satellites.size() + panoramas.size()); }
  int satellite_code(std::size_t i) const { return int(i); }
  int panorama_code(std::size_t i) const { return int(satellites.size() + i); }
  void validate() const;
};

enum class ViewKind { Satellite, Panorama, Perspective };
std::string view_kind_name(ViewKind k);

/// One iteration's worth of supervision: rays on a width x height lattice
/// (random ray sets use height 1) with per-pixel targets.
struct Batch {
  ViewKind kind = ViewKind::Panorama;
  int code = 0;
  int width = 0;
  int height = 0;
  std::vector<Ray> rays;
  Image rgb;                          // targets, 3 channels
  Image mask;                         // 1 where rgb supervision is valid
  double rgb_scale = 1.0;             // 0.5 for perspective crops
  std::optional<Image> depth_label;   // satellite patches only
  std::optional<Image> sky_mask;      // panorama rays only
  std::vector<GravityPair> gravity;
};

/// Reusable per-ray tapes and per-chunk gradient buffers.
struct BatchWorkspace {
  std::vector<RayTape> tapes;
  std::vector<RayOutput> outputs;
  std::vector<ParamSet> partial;
};

/// Forward and (optionally) backward through render + losses for one batch.
/// Gradients are exact adjoints of the value that is returned.
LossReport evaluate_batch(const TriPlaneField& field, const Batch& batch,
                          const LossWeights& weights, const GravityConfig& gravity,
                          const MarchConfig& march, std::uint64_t jitter_seed, bool want_grads,
                          BatchWorkspace* ws = nullptr);

struct FitConfig {
  int iterations = 4000;
  AdamConfig adam;
  /// Learning rate decays exponentially to lr * lr_final_ratio.
  double lr_final_ratio = 0.1;
  int rays_per_batch = 256;
  int patch_size = 16;
  /// Satellite patches sample a patch_size^2 lattice with a random stride in
  /// [1, patch_stride_max]; 0 lets the lattice span the whole image.
  int patch_stride_max = 3;
  /// Satellite pixels never show sky: apply the opacity BCE to satellite
  /// patches against an all-zero sky mask.
  bool satellite_opaque = true;
  LossWeights weights;
  GravityConfig gravity;
  MarchConfig march;
  TrainingViewSamplerConfig perspective;
  int perspective_size = 64;  // crop resolution used for supervision
  /// Relative frequencies of satellite / panorama / perspective batches.
  std::array<double, 3> view_mix = {0.3, 0.5, 0.2};
  std::uint64_t seed = 0;
  int log_every = 50;
  int snapshot_every = 250;

  void validate() const;
};

struct FitLogRecord {
  int iteration = 0;
  ViewKind view = ViewKind::Panorama;
  LossTerms terms;
  double total = 0.0;
  double elapsed_s = 0.0;
};
std::string to_ndjson(const FitLogRecord& r);

struct FitCallbacks {
  std::function<void(const FitLogRecord&)> on_log;
  /// Where the last finite snapshot is written if the loss diverges.
  std::optional<std::filesystem::path> divergence_checkpoint;
};

/// Builds a fresh field whose code table matches the views, then optimizes
/// all parameters under the weighted loss.
TriPlaneField fit_scene(const ViewSet& views, const FieldShape& shape, const SceneExtent& extent,
                        const FitConfig& cfg, const FitCallbacks& cb = {},
                        const FieldInit& init = {});
/// Continues optimizing an existing field.
void fit_field(TriPlaneField& field, const ViewSet& views, const FitConfig& cfg,
               const FitCallbacks& cb = {});

/// Draws the batch for one iteration.
Batch sample_batch(const TriPlaneField& field, const ViewSet& views, const FitConfig& cfg,
                   std::mt19937_64& rng);

/// Mean of all illumination codes (used for held-out views).
std::vector<double> mean_code(const TriPlaneField& field);

}  // namespace tricity
