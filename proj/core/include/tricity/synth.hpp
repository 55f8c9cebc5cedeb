// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tricity/autodiff.hpp"
#include "tricity/cameras.hpp"
#include "tricity/field.hpp"
#include "tricity/geodata.hpp"
#include "tricity/renderer.hpp"

namespace tricity {

enum class PrimitiveKind { Slab, Box, Cylinder, Sphere };

/// Slab: z in [world bottom, z_top], full world footprint.
/// Box: center/size. Cylinder: vertical axis through center.xy, z in
/// [z0, z1]. Sphere: center/radius.
struct Primitive {
  PrimitiveKind kind = PrimitiveKind::Box;
  std::string name;
  Vec3 center = Vec3::Zero();
  Vec3 size = Vec3::Ones();
  double radius = 1.0;
  double z0 = 0.0, z1 = 1.0;
  double z_top = 0.0;
  double sigma = 45.0;
  std::array<double, 3> rgb{0.5, 0.5, 0.5};

  bool contains(const Vec3& x) const;
  /// Ray parameter interval inside the primitive (unclipped).
  std::optional<std::pair<double, double>> intersect(const Vec3& o, const Vec3& d,
                                                     const Vec3& world_lo) const;
  double top() const;
};

struct SkyModel {
  std::array<double, 3> zenith{0.45, 0.62, 0.90};
  std::array<double, 3> horizon{0.80, 0.84, 0.88};
  double azimuth_tint = 0.04;

  std::array<double, 3> color(const Vec3& d) const;
};

/// Analytic scene inside a world cube described by the same extent
/// arithmetic as the field.
struct SceneSpec {
  SceneExtent world;  // default L = 50, N = 2 -> 62.5 m cube
  std::vector<Primitive> primitives;
  SkyModel sky;

  void validate() const;
  double density(const Vec3& x) const;
  std::array<double, 3> color(const Vec3& x) const;
  /// Tallest primitive top, optionally ignoring primitives thinner than
  /// sigma_min (canopies).
  double tallest(double sigma_min = 0.0) const;

  static SceneSpec from_json(const std::string& text);
  std::string to_json() const;
  static SceneSpec load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

/// Ground slab, four buildings and a canopy sphere over a void, with its
/// trunk under one side. The canopy density stays below 1 so the true field
/// has zero gravity loss at eps = 1.
SceneSpec default_city_block();

/// Adapter used by the generic renderer.
struct AnalyticMedium {
  const SceneSpec* spec;
  double density(const Vec3& x) const { return spec->density(x); }
  std::array<double, 3> color(const Vec3& x) const { return spec->color(x); }
  std::array<double, 3> sky(const Vec3& d) const { return spec->sky.color(d); }
};

/// First-hit distance within the world cube, or nullopt on a miss.
std::optional<double> analytic_depth(const SceneSpec& spec, const Ray& ray);

struct SupervisionConfig {
  OrthographicCamera satellite{Vec2::Zero(), 50.0, 60.0, 256, 256};
  std::vector<Vec3> panorama_positions = {
      {-2.0, -4.0, 1.7}, {1.0, 1.0, 1.7}, {-3.0, 3.5, 1.7}, {8.0, 0.0, 1.7}};
  Vec3 heldout_position{-0.5, -1.0, 1.7};
  int pano_width = 512;
  int pano_height = 128;
  double pitch_span = kPi / 2.0;
  int gt_samples = 2048;
  /// Held-out satellite lattice (differs from the training one).
  int heldout_sat_size = 200;
  std::uint64_t seed = 0;  // randomizes panorama headings
};

struct SyntheticDataset {
  SceneSpec spec;
  ViewSet train;
  PanoramaView heldout_pano;
  OrthographicCamera heldout_sat;
  HeightGrid heldout_height;  // analytic heights on the held-out lattice
  HeightGrid train_height;    // analytic heights on the training lattice
};

/// Renders supervision from the analytic field: RGB via the renderer at a
/// high sample count, sky masks from analytic misses, and relative-depth
/// pseudo-labels 2 * depth + 5.
SyntheticDataset generate_supervision(const SceneSpec& spec, const SupervisionConfig& cfg);

HeightGrid analytic_height(const SceneSpec& spec, const OrthographicCamera& cam);

/// Directory of PNGs, float grids and manifest.json.
void write_dataset(const SyntheticDataset& ds, const std::filesystem::path& dir);
SyntheticDataset read_dataset(const std::filesystem::path& dir);

}  // namespace tricity
