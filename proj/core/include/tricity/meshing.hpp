// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "tricity/common.hpp"
#include "tricity/field.hpp"

namespace tricity {

/// Densities at voxel centers: value(i, j, k) sits at origin + spacing*(i, j, k).
struct DensityGrid {
  int nx = 0, ny = 0, nz = 0;
  Vec3 origin = Vec3::Zero();
  double spacing = 1.0;
  std::vector<double> values;

  std::size_t index(int i, int j, int k) const {
    return (std::size_t(k) * ny + j) * nx + i;
  }
  double at(int i, int j, int k) const { return values[index(i, j, k)]; }
  double& at(int i, int j, int k) { return values[index(i, j, k)]; }
  Vec3 position(int i, int j, int k) const { return origin + spacing * Vec3(i, j, k); }
};

/// res^3 voxel centers spanning the cube [lo, lo + side]^3.
DensityGrid eval_density_grid(const std::function<double(const Vec3&)>& density, const Vec3& lo,
                              double side, int res);
/// Field density over its L_eff cube, shifted by `offset` in world space
/// (used to place tiles). The sky is never sampled.
DensityGrid eval_density_grid(const TriPlaneField& field, int res,
                              const Vec3& offset = Vec3::Zero());

struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::array<double, 3>> colors;  // per vertex, may be empty

  bool empty() const { return triangles.empty(); }
};

/// Isosurface sigma = tau. Inside is sigma > tau; triangles wind
/// counter-clockwise seen from outside (normals point toward lower density).
Mesh marching_cubes(const DensityGrid& grid, double tau = 2.0);

/// Per-vertex color from the field with a fixed illumination code.
void colorize(Mesh& mesh, const TriPlaneField& field, std::span<const double> code,
              const Vec3& offset = Vec3::Zero());

/// Averages overlapping tiles on a shared lattice into one grid. All tiles
/// must share the spacing and have origins on a common lattice.
DensityGrid stitch_tiles(const std::vector<DensityGrid>& tiles);

/// Signed enclosed volume (divergence theorem); positive for outward winding.
double mesh_volume(const Mesh& mesh);

enum class MeshFormat { Obj, Ply };
MeshFormat mesh_format_for(const std::filesystem::path& path);
void export_mesh(const Mesh& mesh, const std::filesystem::path& path);
void export_mesh(const Mesh& mesh, MeshFormat format, const std::filesystem::path& path);
/// Reads the binary PLY layout written by export_mesh.
Mesh read_ply(const std::filesystem::path& path);

}  // namespace tricity
