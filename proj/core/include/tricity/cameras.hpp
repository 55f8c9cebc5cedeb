// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <random>
#include <variant>
#include <vector>

#include "tricity/common.hpp"
#include "tricity/image.hpp"

namespace tricity {

/// Camera pose in the scene frame (+z up). At zero angles the camera looks
/// along +y with +x to its right. Rotation is applied yaw (about +z), then
/// pitch (positive looks up), then roll (about the viewing axis).
struct Pose {
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;
  double pitch = 0.0;
  double roll = 0.0;

  Mat3 rotation() const;
};

struct OrthographicCamera {
  Vec2 center = Vec2::Zero();
  double extent = 50.0;  // meters, side of the square footprint
  double altitude = 60.0;
  int width = 256;
  int height = 256;
};

struct PerspectiveCamera {
  Pose pose;
  double fov_deg = 90.0;  // horizontal
  int width = 256;
  int height = 256;
};

/// Equirectangular panorama, horizon-centered.
struct PanoramaCamera {
  Pose pose;
  double yaw_span = 2.0 * kPi;
  double pitch_span = kPi / 2.0;
  int width = 512;
  int height = 128;
};

using CameraSpec = std::variant<OrthographicCamera, PerspectiveCamera, PanoramaCamera>;

int camera_width(const CameraSpec& cam);
int camera_height(const CameraSpec& cam);
void validate(const CameraSpec& cam);

/// One ray per pixel, row-major (pixel index = y * width + x).
struct RayBatch {
  int width = 0;
  int height = 0;
  std::vector<Vec3> origins;
  std::vector<Vec3> directions;

  std::size_t size() const { return directions.size(); }
};

RayBatch make_rays(const CameraSpec& cam);

/// Ray through the continuous image coordinate (u, v); pixel (x, y) has its
/// center at (x + 0.5, y + 0.5).
struct Ray {
  Vec3 origin;
  Vec3 direction;
};
Ray ray_at(const CameraSpec& cam, double u, double v);

/// Inverse of the panorama mapping: continuous (u, v) for a world direction.
/// Returns nullopt when the direction falls outside the pitch span (or the
/// yaw span for partial panoramas).
std::optional<Vec2> panorama_pixel(const PanoramaCamera& cam, const Vec3& direction);

/// Gnomonic crop of an equirectangular panorama. yaw/pitch are relative to
/// the panorama heading. `valid` receives 1 where the crop pixel maps inside
/// the panorama's pitch span and 0 elsewhere (invalid pixels are zero).
struct PerspectiveCrop {
  Image image;
  Image valid;
};
PerspectiveCrop pano_to_perspective(const Image& pano, double yaw, double pitch, double fov_deg,
                                    int out_w, int out_h, double yaw_span = 2.0 * kPi,
                                    double pitch_span = kPi / 2.0);

/// Bilinear sample of an equirectangular image at continuous (u, v) with
/// horizontal wrap when the panorama is a full circle. Writes `channels`
/// values into out; returns false if v lies outside [0, height].
bool sample_equirect(const Image& pano, double u, double v, bool wrap, double* out);

struct TrainingViewSamplerConfig {
  double yaw_min_deg = -179.0;
  double yaw_max_deg = 179.0;
  double pitch_min_deg = -30.0;
  double pitch_max_deg = 30.0;
  std::vector<double> fovs_deg = {90.0, 105.0, 120.0};
  int render_size = 256;
};

struct TrainingView {
  double yaw = 0.0;    // radians
  double pitch = 0.0;  // radians
  double roll = 0.0;
  double fov_deg = 90.0;
};

TrainingView sample_training_view(std::mt19937_64& rng, const TrainingViewSamplerConfig& cfg = {});

/// pano_to_perspective restricted to the sampler's admissible field-of-view set.
PerspectiveCrop training_crop(const TrainingViewSamplerConfig& cfg, const Image& pano,
                              const TrainingView& view, int out_w, int out_h,
                              double yaw_span = 2.0 * kPi, double pitch_span = kPi / 2.0);

}  // namespace tricity
