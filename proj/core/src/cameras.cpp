// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#include "tricity/cameras.hpp"

#include <algorithm>
#include <cmath>

namespace tricity {

Mat3 Pose::rotation() const {
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  const double cr = std::cos(roll), sr = std::sin(roll);
  Mat3 rz, rx, ry;
  rz << cy, -sy, 0, sy, cy, 0, 0, 0, 1;
  rx << 1, 0, 0, 0, cp, -sp, 0, sp, cp;
  ry << cr, 0, sr, 0, 1, 0, -sr, 0, cr;
  return rz * rx * ry;
}

int camera_width(const CameraSpec& cam) {
  return std::visit([](const auto& c) { return c.width; }, cam);
}

int camera_height(const CameraSpec& cam) {
  return std::visit([](const auto& c) { return c.height; }, cam);
}

void validate(const CameraSpec& cam) {
  if (camera_width(cam) < 1 || camera_height(cam) < 1)
    throw DomainError("camera image size must be at least 1x1");
  if (const auto* o = std::get_if<OrthographicCamera>(&cam)) {
    if (!(o->extent > 0.0)) throw DomainError("orthographic extent must be positive");
  } else if (const auto* p = std::get_if<PerspectiveCamera>(&cam)) {
    if (!(p->fov_deg > 0.0 && p->fov_deg < 180.0))
      throw DomainError("perspective fov must lie in (0, 180) degrees");
  } else if (const auto* q = std::get_if<PanoramaCamera>(&cam)) {
    if (!(q->yaw_span > 0.0 && q->yaw_span <= 2.0 * kPi))
      throw DomainError("panorama yaw_span must lie in (0, 2*pi]");
    if (!(q->pitch_span > 0.0 && q->pitch_span <= kPi))
      throw DomainError("panorama pitch_span must lie in (0, pi]");
  }
}

namespace {

Vec3 perspective_dir_cam(double u, double v, int w, int h, double fov_deg) {
  const double f = 0.5 * w / std::tan(0.5 * deg2rad(fov_deg));
  Vec3 d((u - 0.5 * w) / f, 1.0, -(v - 0.5 * h) / f);
  return d.normalized();
}

Vec3 panorama_dir_cam(double u, double v, const PanoramaCamera& c) {
  const double a = (u / c.width - 0.5) * c.yaw_span;
  const double p = (0.5 - v / c.height) * c.pitch_span;
  const double cp = std::cos(p);
  return Vec3(std::sin(a) * cp, std::cos(a) * cp, std::sin(p));
}

bool full_circle(double yaw_span) { return std::abs(yaw_span - 2.0 * kPi) < 1e-12; }

}  // namespace

Ray ray_at(const CameraSpec& cam, double u, double v) {
  if (const auto* o = std::get_if<OrthographicCamera>(&cam)) {
    const double x = o->center.x() - 0.5 * o->extent + u * o->extent / o->width;
    const double y = o->center.y() + 0.5 * o->extent - v * o->extent / o->height;
    return {Vec3(x, y, o->altitude), Vec3(0.0, 0.0, -1.0)};
  }
  if (const auto* p = std::get_if<PerspectiveCamera>(&cam)) {
    Vec3 d = p->pose.rotation() * perspective_dir_cam(u, v, p->width, p->height, p->fov_deg);
    return {p->pose.position, d.normalized()};
  }
  const auto& q = std::get<PanoramaCamera>(cam);
  Vec3 d = q.pose.rotation() * panorama_dir_cam(u, v, q);
  return {q.pose.position, d.normalized()};
}

RayBatch make_rays(const CameraSpec& cam) {
  validate(cam);
  RayBatch batch;
  batch.width = camera_width(cam);
  batch.height = camera_height(cam);
  const std::size_t n = static_cast<std::size_t>(batch.width) * batch.height;
  batch.origins.resize(n);
  batch.directions.resize(n);
  for (int y = 0; y < batch.height; ++y) {
    for (int x = 0; x < batch.width; ++x) {
      const Ray r = ray_at(cam, x + 0.5, y + 0.5);
      const std::size_t i = static_cast<std::size_t>(y) * batch.width + x;
      batch.origins[i] = r.origin;
      batch.directions[i] = r.direction;
    }
  }
  return batch;
}

std::optional<Vec2> panorama_pixel(const PanoramaCamera& cam, const Vec3& direction) {
  const Vec3 d = cam.pose.rotation().transpose() * direction.normalized();
  const double p = std::asin(std::clamp(d.z(), -1.0, 1.0));
  const double a = std::atan2(d.x(), d.y());
  if (std::abs(p) > 0.5 * cam.pitch_span) return std::nullopt;
  if (!full_circle(cam.yaw_span) && std::abs(a) > 0.5 * cam.yaw_span) return std::nullopt;
  double u = (a / cam.yaw_span + 0.5) * cam.width;
  if (full_circle(cam.yaw_span)) {
    u = std::fmod(u, static_cast<double>(cam.width));
    if (u < 0.0) u += cam.width;
  }
  const double v = (0.5 - p / cam.pitch_span) * cam.height;
  return Vec2(u, v);
}

bool sample_equirect(const Image& pano, double u, double v, bool wrap, double* out) {
  if (!(v >= 0.0 && v <= pano.height)) return false;
  const double x = u - 0.5;
  const double y = std::clamp(v - 0.5, 0.0, static_cast<double>(pano.height - 1));
  const double fx0 = std::floor(x);
  const double tx = x - fx0;
  const int y0 = std::min(static_cast<int>(y), pano.height - 1);
  const int y1 = std::min(y0 + 1, pano.height - 1);
  const double ty = y - y0;
  int x0 = static_cast<int>(fx0);
  int x1 = x0 + 1;
  if (wrap) {
    x0 = ((x0 % pano.width) + pano.width) % pano.width;
    x1 = ((x1 % pano.width) + pano.width) % pano.width;
  } else {
    x0 = std::clamp(x0, 0, pano.width - 1);
    x1 = std::clamp(x1, 0, pano.width - 1);
  }
  for (int c = 0; c < pano.channels; ++c) {
    const double top = (1.0 - tx) * pano.at(x0, y0, c) + tx * pano.at(x1, y0, c);
    const double bot = (1.0 - tx) * pano.at(x0, y1, c) + tx * pano.at(x1, y1, c);
    out[c] = (1.0 - ty) * top + ty * bot;
  }
  return true;
}

PerspectiveCrop pano_to_perspective(const Image& pano, double yaw, double pitch, double fov_deg,
                                    int out_w, int out_h, double yaw_span, double pitch_span) {
  if (pano.empty()) throw DomainError("pano_to_perspective: empty panorama");
  PerspectiveCamera view;
  view.pose.yaw = yaw;
  view.pose.pitch = pitch;
  view.fov_deg = fov_deg;
  view.width = out_w;
  view.height = out_h;
  validate(view);

  PanoramaCamera geom;
  geom.yaw_span = yaw_span;
  geom.pitch_span = pitch_span;
  geom.width = pano.width;
  geom.height = pano.height;
  const bool wrap = full_circle(yaw_span);

  PerspectiveCrop crop{Image(out_w, out_h, pano.channels), Image(out_w, out_h, 1)};
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      const Ray r = ray_at(view, x + 0.5, y + 0.5);
      const auto uv = panorama_pixel(geom, r.direction);
      if (!uv) continue;
      if (sample_equirect(pano, uv->x(), uv->y(), wrap, &crop.image.at(x, y, 0)))
        crop.valid.at(x, y) = 1.0;
    }
  }
  return crop;
}

TrainingView sample_training_view(std::mt19937_64& rng, const TrainingViewSamplerConfig& cfg) {
  std::uniform_real_distribution<double> yaw(cfg.yaw_min_deg, cfg.yaw_max_deg);
  std::uniform_real_distribution<double> pitch(cfg.pitch_min_deg, cfg.pitch_max_deg);
  std::uniform_int_distribution<std::size_t> pick(0, cfg.fovs_deg.size() - 1);
  TrainingView v;
  v.yaw = deg2rad(yaw(rng));
  v.pitch = deg2rad(pitch(rng));
  v.roll = 0.0;
  v.fov_deg = cfg.fovs_deg[pick(rng)];
  return v;
}

PerspectiveCrop training_crop(const TrainingViewSamplerConfig& cfg, const Image& pano,
                              const TrainingView& view, int out_w, int out_h, double yaw_span,
                              double pitch_span) {
  if (std::find(cfg.fovs_deg.begin(), cfg.fovs_deg.end(), view.fov_deg) == cfg.fovs_deg.end())
    throw DomainError("fov " + std::to_string(view.fov_deg) +
                      " is not in the sampler's admissible set");
  return pano_to_perspective(pano, view.yaw, view.pitch, view.fov_deg, out_w, out_h, yaw_span,
                             pitch_span);
}

}  // namespace tricity
