// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#include "tricity/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace tricity {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok |= it.key() == a;
    if (!ok) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

template <class T>
void get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

Vec3 vec3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("expected [x, y, z]");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Pose pose_from(const json& j) {
  Pose p;
  if (j.contains("position")) p.position = vec3(j["position"]);
  get(j, "yaw", p.yaw);
  get(j, "pitch", p.pitch);
  get(j, "roll", p.roll);
  return p;
}

json pose_to(const Pose& p) {
  return {{"position", {p.position.x(), p.position.y(), p.position.z()}},
          {"yaw", p.yaw}, {"pitch", p.pitch}, {"roll", p.roll}};
}

CameraSpec camera_from(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "orthographic") {
    check_keys(j, {"type", "center", "extent", "altitude", "width", "height"}, "orthographic camera");
    OrthographicCamera c;
    if (j.contains("center")) c.center = Vec2(j["center"].at(0).get<double>(), j["center"].at(1).get<double>());
    get(j, "extent", c.extent);
    get(j, "altitude", c.altitude);
    get(j, "width", c.width);
    get(j, "height", c.height);
    return c;
  }
  if (type == "perspective") {
    check_keys(j, {"type", "position", "yaw", "pitch", "roll", "fov_deg", "width", "height"},
               "perspective camera");
    PerspectiveCamera c;
    c.pose = pose_from(j);
    get(j, "fov_deg", c.fov_deg);
    get(j, "width", c.width);
    get(j, "height", c.height);
    return c;
  }
  if (type == "panorama") {
    check_keys(j, {"type", "position", "yaw", "pitch", "roll", "yaw_span", "pitch_span", "width", "height"},
               "panorama camera");
    PanoramaCamera c;
    c.pose = pose_from(j);
    get(j, "yaw_span", c.yaw_span);
    get(j, "pitch_span", c.pitch_span);
    get(j, "width", c.width);
    get(j, "height", c.height);
    return c;
  }
  throw ConfigError("unknown camera type '" + type + "'");
}

json camera_to(const CameraSpec& cam) {
  return std::visit(
      [](const auto& c) -> json {
        using T = std::decay_t<decltype(c)>;
        json j;
        if constexpr (std::is_same_v<T, OrthographicCamera>) {
          j = {{"type", "orthographic"}, {"center", {c.center.x(), c.center.y()}},
               {"extent", c.extent}, {"altitude", c.altitude}};
        } else if constexpr (std::is_same_v<T, PerspectiveCamera>) {
          j = pose_to(c.pose);
          j["type"] = "perspective";
          j["fov_deg"] = c.fov_deg;
        } else {
          j = pose_to(c.pose);
          j["type"] = "panorama";
          j["yaw_span"] = c.yaw_span;
          j["pitch_span"] = c.pitch_span;
        }
        j["width"] = c.width;
        j["height"] = c.height;
        return j;
      },
      cam);
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

json parse(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

void Config::validate() const {
  extent.validate();
  shape.validate();
  fit.validate();
  for (const auto& c : cameras) tricity::validate(c);
  if (threads < 0) throw ConfigError("threads must be >= 0");
}

Config Config::defaults() {
  Config c;
  c.fit.march.jitter = true;
  return c;
}

Config Config::from_json(const std::string& text) {
  const json j = parse(text, "config");
  Config c = defaults();
  try {
    check_keys(j, {"extent", "field", "init", "march", "weights", "gravity", "fit", "perspective",
                   "cameras", "paths", "seed", "threads"},
               "config");
    if (j.contains("extent")) {
      const json& e = j["extent"];
      check_keys(e, {"base_side", "token_grid", "pad_tokens", "z_min"}, "extent");
      get(e, "base_side", c.extent.base_side);
      get(e, "token_grid", c.extent.token_grid);
      get(e, "pad_tokens", c.extent.pad_tokens);
      get(e, "z_min", c.extent.z_min);
    }
    if (j.contains("field")) {
      const json& f = j["field"];
      check_keys(f, {"res", "channels", "hidden", "code_dim", "sky_h", "sky_w"}, "field");
      get(f, "res", c.shape.res);
      get(f, "channels", c.shape.channels);
      get(f, "hidden", c.shape.hidden);
      get(f, "code_dim", c.shape.code_dim);
      get(f, "sky_h", c.shape.sky_h);
      get(f, "sky_w", c.shape.sky_w);
    }
    if (j.contains("init")) {
      const json& f = j["init"];
      check_keys(f, {"plane_std", "density_bias", "sky_value"}, "init");
      get(f, "plane_std", c.init.plane_std);
      get(f, "density_bias", c.init.density_bias);
      get(f, "sky_value", c.init.sky_value);
    }
    if (j.contains("march")) {
      const json& m = j["march"];
      check_keys(m, {"n_samples", "t_near", "t_far", "jitter", "depth_valid_threshold", "early_stop"},
                 "march");
      get(m, "n_samples", c.fit.march.n_samples);
      if (m.contains("t_near")) c.fit.march.t_near = m["t_near"].get<double>();
      if (m.contains("t_far")) c.fit.march.t_far = m["t_far"].get<double>();
      get(m, "jitter", c.fit.march.jitter);
      get(m, "depth_valid_threshold", c.fit.march.depth_valid_threshold);
      get(m, "early_stop", c.fit.march.early_stop);
    }
    if (j.contains("weights")) {
      const json& w = j["weights"];
      check_keys(w, {"rgb", "grav", "sky_op", "sky_l1", "depth", "grad"}, "weights");
      auto& lw = c.fit.weights;
      get(w, "rgb", lw.rgb);
      get(w, "grav", lw.grav);
      get(w, "sky_op", lw.sky_op);
      get(w, "sky_l1", lw.sky_l1);
      get(w, "depth", lw.depth);
      get(w, "grad", lw.grad);
    }
    if (j.contains("gravity")) {
      const json& g = j["gravity"];
      check_keys(g, {"samples", "delta_max", "epsilon"}, "gravity");
      get(g, "samples", c.fit.gravity.samples);
      if (g.contains("delta_max")) c.fit.gravity.delta_max = g["delta_max"].get<double>();
      get(g, "epsilon", c.fit.gravity.epsilon);
    }
    if (j.contains("fit")) {
      const json& f = j["fit"];
      check_keys(f, {"iterations", "lr", "beta1", "beta2", "eps", "group_lr_scale", "lr_final_ratio",
                     "rays_per_batch", "patch_size", "patch_stride_max", "satellite_opaque",
                     "perspective_size", "view_mix", "log_every",
                     "snapshot_every"},
                 "fit");
      auto& fc = c.fit;
      get(f, "iterations", fc.iterations);
      get(f, "lr", fc.adam.lr);
      get(f, "beta1", fc.adam.beta1);
      get(f, "beta2", fc.adam.beta2);
      get(f, "eps", fc.adam.eps);
      get(f, "group_lr_scale", fc.adam.group_lr_scale);
      get(f, "lr_final_ratio", fc.lr_final_ratio);
      get(f, "rays_per_batch", fc.rays_per_batch);
      get(f, "patch_size", fc.patch_size);
      get(f, "patch_stride_max", fc.patch_stride_max);
      get(f, "satellite_opaque", fc.satellite_opaque);
      get(f, "perspective_size", fc.perspective_size);
      get(f, "view_mix", fc.view_mix);
      get(f, "log_every", fc.log_every);
      get(f, "snapshot_every", fc.snapshot_every);
    }
    if (j.contains("perspective")) {
      const json& p = j["perspective"];
      check_keys(p, {"yaw_min_deg", "yaw_max_deg", "pitch_min_deg", "pitch_max_deg", "fovs_deg",
                     "render_size"},
                 "perspective");
      auto& pc = c.fit.perspective;
      get(p, "yaw_min_deg", pc.yaw_min_deg);
      get(p, "yaw_max_deg", pc.yaw_max_deg);
      get(p, "pitch_min_deg", pc.pitch_min_deg);
      get(p, "pitch_max_deg", pc.pitch_max_deg);
      get(p, "fovs_deg", pc.fovs_deg);
      get(p, "render_size", pc.render_size);
    }
    for (const json& cj : j.value("cameras", json::array())) c.cameras.push_back(camera_from(cj));
    if (j.contains("paths")) {
      const json& p = j["paths"];
      check_keys(p, {"data_dir", "checkpoint", "out_dir"}, "paths");
      get(p, "data_dir", c.paths.data_dir);
      get(p, "checkpoint", c.paths.checkpoint);
      get(p, "out_dir", c.paths.out_dir);
    }
    get(j, "seed", c.fit.seed);
    get(j, "threads", c.threads);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

Config Config::load(const std::filesystem::path& path) { return from_json(slurp(path)); }

std::string Config::to_json() const {
  json j;
  j["extent"] = {{"base_side", extent.base_side}, {"token_grid", extent.token_grid},
                 {"pad_tokens", extent.pad_tokens}, {"z_min", extent.z_min}};
  j["field"] = {{"res", shape.res}, {"channels", shape.channels}, {"hidden", shape.hidden},
                {"code_dim", shape.code_dim}, {"sky_h", shape.sky_h}, {"sky_w", shape.sky_w}};
  j["init"] = {{"plane_std", init.plane_std}, {"density_bias", init.density_bias},
               {"sky_value", init.sky_value}};
  const auto& m = fit.march;
  j["march"] = {{"n_samples", m.n_samples}, {"jitter", m.jitter},
                {"depth_valid_threshold", m.depth_valid_threshold}, {"early_stop", m.early_stop}};
  if (m.t_near) j["march"]["t_near"] = *m.t_near;
  if (m.t_far) j["march"]["t_far"] = *m.t_far;
  const auto& w = fit.weights;
  j["weights"] = {{"rgb", w.rgb}, {"grav", w.grav}, {"sky_op", w.sky_op},
                  {"sky_l1", w.sky_l1}, {"depth", w.depth}, {"grad", w.grad}};
  j["gravity"] = {{"samples", fit.gravity.samples}, {"epsilon", fit.gravity.epsilon}};
  if (fit.gravity.delta_max) j["gravity"]["delta_max"] = *fit.gravity.delta_max;
  j["fit"] = {{"iterations", fit.iterations}, {"lr", fit.adam.lr}, {"beta1", fit.adam.beta1},
              {"beta2", fit.adam.beta2}, {"eps", fit.adam.eps},
              {"group_lr_scale", fit.adam.group_lr_scale}, {"lr_final_ratio", fit.lr_final_ratio},
              {"rays_per_batch", fit.rays_per_batch}, {"patch_size", fit.patch_size},
              {"patch_stride_max", fit.patch_stride_max},
              {"satellite_opaque", fit.satellite_opaque},
              {"perspective_size", fit.perspective_size}, {"view_mix", fit.view_mix},
              {"log_every", fit.log_every}, {"snapshot_every", fit.snapshot_every}};
  const auto& p = fit.perspective;
  j["perspective"] = {{"yaw_min_deg", p.yaw_min_deg}, {"yaw_max_deg", p.yaw_max_deg},
                      {"pitch_min_deg", p.pitch_min_deg}, {"pitch_max_deg", p.pitch_max_deg},
                      {"fovs_deg", p.fovs_deg}, {"render_size", p.render_size}};
  json cams = json::array();
  for (const auto& c : cameras) cams.push_back(camera_to(c));
  j["cameras"] = cams;
  j["paths"] = {{"data_dir", paths.data_dir}, {"checkpoint", paths.checkpoint},
                {"out_dir", paths.out_dir}};
  j["seed"] = fit.seed;
  j["threads"] = threads;
  return j.dump(2);
}

CameraSpec camera_from_json(const std::string& text) {
  const json j = parse(text, "camera");
  try {
    CameraSpec c = camera_from(j);
    validate(c);
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("camera: ") + e.what());
  }
}

std::string camera_to_json(const CameraSpec& cam) { return camera_to(cam).dump(); }

std::vector<CameraSpec> load_trajectory(const std::filesystem::path& path) {
  const json j = parse(slurp(path), "trajectory");
  try {
    check_keys(j, {"camera", "poses"}, "trajectory");
    const CameraSpec tmpl = camera_from(j.at("camera"));
    std::vector<CameraSpec> out;
    for (const json& pj : j.at("poses")) {
      check_keys(pj, {"position", "yaw", "pitch", "roll"}, "trajectory pose");
      const Pose pose = pose_from(pj);
      CameraSpec c = tmpl;
      std::visit(
          [&](auto& cam) {
            using T = std::decay_t<decltype(cam)>;
            if constexpr (std::is_same_v<T, OrthographicCamera>) {
              cam.center = pose.position.head<2>();
              cam.altitude = pose.position.z();
            } else {
              cam.pose = pose;
            }
          },
          c);
      validate(c);
      out.push_back(c);
    }
    if (out.empty()) throw ConfigError("trajectory has no poses");
    return out;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("trajectory: ") + e.what());
  }
}

}  // namespace tricity
