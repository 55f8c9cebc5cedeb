// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tricity/autodiff.hpp"
#include "tricity/cameras.hpp"
#include "tricity/field.hpp"

namespace tricity {

struct Paths {
  std::string data_dir;
  std::string checkpoint;
  std::string out_dir;
};

/// Everything a command needs. Parsed from JSON; unknown keys are errors.
struct Config {
  SceneExtent extent;
  FieldShape shape;
  FieldInit init;
  FitConfig fit;
  std::vector<CameraSpec> cameras;
  Paths paths;
  int threads = 0;  // 0 = all logical cores

  void validate() const;

  static Config defaults();
  static Config from_json(const std::string& text);
  static Config load(const std::filesystem::path& path);
  std::string to_json() const;
};

/// {"type": "orthographic" | "perspective" | "panorama", ...}
CameraSpec camera_from_json(const std::string& text);
std::string camera_to_json(const CameraSpec& cam);

/// Trajectory file: {"camera": {...}, "poses": [{"position": [x,y,z],
/// "yaw": r, "pitch": r, "roll": r}, ...]}. Angles in radians. Each pose
/// replaces the template camera's pose (orthographic cameras take x, y as
/// center and z as altitude).
std::vector<CameraSpec> load_trajectory(const std::filesystem::path& path);

}  // namespace tricity
