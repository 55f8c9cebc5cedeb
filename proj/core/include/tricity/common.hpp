// Copyright 2026 The tricity Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace tricity {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;

/// Base exception. `kind()` is a short machine-parsable class name that the
/// CLI prints on failure.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error("ConfigError", w) {}
};
struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error("DomainError", w) {}
};
struct IoError : Error {
  explicit IoError(const std::string& w) : Error("IoError", w) {}
};
struct FormatError : Error {
  explicit FormatError(const std::string& w) : Error("FormatError", w) {}
};
struct NumericError : Error {
  explicit NumericError(const std::string& w) : Error("NumericError", w) {}
};

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

}  // namespace tricity
