// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "gsm/core/camera.hpp"
#include "gsm/core/math.hpp"
#include "gsm/core/mesh.hpp"
#include "gsm/core/shapes.hpp"
#include "gsm/core/surfel.hpp"

namespace gsm::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vec3 uniform_vec3(Rng& rng, double lo, double hi) {
  return Vec3(uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi));
}

inline Vec4 random_unit_quat(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec4 q(n(rng), n(rng), n(rng), n(rng));
  return quat_normalized(q);
}

inline Mat3 random_rotation(Rng& rng) { return quat_to_mat(random_unit_quat(rng)); }

// A camera at distance `radius` looking at `target`, azimuth/elevation in degrees.
inline Camera test_camera(const Vec3& target, double radius, double azimuth_deg,
                          double elevation_deg, int width, int height, double fov_deg = 45) {
  double az = deg2rad(azimuth_deg), el = deg2rad(elevation_deg);
  Vec3 eye = target + radius * Vec3(std::cos(el) * std::sin(az), std::cos(el) * std::cos(az),
                                    std::sin(el));
  return Camera::look_at(eye, target, Vec3(0, 0, 1), fov_deg, width, height);
}

// Random surfels inside a box in front of the given camera setup, attributes
// in the well-conditioned regime for gradient checks.
inline std::vector<RealizedSurfel> random_surfels(Rng& rng, int count, const Vec3& center,
                                                  double extent, double scale_lo,
                                                  double scale_hi) {
  std::vector<RealizedSurfel> out(count);
  for (auto& s : out) {
    s.position = center + uniform_vec3(rng, -extent, extent);
    s.rot = random_unit_quat(rng);
    s.scale = Vec2(uniform(rng, scale_lo, scale_hi), uniform(rng, scale_lo, scale_hi));
    s.color = Vec3(uniform(rng, 0.05, 0.95), uniform(rng, 0.05, 0.95), uniform(rng, 0.05, 0.95));
    s.opacity = uniform(rng, 0.2, 0.9);
    s.cls = uniform(rng, 0.0, 1.0);
  }
  return out;
}

class TempDir {
 public:
  explicit TempDir(const std::string& name) {
    path_ = std::filesystem::temp_directory_path() / ("gsm_test_" + name);
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace gsm::testing
