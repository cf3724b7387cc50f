// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <vector>

#include "gsm/core/error.hpp"
#include "gsm/core/math.hpp"

namespace gsm {

struct Ray {
  Vec3 origin;
  Vec3 dir;  // unit length
};

// Pinhole camera with a rigid world-to-camera pose (x_cam = R * x_world + t).
// Camera space looks down +z; pixel (ix, iy) has its center at (ix+0.5, iy+0.5).
struct Camera {
  double fx = 1, fy = 1, cx = 0, cy = 0;
  int width = 0, height = 0;
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  Vec3 center() const { return -R.transpose() * t; }

  Vec3 to_camera(const Vec3& p) const { return R * p + t; }

  // px, py in continuous pixel coordinates.
  Ray ray(double px, double py) const {
    Vec3 d_cam((px - cx) / fx, (py - cy) / fy, 1.0);
    return {center(), (R.transpose() * d_cam).normalized()};
  }

  Ray pixel_ray(int ix, int iy) const { return ray(ix + 0.5, iy + 0.5); }

  // Returns false when the point is at or behind the camera plane.
  bool project(const Vec3& p, Vec2* pix, double* z_cam = nullptr) const {
    Vec3 pc = to_camera(p);
    if (z_cam) *z_cam = pc.z();
    if (pc.z() <= 0) return false;
    *pix = Vec2(fx * pc.x() / pc.z() + cx, fy * pc.y() / pc.z() + cy);
    return true;
  }

  void validate() const {
    if (fx <= 0 || fy <= 0) throw ConfigValidation("camera focal lengths must be positive");
    if (width <= 0 || height <= 0) throw ConfigValidation("camera size must be positive");
    Mat3 rtr = R.transpose() * R;
    if ((rtr - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-8 || R.determinant() < 0.5)
      throw ConfigValidation("camera rotation must be a proper rotation");
  }

  static Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fov_y_deg,
                        int width, int height) {
    Camera cam;
    cam.width = width;
    cam.height = height;
    cam.fy = 0.5 * height / std::tan(0.5 * deg2rad(fov_y_deg));
    cam.fx = cam.fy;
    cam.cx = 0.5 * width;
    cam.cy = 0.5 * height;
    Vec3 fwd = (target - eye).normalized();          // camera +z
    Vec3 right = fwd.cross(up).normalized();         // camera +x
    Vec3 down = fwd.cross(right).normalized();       // camera +y (image y grows down)
    Mat3 cam_to_world;
    cam_to_world.col(0) = right;
    cam_to_world.col(1) = down;
    cam_to_world.col(2) = fwd;
    cam.R = cam_to_world.transpose();
    cam.t = -cam.R * eye;
    return cam;
  }
};

// n cameras on a horizontal orbit around `target`, azimuth 0 first.
inline std::vector<Camera> orbit_cameras(int n, const Vec3& target, double radius,
                                         double elevation_deg, double fov_y_deg, int width,
                                         int height) {
  std::vector<Camera> cams;
  cams.reserve(n);
  double el = deg2rad(elevation_deg);
  for (int i = 0; i < n; ++i) {
    double az = 2.0 * kPi * i / n;
    Vec3 eye = target + radius * Vec3(std::cos(el) * std::sin(az), std::cos(el) * std::cos(az),
                                      std::sin(el));
    cams.push_back(Camera::look_at(eye, target, Vec3(0, 0, 1), fov_y_deg, width, height));
  }
  return cams;
}

}  // namespace gsm
