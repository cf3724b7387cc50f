// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "gsm/core/error.hpp"
#include "gsm/core/math.hpp"

namespace gsm {

// Triangles below this area (m^2) are degenerate for meter-scale content.
inline constexpr double kDegenerateArea = 1e-12;

// Local frame of a triangle: column 0 = normalized first edge (B - A),
// column 2 = face normal, column 1 = normal x column 0.
struct TriangleFrame {
  Vec3 origin = Vec3::Zero();  // centroid
  Mat3 axes = Mat3::Identity();
  Vec3 normal = Vec3::UnitZ();
};

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;

  // Reference (bind-time) state, recorded by bind_rest_state().
  std::vector<double> rest_areas;
  std::vector<TriangleFrame> rest_frames;

  // Per-face-corner texture coordinates; empty when the mesh has no UVs.
  std::vector<std::array<Vec2, 3>> uv_per_corner;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int face_count() const { return static_cast<int>(faces.size()); }
  bool has_uv() const { return !uv_per_corner.empty(); }
  bool has_rest_state() const { return rest_areas.size() == faces.size(); }

  void validate() const {
    for (const auto& f : faces)
      for (int k = 0; k < 3; ++k)
        if (f[k] < 0 || f[k] >= vertex_count()) throw OutOfBounds("face index out of range");
    if (has_uv() && uv_per_corner.size() != faces.size())
      throw ShapeMismatch("uv_per_corner size must match face count");
  }
};

inline Vec3 face_centroid(const TriMesh& m, int f) {
  const auto& t = m.faces[f];
  return (m.vertices[t[0]] + m.vertices[t[1]] + m.vertices[t[2]]) / 3.0;
}

inline double face_area(const TriMesh& m, int f) {
  const auto& t = m.faces[f];
  return 0.5 * (m.vertices[t[1]] - m.vertices[t[0]])
                   .cross(m.vertices[t[2]] - m.vertices[t[0]])
                   .norm();
}

inline TriangleFrame compute_frame(const TriMesh& m, int f) {
  if (f < 0 || f >= m.face_count()) throw OutOfBounds("compute_frame: bad face id");
  const auto& t = m.faces[f];
  const Vec3& a = m.vertices[t[0]];
  const Vec3& b = m.vertices[t[1]];
  const Vec3& c = m.vertices[t[2]];
  Vec3 cross = (b - a).cross(c - a);
  double area = 0.5 * cross.norm();
  if (area < kDegenerateArea) throw DegenerateTriangle("compute_frame: area below threshold");
  TriangleFrame fr;
  fr.origin = (a + b + c) / 3.0;
  fr.normal = cross.normalized();
  Vec3 e0 = (b - a).normalized();
  fr.axes.col(0) = e0;
  fr.axes.col(1) = fr.normal.cross(e0);
  fr.axes.col(2) = fr.normal;
  return fr;
}

// Records the current pose as the reference configuration for Eq-style
// area ratios; call once at bind time.
inline void bind_rest_state(TriMesh& m) {
  m.rest_areas.resize(m.faces.size());
  m.rest_frames.resize(m.faces.size());
  for (int f = 0; f < m.face_count(); ++f) {
    double a = face_area(m, f);
    if (a < kDegenerateArea) throw DegenerateTriangle("bind_rest_state: degenerate face");
    m.rest_areas[f] = a;
    m.rest_frames[f] = compute_frame(m, f);
  }
}

// (current_area / rest_area)^exponent. Exponent 0.5 keeps linear splat
// extent proportional under uniform scaling; 1.0 is the literal area ratio.
inline double area_scale_factor(const TriMesh& m, int f, double exponent = 0.5) {
  if (!m.has_rest_state()) throw MissingFrames("area_scale_factor: mesh has no rest state");
  if (f < 0 || f >= m.face_count()) throw OutOfBounds("area_scale_factor: bad face id");
  double cur = face_area(m, f);
  if (cur < kDegenerateArea) throw DegenerateTriangle("area_scale_factor: degenerate face");
  return std::pow(cur / m.rest_areas[f], exponent);
}

inline void transform_mesh(TriMesh& m, const Mat3& rot, const Vec3& trans) {
  for (auto& v : m.vertices) v = rot * v + trans;
}

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
  Vec3 hi = Vec3::Constant(std::numeric_limits<double>::lowest());
  void expand(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void expand(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  Vec3 extent() const { return hi - lo; }
  Vec3 center() const { return 0.5 * (lo + hi); }
  double diagonal() const { return extent().norm(); }
};

inline Aabb mesh_bounds(const TriMesh& m) {
  Aabb b;
  for (const auto& v : m.vertices) b.expand(v);
  return b;
}

// Area-weighted vertex normals (faces assumed counter-clockwise).
inline std::vector<Vec3> vertex_normals(const TriMesh& m) {
  std::vector<Vec3> n(m.vertices.size(), Vec3::Zero());
  for (const auto& f : m.faces) {
    Vec3 fn = (m.vertices[f[1]] - m.vertices[f[0]]).cross(m.vertices[f[2]] - m.vertices[f[0]]);
    for (int k = 0; k < 3; ++k) n[f[k]] += fn;
  }
  for (auto& v : n) {
    double len = v.norm();
    if (len > 0) v /= len;
  }
  return n;
}

}  // namespace gsm
