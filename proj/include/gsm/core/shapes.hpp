// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <map>

#include "gsm/core/mesh.hpp"

namespace gsm {

// Lat-long sphere with per-corner UVs (u = azimuth, v = polar angle).
// Faces: 2 * segments * (rings - 1); pole quads contribute one triangle each.
inline TriMesh make_uv_sphere(double radius, int segments, int rings, const Vec3& center = Vec3::Zero()) {
  TriMesh m;
  auto vertex_at = [&](int i, int j) -> Vec3 {  // i over rings, j over segments
    double v = double(i) / rings;
    double u = double(j) / segments;
    double theta = v * kPi;
    double phi = u * 2.0 * kPi;
    return center + radius * Vec3(std::sin(theta) * std::cos(phi),
                                  std::sin(theta) * std::sin(phi), std::cos(theta));
  };
  // Unshared grid vertices so the UV seam stays simple.
  std::vector<std::vector<int>> grid(rings + 1, std::vector<int>(segments + 1));
  for (int i = 0; i <= rings; ++i)
    for (int j = 0; j <= segments; ++j) {
      grid[i][j] = m.vertex_count();
      m.vertices.push_back(vertex_at(i, j));
    }
  auto uv_at = [&](int i, int j) { return Vec2(double(j) / segments, double(i) / rings); };
  for (int i = 0; i < rings; ++i)
    for (int j = 0; j < segments; ++j) {
      int v00 = grid[i][j], v10 = grid[i + 1][j], v01 = grid[i][j + 1], v11 = grid[i + 1][j + 1];
      if (i + 1 < rings) {  // the lower edge collapses at the south pole
        m.faces.push_back({v00, v10, v11});
        m.uv_per_corner.push_back({uv_at(i, j), uv_at(i + 1, j), uv_at(i + 1, j + 1)});
      }
      if (i > 0) {  // the upper edge collapses at the north pole
        m.faces.push_back({v00, v11, v01});
        m.uv_per_corner.push_back({uv_at(i, j), uv_at(i + 1, j + 1), uv_at(i, j + 1)});
      }
    }
  return m;
}

// Icosphere (no UVs): 20 * 4^subdiv faces.
inline TriMesh make_icosphere(double radius, int subdiv, const Vec3& center = Vec3::Zero()) {
  TriMesh m;
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0},
                         {0, -1, t}, {0, 1, t},  {0, -1, -t}, {0, 1, -t},
                         {t, 0, -1}, {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) m.vertices.push_back(p.normalized());
  m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
             {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
             {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
             {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdiv; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      int idx = m.vertex_count();
      m.vertices.push_back((m.vertices[a] + m.vertices[b]).normalized());
      midpoint[key] = idx;
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(m.faces.size() * 4);
    for (const auto& f : m.faces) {
      int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    m.faces = std::move(next);
  }
  for (auto& p : m.vertices) p = center + radius * p;
  return m;
}

// Planar grid in the z=0 plane spanning [0,sx] x [0,sy], with UVs.
inline TriMesh make_grid(double sx, double sy, int nx, int ny) {
  TriMesh m;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      m.vertices.push_back(Vec3(sx * i / nx, sy * j / ny, 0));
  auto vid = [&](int i, int j) { return j * (nx + 1) + i; };
  auto uv = [&](int i, int j) { return Vec2(double(i) / nx, double(j) / ny); };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      m.faces.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      m.uv_per_corner.push_back({uv(i, j), uv(i + 1, j), uv(i + 1, j + 1)});
      m.faces.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
      m.uv_per_corner.push_back({uv(i, j), uv(i + 1, j + 1), uv(i, j + 1)});
    }
  return m;
}

// Axis-aligned box, 12 faces, per-face UVs covering [0,1]^2 each.
inline TriMesh make_box(const Vec3& lo, const Vec3& hi) {
  TriMesh m;
  auto add_quad = [&](const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    int base = m.vertex_count();
    m.vertices.insert(m.vertices.end(), {a, b, c, d});
    m.faces.push_back({base, base + 1, base + 2});
    m.uv_per_corner.push_back({Vec2(0, 0), Vec2(1, 0), Vec2(1, 1)});
    m.faces.push_back({base, base + 2, base + 3});
    m.uv_per_corner.push_back({Vec2(0, 0), Vec2(1, 1), Vec2(0, 1)});
  };
  Vec3 p000(lo.x(), lo.y(), lo.z()), p100(hi.x(), lo.y(), lo.z());
  Vec3 p010(lo.x(), hi.y(), lo.z()), p110(hi.x(), hi.y(), lo.z());
  Vec3 p001(lo.x(), lo.y(), hi.z()), p101(hi.x(), lo.y(), hi.z());
  Vec3 p011(lo.x(), hi.y(), hi.z()), p111(hi.x(), hi.y(), hi.z());
  add_quad(p000, p010, p110, p100);  // z- (normal down)
  add_quad(p001, p101, p111, p011);  // z+
  add_quad(p000, p100, p101, p001);  // y-
  add_quad(p010, p011, p111, p110);  // y+
  add_quad(p000, p001, p011, p010);  // x-
  add_quad(p100, p110, p111, p101);  // x+
  return m;
}

}  // namespace gsm
