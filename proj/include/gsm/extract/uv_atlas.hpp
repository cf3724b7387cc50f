// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <vector>

#include "gsm/core/mesh.hpp"

namespace gsm {

struct UvAtlasResult {
  TriMesh mesh;  // input mesh with uv_per_corner assigned
  struct Rect {
    Vec2 lo, hi;
  };
  std::vector<Rect> chart_rects;  // packed rectangles, gutters excluded
};

// Fallback chart atlas: faces are bucketed by dominant normal axis, split
// into edge-connected components, planar-projected and shelf-packed into
// [0,1]^2 with 2-texel gutters. External atlases (OBJ vt) are preferred when
// present; this exists so extracted meshes can always be textured.
inline UvAtlasResult auto_uv(const TriMesh& input, int atlas_res = 1024) {
  if (input.face_count() == 0) throw EmptyMesh("auto_uv: no faces");
  UvAtlasResult result;
  result.mesh = input;

  // bucket by dominant signed axis
  std::vector<int> bucket(input.face_count(), 0);
  for (int f = 0; f < input.face_count(); ++f) {
    const auto& t = input.faces[f];
    Vec3 n = (input.vertices[t[1]] - input.vertices[t[0]])
                 .cross(input.vertices[t[2]] - input.vertices[t[0]]);
    int axis = 0;
    for (int k = 1; k < 3; ++k)
      if (std::abs(n[k]) > std::abs(n[axis])) axis = k;
    bucket[f] = axis * 2 + (n[axis] >= 0 ? 0 : 1);
  }

  // connected components within buckets (shared-edge adjacency)
  std::map<std::pair<int, int>, std::vector<int>> edge_faces;
  for (int f = 0; f < input.face_count(); ++f)
    for (int k = 0; k < 3; ++k)
      edge_faces[std::minmax(input.faces[f][k], input.faces[f][(k + 1) % 3])].push_back(f);
  std::vector<int> chart_of(input.face_count(), -1);
  int chart_count = 0;
  for (int seed = 0; seed < input.face_count(); ++seed) {
    if (chart_of[seed] >= 0) continue;
    int chart = chart_count++;
    std::vector<int> stack = {seed};
    chart_of[seed] = chart;
    while (!stack.empty()) {
      int f = stack.back();
      stack.pop_back();
      for (int k = 0; k < 3; ++k) {
        auto key = std::minmax(input.faces[f][k], input.faces[f][(k + 1) % 3]);
        for (int g : edge_faces[key])
          if (chart_of[g] < 0 && bucket[g] == bucket[f]) {
            chart_of[g] = chart;
            stack.push_back(g);
          }
      }
    }
  }

  // planar projection per chart
  static const Vec3 axes[6] = {Vec3(1, 0, 0),  Vec3(-1, 0, 0), Vec3(0, 1, 0),
                               Vec3(0, -1, 0), Vec3(0, 0, 1),  Vec3(0, 0, -1)};
  struct Chart {
    std::vector<int> faces;
    std::vector<std::array<Vec2, 3>> local;  // projected corners
    Vec2 size = Vec2::Zero();
  };
  std::vector<Chart> charts(chart_count);
  for (int f = 0; f < input.face_count(); ++f) charts[chart_of[f]].faces.push_back(f);
  for (auto& chart : charts) {
    Vec3 a = axes[bucket[chart.faces.front()]];
    Vec3 helper = std::abs(a.z()) < 0.9 ? Vec3(0, 0, 1) : Vec3(1, 0, 0);
    Vec3 t1 = helper.cross(a).normalized();
    Vec3 t2 = a.cross(t1);
    Vec2 lo = Vec2::Constant(std::numeric_limits<double>::max());
    Vec2 hi = Vec2::Constant(std::numeric_limits<double>::lowest());
    for (int f : chart.faces) {
      std::array<Vec2, 3> corners;
      for (int k = 0; k < 3; ++k) {
        const Vec3& p = input.vertices[input.faces[f][k]];
        corners[k] = Vec2(t1.dot(p), t2.dot(p));
        lo = lo.cwiseMin(corners[k]);
        hi = hi.cwiseMax(corners[k]);
      }
      chart.local.push_back(corners);
    }
    for (auto& c : chart.local)
      for (auto& uv : c) uv -= lo;
    chart.size = (hi - lo).cwiseMax(1e-12);
  }

  // shelf packing at a shrinking global scale
  double gutter = 2.0 / atlas_res;
  double total_area = 0;
  for (const auto& c : charts) total_area += c.size.x() * c.size.y();
  double scale = std::sqrt(0.5 / std::max(total_area, 1e-30));
  std::vector<int> order(chart_count);
  std::iota(order.begin(), order.end(), 0);
  std::vector<Vec2> origin(chart_count);
  bool packed = false;
  for (int attempt = 0; attempt < 80 && !packed; ++attempt, scale *= 0.85) {
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return charts[a].size.y() > charts[b].size.y();
    });
    double x = gutter, y = gutter, row_h = 0;
    packed = true;
    for (int ci : order) {
      double w = charts[ci].size.x() * scale, h = charts[ci].size.y() * scale;
      if (w + 2 * gutter > 1.0 || h + 2 * gutter > 1.0) {
        packed = false;
        break;
      }
      if (x + w + gutter > 1.0) {
        x = gutter;
        y += row_h + gutter;
        row_h = 0;
      }
      if (y + h + gutter > 1.0) {
        packed = false;
        break;
      }
      origin[ci] = Vec2(x, y);
      row_h = std::max(row_h, h);
      x += w + gutter;
    }
  }
  if (!packed) throw PackingOverflow("auto_uv: charts cannot be packed");

  result.mesh.uv_per_corner.assign(input.face_count(), {});
  result.chart_rects.resize(chart_count);
  for (int ci = 0; ci < chart_count; ++ci) {
    const Chart& chart = charts[ci];
    result.chart_rects[ci] = {origin[ci], origin[ci] + scale * chart.size};
    for (std::size_t i = 0; i < chart.faces.size(); ++i) {
      std::array<Vec2, 3> uv;
      for (int k = 0; k < 3; ++k) uv[k] = origin[ci] + scale * chart.local[i][k];
      result.mesh.uv_per_corner[chart.faces[i]] = uv;
    }
  }
  return result;
}

}  // namespace gsm
