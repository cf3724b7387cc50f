// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <map>
#include <vector>

#include "gsm/core/camera.hpp"
#include "gsm/core/error.hpp"
#include "gsm/core/image.hpp"
#include "gsm/core/mesh.hpp"
#include "gsm/extract/mc_tables.hpp"

namespace gsm {

// Truncated signed distance grid. Values live on grid points at
// origin + voxel_size * (i, j, k); unobserved points read -truncation with
// zero weight (deep-behind-surface convention).
struct TsdfVolume {
  Vec3 origin = Vec3::Zero();
  double voxel_size = 0.004;
  Vec3i dims = Vec3i(2, 2, 2);
  double truncation = 0.016;
  std::vector<double> tsdf;
  std::vector<double> weights;

  static TsdfVolume create(const Vec3& origin, double voxel_size, const Vec3i& dims,
                           double truncation) {
    if (dims.minCoeff() < 2) throw ConfigValidation("TsdfVolume: dims must be >= 2");
    TsdfVolume v;
    v.origin = origin;
    v.voxel_size = voxel_size;
    v.dims = dims;
    v.truncation = truncation;
    std::size_t n = std::size_t(dims.x()) * dims.y() * dims.z();
    v.tsdf.assign(n, -truncation);
    v.weights.assign(n, 0.0);
    return v;
  }

  std::size_t index(int x, int y, int z) const {
    return (std::size_t(z) * dims.y() + y) * dims.x() + x;
  }
  Vec3 position(int x, int y, int z) const {
    return origin + voxel_size * Vec3(x, y, z);
  }
};

// Weighted-average fusion of one range image (distance along the unit pixel
// ray; 0 marks invalid pixels). Pixels with alpha < 0.5 are skipped when an
// alpha image is given. Points behind the surface by more than the truncation
// are left untouched.
inline void integrate_depth(TsdfVolume& vol, const ImageD& depth, const Camera& cam,
                            const ImageD* alpha = nullptr) {
  if (depth.channels() != 1) throw ShapeMismatch("integrate_depth: depth must be 1-channel");
  if (depth.width() != cam.width || depth.height() != cam.height)
    throw ShapeMismatch("integrate_depth: depth size vs camera");
  Vec3 center = cam.center();
  for (int z = 0; z < vol.dims.z(); ++z)
    for (int y = 0; y < vol.dims.y(); ++y)
      for (int x = 0; x < vol.dims.x(); ++x) {
        Vec3 p = vol.position(x, y, z);
        Vec3 pc = cam.to_camera(p);
        if (pc.z() <= 1e-6) continue;
        int px = static_cast<int>(std::floor(cam.fx * pc.x() / pc.z() + cam.cx));
        int py = static_cast<int>(std::floor(cam.fy * pc.y() / pc.z() + cam.cy));
        if (px < 0 || px >= cam.width || py < 0 || py >= cam.height) continue;
        double sample = depth.at(px, py, 0);
        if (sample <= 0) continue;
        if (alpha && alpha->at(px, py, 0) < 0.5) continue;
        double range = (p - center).norm();
        double sdf = sample - range;
        if (sdf < -vol.truncation) continue;  // behind truncation: untouched
        double d = std::min(sdf, vol.truncation);
        std::size_t i = vol.index(x, y, z);
        double w_old = vol.weights[i];
        vol.tsdf[i] = w_old > 0 ? (vol.tsdf[i] * w_old + d) / (w_old + 1.0) : d;
        vol.weights[i] = w_old + 1.0;
      }
}

// Marching cubes over fully observed cells; vertices by linear interpolation
// along sign-changing edges. Watertight wherever the shell was observed.
inline TriMesh extract_isosurface(const TsdfVolume& vol) {
  static const int corner_offset[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                                          {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
  static const int edge_corners[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                                          {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};
  TriMesh mesh;
  // dedup vertices on shared cell edges: key = (grid point index, axis)
  std::map<std::array<long, 4>, int> edge_vertex;

  auto interp_vertex = [&](int x0, int y0, int z0, int x1, int y1, int z1) -> int {
    std::array<long, 4> key = {long(std::min(vol.index(x0, y0, z0), vol.index(x1, y1, z1))),
                               long(std::max(vol.index(x0, y0, z0), vol.index(x1, y1, z1))), 0,
                               0};
    auto it = edge_vertex.find(key);
    if (it != edge_vertex.end()) return it->second;
    double v0 = vol.tsdf[vol.index(x0, y0, z0)];
    double v1 = vol.tsdf[vol.index(x1, y1, z1)];
    double t = (v1 - v0) != 0 ? v0 / (v0 - v1) : 0.5;
    t = std::clamp(t, 0.0, 1.0);
    Vec3 p0 = vol.position(x0, y0, z0);
    Vec3 p1 = vol.position(x1, y1, z1);
    int idx = mesh.vertex_count();
    mesh.vertices.push_back(p0 + t * (p1 - p0));
    edge_vertex[key] = idx;
    return idx;
  };

  for (int z = 0; z + 1 < vol.dims.z(); ++z)
    for (int y = 0; y + 1 < vol.dims.y(); ++y)
      for (int x = 0; x + 1 < vol.dims.x(); ++x) {
        double values[8];
        bool observed = true;
        int cube_index = 0;
        for (int c = 0; c < 8; ++c) {
          int cx = x + corner_offset[c][0];
          int cy = y + corner_offset[c][1];
          int cz = z + corner_offset[c][2];
          std::size_t i = vol.index(cx, cy, cz);
          observed &= vol.weights[i] > 0;
          values[c] = vol.tsdf[i];
          if (values[c] < 0) cube_index |= 1 << c;
        }
        if (!observed) continue;
        if (mc::kEdgeTable[cube_index] == 0) continue;
        int edge_verts[12];
        for (int e = 0; e < 12; ++e) {
          if (!(mc::kEdgeTable[cube_index] & (1 << e))) continue;
          int c0 = edge_corners[e][0], c1 = edge_corners[e][1];
          edge_verts[e] = interp_vertex(x + corner_offset[c0][0], y + corner_offset[c0][1],
                                        z + corner_offset[c0][2], x + corner_offset[c1][0],
                                        y + corner_offset[c1][1], z + corner_offset[c1][2]);
        }
        // table winding faces the negative side; flip for outward normals
        for (int t = 0; mc::kTriTable[cube_index][t] != -1; t += 3)
          mesh.faces.push_back({edge_verts[mc::kTriTable[cube_index][t]],
                                edge_verts[mc::kTriTable[cube_index][t + 2]],
                                edge_verts[mc::kTriTable[cube_index][t + 1]]});
      }
  if (mesh.faces.empty()) throw NoSurface("extract_isosurface: no sign change in the volume");
  return mesh;
}

}  // namespace gsm
