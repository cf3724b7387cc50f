// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "gsm/core/camera.hpp"
#include "gsm/core/image.hpp"
#include "gsm/core/mesh.hpp"
#include "gsm/extract/bvh.hpp"

namespace gsm {

// Per-pixel mesh visibility computed by casting the pixel rays; depth stores
// distance along the unit ray, face -1 where nothing is hit.
struct MeshRaster {
  ImageD depth;
  Image<int> face;
};

inline MeshRaster rasterize_mesh(const TriBvh& bvh, const Camera& cam) {
  MeshRaster out;
  out.depth = ImageD(cam.width, cam.height, 1, 0.0);
  out.face = Image<int>(cam.width, cam.height, 1, -1);
  Vec3 origin = cam.center();
  Mat3 rt = cam.R.transpose();
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      Vec3 d_cam((x + 0.5 - cam.cx) / cam.fx, (y + 0.5 - cam.cy) / cam.fy, 1.0);
      Vec3 dir = (rt * d_cam).normalized();
      if (auto hit = bvh.raycast(origin, dir)) {
        out.depth.at(x, y, 0) = hit->t;
        out.face.at(x, y, 0) = hit->face;
      }
    }
  return out;
}

inline MeshRaster rasterize_mesh(const TriMesh& mesh, const Camera& cam) {
  TriBvh bvh(mesh);
  return rasterize_mesh(bvh, cam);
}

// World-space flat-shaded normal image plus a coverage mask.
struct NormalRaster {
  ImageD normal;  // 3 channels
  ImageD coverage;
  Image<int> face;
};

inline NormalRaster rasterize_mesh_normals(const TriMesh& mesh, const Camera& cam) {
  NormalRaster out;
  out.normal = ImageD(cam.width, cam.height, 3, 0.0);
  out.coverage = ImageD(cam.width, cam.height, 1, 0.0);
  std::vector<Vec3> fn(mesh.face_count());
  for (int f = 0; f < mesh.face_count(); ++f) {
    const auto& t = mesh.faces[f];
    fn[f] = (mesh.vertices[t[1]] - mesh.vertices[t[0]])
                .cross(mesh.vertices[t[2]] - mesh.vertices[t[0]])
                .normalized();
  }
  MeshRaster raster = rasterize_mesh(mesh, cam);
  out.face = raster.face;
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      int f = raster.face.at(x, y, 0);
      if (f < 0) continue;
      out.coverage.at(x, y, 0) = 1.0;
      for (int c = 0; c < 3; ++c) out.normal.at(x, y, c) = fn[f][c];
    }
  return out;
}

}  // namespace gsm
