// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "gsm/core/mesh.hpp"
#include "gsm/extract/raster.hpp"
#include "gsm/fit/adam.hpp"
#include "gsm/fit/fitter.hpp"

namespace gsm {

// Geometry branch stand-in: per-vertex displacements fit against target
// normal images through the mesh rasterizer's normal channel. Silhouette
// motion is not differentiated; coverage acts as a fixed mask per step.
struct DisplaceFitConfig {
  int steps = 200;
  double lr = 1e-3;
  double max_offset = 0.03;  // meters, each component
};

struct DisplaceResult {
  std::vector<Vec3> displacement;
  std::vector<double> loss_trace;
};

inline DisplaceResult fit_vertex_displacements(TriMesh& mesh,
                                               const std::vector<ViewTarget>& views,
                                               const DisplaceFitConfig& cfg) {
  bool any_normal_target = false;
  for (const auto& v : views) any_normal_target |= !v.normal.empty();
  if (!any_normal_target)
    throw ConfigValidation("fit_vertex_displacements: no normal targets");

  std::vector<Vec3> base = mesh.vertices;
  std::size_t nv = mesh.vertices.size();
  std::vector<double> disp(nv * 3, 0.0);
  Adam adam(nv * 3, cfg.lr);
  DisplaceResult result;

  for (int step = 0; step < cfg.steps; ++step) {
    const ViewTarget& view = views[step % views.size()];
    if (view.normal.empty()) continue;
    for (std::size_t i = 0; i < nv; ++i)
      mesh.vertices[i] = base[i] + Vec3(disp[3 * i], disp[3 * i + 1], disp[3 * i + 2]);

    NormalRaster raster = rasterize_mesh_normals(mesh, view.camera);
    ScalarLoss loss = photometric_loss(raster.normal, view.normal, &raster.coverage);
    result.loss_trace.push_back(loss.value);
    if (!std::isfinite(loss.value))
      throw DivergenceDetected("fit_vertex_displacements: non-finite loss");

    // pull pixel-normal adjoints back to the face corners
    std::vector<double> grads(nv * 3, 0.0);
    for (int y = 0; y < view.camera.height; ++y)
      for (int x = 0; x < view.camera.width; ++x) {
        int f = raster.face.at(x, y, 0);
        if (f < 0) continue;
        Vec3 dn(loss.adjoint.at(x, y, 0), loss.adjoint.at(x, y, 1), loss.adjoint.at(x, y, 2));
        if (dn.isZero()) continue;
        const auto& tri = mesh.faces[f];
        Vec3 e1 = mesh.vertices[tri[1]] - mesh.vertices[tri[0]];
        Vec3 e2 = mesh.vertices[tri[2]] - mesh.vertices[tri[0]];
        Vec3 u = e1.cross(e2);
        double len = u.norm();
        if (len < 1e-12) continue;
        Vec3 n = u / len;
        Vec3 du = (dn - n * n.dot(dn)) / len;  // through normalize()
        Vec3 d_e1 = e2.cross(du);
        Vec3 d_e2 = du.cross(e1);
        Vec3 d_v0 = -d_e1 - d_e2;
        for (int k = 0; k < 3; ++k) {
          grads[3 * tri[0] + k] += d_v0[k];
          grads[3 * tri[1] + k] += d_e1[k];
          grads[3 * tri[2] + k] += d_e2[k];
        }
      }
    adam.step(disp, grads);
    for (auto& d : disp) d = std::clamp(d, -cfg.max_offset, cfg.max_offset);
  }

  for (std::size_t i = 0; i < nv; ++i)
    mesh.vertices[i] = base[i] + Vec3(disp[3 * i], disp[3 * i + 1], disp[3 * i + 2]);
  result.displacement.resize(nv);
  for (std::size_t i = 0; i < nv; ++i)
    result.displacement[i] = Vec3(disp[3 * i], disp[3 * i + 1], disp[3 * i + 2]);
  return result;
}

}  // namespace gsm
