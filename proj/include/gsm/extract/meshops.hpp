// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <set>
#include <vector>

#include "gsm/core/mesh.hpp"
#include "gsm/extract/bvh.hpp"

namespace gsm {

// Removes faces whose centroids lie inside the body deeper than `tolerance`
// (coincident garment/body layers survive). Throws OpenBodyMesh when more
// than 1% of the parity queries are ambiguous.
inline TriMesh remove_interior_faces(const TriMesh& garment, const TriMesh& body,
                                     double tolerance = 0.002) {
  if (body.face_count() == 0) throw EmptyMesh("remove_interior_faces: empty body");
  TriBvh bvh(body);
  std::vector<char> keep(garment.face_count(), 1);
  int ambiguous_count = 0;
  for (int f = 0; f < garment.face_count(); ++f) {
    Vec3 c = face_centroid(garment, f);
    bool ambiguous = false;
    bool inside = point_inside_mesh(bvh, c, &ambiguous);
    if (ambiguous) {
      ++ambiguous_count;
      continue;
    }
    if (inside && std::sqrt(bvh.closest_point(c).dist2) > tolerance) keep[f] = 0;
  }
  if (garment.face_count() > 0 && ambiguous_count > garment.face_count() / 100)
    throw OpenBodyMesh("remove_interior_faces: parity test unreliable");

  TriMesh out;
  std::vector<int> remap(garment.vertices.size(), -1);
  for (int f = 0; f < garment.face_count(); ++f) {
    if (!keep[f]) continue;
    std::array<int, 3> tri;
    for (int k = 0; k < 3; ++k) {
      int v = garment.faces[f][k];
      if (remap[v] < 0) {
        remap[v] = out.vertex_count();
        out.vertices.push_back(garment.vertices[v]);
      }
      tri[k] = remap[v];
    }
    out.faces.push_back(tri);
    if (garment.has_uv()) out.uv_per_corner.push_back(garment.uv_per_corner[f]);
  }
  return out;
}

// Uniform-weight Laplacian smoothing: v += step * (mean(neighbors) - v).
inline TriMesh laplacian_smooth(const TriMesh& mesh, int iterations = 5, double step = 0.5) {
  if (step <= 0 || step > 1) throw ConfigValidation("laplacian_smooth: step must be in (0,1]");
  TriMesh out = mesh;
  std::vector<std::set<int>> nbr(mesh.vertices.size());
  for (const auto& f : mesh.faces)
    for (int k = 0; k < 3; ++k) {
      nbr[f[k]].insert(f[(k + 1) % 3]);
      nbr[f[k]].insert(f[(k + 2) % 3]);
    }
  std::vector<Vec3> next(out.vertices.size());
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t v = 0; v < out.vertices.size(); ++v) {
      if (nbr[v].empty()) {
        next[v] = out.vertices[v];
        continue;
      }
      Vec3 mean = Vec3::Zero();
      for (int u : nbr[v]) mean += out.vertices[u];
      mean /= double(nbr[v].size());
      next[v] = out.vertices[v] + step * (mean - out.vertices[v]);
    }
    out.vertices = next;
  }
  return out;
}

// Symmetric Hausdorff estimate sampled at vertices, edge midpoints and
// centroids of both meshes.
inline double hausdorff_distance(const TriMesh& a, const TriMesh& b) {
  if (a.face_count() == 0 || b.face_count() == 0)
    throw EmptyMesh("hausdorff_distance: empty mesh");
  auto one_sided = [](const TriMesh& from, const TriMesh& to) {
    TriBvh bvh(to);
    double worst = 0;
    auto probe = [&](const Vec3& p) {
      worst = std::max(worst, std::sqrt(bvh.closest_point(p).dist2));
    };
    for (const auto& v : from.vertices) probe(v);
    for (const auto& f : from.faces) {
      const Vec3& p0 = from.vertices[f[0]];
      const Vec3& p1 = from.vertices[f[1]];
      const Vec3& p2 = from.vertices[f[2]];
      probe((p0 + p1 + p2) / 3.0);
      probe(0.5 * (p0 + p1));
      probe(0.5 * (p1 + p2));
      probe(0.5 * (p2 + p0));
    }
    return worst;
  };
  return std::max(one_sided(a, b), one_sided(b, a));
}

}  // namespace gsm
