// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "gsm/binding.hpp"
#include "gsm/core/shapes.hpp"
#include "gsm/extract/raster.hpp"
#include "gsm/fit/fitter.hpp"
#include "gsm/garment/stage.hpp"
#include "gsm/render/renderer.hpp"

namespace gsm::testing {

// Sphere body with an equatorial red band painted into the target views; the
// garment stage has to recover the band from masks + photometric targets.
struct SphereBandFixture {
  GSM body;                       // gray, opaque
  std::vector<int> band_faces;    // |centroid z| < band_half
  std::vector<int> init_region;   // dilated band used for garment init
  std::vector<ViewTarget> views;  // color targets + band masks
  TriMesh band_mesh;              // band submesh for distance measurements
  double radius = 0.5;
  double band_half = 0.1;
};

inline SphereBandFixture make_sphere_band_fixture(int segments, int rings, int n_body,
                                                  int num_views, int image_size,
                                                  double band_half = 0.1,
                                                  double init_half = 0.18) {
  SphereBandFixture fx;
  fx.band_half = band_half;
  TriMesh sphere = make_uv_sphere(fx.radius, segments, rings);
  fx.body.mesh = sphere;
  bind_rest_state(fx.body.mesh);
  fx.body.surfels = init_surfels(fx.body.mesh, n_body);
  fx.body.uv_maps = UVMaps::make(64, 64, Vec3(0.6, 0.6, 0.6), 8.0);
  fx.body.label = "body";

  fx.band_faces = select_faces_by_band(sphere, 2, -band_half, band_half);
  fx.init_region = select_faces_by_band(sphere, 2, -init_half, init_half);

  for (int f : fx.band_faces) {
    fx.band_mesh.faces.push_back(sphere.faces[f]);
  }
  fx.band_mesh.vertices = sphere.vertices;

  // target views: the body with the band painted red, rendered with the
  // reference path; masks from the mesh rasterizer (band faces visible).
  GSM painted = fx.body;
  std::vector<char> in_band(sphere.face_count(), 0);
  for (int f : fx.band_faces) in_band[f] = 1;
  // paint texels covered by band-face uv charts
  for (int f = 0; f < sphere.face_count(); ++f) {
    if (!in_band[f]) continue;
    const auto& uvc = sphere.uv_per_corner[f];
    // conservative fill of the chart's bounding box
    double u0 = std::min({uvc[0].x(), uvc[1].x(), uvc[2].x()});
    double u1 = std::max({uvc[0].x(), uvc[1].x(), uvc[2].x()});
    double v0 = std::min({uvc[0].y(), uvc[1].y(), uvc[2].y()});
    double v1 = std::max({uvc[0].y(), uvc[1].y(), uvc[2].y()});
    int W = painted.uv_maps.color_map.width(), H = painted.uv_maps.color_map.height();
    for (int y = std::max(0, int(v0 * H) - 1); y < std::min(H, int(v1 * H) + 2); ++y)
      for (int x = std::max(0, int(u0 * W) - 1); x < std::min(W, int(u1 * W) + 2); ++x) {
        painted.uv_maps.color_map.at(x, y, 0) = 0.9;
        painted.uv_maps.color_map.at(x, y, 1) = 0.05;
        painted.uv_maps.color_map.at(x, y, 2) = 0.05;
      }
  }

  TriBvh bvh(sphere);
  std::vector<Camera> cams =
      orbit_cameras(num_views, Vec3::Zero(), 1.7, 0.0, 40.0, image_size, image_size);
  SplatBatch painted_batch;
  painted_batch.append(realize(painted), 0);
  for (const Camera& cam : cams) {
    ViewTarget view;
    view.camera = cam;
    view.color = render(painted_batch, cam).color;
    MeshRaster raster = rasterize_mesh(bvh, cam);
    view.mask = ImageD(image_size, image_size, 1, 0.0);
    for (int y = 0; y < image_size; ++y)
      for (int x = 0; x < image_size; ++x) {
        int f = raster.face.at(x, y, 0);
        if (f >= 0 && in_band[f]) view.mask.at(x, y, 0) = 1.0;
      }
    fx.views.push_back(std::move(view));
  }
  return fx;
}

}  // namespace gsm::testing
