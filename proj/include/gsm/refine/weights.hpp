// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <unordered_map>
#include <vector>

#include "gsm/core/camera.hpp"
#include "gsm/core/error.hpp"
#include "gsm/core/image.hpp"
#include "gsm/core/mesh.hpp"
#include "gsm/extract/raster.hpp"

namespace gsm {

// Ordered refinement views; the canonical (style reference) view is first.
struct ViewSchedule {
  std::vector<Camera> cameras;
  int canonical_index = 0;

  void validate() const {
    if (cameras.size() < 2) throw ConfigValidation("ViewSchedule: needs >= 2 views");
    if (canonical_index != 0) throw ConfigValidation("ViewSchedule: canonical must be first");
  }
  std::size_t size() const { return cameras.size(); }
};

// Incident-angle map: per pixel, max(0, cos) between the surface normal at
// the pixel ray's mesh intersection and the reversed view direction (the
// camera axis, so a fronto-parallel plane reads 1.0 across the image).
inline ImageD raw_weight_map(const TriBvh& bvh, const TriMesh& mesh, const Camera& cam) {
  ImageD out(cam.width, cam.height, 1, 0.0);
  std::vector<Vec3> fn(mesh.face_count());
  for (int f = 0; f < mesh.face_count(); ++f) {
    const auto& t = mesh.faces[f];
    fn[f] = (mesh.vertices[t[1]] - mesh.vertices[t[0]])
                .cross(mesh.vertices[t[2]] - mesh.vertices[t[0]])
                .normalized();
  }
  Vec3 origin = cam.center();
  Mat3 rt = cam.R.transpose();
  Vec3 view_axis = rt * Vec3(0, 0, 1);
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x) {
      Vec3 d_cam((x + 0.5 - cam.cx) / cam.fx, (y + 0.5 - cam.cy) / cam.fy, 1.0);
      Vec3 dir = (rt * d_cam).normalized();
      if (auto hit = bvh.raycast(origin, dir))
        out.at(x, y, 0) = std::max(0.0, fn[hit->face].dot(-view_axis));
    }
  return out;
}

inline ImageD raw_weight_map(const TriMesh& mesh, const Camera& cam) {
  TriBvh bvh(mesh);
  return raw_weight_map(bvh, mesh, cam);
}

// One surface point's visibility record across the schedule.
struct SurfaceSample {
  Vec3 position = Vec3::Zero();
  std::vector<int> views;
  std::vector<double> cosines;
  std::vector<double> weights;  // softmax over the visible views
};

struct WeightMapSet {
  std::vector<ImageD> maps;  // aggregated per-view weight images
  std::vector<SurfaceSample> samples;
};

// Cross-view aggregation: surface points (one per rasterized pixel, merged by
// 1 mm world-position hashing) collect their incident-angle cosines over the
// views that see them (1 mm depth tolerance) and are normalized with a
// temperature-scaled softmax; the weights are splatted back per view.
inline WeightMapSet aggregate_weights(const TriMesh& mesh, const ViewSchedule& schedule,
                                      double tau_soft = 0.1, int working_size = 0) {
  schedule.validate();
  TriBvh bvh(mesh);
  std::size_t num_views = schedule.size();

  std::vector<MeshRaster> rasters(num_views);
  std::vector<ImageD> cosmaps(num_views);
  for (std::size_t v = 0; v < num_views; ++v) {
    rasters[v] = rasterize_mesh(bvh, schedule.cameras[v]);
    cosmaps[v] = raw_weight_map(bvh, mesh, schedule.cameras[v]);
  }

  constexpr double kMerge = 1e-3;  // 1 mm hash cells
  constexpr double kDepthTol = 1e-3;
  auto cell_key = [](const Vec3& p) {
    auto q = [](double x) { return static_cast<long long>(std::floor(x / kMerge)); };
    return std::to_string(q(p.x())) + "," + std::to_string(q(p.y())) + "," +
           std::to_string(q(p.z()));
  };

  WeightMapSet out;
  std::unordered_map<std::string, int> merged;
  for (std::size_t v = 0; v < num_views; ++v) {
    const Camera& cam = schedule.cameras[v];
    Vec3 origin = cam.center();
    Mat3 rt = cam.R.transpose();
    for (int y = 0; y < cam.height; ++y)
      for (int x = 0; x < cam.width; ++x) {
        if (rasters[v].face.at(x, y, 0) < 0) continue;
        Vec3 d_cam((x + 0.5 - cam.cx) / cam.fx, (y + 0.5 - cam.cy) / cam.fy, 1.0);
        Vec3 dir = (rt * d_cam).normalized();
        Vec3 p = origin + rasters[v].depth.at(x, y, 0) * dir;
        auto [it, inserted] = merged.emplace(cell_key(p), int(out.samples.size()));
        if (inserted) {
          SurfaceSample s;
          s.position = p;
          out.samples.push_back(std::move(s));
        }
      }
  }

  for (auto& sample : out.samples) {
    for (std::size_t v = 0; v < num_views; ++v) {
      const Camera& cam = schedule.cameras[v];
      Vec2 pix;
      if (!cam.project(sample.position, &pix)) continue;
      int px = static_cast<int>(std::floor(pix.x()));
      int py = static_cast<int>(std::floor(pix.y()));
      if (px < 0 || px >= cam.width || py < 0 || py >= cam.height) continue;
      double raster_depth = rasters[v].depth.at(px, py, 0);
      if (raster_depth <= 0) continue;
      double sample_depth = (sample.position - cam.center()).norm();
      if (std::abs(raster_depth - sample_depth) > kDepthTol) continue;
      sample.views.push_back(static_cast<int>(v));
      sample.cosines.push_back(cosmaps[v].at(px, py, 0));
    }
    if (sample.views.empty()) continue;
    double peak = *std::max_element(sample.cosines.begin(), sample.cosines.end());
    double denom = 0;
    sample.weights.resize(sample.views.size());
    for (std::size_t k = 0; k < sample.views.size(); ++k) {
      sample.weights[k] = std::exp((sample.cosines[k] - peak) / tau_soft);
      denom += sample.weights[k];
    }
    for (auto& w : sample.weights) w /= denom;
  }

  // splat the normalized weights back into per-view images
  std::vector<ImageD> sums(num_views), counts(num_views);
  for (std::size_t v = 0; v < num_views; ++v) {
    sums[v] = ImageD(schedule.cameras[v].width, schedule.cameras[v].height, 1, 0.0);
    counts[v] = ImageD(schedule.cameras[v].width, schedule.cameras[v].height, 1, 0.0);
  }
  for (const auto& sample : out.samples)
    for (std::size_t k = 0; k < sample.views.size(); ++k) {
      int v = sample.views[k];
      const Camera& cam = schedule.cameras[v];
      Vec2 pix;
      if (!cam.project(sample.position, &pix)) continue;
      int px = std::clamp(static_cast<int>(std::floor(pix.x())), 0, cam.width - 1);
      int py = std::clamp(static_cast<int>(std::floor(pix.y())), 0, cam.height - 1);
      sums[v].at(px, py, 0) += sample.weights[k];
      counts[v].at(px, py, 0) += 1.0;
    }
  out.maps.resize(num_views);
  for (std::size_t v = 0; v < num_views; ++v) {
    ImageD map(schedule.cameras[v].width, schedule.cameras[v].height, 1, 0.0);
    for (std::size_t i = 0; i < map.size(); ++i)
      map.data()[i] = counts[v].data()[i] > 0 ? sums[v].data()[i] / counts[v].data()[i] : 0.0;
    out.maps[v] = working_size > 0 ? resize_bilinear(map, working_size, working_size)
                                   : std::move(map);
  }
  return out;
}

}  // namespace gsm
