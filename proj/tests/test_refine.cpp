// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "gsm/core/shapes.hpp"
#include "gsm/io/pfm.hpp"
#include "gsm/refine/pass.hpp"
#include "gsm/refine/refiner.hpp"
#include "gsm/refine/weights.hpp"
#include "helpers.hpp"

using namespace gsm;
using namespace gsm::testing;

namespace {

GSM textured_grid_part(Rng& rng, int map_size = 24) {
  GSM part;
  part.mesh = make_grid(0.5, 0.5, 4, 4);
  bind_rest_state(part.mesh);
  part.surfels = init_surfels(part.mesh, 3);
  part.uv_maps = UVMaps::make(map_size, map_size, Vec3(0.5, 0.5, 0.5), 8.0);
  for (auto& v : part.uv_maps.color_map.data()) v = uniform(rng, 0.1, 0.9);
  return part;
}

Camera fronto_camera(const Vec3& target, double dist, int size) {
  return Camera::look_at(target + Vec3(0, 0, dist), target, Vec3(0, 1, 0), 40, size, size);
}

}  // namespace

TEST_CASE("raw weight map: fronto-parallel, tilted, sphere", "[refine]") {
  TriMesh plane = make_grid(1.0, 1.0, 4, 4);
  Camera cam = fronto_camera(Vec3(0.5, 0.5, 0), 1.2, 48);
  ImageD w = raw_weight_map(plane, cam);
  int covered = 0;
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x)
      if (w.at(x, y, 0) > 0) {
        ++covered;
        CHECK(w.at(x, y, 0) == Catch::Approx(1.0).margin(1e-12));
      }
  CHECK(covered > 500);

  // plane tilted 60 degrees about x: 0.5 everywhere on the plane
  TriMesh tilted = plane;
  Mat3 rot = Eigen::AngleAxisd(deg2rad(60), Vec3(1, 0, 0)).toRotationMatrix();
  transform_mesh(tilted, rot, Vec3(0.5, 0.5, 0) - rot * Vec3(0.5, 0.5, 0));
  ImageD wt = raw_weight_map(tilted, cam);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x)
      if (wt.at(x, y, 0) > 0) CHECK(wt.at(x, y, 0) == Catch::Approx(0.5).margin(1e-9));

  // sphere: ~1 at the closest point, ~0 at the silhouette
  TriMesh sphere = make_icosphere(0.4, 3);
  Camera scam = fronto_camera(Vec3::Zero(), 1.6, 96);
  ImageD ws = raw_weight_map(sphere, scam);
  CHECK(ws.at(48, 48, 0) > 0.99);
  double silhouette_max = 0;
  for (int y = 0; y < 96; ++y)
    for (int x = 0; x < 96; ++x) {
      if (ws.at(x, y, 0) <= 0) continue;
      bool at_edge = false;
      for (int dy = -1; dy <= 1 && !at_edge; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          if (ws.at(std::clamp(x + dx, 0, 95), std::clamp(y + dy, 0, 95), 0) == 0) {
            at_edge = true;
            break;
          }
      if (at_edge) silhouette_max = std::max(silhouette_max, ws.at(x, y, 0));
    }
  CHECK(silhouette_max < 0.35);
}

TEST_CASE("aggregated weights form a softmax over visible views", "[refine]") {
  TriMesh plane = make_grid(0.4, 0.4, 3, 3);
  ViewSchedule sched;
  sched.cameras = {fronto_camera(Vec3(0.2, 0.2, 0), 1.0, 32),
                   Camera::look_at(Vec3(0.2, 0.2, 0) + Vec3(std::sin(deg2rad(60.0)), 0.0,
                                                            std::cos(deg2rad(60.0))),
                                   Vec3(0.2, 0.2, 0), Vec3(0, 1, 0), 40, 32, 32)};
  double tau = 0.1;
  WeightMapSet ws = aggregate_weights(plane, sched, tau);

  int checked = 0;
  for (const auto& s : ws.samples) {
    if (s.views.empty()) continue;
    double sum = 0;
    for (double w : s.weights) sum += w;
    CHECK(std::abs(sum - 1.0) < 1e-6);
    if (s.views.size() == 1) CHECK(s.weights[0] == Catch::Approx(1.0));
    if (s.views.size() == 2) {
      ++checked;
      // direct evaluation of the softmax formula
      double e0 = std::exp(s.cosines[0] / tau), e1 = std::exp(s.cosines[1] / tau);
      CHECK(s.weights[0] == Catch::Approx(e0 / (e0 + e1)).margin(1e-9));
      // the fronto view dominates the 60-degree one
      if (std::abs(s.cosines[0] - 1.0) < 0.02 && std::abs(s.cosines[1] - 0.5) < 0.02) {
        CHECK(s.weights[0] == Catch::Approx(0.9933).margin(1e-3));
        CHECK(s.weights[1] == Catch::Approx(0.0067).margin(1e-3));
      }
    }
  }
  CHECK(checked > 50);

  // the exact two-view spec case, evaluated through the same softmax helper
  {
    double e0 = std::exp(1.0 / 0.1), e1 = std::exp(0.5 / 0.1);
    double w0 = e0 / (e0 + e1), w1 = e1 / (e0 + e1);
    CHECK(w0 == Catch::Approx(0.9933).margin(1e-4));
    CHECK(w1 == Catch::Approx(0.0067).margin(1e-4));
  }
}

TEST_CASE("equal cosines split the weight for any temperature", "[refine]") {
  // symmetric pair of views around a fronto plane
  TriMesh plane = make_grid(0.4, 0.4, 2, 2);
  Vec3 target(0.2, 0.2, 0);
  auto eye = [&](double az) {
    return target + Vec3(std::sin(deg2rad(az)), 0, std::cos(deg2rad(az)));
  };
  for (double tau : {0.05, 0.1, 0.7}) {
    ViewSchedule sched;
    sched.cameras = {Camera::look_at(eye(25), target, Vec3(0, 1, 0), 40, 32, 32),
                     Camera::look_at(eye(-25), target, Vec3(0, 1, 0), 40, 32, 32)};
    WeightMapSet ws = aggregate_weights(plane, sched, tau);
    int pairs = 0;
    for (const auto& s : ws.samples)
      if (s.views.size() == 2 && std::abs(s.cosines[0] - s.cosines[1]) < 1e-6) {
        ++pairs;
        CHECK(s.weights[0] == Catch::Approx(0.5).margin(1e-9));
      }
    CHECK(pairs > 10);
  }
}

TEST_CASE("identity refiner leaves the part untouched", "[refine]") {
  Rng rng(501);
  GSM part = textured_grid_part(rng);
  GSM before = part;
  ViewSchedule sched;
  sched.cameras = {fronto_camera(Vec3(0.25, 0.25, 0), 1.1, 32),
                   Camera::look_at(Vec3(0.25 + 0.6, 0.25, 0.9), Vec3(0.25, 0.25, 0),
                                   Vec3(0, 1, 0), 40, 32, 32)};
  RefineConfig cfg;
  cfg.steps_per_view = 5;
  IdentityRefiner identity;
  refine_pass(part, sched, identity, cfg);
  double max_delta = 0;
  for (std::size_t i = 0; i < part.uv_maps.color_map.size(); ++i)
    max_delta = std::max(max_delta, std::abs(part.uv_maps.color_map.data()[i] -
                                             before.uv_maps.color_map.data()[i]));
  for (std::size_t i = 0; i < part.uv_maps.opacity_map.size(); ++i)
    max_delta = std::max(max_delta, std::abs(part.uv_maps.opacity_map.data()[i] -
                                             before.uv_maps.opacity_map.data()[i]));
  CHECK(max_delta <= 1e-6);
}

TEST_CASE("refiner contract: canonical and previous views are handed over", "[refine]") {
  Rng rng(503);
  GSM part = textured_grid_part(rng);
  ViewSchedule sched;
  Vec3 target(0.25, 0.25, 0);
  sched.cameras = {fronto_camera(target, 1.1, 24),
                   Camera::look_at(target + Vec3(0.5, 0, 0.95), target, Vec3(0, 1, 0), 40, 24, 24),
                   Camera::look_at(target + Vec3(-0.5, 0, 0.95), target, Vec3(0, 1, 0), 40, 24, 24)};
  RefineConfig cfg;
  cfg.steps_per_view = 2;
  IdentityRefiner identity;
  CaptureRefiner capture(&identity);
  refine_pass(part, sched, capture, cfg);

  REQUIRE(capture.calls.size() == 3);
  // identity refiner means parameters never change: the canonical reference of
  // every later call is the canonical view's own render, and the previous
  // reference is the preceding call's view
  for (std::size_t i = 1; i < capture.calls.size(); ++i) {
    CHECK(capture.calls[i].ref_canonical.data() == capture.calls[0].view.data());
    CHECK(capture.calls[i].ref_previous.data() == capture.calls[i - 1].view.data());
    CHECK(capture.calls[i].view_index == static_cast<int>(i));
  }
  CHECK(capture.calls[0].ref_canonical.data() == capture.calls[0].view.data());
}

TEST_CASE("zero weights gate texel updates", "[refine]") {
  Rng rng(507);
  GSM part = textured_grid_part(rng, 16);
  Camera cam = fronto_camera(Vec3(0.25, 0.25, 0), 1.1, 32);

  RealizeCache rcache;
  SplatBatch batch;
  batch.append(realize(part, {}, &rcache), 0);
  ForwardCache fcache;
  RenderTarget out = render(batch, cam, {}, &fcache);

  ImageD refined = out.color;
  for (auto& v : refined.data()) v = clamp01(v + 0.3);  // force a nonzero residual
  ImageD weight(32, 32, 1, 1.0);
  for (int y = 0; y < 32; ++y)
    for (int x = 16; x < 32; ++x) weight.at(x, y, 0) = 0.0;  // right half gated off

  ScalarLoss loss = weighted_refine_loss(out.color, refined, weight);
  RenderTarget adjoint;
  adjoint.color = std::move(loss.adjoint);
  GradientBuffer grads = render_backward(batch, cam, {}, fcache, adjoint);
  BoundParamGrads bound = chain_realize_backward(part, rcache, grads);

  // texels sampled only by surfels projecting into the gated half get nothing
  Vec3 origin = cam.center();
  auto realized = realize(part);
  for (std::size_t i = 0; i < part.surfels.size(); ++i) {
    Vec2 pix;
    if (!cam.project(realized[i].position, &pix)) continue;
    if (pix.x() > 17.5) {  // safely inside the gated half (1.5 px guard)
      BilinearTap tap = bilinear_tap(16, 16, part.surfels[i].uv);
      (void)origin;
      CHECK(std::abs(bound.color_map.at(tap.x0, tap.y0, 0)) < 1e-12);
    }
  }
}

TEST_CASE("file refiner reads pre-made images and reports missing ones", "[refine]") {
  TempDir tmp("file_refiner");
  ImageD img(8, 8, 3, 0.25);
  write_pfm(tmp.file("refined_001.pfm"), img);
  FileRefiner refiner(tmp.str());
  RefineInputs in;
  in.view = ImageD(8, 8, 3, 0.0);
  in.weight = ImageD(8, 8, 1, 1.0);
  in.view_index = 1;
  ImageD out = refiner.refine(in);
  CHECK(out.at(3, 3, 0) == Catch::Approx(0.25));
  in.view_index = 2;
  CHECK_THROWS_AS(refiner.refine(in), RefinerFailure);
}

TEST_CASE("subprocess refiner round trip and failure mapping", "[refine]") {
  TempDir tmp("subproc_refiner");
  RefineInputs in;
  in.view = ImageD(8, 8, 3, 0.5);
  in.weight = ImageD(8, 8, 1, 1.0);
  in.ref_canonical = in.view;
  in.ref_previous = in.view;
  SubprocessRefiner ok("cp view.png refined.png", tmp.str());
  ImageD out = ok.refine(in);
  CHECK(out.width() == 8);
  SubprocessRefiner bad("exit 3", tmp.str());
  CHECK_THROWS_AS(bad.refine(in), RefinerFailure);
}

TEST_CASE("file refiner with ground-truth renders sharpens a blurred texture",
          "[refine][slow]") {
  Rng rng(511);
  GSM gt = textured_grid_part(rng, 32);
  Vec3 target(0.25, 0.25, 0);
  ViewSchedule sched;
  sched.cameras = {fronto_camera(target, 1.1, 48),
                   Camera::look_at(target + Vec3(0.45, 0.1, 0.95), target, Vec3(0, 1, 0), 40, 48, 48),
                   Camera::look_at(target + Vec3(-0.45, -0.1, 0.95), target, Vec3(0, 1, 0), 40, 48, 48)};
  Camera held_out =
      Camera::look_at(target + Vec3(0.2, 0.3, 1.0), target, Vec3(0, 1, 0), 40, 48, 48);

  TempDir tmp("gt_refiner");
  auto render_part = [&](const GSM& part, const Camera& cam) {
    SplatBatch batch;
    batch.append(realize(part), 0);
    return render(batch, cam).color;
  };
  for (std::size_t v = 0; v < sched.cameras.size(); ++v) {
    char name[32];
    std::snprintf(name, sizeof name, "refined_%03zu.pfm", v);
    write_pfm(tmp.file(name), render_part(gt, sched.cameras[v]));
  }
  ImageD gt_held_out = render_part(gt, held_out);

  GSM blurred = gt;
  blurred.uv_maps.color_map = gaussian_blur(gt.uv_maps.color_map, 3.0);
  double psnr_before = image_psnr(render_part(blurred, held_out), gt_held_out);

  FileRefiner refiner(tmp.str());
  RefineConfig cfg;
  cfg.steps_per_view = 40;
  cfg.lrs.uv_texels = 2e-2;
  refine_pass(blurred, sched, refiner, cfg);
  double psnr_after = image_psnr(render_part(blurred, held_out), gt_held_out);
  CHECK(psnr_after > psnr_before + 1.0);
}
