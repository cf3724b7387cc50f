// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "gsm/core/shapes.hpp"
#include "gsm/fit/adam.hpp"
#include "gsm/fit/fitter.hpp"
#include "gsm/fit/losses.hpp"
#include "helpers.hpp"

using namespace gsm;
using namespace gsm::testing;

TEST_CASE("photometric loss basics", "[losses]") {
  ImageD a(4, 4, 3, 0.3), b(4, 4, 3, 0.3);
  CHECK(photometric_loss(a, b).value == 0.0);

  ImageD z(4, 4, 1, 0.0), o(4, 4, 1, 1.0);
  CHECK(photometric_loss(z, o).value == Catch::Approx(1.0));

  ImageD r(4, 4, 1, 0.5), t(4, 4, 1, 0.0), mask(4, 4, 1, 0.0);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 2; ++x) mask.at(x, y, 0) = 1.0;
  CHECK(photometric_loss(r, t, &mask).value == Catch::Approx(0.25));

  ImageD bad(3, 4, 1, 0.0);
  CHECK_THROWS_AS(photometric_loss(z, bad), ShapeMismatch);
}

TEST_CASE("regularizers are zero at init and match hand values", "[losses]") {
  TriMesh mesh = make_grid(1, 1, 2, 2);
  bind_rest_state(mesh);
  auto surfels = init_surfels(mesh, 2);
  std::vector<Vec2> anchors;
  for (const auto& s : surfels) anchors.push_back(s.log_scale);

  CHECK(reg_positions(surfels).value == 0.0);
  CHECK(reg_scales(surfels, anchors).value == 0.0);
  CHECK(reg_rotations(surfels).value == 0.0);

  auto bumped = surfels;
  bumped[0].height = 0.1;
  CHECK(reg_positions(bumped).value == Catch::Approx(0.01 / double(surfels.size())));

  auto rotated = surfels;
  rotated[0].local_rot = Vec4(std::cos(kPi / 4), std::sin(kPi / 4), 0, 0);  // 90 deg about x
  CHECK(reg_rotations(rotated).value ==
        Catch::Approx((kPi / 2) * (kPi / 2) / double(surfels.size())));

  // strictly positive for any perturbation
  auto scaled = surfels;
  scaled[1].log_scale.x() += 0.2;
  CHECK(reg_scales(scaled, anchors).value > 0.0);
  auto shifted = surfels;
  shifted[1].bary += Vec2(2.0, 2.0);  // far outside the slack simplex
  CHECK(reg_positions(shifted).value > 0.0);
}

TEST_CASE("regularizer gradients match finite differences", "[losses]") {
  Rng rng(307);
  TriMesh mesh = make_grid(1, 1, 2, 2);
  bind_rest_state(mesh);
  auto surfels = init_surfels(mesh, 2);
  std::vector<Vec2> anchors;
  for (auto& s : surfels) {
    s.height = uniform(rng, -0.05, 0.05);
    s.bary += Vec2(uniform(rng, -0.4, 0.8), uniform(rng, -0.4, 0.8));
    s.local_rot = quat_normalized(Vec4(1, uniform(rng, -0.4, 0.4), uniform(rng, -0.4, 0.4),
                                       uniform(rng, -0.4, 0.4)));
    s.log_scale += Vec2(uniform(rng, -0.3, 0.3), uniform(rng, -0.3, 0.3));
    anchors.push_back(Vec2(uniform(rng, -0.1, 0.1), uniform(rng, -0.1, 0.1)));
  }
  const double h = 1e-6;
  RegResult rp = reg_positions(surfels);
  RegResult rs = reg_scales(surfels, anchors);
  RegResult rr = reg_rotations(surfels);
  for (std::size_t i = 0; i < surfels.size(); ++i) {
    for (int k = 0; k < 2; ++k) {
      auto sp = surfels, sm = surfels;
      sp[i].bary[k] += h;
      sm[i].bary[k] -= h;
      double fd = (reg_positions(sp).value - reg_positions(sm).value) / (2 * h);
      CHECK(rp.d_bary[i][k] == Catch::Approx(fd).margin(1e-7));
    }
    {
      auto sp = surfels, sm = surfels;
      sp[i].height += h;
      sm[i].height -= h;
      double fd = (reg_positions(sp).value - reg_positions(sm).value) / (2 * h);
      CHECK(rp.d_height[i] == Catch::Approx(fd).margin(1e-7));
    }
    for (int k = 0; k < 2; ++k) {
      auto sp = surfels, sm = surfels;
      sp[i].log_scale[k] += h;
      sm[i].log_scale[k] -= h;
      double fd = (reg_scales(sp, anchors).value - reg_scales(sm, anchors).value) / (2 * h);
      CHECK(rs.d_log_scale[i][k] == Catch::Approx(fd).margin(1e-7));
    }
    for (int k = 0; k < 4; ++k) {
      auto sp = surfels, sm = surfels;
      sp[i].local_rot[k] += h;
      sm[i].local_rot[k] -= h;
      double fd = (reg_rotations(sp).value - reg_rotations(sm).value) / (2 * h);
      CHECK(rr.d_local_rot[i][k] == Catch::Approx(fd).margin(1e-6));
    }
  }
}

TEST_CASE("distance loss against brute force and analytic cases", "[losses]") {
  TriMesh cube = make_box(Vec3(0, 0, 0), Vec3(1, 1, 1));
  TriBvh bvh(cube);

  std::vector<FreeSurfel> on_verts(4);
  on_verts[0].position = Vec3(0, 0, 0);
  on_verts[1].position = Vec3(1, 1, 1);
  on_verts[2].position = Vec3(1, 0, 0);
  on_verts[3].position = Vec3(0, 1, 1);
  CHECK(distance_loss(on_verts, bvh).value == Catch::Approx(0.0).margin(1e-12));

  std::vector<FreeSurfel> off(1);
  off[0].position = Vec3(0.5, 0.5, 1.05);  // 0.05 above the top face
  DistanceLoss d = distance_loss(off, bvh);
  CHECK(d.value == Catch::Approx(0.05));
  CHECK((d.d_position[0] - Vec3(0, 0, 1)).norm() < 1e-9);

  // BVH vs exhaustive closest point
  Rng rng(311);
  TriMesh sphere = make_icosphere(0.5, 2);
  TriBvh sbvh(sphere);
  for (int i = 0; i < 200; ++i) {
    Vec3 p = uniform_vec3(rng, -0.8, 0.8);
    ClosestHit hit = sbvh.closest_point(p);
    double best = std::numeric_limits<double>::max();
    for (int f = 0; f < sphere.face_count(); ++f) {
      const auto& t = sphere.faces[f];
      Vec3 q = closest_point_on_triangle(p, sphere.vertices[t[0]], sphere.vertices[t[1]],
                                         sphere.vertices[t[2]]);
      best = std::min(best, (q - p).squaredNorm());
    }
    CHECK(std::abs(std::sqrt(hit.dist2) - std::sqrt(best)) < 1e-9);
  }
}

TEST_CASE("normal smoothness: constant, impulse, monotonicity, adjoint", "[losses]") {
  ImageD constant(16, 16, 3, 0.4);
  ImageD alpha(16, 16, 1, 1.0);
  CHECK(normal_smooth_loss(constant, alpha, 2.0).value == Catch::Approx(0.0).margin(1e-18));

  // single-pixel impulse: loss = sum((B(delta) - delta)^2) / pixel count
  ImageD impulse(17, 17, 1, 0.0);
  impulse.at(8, 8, 0) = 1.0;
  double sigma = 1.5;
  auto k = gaussian_kernel(sigma);
  int radius = (static_cast<int>(k.size()) - 1) / 2;
  double expected = 0;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx) {
      double bv = k[dx + radius] * k[dy + radius];
      double iv = (dx == 0 && dy == 0) ? 1.0 : 0.0;
      expected += (bv - iv) * (bv - iv);
    }
  expected /= 17.0 * 17.0;
  ImageD a17(17, 17, 1, 1.0);
  CHECK(normal_smooth_loss(impulse, a17, sigma).value == Catch::Approx(expected).margin(1e-12));

  // larger blur never reduces the loss on noisy images
  Rng rng(313);
  ImageD noisy(16, 16, 3);
  for (auto& v : noisy.data()) v = uniform(rng, -1, 1);
  double prev = normal_smooth_loss(noisy, alpha, 0.5).value;
  for (double s : {1.0, 2.0, 4.0}) {
    double cur = normal_smooth_loss(noisy, alpha, s).value;
    CHECK(cur >= prev - 1e-12);
    prev = cur;
  }

  // adjoint vs finite differences
  ImageD img(8, 8, 1);
  for (auto& v : img.data()) v = uniform(rng, -1, 1);
  ImageD a8(8, 8, 1, 1.0);
  for (int y = 2; y < 5; ++y) a8.at(3, y, 0) = 0.0;  // partial mask
  ScalarLoss loss = normal_smooth_loss(img, a8, 1.2);
  const double h = 1e-6;
  for (int i = 0; i < 20; ++i) {
    int x = int(uniform(rng, 0, 8)), y = int(uniform(rng, 0, 8));
    ImageD p = img, m = img;
    p.at(x, y, 0) += h;
    m.at(x, y, 0) -= h;
    double fd =
        (normal_smooth_loss(p, a8, 1.2).value - normal_smooth_loss(m, a8, 1.2).value) / (2 * h);
    CHECK(loss.adjoint.at(x, y, 0) == Catch::Approx(fd).margin(1e-7));
  }
}

TEST_CASE("semantic loss basics", "[losses]") {
  ImageD sem(8, 8, 1, 1.0), alpha(8, 8, 1, 1.0), mask(8, 8, 1, 1.0);
  CHECK(semantic_loss(sem, alpha, mask).value == 0.0);
  ImageD zero_mask(8, 8, 1, 0.0);
  CHECK(semantic_loss(sem, alpha, zero_mask).value == Catch::Approx(1.0));
  ImageD small(4, 4, 1, 0.0);
  CHECK_THROWS_AS(semantic_loss(sem, alpha, small), ShapeMismatch);
}

TEST_CASE("weighted refine loss arithmetic", "[losses]") {
  Rng rng(317);
  ImageD rendered(8, 8, 3), refined(8, 8, 3);
  for (auto& v : rendered.data()) v = uniform(rng, 0, 1);
  for (auto& v : refined.data()) v = uniform(rng, 0, 1);

  ImageD w0(8, 8, 1, 0.0);
  CHECK(weighted_refine_loss(rendered, refined, w0).value == 0.0);

  ImageD w1(8, 8, 1, 1.0);
  CHECK(weighted_refine_loss(rendered, refined, w1).value ==
        Catch::Approx(image_mse(rendered, refined)));

  ImageD half(8, 8, 1, 0.0);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 4; ++x) half.at(x, y, 0) = 1.0;
  ImageD ones(8, 8, 3, 1.0), zeros(8, 8, 3, 0.0);
  CHECK(weighted_refine_loss(zeros, ones, half).value == Catch::Approx(0.5));

  // adjoint check
  ScalarLoss loss = weighted_refine_loss(rendered, refined, half);
  const double h = 1e-6;
  for (int i = 0; i < 10; ++i) {
    int x = int(uniform(rng, 0, 8)), y = int(uniform(rng, 0, 8)), c = int(uniform(rng, 0, 3));
    ImageD p = rendered, m = rendered;
    p.at(x, y, c) += h;
    m.at(x, y, c) -= h;
    double fd = (weighted_refine_loss(p, refined, half).value -
                 weighted_refine_loss(m, refined, half).value) /
                (2 * h);
    CHECK(loss.adjoint.at(x, y, c) == Catch::Approx(fd).margin(1e-8));
  }
}

TEST_CASE("zero learning rate leaves parameters bit-identical", "[losses]") {
  TriMesh mesh = make_grid(0.4, 0.4, 2, 2);
  GSM part;
  part.mesh = mesh;
  bind_rest_state(part.mesh);
  part.surfels = init_surfels(part.mesh, 2);
  part.uv_maps = UVMaps::make(4, 4);
  GSM before = part;

  BoundFitConfig cfg;
  cfg.steps = 5;
  cfg.lrs = LearningRates{0, 0, 0, 0};
  cfg.render.background = Vec3(1, 0, 0);
  ViewTarget view;
  view.camera = test_camera(Vec3(0.2, 0.2, 0), 1.0, 0, 80, 24, 24, 35);
  view.color = ImageD(24, 24, 3, 1.0);
  fit_bound_gsm(part, {view}, nullptr, cfg);

  for (std::size_t i = 0; i < part.surfels.size(); ++i) {
    CHECK(part.surfels[i].bary == before.surfels[i].bary);
    CHECK(part.surfels[i].height == before.surfels[i].height);
    CHECK(part.surfels[i].local_rot == before.surfels[i].local_rot);
    CHECK(part.surfels[i].log_scale == before.surfels[i].log_scale);
  }
  CHECK(part.uv_maps.color_map.data() == before.uv_maps.color_map.data());
  CHECK(part.uv_maps.opacity_map.data() == before.uv_maps.opacity_map.data());
}

TEST_CASE("single surfel color converges to a constant red target", "[losses]") {
  GSM part;
  part.mesh.vertices = {Vec3(-0.3, -0.3, 0), Vec3(0.3, -0.3, 0), Vec3(0, 0.45, 0)};
  part.mesh.faces = {{0, 1, 2}};
  part.mesh.uv_per_corner = {{Vec2(0.5, 0.1), Vec2(0.9, 0.9), Vec2(0.1, 0.9)}};
  bind_rest_state(part.mesh);
  part.surfels = init_surfels(part.mesh, 1);
  part.surfels[0].log_scale = Vec2::Constant(std::log(0.2));
  part.uv_maps = UVMaps::make(2, 2, Vec3(0.2, 0.7, 0.4), 6.0);

  BoundFitConfig cfg;
  cfg.steps = 200;
  cfg.optimize_geometry = false;
  cfg.use_regularizers = false;
  cfg.lrs.uv_texels = 2e-2;  // the color has to travel ~0.8 within the budget
  cfg.render.background = Vec3(1, 0, 0);
  ViewTarget view;
  view.camera = test_camera(Vec3(0, 0, 0), 1.0, 0, 89.9, 24, 24, 40);
  view.color = ImageD(24, 24, 3, 0.0);
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 24; ++x) view.color.at(x, y, 0) = 1.0;  // constant red

  LossTrace trace = fit_bound_gsm(part, {view}, nullptr, cfg);
  CHECK(trace.back().photometric < 1e-4);
}

TEST_CASE("adam removes moments for pruned entries", "[losses]") {
  Adam adam(6, 0.1);
  std::vector<double> params = {1, 2, 3, 4, 5, 6};
  std::vector<double> grads = {1, 1, 1, 1, 1, 1};
  adam.step(params, grads);
  adam.keep_indices({0, 2}, 2);  // keep entries 0-1 and 4-5
  std::vector<double> small = {params[0], params[1], params[4], params[5]};
  std::vector<double> g2 = {0, 0, 0, 0};
  adam.step(small, g2);  // sizes must line up after pruning
  CHECK(small.size() == 4);
}
