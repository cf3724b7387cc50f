// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "gsm/binding.hpp"
#include "gsm/core/shapes.hpp"
#include "gsm/render/renderer.hpp"
#include "helpers.hpp"

using namespace gsm;
using namespace gsm::testing;

namespace {

struct AdjointScene {
  RenderTarget adjoint;

  explicit AdjointScene(Rng& rng, int w, int h) : adjoint(w, h) {
    auto fill = [&](ImageD& img) {
      for (auto& v : img.data()) v = uniform(rng, -1, 1);
    };
    fill(adjoint.color);
    fill(adjoint.depth);
    fill(adjoint.normal);
    fill(adjoint.semantic);
    fill(adjoint.alpha);
  }

  // The expected-depth estimator is discontinuous where coverage starts, so
  // depth adjoints only make sense over solidly covered pixels (this mirrors
  // how depth losses are masked downstream).
  void mask_depth(const RenderTarget& base) {
    for (int y = 0; y < adjoint.depth.height(); ++y)
      for (int x = 0; x < adjoint.depth.width(); ++x)
        if (base.alpha.at(x, y, 0) <= 0.1) adjoint.depth.at(x, y, 0) = 0.0;
  }

  double loss(const RenderTarget& out) const {
    double acc = 0;
    auto dot = [&](const ImageD& a, const ImageD& b) {
      for (std::size_t i = 0; i < a.size(); ++i) acc += a.data()[i] * b.data()[i];
    };
    dot(adjoint.color, out.color);
    dot(adjoint.depth, out.depth);
    dot(adjoint.normal, out.normal);
    dot(adjoint.semantic, out.semantic);
    dot(adjoint.alpha, out.alpha);
    return acc;
  }
};

bool close_rel(double analytic, double fd, double tol, double floor) {
  return std::abs(analytic - fd) <= tol * std::max(std::abs(analytic), std::abs(fd)) + floor;
}

}  // namespace

TEST_CASE("render_backward matches central differences on realized attributes",
          "[render_backward]") {
  Rng rng(211);
  Camera cam = test_camera(Vec3(0, 0, 0), 1.5, 30, 10, 32, 32);
  auto surfels = random_surfels(rng, 20, Vec3(0, 0, 0), 0.25, 0.05, 0.12);
  SplatBatch batch;
  batch.append(surfels, 0);
  RenderOptions opt;
  opt.background = Vec3(0.3, 0.1, 0.2);
  // well-conditioned regime: push the contribution cutoffs far below the
  // finite-difference step so threshold crossings cannot pollute the check
  opt.sigma_min = 1e-9;
  opt.transmittance_min = 1e-9;
  AdjointScene sc(rng, 32, 32);
  sc.mask_depth(render(batch, cam, opt));

  ForwardCache cache;
  render(batch, cam, opt, &cache);
  GradientBuffer grads = render_backward(batch, cam, opt, cache, sc.adjoint);
  REQUIRE(grads.all_finite());

  auto loss_of = [&](const SplatBatch& b) { return sc.loss(render(b, cam, opt)); };
  const double h = 1e-4;
  int total = 0, ok = 0;
  auto check_coord = [&](double analytic, auto setter) {
    SplatBatch bp = batch, bm = batch;
    setter(bp, +h);
    setter(bm, -h);
    double fd = (loss_of(bp) - loss_of(bm)) / (2 * h);
    ++total;
    if (close_rel(analytic, fd, 1e-3, 1e-7)) ++ok;
  };

  for (std::size_t i = 0; i < batch.surfels.size(); ++i) {
    const SurfelGrad& g = grads.surfels[i];
    for (int k = 0; k < 3; ++k)
      check_coord(g.position[k], [&, k](SplatBatch& b, double d) { b.surfels[i].position[k] += d; });
    for (int k = 0; k < 4; ++k)
      check_coord(g.rot[k], [&, k](SplatBatch& b, double d) { b.surfels[i].rot[k] += d; });
    for (int k = 0; k < 2; ++k)
      check_coord(g.scale[k], [&, k](SplatBatch& b, double d) { b.surfels[i].scale[k] += d; });
    for (int k = 0; k < 3; ++k)
      check_coord(g.color[k], [&, k](SplatBatch& b, double d) { b.surfels[i].color[k] += d; });
    check_coord(g.opacity, [&](SplatBatch& b, double d) { b.surfels[i].opacity += d; });
    check_coord(g.cls, [&](SplatBatch& b, double d) { b.surfels[i].cls += d; });
  }
  INFO("ok " << ok << " of " << total);
  CHECK(ok >= total * 99 / 100);
}

TEST_CASE("gradients chain through realization and UV sampling", "[render_backward]") {
  Rng rng(223);
  GSM part;
  part.mesh = make_grid(0.5, 0.5, 2, 2);
  bind_rest_state(part.mesh);
  part.surfels = init_surfels(part.mesh, 2);
  part.uv_maps = UVMaps::make(6, 6);
  for (auto& v : part.uv_maps.color_map.data()) v = uniform(rng, 0.2, 0.8);
  for (auto& v : part.uv_maps.opacity_map.data()) v = uniform(rng, -0.5, 1.5);
  for (auto& s : part.surfels) {
    s.height = uniform(rng, -0.02, 0.02);
    s.local_rot = quat_normalized(Vec4(1, uniform(rng, -0.2, 0.2), uniform(rng, -0.2, 0.2),
                                       uniform(rng, -0.2, 0.2)));
    s.log_scale += Vec2(uniform(rng, -0.2, 0.2), uniform(rng, -0.2, 0.2));
  }

  Camera cam = test_camera(Vec3(0.25, 0.25, 0), 1.0, 15, 55, 32, 32, 40);
  RenderOptions opt;
  opt.sigma_min = 1e-9;
  opt.transmittance_min = 1e-9;
  AdjointScene sc(rng, 32, 32);
  RealizeOptions ropt;

  auto loss_of = [&](const GSM& g) {
    SplatBatch b;
    b.append(realize(g, ropt), 0);
    return sc.loss(render(b, cam, opt));
  };
  {
    SplatBatch base;
    base.append(realize(part, ropt), 0);
    sc.mask_depth(render(base, cam, opt));
  }

  RealizeCache rcache;
  SplatBatch batch;
  batch.append(realize(part, ropt, &rcache), 0);
  ForwardCache fcache;
  render(batch, cam, opt, &fcache);
  GradientBuffer grads = render_backward(batch, cam, opt, fcache, sc.adjoint);
  BoundParamGrads bound = chain_realize_backward(part, rcache, grads);

  const double h = 1e-4;
  int total = 0, ok = 0;
  auto check = [&](double analytic, auto setter) {
    GSM gp = part, gm = part;
    setter(gp, +h);
    setter(gm, -h);
    double fd = (loss_of(gp) - loss_of(gm)) / (2 * h);
    ++total;
    if (close_rel(analytic, fd, 1e-3, 1e-7)) ++ok;
  };

  for (std::size_t i = 0; i < part.surfels.size(); ++i) {
    for (int k = 0; k < 2; ++k)
      check(bound.bary[i][k], [&, k](GSM& g, double d) { g.surfels[i].bary[k] += d; });
    check(bound.height[i], [&](GSM& g, double d) { g.surfels[i].height += d; });
    for (int k = 0; k < 4; ++k)
      check(bound.local_rot[i][k], [&, k](GSM& g, double d) { g.surfels[i].local_rot[k] += d; });
    for (int k = 0; k < 2; ++k)
      check(bound.log_scale[i][k], [&, k](GSM& g, double d) { g.surfels[i].log_scale[k] += d; });
  }
  // UV texels (color + opacity logits)
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 6; ++x) {
      check(bound.color_map.at(x, y, 1),
            [&](GSM& g, double d) { g.uv_maps.color_map.at(x, y, 1) += d; });
      check(bound.opacity_map.at(x, y, 0),
            [&](GSM& g, double d) { g.uv_maps.opacity_map.at(x, y, 0) += d; });
    }
  INFO("ok " << ok << " of " << total);
  CHECK(ok >= total * 99 / 100);
}

TEST_CASE("surfels behind an opaque blocker get zero gradient", "[render_backward]") {
  Rng rng(227);
  Camera cam = test_camera(Vec3(0, 0, 0), 2.0, 0, 0, 16, 16);
  SplatBatch batch;
  // two fully opaque blockers drive transmittance below the early-exit threshold
  for (double off : {0.0, 0.05}) {
    RealizedSurfel s;
    s.position = Vec3(0, -off, 0);
    s.rot = mat_to_quat(cam.R.transpose());  // fronto-parallel to the camera
    s.scale = Vec2(50.0, 50.0);  // sigma saturates across the whole frame
    s.color = Vec3(1, 1, 1);
    s.opacity = 1.0;
    batch.surfels.push_back(s);
    batch.part.push_back(0);
  }
  RealizedSurfel hidden;
  hidden.position = Vec3(0, -0.4, 0);  // farther from the camera at (0, 2, 0)
  hidden.rot = batch.surfels[0].rot;
  hidden.scale = Vec2(0.05, 0.05);  // footprint stays inside the blockers' opaque core
  hidden.color = Vec3(1, 0, 0);
  hidden.opacity = 0.7;
  batch.surfels.push_back(hidden);
  batch.part.push_back(0);

  RenderOptions opt;
  AdjointScene sc(rng, 16, 16);
  ForwardCache cache;
  render(batch, cam, opt, &cache);
  GradientBuffer grads = render_backward(batch, cam, opt, cache, sc.adjoint);
  const SurfelGrad& g = grads.surfels[2];
  CHECK(g.position.norm() == 0.0);
  CHECK(g.rot.norm() == 0.0);
  CHECK(g.color.norm() == 0.0);
  CHECK(g.opacity == 0.0);
}

TEST_CASE("alpha-only adjoint leaves color gradients zero", "[render_backward]") {
  Rng rng(229);
  Camera cam = test_camera(Vec3(0, 0, 0), 1.5, 70, -20, 24, 24);
  auto surfels = random_surfels(rng, 12, Vec3(0, 0, 0), 0.2, 0.05, 0.1);
  SplatBatch batch;
  batch.append(surfels, 0);
  RenderOptions opt;
  ForwardCache cache;
  render(batch, cam, opt, &cache);
  RenderTarget adjoint;  // empty channels read as zero
  adjoint.alpha = ImageD(24, 24, 1, 1.0);
  GradientBuffer grads = render_backward(batch, cam, opt, cache, adjoint);
  for (const auto& g : grads.surfels) CHECK(g.color.norm() == 0.0);
  // but geometry gradients exist somewhere
  double any = 0;
  for (const auto& g : grads.surfels) any += g.position.cwiseAbs().sum() + std::abs(g.opacity);
  CHECK(any > 0.0);
}
