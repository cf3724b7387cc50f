// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "gsm/binding.hpp"
#include "gsm/core/shapes.hpp"
#include "gsm/render/renderer.hpp"
#include "helpers.hpp"

using namespace gsm;
using namespace gsm::testing;

namespace {

TriMesh one_face_mesh() {
  TriMesh m;
  m.vertices = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  m.faces = {{0, 1, 2}};
  // chart chosen so the interpolated uv equals (lambda1, lambda2)
  m.uv_per_corner = {{Vec2(1, 0), Vec2(0, 1), Vec2(0, 0)}};
  return m;
}

GSM make_part(TriMesh mesh, int n, int map_size = 8) {
  GSM part;
  part.mesh = std::move(mesh);
  bind_rest_state(part.mesh);
  part.surfels = init_surfels(part.mesh, n);
  part.uv_maps = UVMaps::make(map_size, map_size, Vec3(0.5, 0.5, 0.5), 4.0);
  return part;
}

}  // namespace

TEST_CASE("init_surfels counts and flat placement", "[binding]") {
  TriMesh m = one_face_mesh();
  auto s2 = init_surfels(m, 2);
  REQUIRE(s2.size() == 2);
  for (const auto& s : s2) CHECK(s.height == 0.0);

  auto s1 = init_surfels(m, 1);
  REQUIRE(s1.size() == 1);
  CHECK(s1[0].bary.x() == Catch::Approx(1.0 / 3));
  CHECK(s1[0].bary.y() == Catch::Approx(1.0 / 3));

  TriMesh sphere = make_uv_sphere(0.5, 10, 6);  // 2*10*5 = 100 faces
  REQUIRE(sphere.face_count() == 100);
  CHECK(init_surfels(sphere, 4).size() == 800);

  TriMesh no_uv = m;
  no_uv.uv_per_corner.clear();
  CHECK_THROWS_AS(init_surfels(no_uv, 2), MissingUV);
}

TEST_CASE("init_surfels barycentrics stay in the simplex and uv interpolates", "[binding]") {
  TriMesh m = one_face_mesh();
  for (int n : {1, 2, 3, 4, 7}) {
    auto surfels = init_surfels(m, n);
    CHECK(surfels.size() == std::size_t((n * n + 1) / 2));
    for (const auto& s : surfels) {
      CHECK(s.bary.x() >= 0.0);
      CHECK(s.bary.y() >= 0.0);
      CHECK(s.bary.x() + s.bary.y() <= 1.0);
      // this mesh's uv chart equals barycentric coordinates
      CHECK(s.uv.x() == Catch::Approx(s.bary.x()));
      CHECK(s.uv.y() == Catch::Approx(s.bary.y()));
    }
  }
}

TEST_CASE("realize places corners and height offsets exactly", "[binding]") {
  GSM part = make_part(one_face_mesh(), 1);
  part.surfels[0].bary = Vec2(1, 0);
  part.surfels[0].height = 0;
  auto r = realize(part);
  CHECK((r[0].position - Vec3(0, 0, 0)).norm() == 0.0);  // bary (1,0) -> x_A

  part.surfels[0].bary = Vec2(1.0 / 3, 1.0 / 3);
  part.surfels[0].height = 0.02;
  r = realize(part);
  CHECK((r[0].position - Vec3(1.0 / 3, 1.0 / 3, 0.02)).norm() < 1e-15);
}

TEST_CASE("realization is rigid-equivariant with invariant scales", "[binding]") {
  Rng rng(41);
  GSM part = make_part(make_uv_sphere(0.4, 8, 6), 2);
  for (auto& s : part.surfels) {  // perturb so the test is not trivial
    s.height = uniform(rng, -0.01, 0.01);
    s.local_rot = random_unit_quat(rng);
    s.log_scale = Vec2(uniform(rng, -0.3, 0.3), uniform(rng, -0.3, 0.3));
  }
  auto base = realize(part);
  for (int trial = 0; trial < 20; ++trial) {
    Mat3 q = random_rotation(rng);
    Vec3 t = uniform_vec3(rng, -1, 1);
    GSM moved = part;
    transform_mesh(moved.mesh, q, t);
    auto r = realize(moved);
    for (std::size_t i = 0; i < r.size(); ++i) {
      CHECK((r[i].position - (q * base[i].position + t)).norm() < 1e-8);
      CHECK((quat_to_mat(r[i].rot) - q * quat_to_mat(base[i].rot)).cwiseAbs().maxCoeff() < 1e-8);
      CHECK((r[i].scale - base[i].scale).norm() < 1e-8);
    }
  }
}

TEST_CASE("uniform scaling doubles splat extent in sqrt mode", "[binding]") {
  GSM part = make_part(one_face_mesh(), 2);
  auto base = realize(part);
  GSM big = part;
  for (auto& v : big.mesh.vertices) v *= 2.0;
  RealizeOptions sqrt_mode;
  auto r_sqrt = realize(big, sqrt_mode);
  RealizeOptions literal;
  literal.scale_exponent = 1.0;
  auto r_lit = realize(big, literal);
  for (std::size_t i = 0; i < base.size(); ++i) {
    CHECK((r_sqrt[i].scale - 2.0 * base[i].scale).norm() < 1e-12);
    CHECK((r_lit[i].scale - 4.0 * base[i].scale).norm() < 1e-12);
  }
}

TEST_CASE("flat surfels sit exactly on the host plane", "[binding]") {
  Rng rng(43);
  GSM part = make_part(make_uv_sphere(0.5, 10, 8), 3);
  for (auto& s : part.surfels)
    s.bary = Vec2(uniform(rng, 0.0, 0.6), uniform(rng, 0.0, 0.4));  // valid simplex, z = 0
  auto r = realize(part);
  for (std::size_t i = 0; i < r.size(); ++i) {
    TriangleFrame f = compute_frame(part.mesh, part.surfels[i].face_id);
    CHECK(std::abs(f.normal.dot(r[i].position - f.origin)) < 1e-10);
  }
}

TEST_CASE("realize propagates degenerate faces", "[binding]") {
  GSM part = make_part(one_face_mesh(), 1);
  part.mesh.vertices[1] = part.mesh.vertices[0];  // collapse an edge
  CHECK_THROWS_AS(realize(part), DegenerateTriangle);
}

TEST_CASE("sample_uv: constant map, texel identity, clamping, logistic", "[binding]") {
  UVMaps maps = UVMaps::make(8, 8, Vec3(1, 0, 0), 0.0);
  Rng rng(47);
  for (int i = 0; i < 20; ++i) {
    UVSample s = sample_uv(maps, Vec2(uniform(rng, -0.2, 1.2), uniform(rng, -0.2, 1.2)));
    CHECK(s.color.x() == Catch::Approx(1.0));
    CHECK(s.color.y() == Catch::Approx(0.0));
    CHECK(s.opacity == Catch::Approx(0.5));  // sigmoid(0)
  }
  maps.color_map.at(3, 2, 1) = 0.75;
  Vec2 center_uv((3 + 0.5) / 8.0, (2 + 0.5) / 8.0);
  CHECK(sample_uv(maps, center_uv).color.y() == Catch::Approx(0.75));
  CHECK(sample_uv(maps, Vec2(-0.5, 0.5)).color.x() ==
        Catch::Approx(sample_uv(maps, Vec2(0.0, 0.5)).color.x()));
}

TEST_CASE("sample_uv is 1-Lipschitz on the texel grid", "[binding]") {
  Rng rng(53);
  UVMaps maps = UVMaps::make(16, 16);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) maps.color_map.at(x, y, 0) = uniform(rng, 0, 1);
  // |f(uv1) - f(uv2)| <= max texel-range * grid distance for bilinear
  for (int i = 0; i < 200; ++i) {
    Vec2 a(uniform(rng, 0, 1), uniform(rng, 0, 1));
    Vec2 d(uniform(rng, -0.02, 0.02), uniform(rng, -0.02, 0.02));
    Vec2 b = a + d;
    double fa = sample_bilinear(maps.color_map, a, 0);
    double fb = sample_bilinear(maps.color_map, b, 0);
    double grid_dist = std::abs(d.x()) * 16 + std::abs(d.y()) * 16;  // L1 in texel units
    CHECK(std::abs(fa - fb) <= grid_dist + 1e-12);
  }
}

TEST_CASE("patch_uv overwrites rectangles", "[binding]") {
  UVMaps maps = UVMaps::make(4, 4, Vec3(0, 0, 0), 0.0);
  ImageD white(1, 1, 3, 1.0);
  UVMaps out = patch_uv(maps, white, 0, 0);
  int changed = 0;
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x)
      if (out.color_map.at(x, y, 0) != 0.0) ++changed;
  CHECK(changed == 1);
  CHECK(out.color_map.at(0, 0, 0) == 1.0);

  ImageD full(4, 4, 3, 0.25);
  out = patch_uv(maps, full, 0, 0);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) CHECK(out.color_map.at(x, y, 2) == 0.25);

  CHECK_THROWS_AS(patch_uv(maps, full, 1, 0), OutOfBounds);
}

TEST_CASE("patched texture shows up in renders", "[binding]") {
  GSM part = make_part(make_grid(0.4, 0.4, 4, 4), 3, 32);
  for (auto& t : part.uv_maps.color_map.data()) t = 0.02;  // near-black cloth
  for (auto& t : part.uv_maps.opacity_map.data()) t = 8.0;  // opaque
  Camera cam = test_camera(Vec3(0.2, 0.2, 0), 1.0, 0, 89.9, 64, 64, 30);

  SplatBatch batch;
  batch.append(realize(part), 0);
  RenderTarget before = render(batch, cam);

  ImageD logo(8, 8, 3, 1.0);
  GSM patched = part;
  patched.uv_maps = patch_uv(part.uv_maps, logo, 12, 12);
  SplatBatch batch2;
  batch2.append(realize(patched), 0);
  RenderTarget after = render(batch2, cam);

  double gained = 0;
  for (std::size_t i = 0; i < after.color.size(); ++i)
    gained += after.color.data()[i] - before.color.data()[i];
  CHECK(gained > 1.0);  // the logo region brightened
}
