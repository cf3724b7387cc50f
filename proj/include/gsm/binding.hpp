// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gsm/core/error.hpp"
#include "gsm/core/image.hpp"
#include "gsm/core/math.hpp"
#include "gsm/core/mesh.hpp"
#include "gsm/core/surfel.hpp"

namespace gsm {

// One part of an avatar: a proxy mesh with surfels bound to its faces plus the
// UV feature maps they sample.
struct GSM {
  TriMesh mesh;
  std::vector<BoundSurfel> surfels;
  UVMaps uv_maps;
  std::string label = "part";
};

struct RealizeOptions {
  double scale_exponent = 0.5;  // 1.0 selects the literal area-ratio mode
  double bary_slack = 0.05;
};

// ---------------------------------------------------------------------------
// Barycentric clamping: Euclidean projection onto the slack-enlarged simplex
// {l1 >= -slack, l2 >= -slack, l1 + l2 <= 1 + slack}, with its Jacobian.
// ---------------------------------------------------------------------------

struct BaryClamp {
  Vec2 value;
  Mat2 jacobian;
  bool clamped = false;
};

inline BaryClamp clamp_bary(const Vec2& b, double slack = 0.05) {
  double lo = -slack, hi = 1.0 + slack;
  BaryClamp r;
  if (b.x() >= lo && b.y() >= lo && b.x() + b.y() <= hi) {
    r.value = b;
    r.jacobian = Mat2::Identity();
    return r;
  }
  r.clamped = true;
  Vec2 corners[3] = {Vec2(lo, lo), Vec2(hi - lo, lo), Vec2(lo, hi - lo)};
  double best = std::numeric_limits<double>::max();
  for (int e = 0; e < 3; ++e) {
    Vec2 a = corners[e], c = corners[(e + 1) % 3];
    Vec2 d = c - a;
    double t = (b - a).dot(d) / d.squaredNorm();
    double tc = std::clamp(t, 0.0, 1.0);
    Vec2 q = a + tc * d;
    double dist = (b - q).squaredNorm();
    if (dist < best) {
      best = dist;
      r.value = q;
      if (tc > 0.0 && tc < 1.0) {
        Vec2 u = d.normalized();
        r.jacobian = u * u.transpose();
      } else {
        r.jacobian = Mat2::Zero();
      }
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// UV sampling
// ---------------------------------------------------------------------------

struct UVSample {
  Vec3 color;
  double opacity;
};

inline UVSample sample_uv(const UVMaps& maps, const Vec2& uv) {
  if (!uv.allFinite()) throw NonFiniteAttribute("sample_uv: uv not finite");
  BilinearTap tc = bilinear_tap(maps.color_map.width(), maps.color_map.height(), uv);
  BilinearTap ta = bilinear_tap(maps.opacity_map.width(), maps.opacity_map.height(), uv);
  UVSample s;
  for (int c = 0; c < 3; ++c) s.color[c] = sample_bilinear(maps.color_map, tc, c);
  s.opacity = sigmoid(sample_bilinear(maps.opacity_map, ta, 0));
  return s;
}

// Returns new maps with the rectangle at (ox, oy) overwritten by `patch`.
// A 3-channel patch edits the color map, a 1-channel patch the opacity map.
inline UVMaps patch_uv(const UVMaps& maps, const ImageD& patch, int ox, int oy) {
  const ImageD& target = patch.channels() == 1 ? maps.opacity_map : maps.color_map;
  if (patch.channels() != 1 && patch.channels() != 3)
    throw ShapeMismatch("patch_uv: patch must have 1 or 3 channels");
  if (ox < 0 || oy < 0 || ox + patch.width() > target.width() ||
      oy + patch.height() > target.height())
    throw OutOfBounds("patch_uv: patch exceeds map extents");
  UVMaps out = maps;
  ImageD& dst = patch.channels() == 1 ? out.opacity_map : out.color_map;
  for (int y = 0; y < patch.height(); ++y)
    for (int x = 0; x < patch.width(); ++x)
      for (int c = 0; c < patch.channels(); ++c)
        dst.at(ox + x, oy + y, c) = patch.at(x, y, c);
  return out;
}

// ---------------------------------------------------------------------------
// Initialization: ceil(n^2/2) surfels per face on a sub-triangle centroid
// lattice of density n, flat on the surface.
// ---------------------------------------------------------------------------

inline int surfels_per_face(int n) { return (n * n + 1) / 2; }

inline std::vector<BoundSurfel> init_surfels(const TriMesh& mesh, int n) {
  if (!mesh.has_uv()) throw MissingUV("init_surfels: mesh has no per-corner UVs");
  if (n < 1) throw ConfigValidation("init_surfels: n must be >= 1");
  std::vector<BoundSurfel> out;
  int per_face = surfels_per_face(n);
  out.reserve(static_cast<std::size_t>(per_face) * mesh.face_count());
  for (int f = 0; f < mesh.face_count(); ++f) {
    const auto& tri = mesh.faces[f];
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3& b = mesh.vertices[tri[1]];
    const Vec3& c = mesh.vertices[tri[2]];
    double area = 0.5 * (b - a).cross(c - a).norm();
    double perim = (b - a).norm() + (c - b).norm() + (a - c).norm();
    double incircle = perim > 0 ? 2.0 * area / perim : 0.0;
    double scale0 = std::max(incircle / n, 1e-9);
    const auto& uvc = mesh.uv_per_corner[f];
    int emitted = 0;
    for (int i = 0; i < n && emitted < per_face; ++i) {
      for (int j = 0; i + j < n && emitted < per_face; ++j) {
        BoundSurfel s;
        s.face_id = f;
        s.bary = Vec2((3.0 * i + 1.0) / (3.0 * n), (3.0 * j + 1.0) / (3.0 * n));
        s.height = 0;
        s.local_rot = quat_identity();
        s.log_scale = Vec2::Constant(std::log(scale0));
        s.uv = s.bary.x() * uvc[0] + s.bary.y() * uvc[1] +
               (1.0 - s.bary.x() - s.bary.y()) * uvc[2];
        out.push_back(s);
        ++emitted;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Realization (bound -> world) and its backward chain.
// ---------------------------------------------------------------------------

struct SurfelRealizeState {
  Mat2 bary_jacobian;
  Vec3 xa, xb, xc, normal;
  Vec4 frame_quat;
  Vec2 scale_world;
  BilinearTap color_tap, opacity_tap;
  double opacity_logit_sample = 0;
};

struct RealizeCache {
  std::vector<SurfelRealizeState> per_surfel;
};

// Per-face state shared by every surfel bound to that face.
struct FaceState {
  Vec4 quat = quat_identity();
  Vec3 normal = Vec3::UnitZ();
  double k = 1.0;
};

inline std::vector<char> used_faces(const GSM& gsm) {
  std::vector<char> used(gsm.mesh.face_count(), 0);
  for (const auto& s : gsm.surfels) {
    if (s.face_id < 0 || s.face_id >= gsm.mesh.face_count())
      throw OutOfBounds("realize: surfel face_id out of range");
    used[s.face_id] = 1;
  }
  return used;
}

inline std::vector<FaceState> compute_face_states(const GSM& gsm, const RealizeOptions& opt) {
  const TriMesh& mesh = gsm.mesh;
  if (!mesh.has_rest_state()) throw MissingFrames("realize: mesh has no rest state");
  std::vector<char> face_used = used_faces(gsm);
  std::vector<FaceState> states(mesh.face_count());
  for (int f = 0; f < mesh.face_count(); ++f) {
    if (!face_used[f]) continue;
    TriangleFrame frame = compute_frame(mesh, f);
    states[f].quat = mat_to_quat(frame.axes);
    states[f].normal = frame.normal;
    states[f].k = area_scale_factor(mesh, f, opt.scale_exponent);
  }
  return states;
}

// Realization against precomputed per-face states (animation replay supplies
// fallback states for degenerate frames).
inline std::vector<RealizedSurfel> realize_with_faces(const GSM& gsm,
                                                      const std::vector<FaceState>& faces,
                                                      const RealizeOptions& opt = {},
                                                      RealizeCache* cache = nullptr) {
  const TriMesh& mesh = gsm.mesh;
  std::vector<RealizedSurfel> out(gsm.surfels.size());
  if (cache) cache->per_surfel.resize(gsm.surfels.size());
  for (std::size_t i = 0; i < gsm.surfels.size(); ++i) {
    const BoundSurfel& s = gsm.surfels[i];
    const auto& tri = mesh.faces[s.face_id];
    const Vec3& xa = mesh.vertices[tri[0]];
    const Vec3& xb = mesh.vertices[tri[1]];
    const Vec3& xc = mesh.vertices[tri[2]];
    BaryClamp bc = clamp_bary(s.bary, opt.bary_slack);
    const Vec2& l = bc.value;
    const Vec3& n = faces[s.face_id].normal;

    RealizedSurfel& r = out[i];
    r.position = l.x() * xa + l.y() * xb + (1.0 - l.x() - l.y()) * xc + s.height * n;
    r.rot = quat_mul(faces[s.face_id].quat, quat_normalized(s.local_rot));
    r.scale = faces[s.face_id].k * s.log_scale.array().exp();
    BilinearTap tc = bilinear_tap(gsm.uv_maps.color_map.width(),
                                  gsm.uv_maps.color_map.height(), s.uv);
    BilinearTap ta = bilinear_tap(gsm.uv_maps.opacity_map.width(),
                                  gsm.uv_maps.opacity_map.height(), s.uv);
    for (int c = 0; c < 3; ++c) r.color[c] = sample_bilinear(gsm.uv_maps.color_map, tc, c);
    double logit_sample = sample_bilinear(gsm.uv_maps.opacity_map, ta, 0);
    r.opacity = sigmoid(logit_sample);
    r.cls = 0;

    if (cache) {
      SurfelRealizeState& st = cache->per_surfel[i];
      st.bary_jacobian = bc.jacobian;
      st.xa = xa;
      st.xb = xb;
      st.xc = xc;
      st.normal = n;
      st.frame_quat = faces[s.face_id].quat;
      st.scale_world = r.scale;
      st.color_tap = tc;
      st.opacity_tap = ta;
      st.opacity_logit_sample = logit_sample;
    }
  }
  return out;
}

inline std::vector<RealizedSurfel> realize(const GSM& gsm, const RealizeOptions& opt = {},
                                           RealizeCache* cache = nullptr) {
  return realize_with_faces(gsm, compute_face_states(gsm, opt), opt, cache);
}

// Gradients w.r.t. the optimizable bound parameters and UV texels.
struct BoundParamGrads {
  std::vector<Vec2> bary;
  std::vector<double> height;
  std::vector<Vec4> local_rot;
  std::vector<Vec2> log_scale;
  ImageD color_map;
  ImageD opacity_map;
};

inline BoundParamGrads chain_realize_backward(const GSM& gsm, const RealizeCache& cache,
                                              const GradientBuffer& grads) {
  if (cache.per_surfel.size() != gsm.surfels.size() ||
      grads.surfels.size() != gsm.surfels.size())
    throw MissingForwardState("chain_realize_backward: cache/grads size mismatch");
  BoundParamGrads out;
  std::size_t n = gsm.surfels.size();
  out.bary.assign(n, Vec2::Zero());
  out.height.assign(n, 0.0);
  out.local_rot.assign(n, Vec4::Zero());
  out.log_scale.assign(n, Vec2::Zero());
  out.color_map = ImageD(gsm.uv_maps.color_map.width(), gsm.uv_maps.color_map.height(), 3, 0.0);
  out.opacity_map =
      ImageD(gsm.uv_maps.opacity_map.width(), gsm.uv_maps.opacity_map.height(), 1, 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    const SurfelGrad& g = grads.surfels[i];
    const SurfelRealizeState& st = cache.per_surfel[i];
    const BoundSurfel& s = gsm.surfels[i];

    Vec2 dl(g.position.dot(st.xa - st.xc), g.position.dot(st.xb - st.xc));
    out.bary[i] = st.bary_jacobian.transpose() * dl;
    out.height[i] = g.position.dot(st.normal);

    Vec4 d_local_unit = quat_left_mul_matrix(st.frame_quat).transpose() * g.rot;
    out.local_rot[i] = quat_normalize_grad(d_local_unit, s.local_rot);

    out.log_scale[i] = g.scale.cwiseProduct(st.scale_world);

    for (int c = 0; c < 3; ++c) scatter_bilinear(out.color_map, st.color_tap, c, g.color[c]);
    double dlogit = g.opacity * sigmoid_grad(st.opacity_logit_sample);
    scatter_bilinear(out.opacity_map, st.opacity_tap, 0, dlogit);
  }
  return out;
}

}  // namespace gsm
