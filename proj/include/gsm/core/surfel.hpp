// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "gsm/core/image.hpp"
#include "gsm/core/math.hpp"

namespace gsm {

// A 2D Gaussian disk bound to a mesh triangle, parameterized in the
// triangle's local frame. Scales live in the log domain; the rotation is
// renormalized after each optimizer step.
struct BoundSurfel {
  int face_id = 0;
  Vec2 bary = Vec2(1.0 / 3.0, 1.0 / 3.0);  // (lambda1, lambda2)
  double height = 0;                        // offset along the face normal, meters
  Vec4 local_rot = quat_identity();
  Vec2 log_scale = Vec2::Zero();
  Vec2 uv = Vec2::Zero();  // UVMaps lookup coordinate, fixed at init
};

// A world-space 2D Gaussian used during garment shaping. Opacity is kept as a
// logit; cls is a plain value clamped to [0,1] after optimizer steps so that a
// fresh garment surfel can start at exactly 1 and still receive gradient.
struct FreeSurfel {
  Vec3 position = Vec3::Zero();
  Vec4 rot = quat_identity();
  Vec2 log_scale = Vec2::Zero();
  Vec3 color = Vec3::Constant(0.5);
  double opacity_logit = 0.0;
  double cls = 1.0;

  double opacity() const { return sigmoid(opacity_logit); }
};

// World-space surfel ready for splatting.
struct RealizedSurfel {
  Vec3 position = Vec3::Zero();
  Vec4 rot = quat_identity();  // unit; columns 0/1 of R are tangential axes, 2 the normal
  Vec2 scale = Vec2::Ones();   // tangential standard deviations, meters
  Vec3 color = Vec3::Zero();
  double opacity = 0;
  double cls = 0;
};

inline RealizedSurfel realize_free(const FreeSurfel& s) {
  RealizedSurfel r;
  r.position = s.position;
  r.rot = quat_normalized(s.rot);
  r.scale = s.log_scale.array().exp();
  r.color = s.color;
  r.opacity = s.opacity();
  r.cls = s.cls;
  return r;
}

// Color and opacity textures sampled by bound surfels at render time.
// Opacity texels are logits; they pass through a logistic squash at sampling.
struct UVMaps {
  ImageD color_map;    // H x W x 3
  ImageD opacity_map;  // H x W x 1

  static UVMaps make(int width, int height, const Vec3& color = Vec3::Constant(0.5),
                     double opacity_logit = 0.0) {
    UVMaps m;
    m.color_map = ImageD(width, height, 3);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        for (int c = 0; c < 3; ++c) m.color_map.at(x, y, c) = color[c];
    m.opacity_map = ImageD(width, height, 1, opacity_logit);
    return m;
  }
};

// Loss gradient w.r.t. one realized surfel's attributes. The rotation entry is
// w.r.t. the raw (pre-normalization) quaternion storage.
struct SurfelGrad {
  Vec3 position = Vec3::Zero();
  Vec4 rot = Vec4::Zero();
  Vec2 scale = Vec2::Zero();
  Vec3 color = Vec3::Zero();
  double opacity = 0;
  double cls = 0;

  SurfelGrad& operator+=(const SurfelGrad& o) {
    position += o.position;
    rot += o.rot;
    scale += o.scale;
    color += o.color;
    opacity += o.opacity;
    cls += o.cls;
    return *this;
  }
};

struct GradientBuffer {
  std::vector<SurfelGrad> surfels;

  explicit GradientBuffer(std::size_t n = 0) : surfels(n) {}
  bool all_finite() const {
    for (const auto& g : surfels) {
      if (!g.position.allFinite() || !g.rot.allFinite() || !g.scale.allFinite() ||
          !g.color.allFinite() || !std::isfinite(g.opacity) || !std::isfinite(g.cls))
        return false;
    }
    return true;
  }
};

// All channels produced by one forward render.
struct RenderTarget {
  ImageD color;     // 3 channels
  ImageD depth;     // 1 channel, distance along the unit pixel ray, meters
  ImageD normal;    // 3 channels, alpha-weighted world-space normals
  ImageD semantic;  // 1 channel, composited cls
  ImageD alpha;     // 1 channel, accumulated opacity

  RenderTarget() = default;
  RenderTarget(int width, int height)
      : color(width, height, 3),
        depth(width, height, 1),
        normal(width, height, 3),
        semantic(width, height, 1),
        alpha(width, height, 1) {}

  int width() const { return color.width(); }
  int height() const { return color.height(); }
};

}  // namespace gsm
