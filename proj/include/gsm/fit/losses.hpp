// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <vector>

#include "gsm/binding.hpp"
#include "gsm/core/image.hpp"
#include "gsm/core/surfel.hpp"
#include "gsm/extract/bvh.hpp"

namespace gsm {

// Loss weights of the three optimization stages. Defaults follow the
// reference settings: lambda_p = lambda_s = 10, lambda_r = 1, lambda_dis = 1,
// lambda_smooth = 100.
struct LossWeights {
  double lambda_p = 10;
  double lambda_s = 10;
  double lambda_r = 1;
  double lambda_dis = 1;
  double lambda_smooth = 100;
};

struct ScalarLoss {
  double value = 0;
  ImageD adjoint;  // dL/d(input image)
};

// ---------------------------------------------------------------------------
// Photometric target loss: mean squared error over (masked) pixels.
// ---------------------------------------------------------------------------

inline ScalarLoss photometric_loss(const ImageD& rendered, const ImageD& target,
                                   const ImageD* mask = nullptr) {
  require_same_shape(rendered, target, "photometric_loss");
  if (mask && (mask->width() != rendered.width() || mask->height() != rendered.height()))
    throw ShapeMismatch("photometric_loss: mask size");
  ScalarLoss out;
  out.adjoint = ImageD(rendered.width(), rendered.height(), rendered.channels(), 0.0);
  std::size_t active_px = 0;
  for (int y = 0; y < rendered.height(); ++y)
    for (int x = 0; x < rendered.width(); ++x) {
      if (mask && mask->at(x, y, 0) <= 0) continue;
      ++active_px;
      for (int c = 0; c < rendered.channels(); ++c) {
        double d = rendered.at(x, y, c) - target.at(x, y, c);
        out.value += d * d;
        out.adjoint.at(x, y, c) = 2.0 * d;
      }
    }
  double n = double(active_px) * rendered.channels();
  if (n > 0) {
    out.value /= n;
    for (auto& v : out.adjoint.data()) v /= n;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bound-surfel regularizers, quadratic penalties anchored at initialization.
// ---------------------------------------------------------------------------

struct RegResult {
  double value = 0;
  std::vector<Vec2> d_bary;
  std::vector<double> d_height;
  std::vector<Vec4> d_local_rot;
  std::vector<Vec2> d_log_scale;
};

// L_p: squared height plus squared distance of (l1, l2) outside the slack simplex.
inline RegResult reg_positions(const std::vector<BoundSurfel>& surfels, double slack = 0.05) {
  RegResult r;
  std::size_t n = surfels.size();
  r.d_bary.assign(n, Vec2::Zero());
  r.d_height.assign(n, 0.0);
  if (n == 0) return r;
  for (std::size_t i = 0; i < n; ++i) {
    const BoundSurfel& s = surfels[i];
    r.value += s.height * s.height;
    r.d_height[i] = 2.0 * s.height / double(n);
    BaryClamp bc = clamp_bary(s.bary, slack);
    Vec2 excess = s.bary - bc.value;
    r.value += excess.squaredNorm();
    // gradient of squared distance to a convex set is 2 * (x - P(x))
    r.d_bary[i] = 2.0 * excess / double(n);
  }
  r.value /= double(n);
  return r;
}

// L_s: squared log ratio of the current scale to its initialization.
inline RegResult reg_scales(const std::vector<BoundSurfel>& surfels,
                            const std::vector<Vec2>& init_log_scale) {
  RegResult r;
  std::size_t n = surfels.size();
  if (init_log_scale.size() != n) throw ShapeMismatch("reg_scales: init anchor size");
  r.d_log_scale.assign(n, Vec2::Zero());
  if (n == 0) return r;
  for (std::size_t i = 0; i < n; ++i) {
    Vec2 d = surfels[i].log_scale - init_log_scale[i];
    r.value += d.squaredNorm();
    r.d_log_scale[i] = 2.0 * d / double(n);
  }
  r.value /= double(n);
  return r;
}

// L_r: squared geodesic angle of the local rotation from identity.
inline RegResult reg_rotations(const std::vector<BoundSurfel>& surfels) {
  RegResult r;
  std::size_t n = surfels.size();
  r.d_local_rot.assign(n, Vec4::Zero());
  if (n == 0) return r;
  for (std::size_t i = 0; i < n; ++i) {
    Vec4 q = quat_normalized(surfels[i].local_rot);
    double vr = q.tail<3>().norm();
    double theta = 2.0 * std::atan2(vr, std::abs(q[0]));
    r.value += theta * theta;
    Vec4 d_unit = Vec4::Zero();
    if (vr < 1e-9) {
      // theta^2 ~ 4 |v|^2 near identity
      d_unit.tail<3>() = 8.0 * q.tail<3>();
    } else {
      // unit quaternion: d(theta)/dv = 2|w| v/|v|, d(theta)/dw = -2|v| sign(w)
      double sign_w = q[0] >= 0 ? 1.0 : -1.0;
      d_unit.tail<3>() = (4.0 * theta * std::abs(q[0]) / vr) * q.tail<3>();
      d_unit[0] = -4.0 * theta * vr * sign_w;
    }
    r.d_local_rot[i] = quat_normalize_grad(d_unit, surfels[i].local_rot) / double(n);
  }
  r.value /= double(n);
  return r;
}

// ---------------------------------------------------------------------------
// Free-surfel distance to the body surface (Eq.-style point-to-surface term).
// ---------------------------------------------------------------------------

struct DistanceLoss {
  double value = 0;
  std::vector<Vec3> d_position;
};

inline DistanceLoss distance_loss(const std::vector<FreeSurfel>& surfels, const TriBvh& body) {
  DistanceLoss out;
  out.d_position.assign(surfels.size(), Vec3::Zero());
  if (surfels.empty()) return out;
  for (std::size_t i = 0; i < surfels.size(); ++i) {
    ClosestHit hit = body.closest_point(surfels[i].position);
    double dist = std::sqrt(hit.dist2);
    out.value += dist;
    if (dist > 1e-12)
      out.d_position[i] = (surfels[i].position - hit.point) / (dist * surfels.size());
  }
  out.value /= double(surfels.size());
  return out;
}

// ---------------------------------------------------------------------------
// Gaussian blur (clamp-to-edge) and the normal smoothness term.
// ---------------------------------------------------------------------------

inline std::vector<double> gaussian_kernel(double sigma) {
  int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& v : k) v /= sum;
  return k;
}

namespace blur_detail {

// horizontal=true convolves along x. Transpose scatters instead of gathers,
// which is the exact adjoint under clamp-to-edge addressing.
inline ImageD conv1d(const ImageD& src, const std::vector<double>& k, bool horizontal,
                     bool transpose) {
  int radius = (static_cast<int>(k.size()) - 1) / 2;
  ImageD dst(src.width(), src.height(), src.channels(), 0.0);
  for (int y = 0; y < src.height(); ++y)
    for (int x = 0; x < src.width(); ++x)
      for (int c = 0; c < src.channels(); ++c) {
        if (!transpose) {
          double acc = 0;
          for (int o = -radius; o <= radius; ++o) {
            int xx = horizontal ? std::clamp(x + o, 0, src.width() - 1) : x;
            int yy = horizontal ? y : std::clamp(y + o, 0, src.height() - 1);
            acc += k[o + radius] * src.at(xx, yy, c);
          }
          dst.at(x, y, c) = acc;
        } else {
          double v = src.at(x, y, c);
          for (int o = -radius; o <= radius; ++o) {
            int xx = horizontal ? std::clamp(x + o, 0, src.width() - 1) : x;
            int yy = horizontal ? y : std::clamp(y + o, 0, src.height() - 1);
            dst.at(xx, yy, c) += k[o + radius] * v;
          }
        }
      }
  return dst;
}

}  // namespace blur_detail

inline ImageD gaussian_blur(const ImageD& img, double sigma) {
  auto k = gaussian_kernel(sigma);
  return blur_detail::conv1d(blur_detail::conv1d(img, k, true, false), k, false, false);
}

inline ImageD gaussian_blur_transpose(const ImageD& img, double sigma) {
  auto k = gaussian_kernel(sigma);
  return blur_detail::conv1d(blur_detail::conv1d(img, k, false, true), k, true, true);
}

// || G(I_n) - I_n ||^2 averaged over pixels with alpha > 0.5.
inline ScalarLoss normal_smooth_loss(const ImageD& normal_image, const ImageD& alpha,
                                     double blur_sigma = 2.0) {
  if (alpha.width() != normal_image.width() || alpha.height() != normal_image.height())
    throw ShapeMismatch("normal_smooth_loss: alpha size");
  ScalarLoss out;
  ImageD blurred = gaussian_blur(normal_image, blur_sigma);
  ImageD residual(normal_image.width(), normal_image.height(), normal_image.channels(), 0.0);
  std::size_t active = 0;
  for (int y = 0; y < normal_image.height(); ++y)
    for (int x = 0; x < normal_image.width(); ++x) {
      if (alpha.at(x, y, 0) <= 0.5) continue;
      ++active;
      for (int c = 0; c < normal_image.channels(); ++c) {
        double d = blurred.at(x, y, c) - normal_image.at(x, y, c);
        out.value += d * d;
        residual.at(x, y, c) = 2.0 * d;
      }
    }
  if (active > 0) {
    out.value /= double(active);
    for (auto& v : residual.data()) v /= double(active);
  }
  // dL/dI = B^T r - r
  out.adjoint = gaussian_blur_transpose(residual, blur_sigma);
  for (std::size_t i = 0; i < residual.size(); ++i) out.adjoint.data()[i] -= residual.data()[i];
  return out;
}

// ---------------------------------------------------------------------------
// Semantic mask loss: MSE between the composited cls channel and the mask
// over pixels with alpha > 0.1. The caller routes the adjoint so only cls
// attributes receive it.
// ---------------------------------------------------------------------------

inline ScalarLoss semantic_loss(const ImageD& semantic, const ImageD& alpha, const ImageD& mask) {
  require_same_shape(semantic, mask, "semantic_loss");
  if (alpha.width() != semantic.width() || alpha.height() != semantic.height())
    throw ShapeMismatch("semantic_loss: alpha size");
  ScalarLoss out;
  out.adjoint = ImageD(semantic.width(), semantic.height(), 1, 0.0);
  std::size_t active = 0;
  for (int y = 0; y < semantic.height(); ++y)
    for (int x = 0; x < semantic.width(); ++x) {
      if (alpha.at(x, y, 0) <= 0.1) continue;
      ++active;
      double d = semantic.at(x, y, 0) - mask.at(x, y, 0);
      out.value += d * d;
      out.adjoint.at(x, y, 0) = 2.0 * d;
    }
  if (active > 0) {
    out.value /= double(active);
    for (auto& v : out.adjoint.data()) v /= double(active);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Weighted refinement loss: mean of (W * (refined - rendered))^2.
// ---------------------------------------------------------------------------

inline ScalarLoss weighted_refine_loss(const ImageD& rendered, const ImageD& refined,
                                       const ImageD& weight) {
  require_same_shape(rendered, refined, "weighted_refine_loss");
  if (weight.width() != rendered.width() || weight.height() != rendered.height())
    throw ShapeMismatch("weighted_refine_loss: weight size");
  ScalarLoss out;
  out.adjoint = ImageD(rendered.width(), rendered.height(), rendered.channels(), 0.0);
  std::size_t n = rendered.size();
  for (int y = 0; y < rendered.height(); ++y)
    for (int x = 0; x < rendered.width(); ++x) {
      double w = weight.at(x, y, 0);
      for (int c = 0; c < rendered.channels(); ++c) {
        double d = w * (refined.at(x, y, c) - rendered.at(x, y, c));
        out.value += d * d;
        out.adjoint.at(x, y, c) = -2.0 * d * w / double(n);
      }
    }
  out.value /= double(n);
  return out;
}

}  // namespace gsm
