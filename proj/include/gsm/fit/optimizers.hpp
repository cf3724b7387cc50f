// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "gsm/binding.hpp"
#include "gsm/core/surfel.hpp"
#include "gsm/fit/adam.hpp"
#include "gsm/fit/losses.hpp"

namespace gsm {

// Per-group learning rates; attribute sensitivity ordering.
struct LearningRates {
  double color_opacity_cls = 1e-2;
  double bary_height = 2e-3;
  double rot_scale = 1e-3;
  double uv_texels = 5e-3;
};

// ---------------------------------------------------------------------------
// Optimizer over one GSM part: (bary, height), local_rot, log_scale, UV maps.
// ---------------------------------------------------------------------------

class BoundOptimizer {
 public:
  BoundOptimizer(GSM* part, const LearningRates& lr, bool optimize_geometry = true,
                 bool optimize_uv = true)
      : part_(part), geometry_(optimize_geometry), uv_(optimize_uv) {
    std::size_t n = part->surfels.size();
    init_log_scale_.reserve(n);
    for (const auto& s : part->surfels) init_log_scale_.push_back(s.log_scale);
    bary_height_ = Adam(n * 3, lr.bary_height);
    rot_ = Adam(n * 4, lr.rot_scale);
    scale_ = Adam(n * 2, lr.rot_scale);
    color_map_ = Adam(part->uv_maps.color_map.size(), lr.uv_texels);
    opacity_map_ = Adam(part->uv_maps.opacity_map.size(), lr.uv_texels);
  }

  const std::vector<Vec2>& init_log_scale() const { return init_log_scale_; }

  void step(const BoundParamGrads& g) {
    std::size_t n = part_->surfels.size();
    if (geometry_) {
      std::vector<double> p(n * 3), gr(n * 3);
      for (std::size_t i = 0; i < n; ++i) {
        p[3 * i] = part_->surfels[i].bary.x();
        p[3 * i + 1] = part_->surfels[i].bary.y();
        p[3 * i + 2] = part_->surfels[i].height;
        gr[3 * i] = g.bary[i].x();
        gr[3 * i + 1] = g.bary[i].y();
        gr[3 * i + 2] = g.height[i];
      }
      bary_height_.step(p, gr);
      for (std::size_t i = 0; i < n; ++i) {
        part_->surfels[i].bary = Vec2(p[3 * i], p[3 * i + 1]);
        part_->surfels[i].height = p[3 * i + 2];
      }

      std::vector<double> q(n * 4), gq(n * 4);
      for (std::size_t i = 0; i < n; ++i)
        for (int k = 0; k < 4; ++k) {
          q[4 * i + k] = part_->surfels[i].local_rot[k];
          gq[4 * i + k] = g.local_rot[i][k];
        }
      rot_.step(q, gq);
      for (std::size_t i = 0; i < n; ++i) {
        Vec4 raw(q[4 * i], q[4 * i + 1], q[4 * i + 2], q[4 * i + 3]);
        part_->surfels[i].local_rot = quat_normalized(raw);
      }

      std::vector<double> s(n * 2), gs(n * 2);
      for (std::size_t i = 0; i < n; ++i)
        for (int k = 0; k < 2; ++k) {
          s[2 * i + k] = part_->surfels[i].log_scale[k];
          gs[2 * i + k] = g.log_scale[i][k];
        }
      scale_.step(s, gs);
      for (std::size_t i = 0; i < n; ++i)
        part_->surfels[i].log_scale = Vec2(s[2 * i], s[2 * i + 1]);
    }
    if (uv_) {
      color_map_.step(part_->uv_maps.color_map.data(), g.color_map.data());
      opacity_map_.step(part_->uv_maps.opacity_map.data(), g.opacity_map.data());
    }
  }

 private:
  GSM* part_;
  bool geometry_, uv_;
  std::vector<Vec2> init_log_scale_;
  Adam bary_height_, rot_, scale_, color_map_, opacity_map_;
};

// ---------------------------------------------------------------------------
// Optimizer over free surfels, with pruning support.
// ---------------------------------------------------------------------------

struct FreeParamGrads {
  std::vector<Vec3> position;
  std::vector<Vec4> rot;
  std::vector<Vec2> log_scale;
  std::vector<Vec3> color;
  std::vector<double> opacity_logit;
  std::vector<double> cls;

  explicit FreeParamGrads(std::size_t n = 0)
      : position(n, Vec3::Zero()),
        rot(n, Vec4::Zero()),
        log_scale(n, Vec2::Zero()),
        color(n, Vec3::Zero()),
        opacity_logit(n, 0.0),
        cls(n, 0.0) {}
};

// Pull renderer gradients back to the stored free-surfel parameters.
inline FreeParamGrads chain_free_backward(const std::vector<FreeSurfel>& surfels,
                                          const GradientBuffer& g, std::size_t offset = 0) {
  FreeParamGrads out(surfels.size());
  for (std::size_t i = 0; i < surfels.size(); ++i) {
    const SurfelGrad& sg = g.surfels[offset + i];
    out.position[i] = sg.position;
    out.rot[i] = quat_normalize_grad(sg.rot, surfels[i].rot);
    out.log_scale[i] =
        sg.scale.cwiseProduct(Vec2(surfels[i].log_scale.array().exp()));
    out.color[i] = sg.color;
    out.opacity_logit[i] = sg.opacity * sigmoid_grad(surfels[i].opacity_logit);
    out.cls[i] = sg.cls;
  }
  return out;
}

class FreeOptimizer {
 public:
  FreeOptimizer(std::vector<FreeSurfel>* surfels, const LearningRates& lr)
      : surfels_(surfels) {
    std::size_t n = surfels->size();
    position_ = Adam(n * 3, lr.bary_height);
    rot_ = Adam(n * 4, lr.rot_scale);
    scale_ = Adam(n * 2, lr.rot_scale);
    color_ = Adam(n * 3, lr.color_opacity_cls);
    opacity_ = Adam(n, lr.color_opacity_cls);
    cls_ = Adam(n, lr.color_opacity_cls);
  }

  void set_cls_learning_rate(double lr) { cls_.set_learning_rate(lr); }

  void step(const FreeParamGrads& g) {
    std::size_t n = surfels_->size();
    std::vector<double> p(n * 3), gp(n * 3);
    for (std::size_t i = 0; i < n; ++i)
      for (int k = 0; k < 3; ++k) {
        p[3 * i + k] = (*surfels_)[i].position[k];
        gp[3 * i + k] = g.position[i][k];
      }
    position_.step(p, gp);
    for (std::size_t i = 0; i < n; ++i)
      (*surfels_)[i].position = Vec3(p[3 * i], p[3 * i + 1], p[3 * i + 2]);

    std::vector<double> q(n * 4), gq(n * 4);
    for (std::size_t i = 0; i < n; ++i)
      for (int k = 0; k < 4; ++k) {
        q[4 * i + k] = (*surfels_)[i].rot[k];
        gq[4 * i + k] = g.rot[i][k];
      }
    rot_.step(q, gq);
    for (std::size_t i = 0; i < n; ++i)
      (*surfels_)[i].rot = quat_normalized(Vec4(q[4 * i], q[4 * i + 1], q[4 * i + 2], q[4 * i + 3]));

    std::vector<double> s(n * 2), gs(n * 2);
    for (std::size_t i = 0; i < n; ++i)
      for (int k = 0; k < 2; ++k) {
        s[2 * i + k] = (*surfels_)[i].log_scale[k];
        gs[2 * i + k] = g.log_scale[i][k];
      }
    scale_.step(s, gs);
    for (std::size_t i = 0; i < n; ++i) (*surfels_)[i].log_scale = Vec2(s[2 * i], s[2 * i + 1]);

    std::vector<double> c(n * 3), gc(n * 3);
    for (std::size_t i = 0; i < n; ++i)
      for (int k = 0; k < 3; ++k) {
        c[3 * i + k] = (*surfels_)[i].color[k];
        gc[3 * i + k] = g.color[i][k];
      }
    color_.step(c, gc);
    for (std::size_t i = 0; i < n; ++i)
      (*surfels_)[i].color =
          Vec3(clamp01(c[3 * i]), clamp01(c[3 * i + 1]), clamp01(c[3 * i + 2]));

    std::vector<double> o(n), go(n);
    for (std::size_t i = 0; i < n; ++i) {
      o[i] = (*surfels_)[i].opacity_logit;
      go[i] = g.opacity_logit[i];
    }
    opacity_.step(o, go);
    for (std::size_t i = 0; i < n; ++i) (*surfels_)[i].opacity_logit = o[i];

    std::vector<double> cl(n), gcl(n);
    for (std::size_t i = 0; i < n; ++i) {
      cl[i] = (*surfels_)[i].cls;
      gcl[i] = g.cls[i];
    }
    cls_.step(cl, gcl);
    for (std::size_t i = 0; i < n; ++i) (*surfels_)[i].cls = clamp01(cl[i]);
  }

  // Drops surfels not listed in `keep` together with their optimizer moments.
  void prune(const std::vector<int>& keep) {
    std::vector<FreeSurfel> kept;
    kept.reserve(keep.size());
    for (int idx : keep) kept.push_back((*surfels_)[idx]);
    *surfels_ = std::move(kept);
    position_.keep_indices(keep, 3);
    rot_.keep_indices(keep, 4);
    scale_.keep_indices(keep, 2);
    color_.keep_indices(keep, 3);
    opacity_.keep_indices(keep, 1);
    cls_.keep_indices(keep, 1);
  }

 private:
  std::vector<FreeSurfel>* surfels_;
  Adam position_, rot_, scale_, color_, opacity_, cls_;
};

}  // namespace gsm
