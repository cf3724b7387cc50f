// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "gsm/binding.hpp"
#include "gsm/fit/losses.hpp"
#include "gsm/fit/optimizers.hpp"
#include "gsm/render/renderer.hpp"

namespace gsm {

// One optimization target view. Empty images disable the matching term.
struct ViewTarget {
  Camera camera;
  ImageD color;        // joint/clothed photometric target
  ImageD color_alone;  // part-only photometric target (paired mode)
  ImageD normal;       // geometry-branch target
  ImageD mask;         // optional photometric mask
};

struct StepRecord {
  int step = 0;
  double total = 0;
  double photometric = 0;
  double photometric_alone = 0;
  double reg_p = 0, reg_s = 0, reg_r = 0;
  double semantic = 0, distance = 0, smooth = 0;
  int surfel_count = 0;
};

using LossTrace = std::vector<StepRecord>;

inline void write_trace_csv(const std::string& path, const LossTrace& trace) {
  std::ofstream f(path);
  if (!f) throw IoError("write_trace_csv: cannot open " + path);
  f << "step,total,photometric,photometric_alone,reg_p,reg_s,reg_r,semantic,distance,smooth,"
       "surfel_count\n";
  char buf[512];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf,
                  "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", r.step,
                  r.total, r.photometric, r.photometric_alone, r.reg_p, r.reg_s, r.reg_r,
                  r.semantic, r.distance, r.smooth, r.surfel_count);
    f << buf;
  }
}

struct BoundFitConfig {
  int steps = 2000;
  LossWeights weights;
  LearningRates lrs;
  bool optimize_geometry = true;
  bool optimize_uv = true;
  bool use_regularizers = true;
  RenderOptions render;
  RealizeOptions realize;
};

namespace fit_detail {

inline void add_scaled(BoundParamGrads& dst, const RegResult& reg, double scale) {
  for (std::size_t i = 0; i < dst.bary.size(); ++i) {
    if (!reg.d_bary.empty()) dst.bary[i] += scale * reg.d_bary[i];
    if (!reg.d_height.empty()) dst.height[i] += scale * reg.d_height[i];
    if (!reg.d_local_rot.empty()) dst.local_rot[i] += scale * reg.d_local_rot[i];
    if (!reg.d_log_scale.empty()) dst.log_scale[i] += scale * reg.d_log_scale[i];
  }
}

inline void add(BoundParamGrads& dst, const BoundParamGrads& src) {
  for (std::size_t i = 0; i < dst.bary.size(); ++i) {
    dst.bary[i] += src.bary[i];
    dst.height[i] += src.height[i];
    dst.local_rot[i] += src.local_rot[i];
    dst.log_scale[i] += src.log_scale[i];
  }
  for (std::size_t i = 0; i < dst.color_map.size(); ++i)
    dst.color_map.data()[i] += src.color_map.data()[i];
  for (std::size_t i = 0; i < dst.opacity_map.size(); ++i)
    dst.opacity_map.data()[i] += src.opacity_map.data()[i];
}

inline BoundParamGrads zero_grads(const GSM& part) {
  BoundParamGrads g;
  g.bary.assign(part.surfels.size(), Vec2::Zero());
  g.height.assign(part.surfels.size(), 0.0);
  g.local_rot.assign(part.surfels.size(), Vec4::Zero());
  g.log_scale.assign(part.surfels.size(), Vec2::Zero());
  g.color_map = ImageD(part.uv_maps.color_map.width(), part.uv_maps.color_map.height(), 3, 0.0);
  g.opacity_map =
      ImageD(part.uv_maps.opacity_map.width(), part.uv_maps.opacity_map.height(), 1, 0.0);
  return g;
}

// Photometric term against one target through a (possibly joint) batch;
// returns the loss and accumulates bound-parameter gradients for `part`.
inline double photometric_term(GSM& part, const GSM* context_part,
                               const std::vector<RealizedSurfel>* context_realized,
                               const ViewTarget& view, const ImageD& target,
                               const BoundFitConfig& cfg, BoundParamGrads* acc) {
  RealizeCache rcache;
  std::vector<RealizedSurfel> own = realize(part, cfg.realize, &rcache);
  SplatBatch batch;
  std::size_t offset = 0;
  if (context_realized) {
    batch.append(*context_realized, 0);
    offset = context_realized->size();
  }
  batch.append(own, 1);
  ForwardCache fcache;
  RenderTarget out = render(batch, view.camera, cfg.render, &fcache);
  ScalarLoss loss =
      photometric_loss(out.color, target, view.mask.empty() ? nullptr : &view.mask);
  RenderTarget adjoint;
  adjoint.color = std::move(loss.adjoint);
  GradientBuffer grads = render_backward(batch, view.camera, cfg.render, fcache, adjoint);
  GradientBuffer own_grads(part.surfels.size());
  for (std::size_t i = 0; i < part.surfels.size(); ++i)
    own_grads.surfels[i] = grads.surfels[offset + i];
  add(*acc, chain_realize_backward(part, rcache, own_grads));
  (void)context_part;
  return loss.value;
}

}  // namespace fit_detail

// Gradient fit of one part's surfel attributes and UV maps against photometric
// targets; `context` (e.g. the frozen body) joins the render but is never
// updated. Views cycle round-robin. Deterministic for a fixed input.
inline LossTrace fit_bound_gsm(GSM& part, const std::vector<ViewTarget>& views,
                               const GSM* context, const BoundFitConfig& cfg) {
  if (views.empty()) throw ConfigValidation("fit_bound_gsm: no target views");
  std::vector<RealizedSurfel> context_realized;
  if (context) context_realized = realize(*context, cfg.realize);

  BoundOptimizer opt(&part, cfg.lrs, cfg.optimize_geometry, cfg.optimize_uv);
  LossTrace trace;
  trace.reserve(cfg.steps);
  for (int step = 0; step < cfg.steps; ++step) {
    const ViewTarget& view = views[step % views.size()];
    BoundParamGrads acc = fit_detail::zero_grads(part);
    StepRecord rec;
    rec.step = step;
    rec.surfel_count = static_cast<int>(part.surfels.size());

    if (!view.color.empty())
      rec.photometric = fit_detail::photometric_term(
          part, context, context ? &context_realized : nullptr, view, view.color, cfg, &acc);
    if (!view.color_alone.empty())
      rec.photometric_alone =
          fit_detail::photometric_term(part, nullptr, nullptr, view, view.color_alone, cfg, &acc);

    if (cfg.use_regularizers) {
      RegResult rp = reg_positions(part.surfels, cfg.realize.bary_slack);
      RegResult rs = reg_scales(part.surfels, opt.init_log_scale());
      RegResult rr = reg_rotations(part.surfels);
      rec.reg_p = rp.value;
      rec.reg_s = rs.value;
      rec.reg_r = rr.value;
      fit_detail::add_scaled(acc, rp, cfg.weights.lambda_p);
      fit_detail::add_scaled(acc, rs, cfg.weights.lambda_s);
      fit_detail::add_scaled(acc, rr, cfg.weights.lambda_r);
    }

    rec.total = rec.photometric + rec.photometric_alone + cfg.weights.lambda_p * rec.reg_p +
                cfg.weights.lambda_s * rec.reg_s + cfg.weights.lambda_r * rec.reg_r;
    if (!std::isfinite(rec.total)) throw DivergenceDetected("fit_bound_gsm: non-finite loss");
    opt.step(acc);
    trace.push_back(rec);
  }
  return trace;
}

}  // namespace gsm
