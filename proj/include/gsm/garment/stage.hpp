// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>
#include <set>
#include <vector>

#include "gsm/binding.hpp"
#include "gsm/extract/bvh.hpp"
#include "gsm/fit/fitter.hpp"
#include "gsm/fit/losses.hpp"
#include "gsm/fit/optimizers.hpp"
#include "gsm/render/renderer.hpp"

namespace gsm {

struct PruneSchedule {
  int period = 500;
  double threshold = 0.5;  // strict: cls < threshold is removed
};

struct GarmentStageConfig {
  int steps = 2000;
  PruneSchedule prune;
  LossWeights weights;
  LearningRates lrs;
  double blur_sigma = 2.0;
  RenderOptions render;
  RealizeOptions realize;
  double init_offset = 0.005;
  double init_jitter = 0.002;
  int init_copies = 1;
  std::uint64_t seed = 1;
};

// Free-surfel garment shaping state; the body is frozen throughout.
struct GarmentStageState {
  const GSM* body = nullptr;
  std::vector<FreeSurfel> garment;
  int iteration = 0;
  PruneSchedule prune;
  std::vector<int> region;
};

// Faces whose centroid coordinate on `axis` lies in [lo, hi].
inline std::vector<int> select_faces_by_band(const TriMesh& mesh, int axis, double lo,
                                             double hi) {
  std::vector<int> out;
  for (int f = 0; f < mesh.face_count(); ++f) {
    double c = face_centroid(mesh, f)[axis];
    if (c >= lo && c <= hi) out.push_back(f);
  }
  return out;
}

// Hash of every bound attribute of a part; used to assert body immutability.
inline std::uint64_t hash_gsm_params(const GSM& part) {
  Fnv1a h;
  for (const auto& s : part.surfels) {
    h.feed(std::int64_t(s.face_id));
    h.feed(s.bary);
    h.feed(s.height);
    h.feed(s.local_rot);
    h.feed(s.log_scale);
    h.feed(s.uv);
  }
  for (double v : part.uv_maps.color_map.data()) h.feed(v);
  for (double v : part.uv_maps.opacity_map.data()) h.feed(v);
  for (const auto& v : part.mesh.vertices) h.feed(v);
  return h.state;
}

// Free surfels seeded from the realized body surfels of the selected faces,
// pushed outward along their normals, optionally duplicated with jitter.
inline std::vector<FreeSurfel> init_garment(const GSM& body, const std::vector<int>& region,
                                            int copies, double offset, double jitter,
                                            std::uint64_t seed,
                                            const RealizeOptions& ropt = {}) {
  if (region.empty()) throw EmptyRegion("init_garment: empty region");
  std::set<int> region_set(region.begin(), region.end());
  std::vector<RealizedSurfel> realized = realize(body, ropt);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto jitter_vec = [&]() -> Vec3 {
    while (true) {
      Vec3 v(u(rng), u(rng), u(rng));
      if (v.squaredNorm() <= 1.0) return v * jitter;
    }
  };
  std::vector<FreeSurfel> out;
  for (std::size_t i = 0; i < body.surfels.size(); ++i) {
    if (!region_set.count(body.surfels[i].face_id)) continue;
    Vec3 normal = quat_to_mat(realized[i].rot).col(2);
    for (int c = 0; c < copies; ++c) {
      FreeSurfel s;
      s.position = realized[i].position + offset * normal + (jitter > 0 ? jitter_vec() : Vec3::Zero());
      s.rot = realized[i].rot;
      s.log_scale = realized[i].scale.array().max(1e-9).log();
      s.color = Vec3::Constant(0.5);
      s.opacity_logit = 0.0;
      s.cls = 1.0;
      out.push_back(s);
    }
  }
  if (out.empty()) throw EmptyRegion("init_garment: region holds no surfels");
  return out;
}

// Merged body + garment batch; body carries cls 0, garment its learned cls.
inline SplatBatch joint_batch(const std::vector<RealizedSurfel>& body_realized,
                              const std::vector<FreeSurfel>& garment) {
  SplatBatch batch;
  batch.append(body_realized, 0);
  for (const auto& s : garment) {
    RealizedSurfel r = realize_free(s);
    batch.surfels.push_back(r);
    batch.part.push_back(1);
  }
  return batch;
}

inline RenderTarget joint_render(const GarmentStageState& state, const Camera& cam,
                                 const RenderOptions& opt = {},
                                 const RealizeOptions& ropt = {}) {
  return render(joint_batch(realize(*state.body, ropt), state.garment), cam, opt);
}

// Removes surfels with cls strictly below the threshold, dropping their
// optimizer moments. Returns the number removed.
inline int prune(std::vector<FreeSurfel>& garment, FreeOptimizer* opt, double threshold = 0.5) {
  std::vector<int> keep;
  keep.reserve(garment.size());
  for (std::size_t i = 0; i < garment.size(); ++i)
    if (!(garment[i].cls < threshold)) keep.push_back(static_cast<int>(i));
  int removed = static_cast<int>(garment.size() - keep.size());
  if (keep.empty()) throw AllPruned("prune: no garment surfels survive");
  if (removed > 0) {
    if (opt) {
      opt->prune(keep);
    } else {
      std::vector<FreeSurfel> kept;
      kept.reserve(keep.size());
      for (int idx : keep) kept.push_back(garment[idx]);
      garment = std::move(kept);
    }
  }
  return removed;
}

struct GarmentStageResult {
  std::vector<FreeSurfel> surfels;
  LossTrace trace;
  std::vector<int> prune_iterations;
  std::vector<int> prune_removed;
};

// Eq-structured garment optimization: photometric data term on the clothed
// render, semantic mask term (cls only), distance-to-body and normal
// smoothness regularizers, with pruning every `period` iterations.
inline GarmentStageResult run_garment_stage(const GSM& body,
                                            const std::vector<ViewTarget>& views,
                                            const GarmentStageConfig& cfg,
                                            std::vector<FreeSurfel> garment) {
  if (views.empty()) throw ConfigValidation("run_garment_stage: no views");
  for (const auto& v : views)
    if (v.mask.empty()) throw ConfigValidation("run_garment_stage: views need masks");
  if (garment.empty()) throw EmptyRegion("run_garment_stage: no initial surfels");

  std::vector<RealizedSurfel> body_realized = realize(body, cfg.realize);
  TriBvh body_bvh(body.mesh);
  FreeOptimizer opt(&garment, cfg.lrs);

  GarmentStageResult result;
  result.trace.reserve(cfg.steps);

  for (int iter = 1; iter <= cfg.steps; ++iter) {
    const ViewTarget& view = views[(iter - 1) % views.size()];
    std::size_t n = garment.size();
    std::size_t body_n = body_realized.size();
    FreeParamGrads acc(n);
    StepRecord rec;
    rec.step = iter;
    rec.surfel_count = static_cast<int>(n);

    // clothed render: photometric + semantic terms
    SplatBatch batch = joint_batch(body_realized, garment);
    ForwardCache fcache;
    RenderTarget out = render(batch, view.camera, cfg.render, &fcache);

    if (!view.color.empty()) {
      ScalarLoss photo = photometric_loss(out.color, view.color);
      rec.photometric = photo.value;
      RenderTarget adjoint;
      adjoint.color = std::move(photo.adjoint);
      GradientBuffer g = render_backward(batch, view.camera, cfg.render, fcache, adjoint);
      FreeParamGrads pg = chain_free_backward(garment, g, body_n);
      for (std::size_t i = 0; i < n; ++i) {
        acc.position[i] += pg.position[i];
        acc.rot[i] += pg.rot[i];
        acc.log_scale[i] += pg.log_scale[i];
        acc.color[i] += pg.color[i];
        acc.opacity_logit[i] += pg.opacity_logit[i];
      }
    }

    {  // semantic term feeds cls only
      ScalarLoss sam = semantic_loss(out.semantic, out.alpha, view.mask);
      rec.semantic = sam.value;
      RenderTarget adjoint;
      adjoint.semantic = std::move(sam.adjoint);
      GradientBuffer g = render_backward(batch, view.camera, cfg.render, fcache, adjoint);
      for (std::size_t i = 0; i < n; ++i) acc.cls[i] += g.surfels[body_n + i].cls;
    }

    {  // garment-only normal smoothness
      SplatBatch alone;
      for (const auto& s : garment) {
        alone.surfels.push_back(realize_free(s));
        alone.part.push_back(1);
      }
      ForwardCache acache;
      RenderTarget aout = render(alone, view.camera, cfg.render, &acache);
      ScalarLoss smooth = normal_smooth_loss(aout.normal, aout.alpha, cfg.blur_sigma);
      rec.smooth = smooth.value;
      RenderTarget adjoint;
      adjoint.normal = std::move(smooth.adjoint);
      for (auto& v : adjoint.normal.data()) v *= cfg.weights.lambda_smooth;
      GradientBuffer g = render_backward(alone, view.camera, cfg.render, acache, adjoint);
      FreeParamGrads pg = chain_free_backward(garment, g, 0);
      for (std::size_t i = 0; i < n; ++i) {
        acc.position[i] += pg.position[i];
        acc.rot[i] += pg.rot[i];
        acc.log_scale[i] += pg.log_scale[i];
        acc.opacity_logit[i] += pg.opacity_logit[i];
      }
    }

    {  // distance to the body surface
      DistanceLoss dis = distance_loss(garment, body_bvh);
      rec.distance = dis.value;
      for (std::size_t i = 0; i < n; ++i)
        acc.position[i] += cfg.weights.lambda_dis * dis.d_position[i];
    }

    rec.total = rec.photometric + rec.semantic + cfg.weights.lambda_dis * rec.distance +
                cfg.weights.lambda_smooth * rec.smooth;
    if (!std::isfinite(rec.total)) throw DivergenceDetected("run_garment_stage: non-finite loss");

    opt.step(acc);

    if (cfg.prune.period > 0 && iter % cfg.prune.period == 0) {
      int removed = prune(garment, &opt, cfg.prune.threshold);
      result.prune_iterations.push_back(iter);
      result.prune_removed.push_back(removed);
    }
    result.trace.push_back(rec);
  }
  result.surfels = std::move(garment);
  return result;
}

}  // namespace gsm
