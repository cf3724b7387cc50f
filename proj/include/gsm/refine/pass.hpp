// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "gsm/binding.hpp"
#include "gsm/fit/fitter.hpp"
#include "gsm/fit/losses.hpp"
#include "gsm/fit/optimizers.hpp"
#include "gsm/refine/refiner.hpp"
#include "gsm/refine/weights.hpp"
#include "gsm/render/renderer.hpp"

namespace gsm {

struct RefineConfig {
  int steps_per_view = 100;
  double tau_soft = 0.1;
  bool update_geometry = false;  // default: UV maps only
  LearningRates lrs;
  RenderOptions render;
  RealizeOptions realize;
};

struct RefineResult {
  LossTrace trace;
  WeightMapSet weights;
};

namespace refine_detail {

inline ImageD render_color(const GSM& part, const Camera& cam, const RenderOptions& opt,
                           const RealizeOptions& ropt) {
  SplatBatch batch;
  batch.append(realize(part, ropt), 0);
  return render(batch, cam, opt).color;
}

}  // namespace refine_detail

// Sequential view-consistent refinement: each view's render is enhanced by the
// external refiner (seeing the canonical and previous views as references) and
// the part's UV maps are fit against it under the incident-angle weights.
// Later views see the texture updates of earlier ones.
inline RefineResult refine_pass(GSM& part, const ViewSchedule& schedule, Refiner& refiner,
                                const RefineConfig& cfg) {
  schedule.validate();
  RefineResult result;
  result.weights = aggregate_weights(part.mesh, schedule, cfg.tau_soft);

  BoundOptimizer opt(&part, cfg.lrs, cfg.update_geometry, true);
  for (std::size_t v = 0; v < schedule.size(); ++v) {
    const Camera& cam = schedule.cameras[v];
    RefineInputs inputs;
    inputs.view_index = static_cast<int>(v);
    inputs.view = refine_detail::render_color(part, cam, cfg.render, cfg.realize);
    inputs.weight = result.weights.maps[v];
    inputs.ref_canonical =
        v == 0 ? inputs.view
               : refine_detail::render_color(part, schedule.cameras[0], cfg.render, cfg.realize);
    inputs.ref_previous =
        v == 0 ? inputs.view
               : refine_detail::render_color(part, schedule.cameras[v - 1], cfg.render,
                                             cfg.realize);
    ImageD refined = refiner.refine(inputs);
    if (refined.width() != cam.width || refined.height() != cam.height ||
        refined.channels() != 3)
      throw ShapeMismatch("refine_pass: refined image size");

    for (int step = 0; step < cfg.steps_per_view; ++step) {
      RealizeCache rcache;
      SplatBatch batch;
      batch.append(realize(part, cfg.realize, &rcache), 0);
      ForwardCache fcache;
      RenderTarget out = render(batch, cam, cfg.render, &fcache);
      ScalarLoss loss = weighted_refine_loss(out.color, refined, result.weights.maps[v]);
      StepRecord rec;
      rec.step = static_cast<int>(result.trace.size());
      rec.total = rec.photometric = loss.value;
      rec.surfel_count = static_cast<int>(part.surfels.size());
      if (!std::isfinite(loss.value)) throw DivergenceDetected("refine_pass: non-finite loss");
      RenderTarget adjoint;
      adjoint.color = std::move(loss.adjoint);
      GradientBuffer grads = render_backward(batch, cam, cfg.render, fcache, adjoint);
      opt.step(chain_realize_backward(part, rcache, grads));
      result.trace.push_back(rec);
    }
  }
  return result;
}

}  // namespace gsm
