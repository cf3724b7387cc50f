// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsm/core/error.hpp"
#include "gsm/core/math.hpp"
#include "gsm/fit/fitter.hpp"
#include "gsm/garment/stage.hpp"
#include "gsm/refine/pass.hpp"

namespace gsm {

// Pipeline configuration: JSON file merged over defaults, then dotted
// key=value overrides. The hash of the canonical dump fingerprints a run.
class PipelineConfig {
 public:
  static nlohmann::json defaults() {
    return nlohmann::json{
        {"seed", 1},
        {"render",
         {{"size", 1024},
          {"background", {0.0, 0.0, 0.0}},
          {"tile_size", 16},
          {"screen_floor_px", 0.3}}},
        {"realize", {{"scale_exponent", 0.5}, {"bary_slack", 0.05}}},
        {"weights",
         {{"lambda_p", 10.0},
          {"lambda_s", 10.0},
          {"lambda_r", 1.0},
          {"lambda_dis", 1.0},
          {"lambda_smooth", 100.0}}},
        {"lrs",
         {{"color_opacity_cls", 1e-2},
          {"bary_height", 2e-3},
          {"rot_scale", 1e-3},
          {"uv_texels", 5e-3}}},
        {"body",
         {{"steps", 3000},
          {"surfels_per_edge", 4},
          {"uv_map_size", 1024},
          {"geometry_interleave", 1},
          {"displace_lr", 1e-3},
          {"displace_max_offset", 0.03}}},
        {"garment",
         {{"steps", 2000},
          {"prune_period", 500},
          {"init_offset", 0.005},
          {"init_jitter", 0.002},
          {"init_copies", 1},
          {"blur_sigma", 2.0}}},
        {"texture", {{"steps", 2000}, {"surfels_per_edge", 3}, {"uv_map_size", 1024}}},
        {"extract",
         {{"voxel_size", 0.004},
          {"views", 64},
          {"depth_size", 256},
          {"target_faces", 10000},
          {"smooth_iterations", 5},
          {"smooth_step", 0.5},
          {"atlas_res", 1024},
          {"interior_tolerance", 0.002}}},
        {"refine",
         {{"steps_per_view", 100}, {"tau_soft", 0.1}, {"update_geometry", false}}},
    };
  }

  static PipelineConfig load(const std::string& path,
                             const std::vector<std::string>& overrides = {}) {
    PipelineConfig cfg;
    cfg.data_ = defaults();
    if (!path.empty()) {
      std::ifstream f(path);
      if (!f) throw ConfigValidation("config: cannot open " + path);
      nlohmann::json file;
      try {
        f >> file;
      } catch (const nlohmann::json::exception& e) {
        throw ConfigValidation("config: " + path + ": " + e.what());
      }
      cfg.data_.merge_patch(file);
    }
    for (const auto& kv : overrides) {
      auto eq = kv.find('=');
      if (eq == std::string::npos)
        throw ConfigValidation("config override must be key=value: " + kv);
      std::string key = kv.substr(0, eq);
      std::string value = kv.substr(eq + 1);
      nlohmann::json parsed;
      try {
        parsed = nlohmann::json::parse(value);
      } catch (const nlohmann::json::exception&) {
        parsed = value;  // bare strings
      }
      for (auto& ch : key)
        if (ch == '.') ch = '/';
      cfg.data_[nlohmann::json::json_pointer("/" + key)] = parsed;
    }
    return cfg;
  }

  const nlohmann::json& json() const { return data_; }

  std::uint64_t hash() const { return fnv1a(data_.dump()); }

  double num(const std::string& dotted) const { return at(dotted).get<double>(); }
  int integer(const std::string& dotted) const { return at(dotted).get<int>(); }
  bool boolean(const std::string& dotted) const { return at(dotted).get<bool>(); }

  Vec3 vec3(const std::string& dotted) const {
    auto v = at(dotted).get<std::vector<double>>();
    if (v.size() != 3) throw ConfigValidation("config: " + dotted + " must have 3 entries");
    return Vec3(v[0], v[1], v[2]);
  }

  LossWeights weights() const {
    LossWeights w;
    w.lambda_p = num("weights.lambda_p");
    w.lambda_s = num("weights.lambda_s");
    w.lambda_r = num("weights.lambda_r");
    w.lambda_dis = num("weights.lambda_dis");
    w.lambda_smooth = num("weights.lambda_smooth");
    return w;
  }

  LearningRates lrs() const {
    LearningRates lr;
    lr.color_opacity_cls = num("lrs.color_opacity_cls");
    lr.bary_height = num("lrs.bary_height");
    lr.rot_scale = num("lrs.rot_scale");
    lr.uv_texels = num("lrs.uv_texels");
    return lr;
  }

  RenderOptions render_options() const {
    RenderOptions r;
    r.background = vec3("render.background");
    r.tile_size = integer("render.tile_size");
    r.screen_floor_px = num("render.screen_floor_px");
    return r;
  }

  RealizeOptions realize_options() const {
    RealizeOptions r;
    r.scale_exponent = num("realize.scale_exponent");
    r.bary_slack = num("realize.bary_slack");
    return r;
  }

 private:
  nlohmann::json at(const std::string& dotted) const {
    std::string key = dotted;
    for (auto& ch : key)
      if (ch == '.') ch = '/';
    nlohmann::json::json_pointer ptr("/" + key);
    if (!data_.contains(ptr)) throw ConfigValidation("config: missing key " + dotted);
    return data_[ptr];
  }

  nlohmann::json data_;
};

}  // namespace gsm
