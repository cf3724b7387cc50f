// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "gsm/anim/sequence.hpp"
#include "gsm/binding.hpp"
#include "gsm/io/pfm.hpp"
#include "gsm/io/png.hpp"
#include "gsm/render/renderer.hpp"

namespace gsm {

struct AnimateOptions {
  RenderOptions render;
  RealizeOptions realize;
  bool dump_float_channels = false;  // depth/normal/alpha as PFM next to the PNGs
};

// Face states for the current frame; degenerate faces fall back to the
// previous frame's orientation with k clamped at the degeneracy threshold.
inline std::vector<FaceState> frame_face_states(const GSM& part,
                                                const std::vector<FaceState>& previous,
                                                const RealizeOptions& opt, int frame_index) {
  std::vector<char> used = used_faces(part);
  std::vector<FaceState> states = previous;
  states.resize(part.mesh.face_count());
  for (int f = 0; f < part.mesh.face_count(); ++f) {
    if (!used[f]) continue;
    double area = face_area(part.mesh, f);
    if (area < kDegenerateArea) {
      std::cerr << "animate: frame " << frame_index << " face " << f
                << " degenerate; reusing previous orientation\n";
      states[f].k = std::pow(kDegenerateArea / part.mesh.rest_areas[f], opt.scale_exponent);
      continue;  // orientation from the previous frame
    }
    TriangleFrame frame = compute_frame(part.mesh, f);
    states[f].quat = mat_to_quat(frame.axes);
    states[f].normal = frame.normal;
    states[f].k = area_scale_factor(part.mesh, f, opt.scale_exponent);
  }
  return states;
}

// Replays mesh sequences through the binding: per frame, substitute vertex
// positions (rest state untouched), re-realize, merge parts and render every
// camera. Returns the written image paths.
inline std::vector<std::string> animate_render(
    std::vector<GSM> parts, const std::vector<std::optional<MeshSequence>>& sequences,
    const std::vector<Camera>& cameras, const std::string& out_dir,
    const AnimateOptions& opt = {}) {
  if (parts.empty()) throw ConfigValidation("animate_render: no parts");
  if (sequences.size() != parts.size())
    throw ConfigValidation("animate_render: one sequence slot per part");
  if (cameras.empty()) throw ConfigValidation("animate_render: no cameras");
  int frame_count = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    if (!sequences[p]) continue;
    if (sequences[p]->frames.empty()) throw IoError("animate_render: empty sequence");
    if (sequences[p]->frames[0].size() != parts[p].mesh.vertices.size())
      throw TopologyMismatch("animate_render: sequence vs part topology");
    frame_count = std::max(frame_count, sequences[p]->frame_count());
  }
  if (frame_count == 0) frame_count = 1;  // all parts static

  std::filesystem::create_directories(out_dir);
  std::vector<std::vector<FaceState>> prev_states(parts.size());
  std::vector<std::string> written;
  for (int frame = 0; frame < frame_count; ++frame) {
    SplatBatch batch;
    for (std::size_t p = 0; p < parts.size(); ++p) {
      GSM& part = parts[p];
      if (sequences[p]) {
        int idx = std::min(frame, sequences[p]->frame_count() - 1);
        part.mesh.vertices = sequences[p]->frames[idx];
      }
      std::vector<FaceState> states =
          frame_face_states(part, prev_states[p], opt.realize, frame);
      batch.append(realize_with_faces(part, states, opt.realize), static_cast<int>(p));
      prev_states[p] = std::move(states);
    }
    for (std::size_t c = 0; c < cameras.size(); ++c) {
      RenderTarget out = render(batch, cameras[c], opt.render);
      char name[64];
      std::snprintf(name, sizeof name, "frame_%04d_cam%02d", frame, static_cast<int>(c));
      std::string base = (std::filesystem::path(out_dir) / name).string();
      write_png_srgb(base + ".png", out.color);
      written.push_back(base + ".png");
      if (opt.dump_float_channels) {
        write_pfm(base + "_color.pfm", out.color);
        write_pfm(base + "_depth.pfm", out.depth);
        write_pfm(base + "_normal.pfm", out.normal);
        write_pfm(base + "_alpha.pfm", out.alpha);
      }
    }
  }
  return written;
}

}  // namespace gsm
