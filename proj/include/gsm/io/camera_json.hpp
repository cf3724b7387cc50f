// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsm/core/camera.hpp"
#include "gsm/core/error.hpp"

namespace gsm {

// JSON array of {fx, fy, cx, cy, width, height, rotation (row-major 3x3),
// translation}; the pose is world-to-camera.
inline void save_cameras_json(const std::string& path, const std::vector<Camera>& cams) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Camera& c : cams) {
    nlohmann::json j;
    j["fx"] = c.fx;
    j["fy"] = c.fy;
    j["cx"] = c.cx;
    j["cy"] = c.cy;
    j["width"] = c.width;
    j["height"] = c.height;
    std::vector<double> rot;
    for (int r = 0; r < 3; ++r)
      for (int col = 0; col < 3; ++col) rot.push_back(c.R(r, col));
    j["rotation"] = rot;
    j["translation"] = {c.t.x(), c.t.y(), c.t.z()};
    arr.push_back(j);
  }
  std::ofstream f(path);
  if (!f) throw IoError("save_cameras_json: cannot open " + path);
  f << arr.dump(2) << "\n";
}

inline std::vector<Camera> load_cameras_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("load_cameras_json: cannot open " + path);
  nlohmann::json arr;
  try {
    f >> arr;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("load_cameras_json: " + path + ": " + e.what());
  }
  if (!arr.is_array()) throw IoError("load_cameras_json: expected an array in " + path);
  std::vector<Camera> cams;
  for (const auto& j : arr) {
    Camera c;
    c.fx = j.at("fx").get<double>();
    c.fy = j.at("fy").get<double>();
    c.cx = j.at("cx").get<double>();
    c.cy = j.at("cy").get<double>();
    c.width = j.at("width").get<int>();
    c.height = j.at("height").get<int>();
    auto rot = j.at("rotation").get<std::vector<double>>();
    if (rot.size() != 9) throw IoError("load_cameras_json: rotation must have 9 entries");
    for (int r = 0; r < 3; ++r)
      for (int col = 0; col < 3; ++col) c.R(r, col) = rot[r * 3 + col];
    auto t = j.at("translation").get<std::vector<double>>();
    if (t.size() != 3) throw IoError("load_cameras_json: translation must have 3 entries");
    c.t = Vec3(t[0], t[1], t[2]);
    c.validate();
    cams.push_back(c);
  }
  return cams;
}

}  // namespace gsm
