// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "gsm/binding.hpp"
#include "gsm/core/error.hpp"
#include "gsm/io/obj.hpp"
#include "gsm/io/pfm.hpp"
#include "gsm/io/ply.hpp"

namespace gsm {

// A GSM part on disk: manifest.json tying together the sidecar mesh (OBJ),
// surfels (PLY) and UV maps (PFM, float linear).
inline std::string save_gsm(const std::string& dir, const GSM& part,
                            std::uint64_t config_hash = 0) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_obj((fs::path(dir) / "mesh.obj").string(), part.mesh);
  write_ply_bound_surfels((fs::path(dir) / "surfels.ply").string(), part.surfels);
  write_pfm((fs::path(dir) / "color.pfm").string(), part.uv_maps.color_map);
  write_pfm((fs::path(dir) / "opacity.pfm").string(), part.uv_maps.opacity_map);
  nlohmann::json j;
  j["kind"] = "gsm";
  j["label"] = part.label;
  j["mesh"] = "mesh.obj";
  j["surfels"] = "surfels.ply";
  j["color_map"] = "color.pfm";
  j["opacity_map"] = "opacity.pfm";
  j["config_hash"] = config_hash;
  std::string path = (fs::path(dir) / "manifest.json").string();
  std::ofstream f(path);
  if (!f) throw IoError("save_gsm: cannot open " + path);
  f << j.dump(2) << "\n";
  return path;
}

inline std::uint64_t manifest_config_hash(const std::string& manifest_path) {
  std::ifstream f(manifest_path);
  if (!f) throw IoError("manifest_config_hash: cannot open " + manifest_path);
  nlohmann::json j;
  f >> j;
  return j.value("config_hash", std::uint64_t(0));
}

inline GSM load_gsm(const std::string& manifest_or_dir) {
  namespace fs = std::filesystem;
  fs::path path = manifest_or_dir;
  if (fs::is_directory(path)) path /= "manifest.json";
  std::ifstream f(path);
  if (!f) throw IoError("load_gsm: cannot open " + path.string());
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("load_gsm: " + path.string() + ": " + e.what());
  }
  if (j.value("kind", "") != "gsm") throw IoError("load_gsm: not a gsm manifest");
  fs::path dir = path.parent_path();
  GSM part;
  part.label = j.value("label", "part");
  part.mesh = read_obj((dir / j.at("mesh").get<std::string>()).string());
  bind_rest_state(part.mesh);
  part.surfels = read_ply_bound_surfels((dir / j.at("surfels").get<std::string>()).string());
  part.uv_maps.color_map = read_pfm((dir / j.at("color_map").get<std::string>()).string());
  part.uv_maps.opacity_map = read_pfm((dir / j.at("opacity_map").get<std::string>()).string());
  for (const auto& s : part.surfels)
    if (s.face_id < 0 || s.face_id >= part.mesh.face_count())
      throw IoError("load_gsm: surfel face_id out of range");
  return part;
}

// Free-surfel sets (garment stage output) with their own manifest kind.
inline std::string save_free_surfels(const std::string& dir,
                                     const std::vector<FreeSurfel>& surfels,
                                     std::uint64_t config_hash = 0) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_ply_free_surfels((fs::path(dir) / "surfels.ply").string(), surfels);
  nlohmann::json j;
  j["kind"] = "free_surfels";
  j["surfels"] = "surfels.ply";
  j["count"] = surfels.size();
  j["config_hash"] = config_hash;
  std::string path = (fs::path(dir) / "manifest.json").string();
  std::ofstream f(path);
  if (!f) throw IoError("save_free_surfels: cannot open " + path);
  f << j.dump(2) << "\n";
  return path;
}

inline std::vector<FreeSurfel> load_free_surfels(const std::string& manifest_or_dir) {
  namespace fs = std::filesystem;
  fs::path path = manifest_or_dir;
  if (fs::is_directory(path)) path /= "manifest.json";
  std::ifstream f(path);
  if (!f) throw IoError("load_free_surfels: cannot open " + path.string());
  nlohmann::json j;
  f >> j;
  if (j.value("kind", "") != "free_surfels")
    throw IoError("load_free_surfels: not a free_surfels manifest");
  return read_ply_free_surfels(
      (path.parent_path() / j.at("surfels").get<std::string>()).string());
}

}  // namespace gsm
