// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "gsm/core/error.hpp"
#include "gsm/extract/tsdf.hpp"

namespace gsm {

// Raw binary grid (tsdf then weights, doubles) plus a JSON header.
inline void save_volume(const std::string& basename, const TsdfVolume& vol) {
  nlohmann::json j;
  j["dims"] = {vol.dims.x(), vol.dims.y(), vol.dims.z()};
  j["origin"] = {vol.origin.x(), vol.origin.y(), vol.origin.z()};
  j["voxel_size"] = vol.voxel_size;
  j["truncation"] = vol.truncation;
  j["grid"] = std::filesystem::path(basename + ".raw").filename().string();
  std::ofstream hf(basename + ".json");
  if (!hf) throw IoError("save_volume: cannot open " + basename + ".json");
  hf << j.dump(2) << "\n";
  std::ofstream gf(basename + ".raw", std::ios::binary);
  if (!gf) throw IoError("save_volume: cannot open " + basename + ".raw");
  gf.write(reinterpret_cast<const char*>(vol.tsdf.data()),
           static_cast<std::streamsize>(vol.tsdf.size() * sizeof(double)));
  gf.write(reinterpret_cast<const char*>(vol.weights.data()),
           static_cast<std::streamsize>(vol.weights.size() * sizeof(double)));
  if (!gf) throw IoError("save_volume: write failed for " + basename + ".raw");
}

inline TsdfVolume load_volume(const std::string& basename) {
  std::ifstream hf(basename + ".json");
  if (!hf) throw IoError("load_volume: cannot open " + basename + ".json");
  nlohmann::json j;
  hf >> j;
  auto dims = j.at("dims").get<std::vector<int>>();
  auto origin = j.at("origin").get<std::vector<double>>();
  TsdfVolume vol = TsdfVolume::create(Vec3(origin[0], origin[1], origin[2]),
                                      j.at("voxel_size").get<double>(),
                                      Vec3i(dims[0], dims[1], dims[2]),
                                      j.at("truncation").get<double>());
  std::ifstream gf(basename + ".raw", std::ios::binary);
  if (!gf) throw IoError("load_volume: cannot open " + basename + ".raw");
  gf.read(reinterpret_cast<char*>(vol.tsdf.data()),
          static_cast<std::streamsize>(vol.tsdf.size() * sizeof(double)));
  gf.read(reinterpret_cast<char*>(vol.weights.data()),
          static_cast<std::streamsize>(vol.weights.size() * sizeof(double)));
  if (!gf) throw IoError("load_volume: truncated " + basename + ".raw");
  return vol;
}

}  // namespace gsm
