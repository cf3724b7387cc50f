// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gsm/core/error.hpp"
#include "gsm/core/mesh.hpp"
#include "gsm/io/obj.hpp"
#include "gsm/io/ply.hpp"

namespace gsm {

// Per-frame vertex positions over a fixed topology.
struct MeshSequence {
  std::vector<std::vector<Vec3>> frames;
  double fps = 30.0;

  int frame_count() const { return static_cast<int>(frames.size()); }
  double duration() const { return fps > 0 ? frame_count() / fps : 0.0; }
};

inline constexpr char kSequenceMagic[8] = {'G', 'S', 'M', 'S', 'E', 'Q', '1', '\0'};

// Packed binary replay format: magic, frame/vertex counts, fps, then
// frame-major float32 positions.
inline void save_sequence_packed(const std::string& path, const MeshSequence& seq) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("save_sequence_packed: cannot open " + path);
  f.write(kSequenceMagic, 8);
  std::uint32_t nframes = seq.frames.size();
  std::uint32_t nverts = seq.frames.empty() ? 0 : seq.frames[0].size();
  float fps = static_cast<float>(seq.fps);
  f.write(reinterpret_cast<const char*>(&nframes), 4);
  f.write(reinterpret_cast<const char*>(&nverts), 4);
  f.write(reinterpret_cast<const char*>(&fps), 4);
  std::vector<float> buf(static_cast<std::size_t>(nverts) * 3);
  for (const auto& frame : seq.frames) {
    if (frame.size() != nverts) throw TopologyMismatch("save_sequence_packed: ragged frames");
    for (std::size_t i = 0; i < frame.size(); ++i)
      for (int k = 0; k < 3; ++k) buf[3 * i + k] = static_cast<float>(frame[i][k]);
    f.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!f) throw IoError("save_sequence_packed: write failed for " + path);
}

inline MeshSequence load_sequence_packed(const std::string& path, const TriMesh& reference) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("load_sequence_packed: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (std::memcmp(magic, kSequenceMagic, 8) != 0)
    throw IoError("load_sequence_packed: bad magic in " + path);
  std::uint32_t nframes = 0, nverts = 0;
  float fps = 0;
  f.read(reinterpret_cast<char*>(&nframes), 4);
  f.read(reinterpret_cast<char*>(&nverts), 4);
  f.read(reinterpret_cast<char*>(&fps), 4);
  if (nframes == 0) throw IoError("load_sequence_packed: empty sequence " + path);
  if (nverts != reference.vertices.size())
    throw TopologyMismatch("load_sequence_packed: vertex count vs reference");
  MeshSequence seq;
  seq.fps = fps;
  std::vector<float> buf(static_cast<std::size_t>(nverts) * 3);
  for (std::uint32_t fr = 0; fr < nframes; ++fr) {
    f.read(reinterpret_cast<char*>(buf.data()),
           static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!f) throw IoError("load_sequence_packed: truncated " + path);
    std::vector<Vec3> frame(nverts);
    for (std::size_t i = 0; i < nverts; ++i)
      frame[i] = Vec3(buf[3 * i], buf[3 * i + 1], buf[3 * i + 2]);
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

// Directory of per-frame OBJ/PLY files (sorted by name) or a packed .bin.
inline MeshSequence load_sequence(const std::string& path, const TriMesh& reference,
                                  double fps = 30.0) {
  namespace fs = std::filesystem;
  if (!fs::exists(path)) throw IoError("load_sequence: no such path " + path);
  if (fs::is_regular_file(path)) return load_sequence_packed(path, reference);

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    auto ext = entry.path().extension().string();
    if (ext == ".obj" || ext == ".ply") files.push_back(entry.path());
  }
  if (files.empty()) throw IoError("load_sequence: no frame files in " + path);
  std::sort(files.begin(), files.end());
  MeshSequence seq;
  seq.fps = fps;
  for (const auto& file : files) {
    TriMesh frame =
        file.extension() == ".obj" ? read_obj(file.string()) : read_ply_mesh(file.string());
    if (frame.vertices.size() != reference.vertices.size())
      throw TopologyMismatch("load_sequence: vertex count in " + file.string());
    seq.frames.push_back(std::move(frame.vertices));
  }
  return seq;
}

}  // namespace gsm
