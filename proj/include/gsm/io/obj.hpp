// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gsm/core/error.hpp"
#include "gsm/core/mesh.hpp"

namespace gsm {

// Wavefront OBJ: v / vt / f with v or v/vt corners. Triangles only.
inline void write_obj(const std::string& path, const TriMesh& mesh) {
  std::ofstream f(path);
  if (!f) throw IoError("write_obj: cannot open " + path);
  char buf[256];
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
    f << buf;
  }
  if (mesh.has_uv()) {
    for (const auto& fuv : mesh.uv_per_corner)
      for (const auto& uv : fuv) {
        std::snprintf(buf, sizeof buf, "vt %.17g %.17g\n", uv.x(), uv.y());
        f << buf;
      }
    for (int i = 0; i < mesh.face_count(); ++i) {
      const auto& t = mesh.faces[i];
      f << "f " << t[0] + 1 << "/" << 3 * i + 1 << " " << t[1] + 1 << "/" << 3 * i + 2 << " "
        << t[2] + 1 << "/" << 3 * i + 3 << "\n";
    }
  } else {
    for (const auto& t : mesh.faces)
      f << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
  }
  if (!f) throw IoError("write_obj: write failed for " + path);
}

inline TriMesh read_obj(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("read_obj: cannot open " + path);
  TriMesh mesh;
  std::vector<Vec2> uvs;
  std::vector<std::array<int, 3>> face_uv_ids;
  bool any_uv_corner = false;
  std::string line;
  while (std::getline(f, line)) {
    if (line.rfind("v ", 0) == 0) {
      std::istringstream ss(line.substr(2));
      Vec3 v;
      ss >> v.x() >> v.y() >> v.z();
      mesh.vertices.push_back(v);
    } else if (line.rfind("vt ", 0) == 0) {
      std::istringstream ss(line.substr(3));
      Vec2 uv;
      ss >> uv.x() >> uv.y();
      uvs.push_back(uv);
    } else if (line.rfind("f ", 0) == 0) {
      std::istringstream ss(line.substr(2));
      std::vector<int> vids, tids;
      std::string corner;
      while (ss >> corner) {
        int vi = 0, ti = 0;
        auto slash = corner.find('/');
        if (slash == std::string::npos) {
          vi = std::stoi(corner);
        } else {
          vi = std::stoi(corner.substr(0, slash));
          auto rest = corner.substr(slash + 1);
          auto slash2 = rest.find('/');
          std::string tpart = slash2 == std::string::npos ? rest : rest.substr(0, slash2);
          if (!tpart.empty()) ti = std::stoi(tpart);
        }
        vids.push_back(vi);
        tids.push_back(ti);
      }
      if (vids.size() < 3) throw IoError("read_obj: face with fewer than 3 corners");
      // fan-triangulate polygons
      for (std::size_t k = 2; k < vids.size(); ++k) {
        mesh.faces.push_back({vids[0] - 1, vids[k - 1] - 1, vids[k] - 1});
        face_uv_ids.push_back({tids[0], tids[k - 1], tids[k]});
        if (tids[0] > 0 && tids[k - 1] > 0 && tids[k] > 0) any_uv_corner = true;
      }
    }
  }
  if (any_uv_corner && !uvs.empty()) {
    mesh.uv_per_corner.resize(mesh.faces.size());
    for (std::size_t i = 0; i < mesh.faces.size(); ++i)
      for (int k = 0; k < 3; ++k) {
        int ti = face_uv_ids[i][k];
        if (ti <= 0 || ti > static_cast<int>(uvs.size()))
          throw IoError("read_obj: face references missing vt");
        mesh.uv_per_corner[i][k] = uvs[ti - 1];
      }
  }
  mesh.validate();
  return mesh;
}

}  // namespace gsm
