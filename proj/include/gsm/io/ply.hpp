// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gsm/core/error.hpp"
#include "gsm/core/mesh.hpp"
#include "gsm/core/surfel.hpp"

namespace gsm {

namespace ply_detail {

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

struct Property {
  std::string type;
  std::string name;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> props;
  bool list = false;  // single list property (faces)
};

struct Header {
  std::vector<Element> elements;
};

inline Header read_header(std::istream& is, const std::string& path) {
  std::string line;
  std::getline(is, line);
  if (line != "ply") throw IoError("read_ply: not a PLY file: " + path);
  Header h;
  while (std::getline(is, line)) {
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt != "binary_little_endian")
        throw IoError("read_ply: only binary_little_endian supported: " + path);
    } else if (tok == "element") {
      Element e;
      ss >> e.name >> e.count;
      h.elements.push_back(e);
    } else if (tok == "property") {
      std::string t;
      ss >> t;
      if (t == "list") {
        std::string ct, vt, name;
        ss >> ct >> vt >> name;
        h.elements.back().list = true;
        h.elements.back().props.push_back({vt, name});
      } else {
        std::string name;
        ss >> name;
        h.elements.back().props.push_back({t, name});
      }
    } else if (tok == "end_header") {
      break;
    }
  }
  return h;
}

inline double read_scalar(std::istream& is, const std::string& type) {
  if (type == "double" || type == "float64") return get<double>(is);
  if (type == "float" || type == "float32") return get<float>(is);
  if (type == "int" || type == "int32") return get<std::int32_t>(is);
  if (type == "uint" || type == "uint32") return get<std::uint32_t>(is);
  if (type == "uchar" || type == "uint8") return get<std::uint8_t>(is);
  if (type == "char" || type == "int8") return get<std::int8_t>(is);
  if (type == "short" || type == "int16") return get<std::int16_t>(is);
  if (type == "ushort" || type == "uint16") return get<std::uint16_t>(is);
  throw IoError("read_ply: unsupported property type " + type);
}

}  // namespace ply_detail

// ---------------------------------------------------------------------------
// Meshes
// ---------------------------------------------------------------------------

inline void write_ply_mesh(const std::string& path, const TriMesh& mesh) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("write_ply_mesh: cannot open " + path);
  f << "ply\nformat binary_little_endian 1.0\n";
  f << "element vertex " << mesh.vertex_count() << "\n";
  f << "property double x\nproperty double y\nproperty double z\n";
  f << "element face " << mesh.face_count() << "\n";
  f << "property list uchar int vertex_indices\n";
  f << "end_header\n";
  for (const auto& v : mesh.vertices) {
    ply_detail::put(f, v.x());
    ply_detail::put(f, v.y());
    ply_detail::put(f, v.z());
  }
  for (const auto& t : mesh.faces) {
    ply_detail::put<std::uint8_t>(f, 3);
    for (int k = 0; k < 3; ++k) ply_detail::put<std::int32_t>(f, t[k]);
  }
  if (!f) throw IoError("write_ply_mesh: write failed for " + path);
}

inline TriMesh read_ply_mesh(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("read_ply_mesh: cannot open " + path);
  auto header = ply_detail::read_header(f, path);
  TriMesh mesh;
  for (const auto& e : header.elements) {
    if (e.name == "vertex") {
      int xi = -1, yi = -1, zi = -1;
      for (std::size_t p = 0; p < e.props.size(); ++p) {
        if (e.props[p].name == "x") xi = static_cast<int>(p);
        if (e.props[p].name == "y") yi = static_cast<int>(p);
        if (e.props[p].name == "z") zi = static_cast<int>(p);
      }
      if (xi < 0 || yi < 0 || zi < 0) throw IoError("read_ply_mesh: missing x/y/z in " + path);
      std::vector<double> vals(e.props.size());
      for (std::size_t i = 0; i < e.count; ++i) {
        for (std::size_t p = 0; p < e.props.size(); ++p)
          vals[p] = ply_detail::read_scalar(f, e.props[p].type);
        mesh.vertices.push_back(Vec3(vals[xi], vals[yi], vals[zi]));
      }
    } else if (e.name == "face") {
      for (std::size_t i = 0; i < e.count; ++i) {
        int n = static_cast<int>(ply_detail::get<std::uint8_t>(f));
        std::vector<int> ids(n);
        for (int k = 0; k < n; ++k)
          ids[k] = static_cast<int>(ply_detail::read_scalar(f, e.props[0].type));
        for (int k = 2; k < n; ++k) mesh.faces.push_back({ids[0], ids[k - 1], ids[k]});
      }
    }
  }
  if (!f) throw IoError("read_ply_mesh: truncated " + path);
  mesh.validate();
  return mesh;
}

// ---------------------------------------------------------------------------
// Bound surfels
// ---------------------------------------------------------------------------

inline void write_ply_bound_surfels(const std::string& path,
                                    const std::vector<BoundSurfel>& surfels) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("write_ply_bound_surfels: cannot open " + path);
  f << "ply\nformat binary_little_endian 1.0\n";
  f << "element surfel " << surfels.size() << "\n";
  f << "property int face_id\n";
  for (const char* n : {"lambda1", "lambda2", "z", "rot_w", "rot_x", "rot_y", "rot_z",
                        "log_scale_u", "log_scale_v", "u", "v"})
    f << "property double " << n << "\n";
  f << "end_header\n";
  for (const auto& s : surfels) {
    ply_detail::put<std::int32_t>(f, s.face_id);
    ply_detail::put(f, s.bary.x());
    ply_detail::put(f, s.bary.y());
    ply_detail::put(f, s.height);
    for (int k = 0; k < 4; ++k) ply_detail::put(f, s.local_rot[k]);
    ply_detail::put(f, s.log_scale.x());
    ply_detail::put(f, s.log_scale.y());
    ply_detail::put(f, s.uv.x());
    ply_detail::put(f, s.uv.y());
  }
  if (!f) throw IoError("write_ply_bound_surfels: write failed for " + path);
}

inline std::vector<BoundSurfel> read_ply_bound_surfels(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("read_ply_bound_surfels: cannot open " + path);
  auto header = ply_detail::read_header(f, path);
  std::vector<BoundSurfel> out;
  for (const auto& e : header.elements) {
    if (e.name != "surfel") throw IoError("read_ply_bound_surfels: unexpected element " + e.name);
    std::map<std::string, std::size_t> idx;
    for (std::size_t p = 0; p < e.props.size(); ++p) idx[e.props[p].name] = p;
    for (const char* need : {"face_id", "lambda1", "lambda2", "z", "rot_w", "rot_x", "rot_y",
                             "rot_z", "log_scale_u", "log_scale_v", "u", "v"})
      if (!idx.count(need)) throw IoError(std::string("read_ply_bound_surfels: missing ") + need);
    std::vector<double> vals(e.props.size());
    out.reserve(e.count);
    for (std::size_t i = 0; i < e.count; ++i) {
      for (std::size_t p = 0; p < e.props.size(); ++p)
        vals[p] = ply_detail::read_scalar(f, e.props[p].type);
      BoundSurfel s;
      s.face_id = static_cast<int>(vals[idx["face_id"]]);
      s.bary = Vec2(vals[idx["lambda1"]], vals[idx["lambda2"]]);
      s.height = vals[idx["z"]];
      s.local_rot = Vec4(vals[idx["rot_w"]], vals[idx["rot_x"]], vals[idx["rot_y"]],
                         vals[idx["rot_z"]]);
      s.log_scale = Vec2(vals[idx["log_scale_u"]], vals[idx["log_scale_v"]]);
      s.uv = Vec2(vals[idx["u"]], vals[idx["v"]]);
      out.push_back(s);
    }
  }
  if (!f) throw IoError("read_ply_bound_surfels: truncated " + path);
  return out;
}

// ---------------------------------------------------------------------------
// Free surfels
// ---------------------------------------------------------------------------

inline void write_ply_free_surfels(const std::string& path,
                                   const std::vector<FreeSurfel>& surfels) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("write_ply_free_surfels: cannot open " + path);
  f << "ply\nformat binary_little_endian 1.0\n";
  f << "element surfel " << surfels.size() << "\n";
  for (const char* n : {"x", "y", "z", "rot_w", "rot_x", "rot_y", "rot_z", "log_scale_u",
                        "log_scale_v", "red", "green", "blue", "opacity_logit", "cls"})
    f << "property double " << n << "\n";
  f << "end_header\n";
  for (const auto& s : surfels) {
    for (int k = 0; k < 3; ++k) ply_detail::put(f, s.position[k]);
    for (int k = 0; k < 4; ++k) ply_detail::put(f, s.rot[k]);
    ply_detail::put(f, s.log_scale.x());
    ply_detail::put(f, s.log_scale.y());
    for (int k = 0; k < 3; ++k) ply_detail::put(f, s.color[k]);
    ply_detail::put(f, s.opacity_logit);
    ply_detail::put(f, s.cls);
  }
  if (!f) throw IoError("write_ply_free_surfels: write failed for " + path);
}

inline std::vector<FreeSurfel> read_ply_free_surfels(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("read_ply_free_surfels: cannot open " + path);
  auto header = ply_detail::read_header(f, path);
  std::vector<FreeSurfel> out;
  for (const auto& e : header.elements) {
    if (e.name != "surfel") throw IoError("read_ply_free_surfels: unexpected element " + e.name);
    std::map<std::string, std::size_t> idx;
    for (std::size_t p = 0; p < e.props.size(); ++p) idx[e.props[p].name] = p;
    std::vector<double> vals(e.props.size());
    out.reserve(e.count);
    for (std::size_t i = 0; i < e.count; ++i) {
      for (std::size_t p = 0; p < e.props.size(); ++p)
        vals[p] = ply_detail::read_scalar(f, e.props[p].type);
      FreeSurfel s;
      s.position = Vec3(vals[idx["x"]], vals[idx["y"]], vals[idx["z"]]);
      s.rot = Vec4(vals[idx["rot_w"]], vals[idx["rot_x"]], vals[idx["rot_y"]], vals[idx["rot_z"]]);
      s.log_scale = Vec2(vals[idx["log_scale_u"]], vals[idx["log_scale_v"]]);
      s.color = Vec3(vals[idx["red"]], vals[idx["green"]], vals[idx["blue"]]);
      s.opacity_logit = vals[idx["opacity_logit"]];
      s.cls = vals[idx["cls"]];
      out.push_back(s);
    }
  }
  if (!f) throw IoError("read_ply_free_surfels: truncated " + path);
  return out;
}

}  // namespace gsm
