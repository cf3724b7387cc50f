// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <vector>

#include "gsm/core/mesh.hpp"
#include "gsm/extract/meshops.hpp"

namespace gsm {

struct SimplifyResult {
  TriMesh mesh;
  double hausdorff = 0;  // symmetric estimate against the input
};

namespace qem_detail {

// err(x) = x^T A x + 2 b^T x + c, accumulated from face planes.
struct Quadric {
  Mat3 A = Mat3::Zero();
  Vec3 b = Vec3::Zero();
  double c = 0;

  void add_plane(const Vec3& n, double d, double weight = 1.0) {
    A += weight * (n * n.transpose());
    b += weight * d * n;
    c += weight * d * d;
  }
  Quadric& operator+=(const Quadric& o) {
    A += o.A;
    b += o.b;
    c += o.c;
    return *this;
  }
  double error(const Vec3& x) const { return x.dot(A * x) + 2.0 * b.dot(x) + c; }
};

}  // namespace qem_detail

// Quadric-error-metric edge collapse with link-condition and normal-flip
// guards; boundaries carry perpendicular constraint planes.
inline SimplifyResult simplify(const TriMesh& input, int target_faces) {
  if (target_faces < 4) throw ConfigValidation("simplify: target_faces must be >= 4");
  if (input.face_count() <= target_faces) return {input, 0.0};

  using qem_detail::Quadric;
  std::vector<Vec3> pos = input.vertices;
  std::vector<std::array<int, 3>> faces = input.faces;
  std::vector<char> face_alive(faces.size(), 1);
  int alive_count = static_cast<int>(faces.size());

  std::vector<std::vector<int>> vfaces(pos.size());
  for (std::size_t f = 0; f < faces.size(); ++f)
    for (int k = 0; k < 3; ++k) vfaces[faces[f][k]].push_back(static_cast<int>(f));

  std::vector<Quadric> quadrics(pos.size());
  for (const auto& f : faces) {
    Vec3 n = (pos[f[1]] - pos[f[0]]).cross(pos[f[2]] - pos[f[0]]);
    double area2 = n.norm();
    if (area2 < 1e-15) continue;
    n /= area2;
    double d = -n.dot(pos[f[0]]);
    for (int k = 0; k < 3; ++k) quadrics[f[k]].add_plane(n, d, area2 * 0.5);
  }
  {  // boundary constraint planes
    std::map<std::pair<int, int>, std::pair<int, int>> edge_info;  // edge -> (count, face)
    for (std::size_t f = 0; f < faces.size(); ++f)
      for (int k = 0; k < 3; ++k) {
        auto key = std::minmax(faces[f][k], faces[f][(k + 1) % 3]);
        auto& e = edge_info[key];
        e.first++;
        e.second = static_cast<int>(f);
      }
    for (const auto& [key, info] : edge_info) {
      if (info.first != 1) continue;
      const auto& f = faces[info.second];
      Vec3 fn = (pos[f[1]] - pos[f[0]]).cross(pos[f[2]] - pos[f[0]]);
      Vec3 edge = pos[key.second] - pos[key.first];
      Vec3 n = edge.cross(fn);
      double len = n.norm();
      if (len < 1e-15) continue;
      n /= len;
      double d = -n.dot(pos[key.first]);
      double w = 1e3 * edge.squaredNorm();
      quadrics[key.first].add_plane(n, d, w);
      quadrics[key.second].add_plane(n, d, w);
    }
  }

  std::vector<long> version(pos.size(), 0);
  struct Candidate {
    double cost;
    int a, b;
    long va, vb;
    Vec3 target;
    bool operator<(const Candidate& o) const { return cost > o.cost; }  // min-heap
  };
  std::priority_queue<Candidate> heap;

  auto neighbors = [&](int v) {
    std::set<int> out;
    for (int f : vfaces[v])
      if (face_alive[f])
        for (int k = 0; k < 3; ++k)
          if (faces[f][k] != v) out.insert(faces[f][k]);
    return out;
  };

  auto make_candidate = [&](int a, int b) {
    Quadric q = quadrics[a];
    q += quadrics[b];
    Vec3 best_x;
    double best_e;
    Eigen::FullPivLU<Mat3> lu(q.A);
    lu.setThreshold(1e-9);
    if (lu.isInvertible()) {
      best_x = lu.solve(-q.b);
      best_e = q.error(best_x);
    } else {
      best_x = pos[a];
      best_e = q.error(pos[a]);
    }
    for (const Vec3& cand : {pos[b], Vec3(0.5 * (pos[a] + pos[b]))}) {
      double e = q.error(cand);
      if (e < best_e) {
        best_e = e;
        best_x = cand;
      }
    }
    heap.push({best_e, a, b, version[a], version[b], best_x});
  };

  {
    std::set<std::pair<int, int>> edges;
    for (const auto& f : faces)
      for (int k = 0; k < 3; ++k) edges.insert(std::minmax(f[k], f[(k + 1) % 3]));
    for (const auto& [a, b] : edges) make_candidate(a, b);
  }

  auto collapse_ok = [&](int a, int b, const Vec3& x) {
    // link condition: shared neighbors must be exactly the edge's wing vertices
    std::set<int> na = neighbors(a), nb = neighbors(b);
    std::vector<int> common;
    std::set_intersection(na.begin(), na.end(), nb.begin(), nb.end(),
                          std::back_inserter(common));
    int wing = 0;
    for (int f : vfaces[a]) {
      if (!face_alive[f]) continue;
      const auto& t = faces[f];
      if (t[0] == b || t[1] == b || t[2] == b) ++wing;
    }
    if (static_cast<int>(common.size()) != wing) return false;
    // normal flips / degeneration around both endpoints
    for (int v : {a, b})
      for (int f : vfaces[v]) {
        if (!face_alive[f]) continue;
        const auto& t = faces[f];
        if ((t[0] == a || t[1] == a || t[2] == a) && (t[0] == b || t[1] == b || t[2] == b))
          continue;  // dies with the collapse
        Vec3 p[3], pnew[3];
        for (int k = 0; k < 3; ++k) {
          p[k] = pos[t[k]];
          pnew[k] = (t[k] == a || t[k] == b) ? x : pos[t[k]];
        }
        Vec3 n0 = (p[1] - p[0]).cross(p[2] - p[0]);
        Vec3 n1 = (pnew[1] - pnew[0]).cross(pnew[2] - pnew[0]);
        if (n1.norm() < 2 * kDegenerateArea) return false;
        if (n0.dot(n1) <= 0) return false;
      }
    return true;
  };

  while (alive_count > target_faces && !heap.empty()) {
    Candidate cand = heap.top();
    heap.pop();
    int a = cand.a, b = cand.b;
    if (cand.va != version[a] || cand.vb != version[b]) continue;
    std::set<int> nb_check = neighbors(a);
    if (!nb_check.count(b)) continue;  // edge no longer exists
    if (!collapse_ok(a, b, cand.target)) continue;

    pos[a] = cand.target;
    quadrics[a] += quadrics[b];
    for (int f : vfaces[b]) {
      if (!face_alive[f]) continue;
      auto& t = faces[f];
      bool has_a = t[0] == a || t[1] == a || t[2] == a;
      for (int k = 0; k < 3; ++k)
        if (t[k] == b) t[k] = a;
      if (has_a) {
        face_alive[f] = 0;
        --alive_count;
      } else {
        vfaces[a].push_back(f);
      }
    }
    vfaces[b].clear();
    // compact a's face list
    std::sort(vfaces[a].begin(), vfaces[a].end());
    vfaces[a].erase(std::unique(vfaces[a].begin(), vfaces[a].end()), vfaces[a].end());
    vfaces[a].erase(std::remove_if(vfaces[a].begin(), vfaces[a].end(),
                                   [&](int f) { return !face_alive[f]; }),
                    vfaces[a].end());
    ++version[a];
    ++version[b];
    for (int v : neighbors(a)) make_candidate(a, v);
  }

  if (alive_count > target_faces)
    throw CannotReachTarget("simplify: manifold constraints block further collapse");

  SimplifyResult result;
  std::vector<int> remap(pos.size(), -1);
  for (std::size_t f = 0; f < faces.size(); ++f) {
    if (!face_alive[f]) continue;
    std::array<int, 3> tri;
    for (int k = 0; k < 3; ++k) {
      int v = faces[f][k];
      if (remap[v] < 0) {
        remap[v] = result.mesh.vertex_count();
        result.mesh.vertices.push_back(pos[v]);
      }
      tri[k] = remap[v];
    }
    result.mesh.faces.push_back(tri);
  }
  result.hausdorff = hausdorff_distance(result.mesh, input);
  return result;
}

}  // namespace gsm
