// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "gsm/core/error.hpp"
#include "gsm/core/mesh.hpp"

namespace gsm {

// Closest point on a triangle (Ericson, Real-Time Collision Detection 5.1.5).
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                                      const Vec3& c) {
  Vec3 ab = b - a, ac = c - a, ap = p - a;
  double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;
  Vec3 bp = p - b;
  double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;
  double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + (d1 / (d1 - d3)) * ab;
  Vec3 cp = p - c;
  double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;
  double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + (d2 / (d2 - d6)) * ac;
  double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  double denom = 1.0 / (va + vb + vc);
  return a + (vb * denom) * ab + (vc * denom) * ac;
}

struct ClosestHit {
  double dist2 = std::numeric_limits<double>::max();
  Vec3 point = Vec3::Zero();
  int face = -1;
};

struct RayHit {
  double t = 0;
  int face = -1;
  double bu = 0, bv = 0;   // barycentrics w.r.t. (v1, v2)
  bool grazing = false;    // hit near an edge/vertex or nearly parallel
};

// Static axis-aligned BVH over mesh triangles (median split).
class TriBvh {
 public:
  explicit TriBvh(const TriMesh& mesh) {
    if (mesh.face_count() == 0) throw EmptyMesh("TriBvh: mesh has no faces");
    tris_.reserve(mesh.face_count());
    for (int f = 0; f < mesh.face_count(); ++f) {
      const auto& t = mesh.faces[f];
      tris_.push_back({mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]], f});
    }
    std::vector<int> ids(tris_.size());
    std::iota(ids.begin(), ids.end(), 0);
    nodes_.reserve(tris_.size() * 2);
    root_ = build(ids, 0, static_cast<int>(ids.size()));
    order_ = std::move(ids);
  }

  ClosestHit closest_point(const Vec3& p) const {
    ClosestHit best;
    closest_rec(root_, p, &best);
    return best;
  }

  std::optional<RayHit> raycast(const Vec3& o, const Vec3& d,
                                double tmax = std::numeric_limits<double>::max()) const {
    RayHit best;
    best.t = tmax;
    bool found = false;
    raycast_rec(root_, o, d, &best, &found);
    if (!found) return std::nullopt;
    return best;
  }

  // All crossings with t > eps along the ray; grazing hits poison the count.
  struct CrossingCount {
    int count = 0;
    bool reliable = true;
  };
  CrossingCount count_crossings(const Vec3& o, const Vec3& d) const {
    CrossingCount cc;
    crossings_rec(root_, o, d, &cc);
    return cc;
  }

 private:
  struct Tri {
    Vec3 a, b, c;
    int face;
  };
  struct Node {
    Aabb box;
    int left = -1, right = -1;
    int start = 0, count = 0;  // leaf range in order_
  };

  static Aabb tri_box(const Tri& t) {
    Aabb b;
    b.expand(t.a);
    b.expand(t.b);
    b.expand(t.c);
    return b;
  }

  int build(std::vector<int>& ids, int start, int end) {
    Node node;
    for (int i = start; i < end; ++i) node.box.expand(tri_box(tris_[ids[i]]));
    int count = end - start;
    if (count <= 4) {
      node.start = start;
      node.count = count;
      nodes_.push_back(node);
      return static_cast<int>(nodes_.size()) - 1;
    }
    Vec3 ext = node.box.extent();
    int axis = 0;
    if (ext.y() > ext.x()) axis = 1;
    if (ext.z() > ext[axis]) axis = 2;
    int mid = (start + end) / 2;
    std::nth_element(ids.begin() + start, ids.begin() + mid, ids.begin() + end,
                     [&](int ia, int ib) {
                       return tri_box(tris_[ia]).center()[axis] < tri_box(tris_[ib]).center()[axis];
                     });
    int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    int l = build(ids, start, mid);
    int r = build(ids, mid, end);
    nodes_[self].left = l;
    nodes_[self].right = r;
    return self;
  }

  static double box_dist2(const Aabb& b, const Vec3& p) {
    Vec3 q = p.cwiseMax(b.lo).cwiseMin(b.hi);
    return (q - p).squaredNorm();
  }

  void closest_rec(int ni, const Vec3& p, ClosestHit* best) const {
    const Node& n = nodes_[ni];
    if (box_dist2(n.box, p) > best->dist2) return;
    if (n.left < 0) {
      for (int i = n.start; i < n.start + n.count; ++i) {
        const Tri& t = tris_[order_[i]];
        Vec3 q = closest_point_on_triangle(p, t.a, t.b, t.c);
        double d2 = (q - p).squaredNorm();
        if (d2 < best->dist2 || (d2 == best->dist2 && t.face < best->face)) {
          best->dist2 = d2;
          best->point = q;
          best->face = t.face;
        }
      }
      return;
    }
    double dl = box_dist2(nodes_[n.left].box, p);
    double dr = box_dist2(nodes_[n.right].box, p);
    if (dl < dr) {
      closest_rec(n.left, p, best);
      closest_rec(n.right, p, best);
    } else {
      closest_rec(n.right, p, best);
      closest_rec(n.left, p, best);
    }
  }

  static bool box_hit(const Aabb& b, const Vec3& o, const Vec3& inv_d, double tmax) {
    double t0 = 0, t1 = tmax;
    for (int k = 0; k < 3; ++k) {
      double lo = (b.lo[k] - o[k]) * inv_d[k];
      double hi = (b.hi[k] - o[k]) * inv_d[k];
      if (inv_d[k] < 0) std::swap(lo, hi);
      t0 = std::max(t0, lo);
      t1 = std::min(t1, hi);
      if (t0 > t1) return false;
    }
    return true;
  }

  // Moller-Trumbore; eps flags grazing configurations.
  static bool tri_hit(const Tri& tri, const Vec3& o, const Vec3& d, RayHit* hit) {
    constexpr double kEps = 1e-12;
    constexpr double kEdgeEps = 1e-9;
    Vec3 e1 = tri.b - tri.a, e2 = tri.c - tri.a;
    Vec3 pvec = d.cross(e2);
    double det = e1.dot(pvec);
    if (std::abs(det) < kEps) return false;
    double inv = 1.0 / det;
    Vec3 tvec = o - tri.a;
    double u = tvec.dot(pvec) * inv;
    if (u < -kEdgeEps || u > 1 + kEdgeEps) return false;
    Vec3 qvec = tvec.cross(e1);
    double v = d.dot(qvec) * inv;
    if (v < -kEdgeEps || u + v > 1 + kEdgeEps) return false;
    double t = e2.dot(qvec) * inv;
    if (t <= 1e-9) return false;
    hit->t = t;
    hit->face = tri.face;
    hit->bu = u;
    hit->bv = v;
    hit->grazing = u < kEdgeEps || v < kEdgeEps || u + v > 1 - kEdgeEps ||
                   std::abs(det) < 1e-9 * e1.norm() * e2.norm();
    return true;
  }

  void raycast_rec(int ni, const Vec3& o, const Vec3& d, RayHit* best, bool* found) const {
    const Node& n = nodes_[ni];
    Vec3 inv_d(1.0 / d.x(), 1.0 / d.y(), 1.0 / d.z());
    if (!box_hit(n.box, o, inv_d, best->t)) return;
    if (n.left < 0) {
      for (int i = n.start; i < n.start + n.count; ++i) {
        RayHit h;
        if (tri_hit(tris_[order_[i]], o, d, &h) && h.t < best->t) {
          *best = h;
          *found = true;
        }
      }
      return;
    }
    raycast_rec(n.left, o, d, best, found);
    raycast_rec(n.right, o, d, best, found);
  }

  void crossings_rec(int ni, const Vec3& o, const Vec3& d, CrossingCount* cc) const {
    const Node& n = nodes_[ni];
    Vec3 inv_d(1.0 / d.x(), 1.0 / d.y(), 1.0 / d.z());
    if (!box_hit(n.box, o, inv_d, std::numeric_limits<double>::max())) return;
    if (n.left < 0) {
      for (int i = n.start; i < n.start + n.count; ++i) {
        RayHit h;
        if (tri_hit(tris_[order_[i]], o, d, &h)) {
          ++cc->count;
          if (h.grazing) cc->reliable = false;
        }
      }
      return;
    }
    crossings_rec(n.left, o, d, cc);
    crossings_rec(n.right, o, d, cc);
  }

  std::vector<Tri> tris_;
  std::vector<Node> nodes_;
  std::vector<int> order_;
  int root_ = 0;
};

// Parity-based inside test with deterministic multi-direction voting.
// Returns true when the point is inside the (closed) mesh.
inline bool point_inside_mesh(const TriBvh& bvh, const Vec3& p, bool* ambiguous = nullptr) {
  static const Vec3 dirs[5] = {
      Vec3(0.57735026918962576, 0.57735026918962576, 0.57735026918962576),
      Vec3(-0.65990630499873437, 0.7266747967805434, 0.19166767959060515),
      Vec3(0.2938546535621581, -0.5157294715892571, 0.80476930219428021),
      Vec3(0.80178372573727319, 0.26726124191242439, -0.53452248382484879),
      Vec3(-0.16903085094570331, -0.84515425472851657, -0.50709255283710986)};
  int votes_in = 0, votes_out = 0, valid = 0;
  for (const Vec3& d : dirs) {
    auto cc = bvh.count_crossings(p, d);
    if (!cc.reliable) continue;
    ++valid;
    (cc.count % 2 == 1 ? votes_in : votes_out)++;
    if (valid >= 3) break;
  }
  if (ambiguous) *ambiguous = valid == 0 || (votes_in > 0 && votes_out > 0);
  return votes_in > votes_out;
}

}  // namespace gsm
