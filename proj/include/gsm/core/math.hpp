// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

namespace gsm {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Vec2i = Eigen::Vector2i;
using Vec3i = Eigen::Vector3i;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }

inline double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

// Numerically stable logistic.
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline double sigmoid_grad(double x) {
  double s = sigmoid(x);
  return s * (1.0 - s);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

// ---------------------------------------------------------------------------
// Quaternions, stored as (w, x, y, z).
// ---------------------------------------------------------------------------

inline Vec4 quat_identity() { return Vec4(1, 0, 0, 0); }

inline Vec4 quat_normalized(const Vec4& q) {
  double n = q.norm();
  return n > 0 ? Vec4(q / n) : quat_identity();
}

// Hamilton product a * b.
inline Vec4 quat_mul(const Vec4& a, const Vec4& b) {
  return Vec4(a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
              a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
              a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
              a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]);
}

// Left-multiplication matrix L(a) with a*b == L(a)*b.
inline Mat4 quat_left_mul_matrix(const Vec4& a) {
  Mat4 m;
  m << a[0], -a[1], -a[2], -a[3],
       a[1],  a[0], -a[3],  a[2],
       a[2],  a[3],  a[0], -a[1],
       a[3], -a[2],  a[1],  a[0];
  return m;
}

// Rotation matrix of a unit quaternion.
inline Mat3 quat_to_mat(const Vec4& q) {
  double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

inline Vec4 mat_to_quat(const Mat3& m) {
  Vec4 q;
  double tr = m(0, 0) + m(1, 1) + m(2, 2);
  if (tr > 0) {
    double s = std::sqrt(tr + 1.0) * 2;
    q = Vec4(0.25 * s, (m(2, 1) - m(1, 2)) / s, (m(0, 2) - m(2, 0)) / s,
             (m(1, 0) - m(0, 1)) / s);
  } else if (m(0, 0) > m(1, 1) && m(0, 0) > m(2, 2)) {
    double s = std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2)) * 2;
    q = Vec4((m(2, 1) - m(1, 2)) / s, 0.25 * s, (m(0, 1) + m(1, 0)) / s,
             (m(0, 2) + m(2, 0)) / s);
  } else if (m(1, 1) > m(2, 2)) {
    double s = std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2)) * 2;
    q = Vec4((m(0, 2) - m(2, 0)) / s, (m(0, 1) + m(1, 0)) / s, 0.25 * s,
             (m(1, 2) + m(2, 1)) / s);
  } else {
    double s = std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1)) * 2;
    q = Vec4((m(1, 0) - m(0, 1)) / s, (m(0, 2) + m(2, 0)) / s,
             (m(1, 2) + m(2, 1)) / s, 0.25 * s);
  }
  return quat_normalized(q);
}

// Pullback of dL/dR onto a unit quaternion q: dL/dq_k = sum_ij dL/dR_ij dR_ij/dq_k.
inline Vec4 quat_rotation_grad(const Mat3& g, const Vec4& q) {
  double w = q[0], x = q[1], y = q[2], z = q[3];
  Vec4 d;
  d[0] = 2 * (-z * g(0, 1) + y * g(0, 2) + z * g(1, 0) - x * g(1, 2) - y * g(2, 0) + x * g(2, 1));
  d[1] = 2 * (y * g(0, 1) + z * g(0, 2) + y * g(1, 0) - 2 * x * g(1, 1) - w * g(1, 2) +
              z * g(2, 0) + w * g(2, 1) - 2 * x * g(2, 2));
  d[2] = 2 * (-2 * y * g(0, 0) + x * g(0, 1) + w * g(0, 2) + x * g(1, 0) + z * g(1, 2) -
              w * g(2, 0) + z * g(2, 1) - 2 * y * g(2, 2));
  d[3] = 2 * (-2 * z * g(0, 0) - w * g(0, 1) + x * g(0, 2) + w * g(1, 0) - 2 * z * g(1, 1) +
              y * g(1, 2) + x * g(2, 0) + y * g(2, 1));
  return d;
}

// Chain a gradient w.r.t. the normalized quaternion back to the raw stored one.
inline Vec4 quat_normalize_grad(const Vec4& d_unit, const Vec4& q_raw) {
  double n = q_raw.norm();
  if (n <= 0) return Vec4::Zero();
  Vec4 u = q_raw / n;
  return (d_unit - u * u.dot(d_unit)) / n;
}

// Geodesic angle from identity of a unit quaternion, in [0, pi].
inline double quat_angle_from_identity(const Vec4& q) {
  double r = q.tail<3>().norm();
  return 2.0 * std::atan2(r, std::abs(q[0]));
}

// ---------------------------------------------------------------------------
// Hashing (FNV-1a, 64-bit) for determinism checks and config fingerprints.
// ---------------------------------------------------------------------------

struct Fnv1a {
  std::uint64_t state = 1469598103934665603ull;

  void feed(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state ^= p[i];
      state *= 1099511628211ull;
    }
  }
  void feed(double v) { feed(&v, sizeof v); }
  void feed(std::int64_t v) { feed(&v, sizeof v); }
  template <typename Derived>
  void feed(const Eigen::MatrixBase<Derived>& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) feed(double(m(i)));
  }
};

inline std::uint64_t fnv1a(const void* data, std::size_t n) {
  Fnv1a h;
  h.feed(data, n);
  return h.state;
}

inline std::uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

}  // namespace gsm
