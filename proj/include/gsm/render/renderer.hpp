// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "gsm/core/camera.hpp"
#include "gsm/core/error.hpp"
#include "gsm/core/math.hpp"
#include "gsm/core/surfel.hpp"

namespace gsm {

struct RenderOptions {
  Vec3 background = Vec3::Zero();
  double near_clip = 0.01;
  double sigma_min = 1e-4;          // contributions below this are skipped
  double sigma_max = 0.9999;        // cap keeps transmittance strictly positive
  double transmittance_min = 1e-4;  // early compositing exit
  double screen_floor_px = 0.3;     // minimum projected footprint (std dev, pixels)
  int tile_size = 16;
};

// Realized surfels from one or more parts; `part` tags drive the semantic
// channel (joint renders keep cls per part).
struct SplatBatch {
  std::vector<RealizedSurfel> surfels;
  std::vector<int> part;

  void append(const std::vector<RealizedSurfel>& s, int part_tag) {
    surfels.insert(surfels.end(), s.begin(), s.end());
    part.insert(part.end(), s.size(), part_tag);
  }
  std::size_t size() const { return surfels.size(); }
};

namespace render_detail {

struct PreparedSurfel {
  Vec3 pos, tu, tv, n;
  double su = 1, sv = 1;
  Vec3 color = Vec3::Zero();
  double alpha = 0, cls = 0;
  double z_cam = 0;
  Vec2 pc = Vec2::Zero();  // projected center, continuous pixel coordinates
  int index = 0;           // index into the original batch
};

inline std::vector<PreparedSurfel> prepare(const SplatBatch& batch, const Camera& cam,
                                           const RenderOptions& opt) {
  std::vector<PreparedSurfel> out;
  out.reserve(batch.surfels.size());
  for (std::size_t i = 0; i < batch.surfels.size(); ++i) {
    const RealizedSurfel& s = batch.surfels[i];
    if (!s.position.allFinite() || !s.rot.allFinite() || !s.scale.allFinite() ||
        !s.color.allFinite() || !std::isfinite(s.opacity) || !std::isfinite(s.cls))
      throw NonFiniteAttribute("render: surfel attribute is NaN/Inf");
    if (!(s.scale.minCoeff() > 0)) throw NonFiniteAttribute("render: non-positive scale");
    Vec3 pcam = cam.to_camera(s.position);
    if (pcam.z() <= opt.near_clip) continue;  // center behind the near plane
    PreparedSurfel p;
    p.pos = s.position;
    Mat3 r = quat_to_mat(quat_normalized(s.rot));
    p.tu = r.col(0);
    p.tv = r.col(1);
    p.n = r.col(2);
    p.su = s.scale.x();
    p.sv = s.scale.y();
    p.color = s.color;
    p.alpha = clamp01(s.opacity);
    p.cls = s.cls;
    p.z_cam = pcam.z();
    p.pc = Vec2(cam.fx * pcam.x() / pcam.z() + cam.cx, cam.fy * pcam.y() / pcam.z() + cam.cy);
    p.index = static_cast<int>(i);
    out.push_back(p);
  }
  return out;
}

// One splat evaluated against one pixel ray.
struct SplatHit {
  double sigma = 0;
  double t = 0;  // depth payload: distance along the unit ray
  double u = 0, v = 0;
  double g = 0;        // winning Gaussian value
  bool scr_branch = false;
  double eta = 1;      // normal flip so the output normal faces the camera
};

inline bool eval_splat(const PreparedSurfel& p, const Ray& ray, const Vec2& pix_center,
                       const RenderOptions& opt, SplatHit* hit) {
  double denom = ray.dir.dot(p.n);
  double g_obj = 0, t_obj = 0, u = 0, v = 0;
  if (std::abs(denom) > 1e-12) {
    t_obj = (p.pos - ray.origin).dot(p.n) / denom;
    if (t_obj > opt.near_clip) {
      Vec3 q3 = t_obj * ray.dir - (p.pos - ray.origin);
      u = q3.dot(p.tu) / p.su;
      v = q3.dot(p.tv) / p.sv;
      g_obj = std::exp(-0.5 * (u * u + v * v));
    } else {
      t_obj = 0;  // intersection rejected
    }
  }
  Vec2 d = pix_center - p.pc;
  double sf = opt.screen_floor_px;
  double g_scr = std::exp(-0.5 * d.squaredNorm() / (sf * sf));

  bool scr = g_scr > g_obj;
  double g = scr ? g_scr : g_obj;
  double t = scr ? (p.pos - ray.origin).dot(ray.dir) : t_obj;
  if (t <= opt.near_clip) return false;
  double sigma = std::min(p.alpha * g, opt.sigma_max);
  if (sigma < opt.sigma_min) return false;
  hit->sigma = sigma;
  hit->t = t;
  hit->u = u;
  hit->v = v;
  hit->g = g;
  hit->scr_branch = scr;
  hit->eta = denom <= 0 ? 1.0 : -1.0;
  return true;
}

struct Binning {
  int tile_size = 16;
  int tiles_x = 0, tiles_y = 0;
  std::vector<std::vector<int>> lists;  // indices into the prepared array
};

// Exact pixel-space extremes of the projected cutoff ellipse via the critical
// points of the rational parametrization; falls back to the whole image when
// the boundary can cross the near plane.
inline bool splat_pixel_bbox(const PreparedSurfel& p, const Camera& cam, double near_clip,
                             double r_cut, double* x0, double* x1, double* y0, double* y1) {
  Vec3 ac = cam.to_camera(p.pos);
  Vec3 bc = cam.R * (r_cut * p.su * p.tu);
  Vec3 ec = cam.R * (r_cut * p.sv * p.tv);
  auto homog = [&](const Vec3& q) {
    return Vec3(cam.fx * q.x() + cam.cx * q.z(), cam.fy * q.y() + cam.cy * q.z(), q.z());
  };
  Vec3 a = homog(ac), b = homog(bc), e = homog(ec);
  double zmin = a.z() - std::sqrt(b.z() * b.z() + e.z() * e.z());
  if (zmin <= near_clip) return false;  // caller uses the full-image range
  for (int axis = 0; axis < 2; ++axis) {
    double A = a[axis] * b[2] - b[axis] * a[2];
    double B = e[axis] * a[2] - a[axis] * e[2];
    double C = e[axis] * b[2] - b[axis] * e[2];
    double r = std::hypot(A, B);
    double lo = p.pc[axis], hi = p.pc[axis];
    if (r > 0) {
      double phi = std::atan2(B, A);
      double asin_arg = std::clamp(-C / r, -1.0, 1.0);
      double base = std::asin(asin_arg);
      for (double theta : {base - phi, kPi - base - phi}) {
        double ct = std::cos(theta), st = std::sin(theta);
        double val = (a[axis] + b[axis] * ct + e[axis] * st) / (a[2] + b[2] * ct + e[2] * st);
        lo = std::min(lo, val);
        hi = std::max(hi, val);
      }
    }
    if (axis == 0) {
      *x0 = lo;
      *x1 = hi;
    } else {
      *y0 = lo;
      *y1 = hi;
    }
  }
  return true;
}

inline Binning build_binning(const std::vector<PreparedSurfel>& prep, const Camera& cam,
                             const RenderOptions& opt) {
  Binning bins;
  bins.tile_size = opt.tile_size;
  bins.tiles_x = (cam.width + opt.tile_size - 1) / opt.tile_size;
  bins.tiles_y = (cam.height + opt.tile_size - 1) / opt.tile_size;
  bins.lists.assign(static_cast<std::size_t>(bins.tiles_x) * bins.tiles_y, {});
  // exp(-r_cut^2/2) == sigma_min, so pixels outside the ellipse can never pass
  // the sigma threshold (opacity is clamped to [0,1]).
  double r_cut = std::sqrt(-2.0 * std::log(opt.sigma_min));
  const double pad = 3.0;  // covers the screen floor and center-vs-corner rounding
  for (std::size_t pi = 0; pi < prep.size(); ++pi) {
    const PreparedSurfel& p = prep[pi];
    double x0, x1, y0, y1;
    if (!splat_pixel_bbox(p, cam, opt.near_clip, r_cut, &x0, &x1, &y0, &y1)) {
      x0 = 0;
      x1 = cam.width;
      y0 = 0;
      y1 = cam.height;
    }
    int px0 = std::max(0, static_cast<int>(std::floor(x0 - pad)));
    int px1 = std::min(cam.width - 1, static_cast<int>(std::ceil(x1 + pad)));
    int py0 = std::max(0, static_cast<int>(std::floor(y0 - pad)));
    int py1 = std::min(cam.height - 1, static_cast<int>(std::ceil(y1 + pad)));
    if (px0 > px1 || py0 > py1) continue;
    for (int ty = py0 / opt.tile_size; ty <= py1 / opt.tile_size; ++ty)
      for (int tx = px0 / opt.tile_size; tx <= px1 / opt.tile_size; ++tx)
        bins.lists[static_cast<std::size_t>(ty) * bins.tiles_x + tx].push_back(
            static_cast<int>(pi));
  }
  for (auto& list : bins.lists)
    std::sort(list.begin(), list.end(), [&](int ia, int ib) {
      if (prep[ia].z_cam != prep[ib].z_cam) return prep[ia].z_cam < prep[ib].z_cam;
      return prep[ia].index < prep[ib].index;
    });
  return bins;
}

}  // namespace render_detail

// State captured by a forward pass so the backward pass can replay compositing.
struct ForwardCache {
  std::vector<render_detail::PreparedSurfel> prep;
  render_detail::Binning bins;
  std::size_t batch_size = 0;
  int width = 0, height = 0;
  bool valid = false;
};

namespace render_detail {

// Composites the splats of `order` along one pixel; shared by the tile and
// oracle paths so the two are arithmetically identical.
template <typename Sink>
inline void composite_pixel(const std::vector<PreparedSurfel>& prep,
                            const std::vector<int>& order, const Ray& ray,
                            const Vec2& pix_center, const RenderOptions& opt, double* T_end,
                            Sink&& sink) {
  double T = 1.0;
  for (int pi : order) {
    if (T < opt.transmittance_min) break;
    SplatHit hit;
    if (!eval_splat(prep[pi], ray, pix_center, opt, &hit)) continue;
    double w = T * hit.sigma;
    sink(pi, hit, w);
    T *= 1.0 - hit.sigma;
  }
  *T_end = T;
}

inline Ray make_ray(const Camera& cam, const Mat3& r_transpose, const Vec3& origin, double px,
                    double py) {
  Vec3 d((px - cam.cx) / cam.fx, (py - cam.cy) / cam.fy, 1.0);
  return {origin, (r_transpose * d).normalized()};
}

inline void render_pixel_range(const std::vector<PreparedSurfel>& prep,
                               const std::vector<int>& order, const Camera& cam,
                               const RenderOptions& opt, int x0, int x1, int y0, int y1,
                               RenderTarget* out) {
  Vec3 origin = cam.center();
  Mat3 rt = cam.R.transpose();
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) {
      Vec2 pix_center(x + 0.5, y + 0.5);
      Ray ray = make_ray(cam, rt, origin, pix_center.x(), pix_center.y());
      Vec3 color = Vec3::Zero(), normal = Vec3::Zero();
      double alpha = 0, semantic = 0, depth_num = 0;
      double T_end = 1.0;
      composite_pixel(prep, order, ray, pix_center, opt, &T_end,
                      [&](int pi, const SplatHit& h, double w) {
                        const PreparedSurfel& p = prep[pi];
                        color += w * p.color;
                        alpha += w;
                        normal += (w * h.eta) * p.n;
                        semantic += w * p.cls;
                        depth_num += w * h.t;
                      });
      color += T_end * opt.background;
      for (int c = 0; c < 3; ++c) {
        out->color.at(x, y, c) = color[c];
        out->normal.at(x, y, c) = normal[c];
      }
      out->alpha.at(x, y, 0) = alpha;
      out->semantic.at(x, y, 0) = semantic;
      out->depth.at(x, y, 0) = alpha > 0 ? depth_num / alpha : 0.0;
    }
}

}  // namespace render_detail

// Tile-based forward splatting. Pass `cache` to enable render_backward.
inline RenderTarget render(const SplatBatch& batch, const Camera& cam,
                           const RenderOptions& opt = {}, ForwardCache* cache = nullptr) {
  using namespace render_detail;
  cam.validate();
  RenderTarget out(cam.width, cam.height);
  std::vector<PreparedSurfel> prep = prepare(batch, cam, opt);
  Binning bins = build_binning(prep, cam, opt);
  for (int ty = 0; ty < bins.tiles_y; ++ty)
    for (int tx = 0; tx < bins.tiles_x; ++tx) {
      const auto& list = bins.lists[static_cast<std::size_t>(ty) * bins.tiles_x + tx];
      int x0 = tx * opt.tile_size, y0 = ty * opt.tile_size;
      int x1 = std::min(cam.width, x0 + opt.tile_size);
      int y1 = std::min(cam.height, y0 + opt.tile_size);
      render_pixel_range(prep, list, cam, opt, x0, x1, y0, y1, &out);
    }
  if (cache) {
    cache->prep = std::move(prep);
    cache->bins = std::move(bins);
    cache->batch_size = batch.size();
    cache->width = cam.width;
    cache->height = cam.height;
    cache->valid = true;
  }
  return out;
}

// Reference path: per-pixel compositing over a single global depth sort, no
// tiling. Intended for small scenes and for checking the tile renderer.
inline RenderTarget render_oracle(const SplatBatch& batch, const Camera& cam,
                                  const RenderOptions& opt = {}) {
  using namespace render_detail;
  cam.validate();
  RenderTarget out(cam.width, cam.height);
  std::vector<PreparedSurfel> prep = prepare(batch, cam, opt);
  std::vector<int> order(prep.size());
  for (std::size_t i = 0; i < prep.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int ia, int ib) {
    if (prep[ia].z_cam != prep[ib].z_cam) return prep[ia].z_cam < prep[ib].z_cam;
    return prep[ia].index < prep[ib].index;
  });
  render_pixel_range(prep, order, cam, opt, 0, cam.width, 0, cam.height, &out);
  return out;
}

// Adjoint of the forward compositing math. `adjoint` carries dL/d(channel)
// images; empty channel images are treated as zero.
inline GradientBuffer render_backward(const SplatBatch& batch, const Camera& cam,
                                      const RenderOptions& opt, const ForwardCache& cache,
                                      const RenderTarget& adjoint) {
  using namespace render_detail;
  if (!cache.valid || cache.batch_size != batch.size() || cache.width != cam.width ||
      cache.height != cam.height)
    throw MissingForwardState("render_backward: no matching forward pass");

  auto channel = [](const ImageD& img, int x, int y, int c) {
    return img.empty() ? 0.0 : img.at(x, y, c);
  };

  GradientBuffer grads(batch.size());
  const std::vector<PreparedSurfel>& prep = cache.prep;
  const Binning& bins = cache.bins;
  Vec3 origin = cam.center();
  Mat3 rcam_t = cam.R.transpose();
  double sf2 = opt.screen_floor_px * opt.screen_floor_px;

  struct Contrib {
    int pi;
    SplatHit hit;
    double w;
  };
  std::vector<Contrib> contribs;

  for (int ty = 0; ty < bins.tiles_y; ++ty)
    for (int tx = 0; tx < bins.tiles_x; ++tx) {
      const auto& list = bins.lists[static_cast<std::size_t>(ty) * bins.tiles_x + tx];
      if (list.empty()) continue;
      int x0 = tx * opt.tile_size, y0 = ty * opt.tile_size;
      int x1 = std::min(cam.width, x0 + opt.tile_size);
      int y1 = std::min(cam.height, y0 + opt.tile_size);
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
          Vec2 pix_center(x + 0.5, y + 0.5);
          Ray ray = make_ray(cam, rcam_t, origin, pix_center.x(), pix_center.y());

          contribs.clear();
          double alpha = 0, depth_num = 0, T_end = 1.0;
          composite_pixel(prep, list, ray, pix_center, opt, &T_end,
                          [&](int pi, const SplatHit& h, double w) {
                            contribs.push_back({pi, h, w});
                            alpha += w;
                            depth_num += w * h.t;
                          });
          if (contribs.empty()) continue;

          Vec3 c_hat(channel(adjoint.color, x, y, 0), channel(adjoint.color, x, y, 1),
                     channel(adjoint.color, x, y, 2));
          Vec3 n_hat(channel(adjoint.normal, x, y, 0), channel(adjoint.normal, x, y, 1),
                     channel(adjoint.normal, x, y, 2));
          double a_hat = channel(adjoint.alpha, x, y, 0);
          double s_hat = channel(adjoint.semantic, x, y, 0);
          double d_hat = channel(adjoint.depth, x, y, 0);

          double dnum_hat = 0, a_total = a_hat;
          if (alpha > 0) {
            dnum_hat = d_hat / alpha;
            a_total += -d_hat * depth_num / (alpha * alpha);
          }
          double suffix = c_hat.dot(opt.background) * T_end;

          for (int ci = static_cast<int>(contribs.size()) - 1; ci >= 0; --ci) {
            const Contrib& cb = contribs[ci];
            const PreparedSurfel& p = prep[cb.pi];
            const SplatHit& h = cb.hit;
            SurfelGrad& g = grads.surfels[p.index];

            double gi = c_hat.dot(p.color) + a_total + n_hat.dot(h.eta * p.n) +
                        s_hat * p.cls + dnum_hat * h.t;
            double t_prev = cb.w / h.sigma;
            double d_sigma = t_prev * gi - suffix / (1.0 - h.sigma);
            suffix += gi * cb.w;

            // payload adjoints
            g.color += c_hat * cb.w;
            g.cls += s_hat * cb.w;
            Vec3 dn = n_hat * (cb.w * h.eta);
            double dt = dnum_hat * cb.w;
            Vec3 dpos = Vec3::Zero();
            Vec3 dtu = Vec3::Zero(), dtv = Vec3::Zero();
            double dsu = 0, dsv = 0;

            bool capped = p.alpha * h.g > opt.sigma_max;
            double d_alpha = capped ? 0.0 : d_sigma * h.g;
            double d_g = capped ? 0.0 : d_sigma * p.alpha;
            g.opacity += d_alpha;

            if (h.scr_branch) {
              // G depends on the projected center only; depth payload on the
              // center's ray projection.
              Vec2 delta = pix_center - p.pc;
              Vec2 dpc = (d_g * h.g / sf2) * delta;
              Vec3 pcam = cam.to_camera(p.pos);
              Vec3 dcam(dpc.x() * cam.fx / pcam.z(), dpc.y() * cam.fy / pcam.z(),
                        -dpc.x() * cam.fx * pcam.x() / (pcam.z() * pcam.z()) -
                            dpc.y() * cam.fy * pcam.y() / (pcam.z() * pcam.z()));
              dpos += rcam_t * dcam;
              dpos += ray.dir * dt;
            } else {
              double du = -h.u * h.g * d_g;
              double dv = -h.v * h.g * d_g;
              double denom = ray.dir.dot(p.n);
              Vec3 q3 = h.t * ray.dir - (p.pos - ray.origin);
              Vec3 dq3 = (du / p.su) * p.tu + (dv / p.sv) * p.tv;
              dtu = (du / p.su) * q3;
              dtv = (dv / p.sv) * q3;
              dsu = -h.u / p.su * du;
              dsv = -h.v / p.sv * dv;
              double dt_total = dt + ray.dir.dot(dq3);
              dpos += -dq3;
              dpos += (dt_total / denom) * p.n;
              dn += (-dt_total / denom) * q3;
            }

            g.position += dpos;
            g.scale += Vec2(dsu, dsv);
            Mat3 drot;
            drot.col(0) = dtu;
            drot.col(1) = dtv;
            drot.col(2) = dn;
            Vec4 q_unit = quat_normalized(batch.surfels[p.index].rot);
            Vec4 dq_unit = quat_rotation_grad(drot, q_unit);
            g.rot += quat_normalize_grad(dq_unit, batch.surfels[p.index].rot);
          }
        }
    }
  return grads;
}

}  // namespace gsm
