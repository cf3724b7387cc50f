// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "gsm/core/error.hpp"
#include "gsm/core/math.hpp"

namespace gsm {

// Row-major, interleaved-channel raster. Row 0 is the top of the image.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, T fill = T{})
      : w_(width), h_(height), c_(channels),
        data_(static_cast<std::size_t>(width) * height * channels, fill) {}

  int width() const { return w_; }
  int height() const { return h_; }
  int channels() const { return c_; }
  bool empty() const { return data_.empty(); }
  std::size_t size() const { return data_.size(); }

  T& at(int x, int y, int ch = 0) { return data_[idx(x, y, ch)]; }
  const T& at(int x, int y, int ch = 0) const { return data_[idx(x, y, ch)]; }

  T* pixel(int x, int y) { return data_.data() + idx(x, y, 0); }
  const T* pixel(int x, int y) const { return data_.data() + idx(x, y, 0); }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(const Image& o) const { return w_ == o.w_ && h_ == o.h_ && c_ == o.c_; }

 private:
  std::size_t idx(int x, int y, int ch) const {
    return (static_cast<std::size_t>(y) * w_ + x) * c_ + ch;
  }
  int w_ = 0, h_ = 0, c_ = 0;
  std::vector<T> data_;
};

using ImageD = Image<double>;
using ImageU8 = Image<std::uint8_t>;

// One bilinear lookup, clamp-to-edge, texel centers at integer+0.5.
// uv is in [0,1]^2 over the full image extent.
struct BilinearTap {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double w00 = 1, w10 = 0, w01 = 0, w11 = 0;
};

inline BilinearTap bilinear_tap(int width, int height, const Vec2& uv) {
  BilinearTap t;
  double px = uv[0] * width - 0.5;
  double py = uv[1] * height - 0.5;
  double fx = std::floor(px), fy = std::floor(py);
  double ax = px - fx, ay = py - fy;
  t.x0 = std::clamp(static_cast<int>(fx), 0, width - 1);
  t.x1 = std::clamp(static_cast<int>(fx) + 1, 0, width - 1);
  t.y0 = std::clamp(static_cast<int>(fy), 0, height - 1);
  t.y1 = std::clamp(static_cast<int>(fy) + 1, 0, height - 1);
  t.w00 = (1 - ax) * (1 - ay);
  t.w10 = ax * (1 - ay);
  t.w01 = (1 - ax) * ay;
  t.w11 = ax * ay;
  return t;
}

inline double sample_bilinear(const ImageD& img, const BilinearTap& t, int ch) {
  return t.w00 * img.at(t.x0, t.y0, ch) + t.w10 * img.at(t.x1, t.y0, ch) +
         t.w01 * img.at(t.x0, t.y1, ch) + t.w11 * img.at(t.x1, t.y1, ch);
}

inline double sample_bilinear(const ImageD& img, const Vec2& uv, int ch = 0) {
  return sample_bilinear(img, bilinear_tap(img.width(), img.height(), uv), ch);
}

inline void scatter_bilinear(ImageD& img, const BilinearTap& t, int ch, double g) {
  img.at(t.x0, t.y0, ch) += t.w00 * g;
  img.at(t.x1, t.y0, ch) += t.w10 * g;
  img.at(t.x0, t.y1, ch) += t.w01 * g;
  img.at(t.x1, t.y1, ch) += t.w11 * g;
}

// Bilinear resize (clamp-to-edge), used for weight maps and previews.
inline ImageD resize_bilinear(const ImageD& src, int width, int height) {
  ImageD dst(width, height, src.channels());
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      Vec2 uv((x + 0.5) / width, (y + 0.5) / height);
      BilinearTap t = bilinear_tap(src.width(), src.height(), uv);
      for (int c = 0; c < src.channels(); ++c) dst.at(x, y, c) = sample_bilinear(src, t, c);
    }
  return dst;
}

inline double srgb_encode(double linear) {
  linear = clamp01(linear);
  return linear <= 0.0031308 ? 12.92 * linear
                             : 1.055 * std::pow(linear, 1.0 / 2.4) - 0.055;
}

inline double srgb_decode(double srgb) {
  srgb = clamp01(srgb);
  return srgb <= 0.04045 ? srgb / 12.92 : std::pow((srgb + 0.055) / 1.055, 2.4);
}

inline ImageU8 to_srgb8(const ImageD& linear) {
  ImageU8 out(linear.width(), linear.height(), linear.channels());
  for (std::size_t i = 0; i < linear.size(); ++i)
    out.data()[i] = static_cast<std::uint8_t>(std::lround(srgb_encode(linear.data()[i]) * 255.0));
  return out;
}

inline ImageD from_srgb8(const ImageU8& srgb) {
  ImageD out(srgb.width(), srgb.height(), srgb.channels());
  for (std::size_t i = 0; i < srgb.size(); ++i)
    out.data()[i] = srgb_decode(srgb.data()[i] / 255.0);
  return out;
}

inline void require_same_shape(const ImageD& a, const ImageD& b, const char* where) {
  if (!a.same_shape(b)) throw ShapeMismatch(where);
}

inline double image_mse(const ImageD& a, const ImageD& b) {
  require_same_shape(a, b, "image_mse");
  double acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a.data()[i] - b.data()[i];
    acc += d * d;
  }
  return a.size() ? acc / double(a.size()) : 0.0;
}

inline double image_psnr(const ImageD& a, const ImageD& b) {
  double mse = image_mse(a, b);
  return mse > 0 ? 10.0 * std::log10(1.0 / mse) : std::numeric_limits<double>::infinity();
}

}  // namespace gsm
