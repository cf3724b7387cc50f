// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <png.h>

#include <cstring>
#include <string>

#include "gsm/core/error.hpp"
#include "gsm/core/image.hpp"

namespace gsm {

inline void write_png(const std::string& path, const ImageU8& img) {
  png_image pi;
  std::memset(&pi, 0, sizeof pi);
  pi.version = PNG_IMAGE_VERSION;
  pi.width = static_cast<png_uint_32>(img.width());
  pi.height = static_cast<png_uint_32>(img.height());
  switch (img.channels()) {
    case 1: pi.format = PNG_FORMAT_GRAY; break;
    case 3: pi.format = PNG_FORMAT_RGB; break;
    case 4: pi.format = PNG_FORMAT_RGBA; break;
    default: throw ShapeMismatch("write_png: unsupported channel count");
  }
  if (!png_image_write_to_file(&pi, path.c_str(), 0, img.data().data(), 0, nullptr))
    throw IoError("write_png: " + path + ": " + pi.message);
}

inline ImageU8 read_png(const std::string& path, int want_channels = 3) {
  png_image pi;
  std::memset(&pi, 0, sizeof pi);
  pi.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&pi, path.c_str()))
    throw IoError("read_png: " + path + ": " + pi.message);
  switch (want_channels) {
    case 1: pi.format = PNG_FORMAT_GRAY; break;
    case 3: pi.format = PNG_FORMAT_RGB; break;
    case 4: pi.format = PNG_FORMAT_RGBA; break;
    default: png_image_free(&pi); throw ShapeMismatch("read_png: unsupported channel count");
  }
  ImageU8 img(static_cast<int>(pi.width), static_cast<int>(pi.height), want_channels);
  if (!png_image_finish_read(&pi, nullptr, img.data().data(), 0, nullptr))
    throw IoError("read_png: " + path + ": " + pi.message);
  return img;
}

// Linear float image -> 8-bit sRGB PNG (values clamped to [0,1]).
inline void write_png_srgb(const std::string& path, const ImageD& linear) {
  write_png(path, to_srgb8(linear));
}

inline ImageD read_png_srgb(const std::string& path, int want_channels = 3) {
  return from_srgb8(read_png(path, want_channels));
}

// 8-bit gray mask -> {0,1} image using a 0.5 threshold.
inline ImageD read_png_mask(const std::string& path) {
  ImageU8 u = read_png(path, 1);
  ImageD m(u.width(), u.height(), 1);
  for (std::size_t i = 0; i < u.size(); ++i) m.data()[i] = u.data()[i] >= 128 ? 1.0 : 0.0;
  return m;
}

}  // namespace gsm
