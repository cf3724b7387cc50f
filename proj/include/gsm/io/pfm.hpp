// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "gsm/core/error.hpp"
#include "gsm/core/image.hpp"

namespace gsm {

// Portable Float Map, little endian (negative scale), rows bottom-to-top.
// 1-channel images use "Pf", 3-channel "PF".
inline void write_pfm(const std::string& path, const ImageD& img) {
  if (img.channels() != 1 && img.channels() != 3)
    throw ShapeMismatch("write_pfm: image must have 1 or 3 channels");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("write_pfm: cannot open " + path);
  f << (img.channels() == 3 ? "PF" : "Pf") << "\n"
    << img.width() << " " << img.height() << "\n"
    << "-1.0\n";
  std::vector<float> row(static_cast<std::size_t>(img.width()) * img.channels());
  for (int y = img.height() - 1; y >= 0; --y) {
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c)
        row[static_cast<std::size_t>(x) * img.channels() + c] =
            static_cast<float>(img.at(x, y, c));
    f.write(reinterpret_cast<const char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!f) throw IoError("write_pfm: write failed for " + path);
}

inline ImageD read_pfm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("read_pfm: cannot open " + path);
  std::string magic;
  int w = 0, h = 0;
  double scale = 0;
  f >> magic >> w >> h >> scale;
  if ((magic != "PF" && magic != "Pf") || w <= 0 || h <= 0)
    throw IoError("read_pfm: bad header in " + path);
  f.get();  // the single whitespace after the scale
  int channels = magic == "PF" ? 3 : 1;
  ImageD img(w, h, channels);
  std::vector<float> row(static_cast<std::size_t>(w) * channels);
  bool little_endian = scale < 0;
  if (!little_endian) throw IoError("read_pfm: big-endian PFM unsupported: " + path);
  for (int y = h - 1; y >= 0; --y) {
    f.read(reinterpret_cast<char*>(row.data()),
           static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!f) throw IoError("read_pfm: truncated file " + path);
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        img.at(x, y, c) = row[static_cast<std::size_t>(x) * channels + c];
  }
  return img;
}

}  // namespace gsm
