// Copyright (c) 2026 The umod Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace umod {

/// Interleaved RGB image, row-major, values in [0, 1].
struct Image {
  int height = 0;
  int width = 0;
  std::vector<double> data;  // height * width * 3

  Image() = default;
  Image(int h, int w, double fill = 0.0)
      : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3, fill) {}

  double& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  double at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }

  bool operator==(const Image&) const = default;
};

/// Rounds every channel to the nearest 8-bit level, so that an 8-bit PNG
/// round trip reproduces the image exactly.
void quantize_8bit(Image& image);

void write_png(const std::filesystem::path& path, const Image& image);
Image read_png(const std::filesystem::path& path);

/// Raw 8-bit RGB canvas writer, used by the plotting code.
void write_png_rgb8(const std::filesystem::path& path, int height, int width,
                    const std::vector<std::uint8_t>& rgb);

}  // namespace umod
