// Copyright 2026 The bevprompt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace bevprompt {

using Rgb = std::array<std::uint8_t, 3>;

/// Interleaved 8-bit RGB raster, row-major.
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(int width, int height, Rgb fill = {255, 255, 255});

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return pixels_.empty(); }

  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb color);
  /// Writes only when (x, y) lies inside the raster.
  void set_clipped(int x, int y, Rgb color);

  std::span<const std::uint8_t> bytes() const { return pixels_; }
  std::span<std::uint8_t> bytes() { return pixels_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Per-pixel metric depth. Values <= 0 mark invalid pixels.
class DepthImage {
 public:
  DepthImage() = default;
  DepthImage(int width, int height, float fill = 0.0f);

  int width() const { return width_; }
  int height() const { return height_; }
  float at(int x, int y) const { return meters_[static_cast<std::size_t>(y) * width_ + x]; }
  void set(int x, int y, float meters) { meters_[static_cast<std::size_t>(y) * width_ + x] = meters; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> meters_;
};

/// Raw 16-bit single-channel image as stored in depth PNGs.
struct Gray16Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> values;
};

// PNG output is byte-stable: fixed compression settings and no time chunks.
void write_png(const std::filesystem::path& path, const RgbImage& image);
void write_png_gray16(const std::filesystem::path& path, const Gray16Image& image);
std::vector<std::uint8_t> encode_png(const RgbImage& image);

RgbImage read_png_rgb(const std::filesystem::path& path);
Gray16Image read_png_gray16(const std::filesystem::path& path);
RgbImage read_jpeg_rgb(const std::filesystem::path& path);
/// Dispatches on the file signature (PNG or JPEG).
RgbImage read_rgb(const std::filesystem::path& path);

/// Bilinear resample with pixel-center alignment.
RgbImage resize_bilinear(const RgbImage& src, int width, int height);

void fill_circle(RgbImage& image, double cx, double cy, double radius, Rgb color);
void stroke_circle(RgbImage& image, double cx, double cy, double radius, double thickness, Rgb color);
/// Draws decimal digits with a built-in 5x7 bitmap font, centered on (cx, cy).
/// `max_height` bounds the glyph height in pixels; the scale is an integer >= 1.
void draw_number(RgbImage& image, unsigned value, double cx, double cy, int max_height, Rgb color);

}  // namespace bevprompt
