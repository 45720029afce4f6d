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

#include "bevprompt/image.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include <jpeglib.h>
#include <png.h>

#include "bevprompt/errors.hpp"

namespace bevprompt {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return f;
}

[[noreturn]] void png_error_fn(png_structp png, png_const_charp message) {
  auto* what = static_cast<std::string*>(png_get_error_ptr(png));
  if (what != nullptr) *what = message;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

void append_bytes(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void flush_noop(png_structp) {}

// Encodes rows of `channels` samples at `bit_depth` into PNG bytes.
std::vector<std::uint8_t> encode_rows(int width, int height, int color_type, int bit_depth,
                                      const std::vector<png_bytep>& rows) {
  std::vector<std::uint8_t> out;
  std::string failure;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &failure, png_error_fn, png_warning_fn);
  if (png == nullptr) throw Error(ErrorKind::kIo, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorKind::kIo, "png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::kIo, "PNG encode failed: " + failure);
  }
  png_set_write_fn(png, &out, append_bytes, flush_noop);
  png_set_compression_level(png, 6);
  png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_SUB);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kIo, "short write to " + path.string());
}

struct DecodedPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint8_t> data;
};

// Reads a PNG, expanding palettes and low bit depths and dropping alpha. When
// `keep16` is false, 16-bit samples are reduced to 8 bits.
DecodedPng decode_png(const std::filesystem::path& path, bool keep16, bool to_rgb) {
  auto file = open_file(path, "rb");
  png_byte signature[8];
  if (std::fread(signature, 1, 8, file.get()) != 8 || png_sig_cmp(signature, 0, 8) != 0) {
    throw Error(ErrorKind::kParse, path.string() + " is not a PNG file");
  }
  std::string failure;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &failure, png_error_fn, png_warning_fn);
  if (png == nullptr) throw Error(ErrorKind::kIo, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(ErrorKind::kIo, "png_create_info_struct failed");
  }
  DecodedPng decoded;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::kParse, "corrupt PNG " + path.string() + ": " + failure);
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (!keep16 && bit_depth == 16) png_set_strip_16(png);
  if (keep16 && bit_depth == 16) png_set_swap(png);
  png_set_strip_alpha(png);
  if (to_rgb && (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)) {
    png_set_gray_to_rgb(png);
  }
  png_read_update_info(png, info);

  decoded.width = static_cast<int>(png_get_image_width(png, info));
  decoded.height = static_cast<int>(png_get_image_height(png, info));
  decoded.channels = png_get_channels(png, info);
  decoded.bit_depth = png_get_bit_depth(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  decoded.data.resize(row_bytes * static_cast<std::size_t>(decoded.height));
  rows.resize(static_cast<std::size_t>(decoded.height));
  for (int y = 0; y < decoded.height; ++y) rows[y] = decoded.data.data() + row_bytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return decoded;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* manager = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, manager->message);
  std::longjmp(manager->jump, 1);
}

// 5x7 bitmap digits, one byte per row, low five bits used (MSB = left column).
constexpr std::array<std::array<std::uint8_t, 7>, 10> kDigitGlyphs = {{
    {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E},
    {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},
    {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F},
    {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},
    {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02},
    {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},
    {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E},
    {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},
    {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E},
    {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},
}};

}  // namespace

RgbImage::RgbImage(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw Error(ErrorKind::kValidation, "image dimensions must be positive");
  pixels_.resize(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < pixels_.size(); i += 3) {
    pixels_[i] = fill[0];
    pixels_[i + 1] = fill[1];
    pixels_[i + 2] = fill[2];
  }
}

Rgb RgbImage::at(int x, int y) const {
  const std::size_t o = (static_cast<std::size_t>(y) * width_ + x) * 3;
  return {pixels_[o], pixels_[o + 1], pixels_[o + 2]};
}

void RgbImage::set(int x, int y, Rgb color) {
  const std::size_t o = (static_cast<std::size_t>(y) * width_ + x) * 3;
  pixels_[o] = color[0];
  pixels_[o + 1] = color[1];
  pixels_[o + 2] = color[2];
}

void RgbImage::set_clipped(int x, int y, Rgb color) {
  if (x >= 0 && y >= 0 && x < width_ && y < height_) set(x, y, color);
}

DepthImage::DepthImage(int width, int height, float fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw Error(ErrorKind::kValidation, "depth dimensions must be positive");
  meters_.assign(static_cast<std::size_t>(width) * height, fill);
}

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
  if (image.empty()) throw Error(ErrorKind::kValidation, "cannot encode an empty image");
  std::vector<png_bytep> rows(static_cast<std::size_t>(image.height()));
  auto* base = const_cast<std::uint8_t*>(image.bytes().data());
  for (int y = 0; y < image.height(); ++y) rows[y] = base + static_cast<std::size_t>(y) * image.width() * 3;
  return encode_rows(image.width(), image.height(), PNG_COLOR_TYPE_RGB, 8, rows);
}

void write_png(const std::filesystem::path& path, const RgbImage& image) { write_bytes(path, encode_png(image)); }

void write_png_gray16(const std::filesystem::path& path, const Gray16Image& image) {
  if (image.width <= 0 || image.height <= 0 ||
      image.values.size() != static_cast<std::size_t>(image.width) * image.height) {
    throw Error(ErrorKind::kValidation, "gray16 image size does not match its dimensions");
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(image.height));
  auto* base = reinterpret_cast<png_bytep>(const_cast<std::uint16_t*>(image.values.data()));
  for (int y = 0; y < image.height; ++y) rows[y] = base + static_cast<std::size_t>(y) * image.width * 2;
  write_bytes(path, encode_rows(image.width, image.height, PNG_COLOR_TYPE_GRAY, 16, rows));
}

RgbImage read_png_rgb(const std::filesystem::path& path) {
  DecodedPng decoded = decode_png(path, false, true);
  if (decoded.channels != 3) throw Error(ErrorKind::kUnsupportedFormat, path.string() + ": expected RGB PNG");
  RgbImage image(decoded.width, decoded.height);
  std::copy(decoded.data.begin(), decoded.data.end(), image.bytes().begin());
  return image;
}

Gray16Image read_png_gray16(const std::filesystem::path& path) {
  DecodedPng decoded = decode_png(path, true, false);
  if (decoded.channels != 1 || decoded.bit_depth != 16) {
    throw Error(ErrorKind::kUnsupportedFormat, path.string() + ": expected 16-bit single-channel PNG");
  }
  Gray16Image image;
  image.width = decoded.width;
  image.height = decoded.height;
  image.values.resize(static_cast<std::size_t>(decoded.width) * decoded.height);
  std::memcpy(image.values.data(), decoded.data.data(), image.values.size() * 2);
  return image;
}

RgbImage read_jpeg_rgb(const std::filesystem::path& path) {
  auto file = open_file(path, "rb");
  jpeg_decompress_struct cinfo{};
  JpegErrorManager error{};
  cinfo.err = jpeg_std_error(&error.base);
  error.base.error_exit = jpeg_error_exit;
  if (setjmp(error.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(ErrorKind::kParse, "corrupt JPEG " + path.string() + ": " + error.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  RgbImage image(static_cast<int>(cinfo.output_width), static_cast<int>(cinfo.output_height));
  const std::size_t stride = static_cast<std::size_t>(cinfo.output_width) * 3;
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = image.bytes().data() + stride * cinfo.output_scanline;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return image;
}

RgbImage read_rgb(const std::filesystem::path& path) {
  std::uint8_t head[4] = {0, 0, 0, 0};
  {
    auto file = open_file(path, "rb");
    if (std::fread(head, 1, 4, file.get()) < 3) throw Error(ErrorKind::kParse, path.string() + " is truncated");
  }
  if (head[0] == 0x89 && head[1] == 'P' && head[2] == 'N' && head[3] == 'G') return read_png_rgb(path);
  if (head[0] == 0xFF && head[1] == 0xD8 && head[2] == 0xFF) return read_jpeg_rgb(path);
  throw Error(ErrorKind::kUnsupportedFormat, path.string() + ": RGB frames must be PNG or JPEG");
}

RgbImage resize_bilinear(const RgbImage& src, int width, int height) {
  if (src.empty()) throw Error(ErrorKind::kValidation, "cannot resize an empty image");
  if (src.width() == width && src.height() == height) return src;
  RgbImage dst(width, height);
  const double sx = static_cast<double>(src.width()) / width;
  const double sy = static_cast<double>(src.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height() - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width() - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const double wx = fx - x0;
      const Rgb a = src.at(x0, y0), b = src.at(x1, y0), c = src.at(x0, y1), d = src.at(x1, y1);
      Rgb out{};
      for (int k = 0; k < 3; ++k) {
        const double top = a[k] + (b[k] - a[k]) * wx;
        const double bottom = c[k] + (d[k] - c[k]) * wx;
        out[k] = static_cast<std::uint8_t>(std::lround(top + (bottom - top) * wy));
      }
      dst.set(x, y, out);
    }
  }
  return dst;
}

void fill_circle(RgbImage& image, double cx, double cy, double radius, Rgb color) {
  const int x0 = static_cast<int>(std::floor(cx - radius));
  const int x1 = static_cast<int>(std::ceil(cx + radius));
  const int y0 = static_cast<int>(std::floor(cy - radius));
  const int y1 = static_cast<int>(std::ceil(cy + radius));
  const double r2 = radius * radius;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x + 0.5 - cx;
      const double dy = y + 0.5 - cy;
      if (dx * dx + dy * dy <= r2) image.set_clipped(x, y, color);
    }
  }
}

void stroke_circle(RgbImage& image, double cx, double cy, double radius, double thickness, Rgb color) {
  const double outer = radius + thickness / 2.0;
  const double inner = std::max(0.0, radius - thickness / 2.0);
  const int x0 = static_cast<int>(std::floor(cx - outer));
  const int x1 = static_cast<int>(std::ceil(cx + outer));
  const int y0 = static_cast<int>(std::floor(cy - outer));
  const int y1 = static_cast<int>(std::ceil(cy + outer));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x + 0.5 - cx;
      const double dy = y + 0.5 - cy;
      const double d2 = dx * dx + dy * dy;
      if (d2 <= outer * outer && d2 >= inner * inner) image.set_clipped(x, y, color);
    }
  }
}

void draw_number(RgbImage& image, unsigned value, double cx, double cy, int max_height, Rgb color) {
  const std::string digits = std::to_string(value);
  const int scale = std::max(1, max_height / 7);
  const int glyph_w = 5 * scale;
  const int gap = scale;
  const int total_w = static_cast<int>(digits.size()) * glyph_w + (static_cast<int>(digits.size()) - 1) * gap;
  const int total_h = 7 * scale;
  const int left = static_cast<int>(std::lround(cx - total_w / 2.0));
  const int top = static_cast<int>(std::lround(cy - total_h / 2.0));
  for (std::size_t i = 0; i < digits.size(); ++i) {
    const auto& glyph = kDigitGlyphs[static_cast<std::size_t>(digits[i] - '0')];
    const int gx = left + static_cast<int>(i) * (glyph_w + gap);
    for (int row = 0; row < 7; ++row) {
      for (int col = 0; col < 5; ++col) {
        if ((glyph[row] >> (4 - col) & 1) == 0) continue;
        for (int dy = 0; dy < scale; ++dy) {
          for (int dx = 0; dx < scale; ++dx) image.set_clipped(gx + col * scale + dx, top + row * scale + dy, color);
        }
      }
    }
  }
}

}  // namespace bevprompt
