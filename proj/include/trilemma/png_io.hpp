// Copyright 2026 The trilemma-eval Authors
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

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "trilemma/error.hpp"
#include "trilemma/image.hpp"

namespace trilemma {

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct DecodedPng {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  int bit_depth = 8;
  std::vector<unsigned char> bytes;
};

// Returns false on any libpng error. No objects with destructors may be
// created between setjmp and the last libpng call.
inline bool decode_png(std::FILE* fp, DecodedPng& out, std::vector<png_bytep>& rows) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, fp);
  png_read_info(png, info);

  const png_byte color_type = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  if (depth == 16) png_set_swap(png);
  png_read_update_info(png, info);

  out.width = png_get_image_width(png, info);
  out.height = png_get_image_height(png, info);
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  out.bytes.resize(row_bytes * out.height);
  rows.resize(out.height);
  for (std::size_t r = 0; r < out.height; ++r) rows[r] = out.bytes.data() + r * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

inline bool encode_png(std::FILE* fp, std::size_t height, std::size_t width, int color_type,
                       std::vector<png_bytep>& rows) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace detail

/// Decodes a PNG into an Image with pixels scaled to [0,1]. Grayscale files
/// give one channel, everything else three; alpha is dropped.
inline Image read_png(const std::filesystem::path& path) {
  detail::FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw Error("cannot open image file " + path.string());
  unsigned char sig[8] = {};
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw Error("not a PNG file: " + path.string());
  }
  std::rewind(fp.get());
  detail::DecodedPng decoded;
  std::vector<png_bytep> rows;
  if (!detail::decode_png(fp.get(), decoded, rows)) {
    throw Error("corrupt PNG file: " + path.string());
  }
  if (decoded.channels != 1 && decoded.channels != 3) {
    throw Error("unsupported channel layout in " + path.string());
  }
  const std::size_t n = decoded.height * decoded.width * decoded.channels;
  std::vector<float> pixels(n);
  if (decoded.bit_depth == 16) {
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned v = decoded.bytes[2 * i] | (decoded.bytes[2 * i + 1] << 8U);
      pixels[i] = static_cast<float>(v / 65535.0);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) pixels[i] = static_cast<float>(decoded.bytes[i] / 255.0);
  }
  return Image(decoded.height, decoded.width, decoded.channels, std::move(pixels));
}

/// Quantizes to 8 bits per channel (round to nearest) and writes a PNG.
inline void write_png(const std::filesystem::path& path, const Image& img) {
  std::vector<unsigned char> bytes(img.size());
  const auto px = img.pixels();
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = static_cast<unsigned char>(std::lround(std::clamp(px[i], 0.0F, 1.0F) * 255.0F));
  }
  const std::size_t row_bytes = img.width() * img.channels();
  std::vector<png_bytep> rows(img.height());
  for (std::size_t r = 0; r < img.height(); ++r) rows[r] = bytes.data() + r * row_bytes;

  detail::FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw Error("cannot write image file " + path.string());
  const int color = img.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  if (!detail::encode_png(fp.get(), img.height(), img.width(), color, rows)) {
    throw Error("failed to encode PNG " + path.string());
  }
}

}  // namespace trilemma
