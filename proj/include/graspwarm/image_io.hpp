#pragma once

// PNG export/import of heightmaps (8-bit RGB color, 16-bit gray depth).

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "graspwarm/scene.hpp"

namespace graspwarm::io {

/// Stored 16-bit depth value = round(depth * kDepthScale).
inline constexpr double kDepthScale = 1000.0;

struct PngImage {
  int height = 0;
  int width = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint16_t> samples;  // row-major, channel last
};

namespace detail {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw std::runtime_error("cannot open '" + path.string() + "'");
  return f;
}

}  // namespace detail

inline void write_png(const std::filesystem::path& path, const PngImage& img) {
  if (img.bit_depth != 8 && img.bit_depth != 16) throw std::invalid_argument("write_png: bit depth");
  if (img.channels != 1 && img.channels != 3) throw std::invalid_argument("write_png: channels");
  const std::size_t row_samples = static_cast<std::size_t>(img.width) * img.channels;
  if (img.samples.size() != row_samples * img.height) throw std::invalid_argument("write_png: size");

  auto file = detail::open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("write_png: libpng init failed");
  }
  const int bytes = img.bit_depth / 8;
  std::vector<png_byte> row(row_samples * bytes);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("write_png: libpng error writing '" + path.string() + "'");
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, img.width, img.height, img.bit_depth,
               img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < img.height; ++r) {
    for (std::size_t i = 0; i < row_samples; ++i) {
      const std::uint16_t v = img.samples[r * row_samples + i];
      if (bytes == 1) {
        row[i] = static_cast<png_byte>(v);
      } else {  // PNG stores 16-bit samples big-endian
        row[2 * i] = static_cast<png_byte>(v >> 8);
        row[2 * i + 1] = static_cast<png_byte>(v & 0xff);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

inline PngImage read_png(const std::filesystem::path& path) {
  auto file = detail::open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("read_png: libpng init failed");
  }
  PngImage img;
  std::vector<png_byte> row;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("read_png: libpng error reading '" + path.string() + "'");
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  const png_byte color_type = png_get_color_type(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.channels = png_get_channels(png, info);
  img.bit_depth = png_get_bit_depth(png, info);
  row.resize(png_get_rowbytes(png, info));
  const std::size_t row_samples = static_cast<std::size_t>(img.width) * img.channels;
  img.samples.resize(row_samples * img.height);
  for (int r = 0; r < img.height; ++r) {
    png_read_row(png, row.data(), nullptr);
    for (std::size_t i = 0; i < row_samples; ++i) {
      img.samples[r * row_samples + i] =
          img.bit_depth == 16 ? static_cast<std::uint16_t>((row[2 * i] << 8) | row[2 * i + 1])
                              : row[i];
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

inline void write_color_png(const std::filesystem::path& path, const sim::HeightmapPair& hm) {
  PngImage img{hm.height, hm.width, 3, 8, {}};
  img.samples.reserve(hm.color.size());
  for (double v : hm.color)
    img.samples.push_back(static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  write_png(path, img);
}

inline void write_depth_png(const std::filesystem::path& path, const sim::HeightmapPair& hm) {
  PngImage img{hm.height, hm.width, 1, 16, {}};
  img.samples.reserve(hm.depth.size());
  for (double v : hm.depth)
    img.samples.push_back(
        static_cast<std::uint16_t>(std::lround(std::clamp(v * kDepthScale, 0.0, 65535.0))));
  write_png(path, img);
}

/// Writes `<prefix>.color.png`, `<prefix>.depth.png` and the depth sidecar
/// `<prefix>.depth.json` ({"depth_scale", "H", "W"}).
inline void save_heightmaps(const std::filesystem::path& prefix, const sim::HeightmapPair& hm) {
  write_color_png(prefix.string() + ".color.png", hm);
  write_depth_png(prefix.string() + ".depth.png", hm);
  const nlohmann::json sidecar{{"depth_scale", kDepthScale}, {"H", hm.height}, {"W", hm.width}};
  std::ofstream(prefix.string() + ".depth.json") << sidecar.dump(2) << "\n";
}

inline sim::HeightmapPair load_heightmaps(const std::filesystem::path& color_png,
                                          const std::filesystem::path& depth_png,
                                          double depth_scale = kDepthScale) {
  const PngImage color = read_png(color_png);
  const PngImage depth = read_png(depth_png);
  if (color.channels != 3 || depth.channels != 1)
    throw std::runtime_error("load_heightmaps: expected RGB color and gray depth images");
  if (color.height != depth.height || color.width != depth.width)
    throw std::runtime_error("load_heightmaps: color/depth size mismatch");
  sim::HeightmapPair hm{color.height, color.width, {}, {}};
  const double cmax = color.bit_depth == 16 ? 65535.0 : 255.0;
  hm.color.reserve(color.samples.size());
  for (auto v : color.samples) hm.color.push_back(v / cmax);
  hm.depth.reserve(depth.samples.size());
  for (auto v : depth.samples) hm.depth.push_back(v / depth_scale);
  return hm;
}

}  // namespace graspwarm::io
