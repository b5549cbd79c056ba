#include "posesynth/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

namespace posesynth {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return f;
}

[[noreturn]] void png_fail(png_structp, png_const_charp msg) { throw Error(ErrorKind::Io, std::string("libpng: ") + msg); }
void png_warn(png_structp, png_const_charp) {}

void write_rows(const std::filesystem::path& path, int width, int height, int color_type,
                std::span<const std::array<std::uint8_t, 3>> palette,
                const std::vector<std::uint8_t>& bytes, int row_bytes) {
  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  if (!png) throw Error(ErrorKind::Io, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};
  if (!info) throw Error(ErrorKind::Io, "png_create_info_struct failed");

  png_init_io(png, f.get());
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  std::vector<png_color> plte;
  if (color_type == PNG_COLOR_TYPE_PALETTE) {
    for (const auto& c : palette) plte.push_back({c[0], c[1], c[2]});
    png_set_PLTE(png, info, plte.data(), static_cast<int>(plte.size()));
  }
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y)
    rows[y] = const_cast<png_bytep>(bytes.data() + static_cast<std::size_t>(y) * row_bytes);
  png_set_rows(png, info, rows.data());
  png_write_png(png, info, PNG_TRANSFORM_IDENTITY, nullptr);
}

}  // namespace

void write_png(const std::filesystem::path& path, const RgbImage& img) {
  write_rows(path, img.width, img.height, PNG_COLOR_TYPE_RGB, {}, img.data, img.width * 3);
}

RgbImage read_png(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  if (!png) throw Error(ErrorKind::Io, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};
  if (!info) throw Error(ErrorKind::Io, "png_create_info_struct failed");

  png_init_io(png, f.get());
  png_read_png(png, info,
               PNG_TRANSFORM_STRIP_16 | PNG_TRANSFORM_STRIP_ALPHA | PNG_TRANSFORM_PACKING | PNG_TRANSFORM_EXPAND |
                   PNG_TRANSFORM_GRAY_TO_RGB,
               nullptr);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  if (png_get_channels(png, info) != 3) throw Error(ErrorKind::Io, "unexpected channel count in " + path.string());
  png_bytepp rows = png_get_rows(png, info);
  RgbImage img(w, h);
  for (int y = 0; y < h; ++y) std::copy(rows[y], rows[y] + w * 3, img.at(0, y));
  return img;
}

void write_gray_png(const std::filesystem::path& path, const Raster<double>& values) {
  std::vector<std::uint8_t> bytes(values.values.size());
  for (std::size_t i = 0; i < bytes.size(); ++i)
    bytes[i] = static_cast<std::uint8_t>(std::clamp(std::floor(values.values[i] * 255.0 + 0.5), 0.0, 255.0));
  write_rows(path, values.width, values.height, PNG_COLOR_TYPE_GRAY, {}, bytes, values.width);
}

void write_indexed_png(const std::filesystem::path& path, const Raster<int>& indices,
                       std::span<const std::array<std::uint8_t, 3>> palette) {
  if (palette.empty() || palette.size() > 256) throw Error(ErrorKind::InvalidArgument, "palette needs 1..256 colors");
  std::vector<std::uint8_t> bytes(indices.values.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const int v = indices.values[i];
    if (v < 0 || static_cast<std::size_t>(v) >= palette.size())
      throw Error(ErrorKind::InvalidArgument, "index outside palette");
    bytes[i] = static_cast<std::uint8_t>(v);
  }
  write_rows(path, indices.width, indices.height, PNG_COLOR_TYPE_PALETTE, palette, bytes, indices.width);
}

Raster<int> read_indexed_png(const std::filesystem::path& path, std::vector<std::array<std::uint8_t, 3>>* palette) {
  FilePtr f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
  if (!png) throw Error(ErrorKind::Io, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};
  png_init_io(png, f.get());
  png_read_png(png, info, PNG_TRANSFORM_PACKING, nullptr);
  if (png_get_color_type(png, info) != PNG_COLOR_TYPE_PALETTE)
    throw Error(ErrorKind::Io, path.string() + " is not a paletted PNG");
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  png_bytepp rows = png_get_rows(png, info);
  Raster<int> out(w, h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out(x, y) = rows[y][x];
  if (palette) {
    png_colorp plte = nullptr;
    int count = 0;
    png_get_PLTE(png, info, &plte, &count);
    palette->clear();
    for (int i = 0; i < count; ++i) palette->push_back({plte[i].red, plte[i].green, plte[i].blue});
  }
  return out;
}

std::vector<std::array<std::uint8_t, 3>> label_palette(int count) {
  std::vector<std::array<std::uint8_t, 3>> out;
  for (int i = 0; i < count; ++i) {
    // Golden-angle hue walk at full saturation.
    const double h = std::fmod(i * 137.50776405, 360.0) / 60.0;
    const double v = i % 2 == 0 ? 1.0 : 0.75;
    const double x = v * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(h)) {
      case 0: r = v; g = x; break;
      case 1: r = x; g = v; break;
      case 2: g = v; b = x; break;
      case 3: g = x; b = v; break;
      case 4: r = x; b = v; break;
      default: r = v; b = x; break;
    }
    out.push_back({static_cast<std::uint8_t>(std::lround(r * 255)), static_cast<std::uint8_t>(std::lround(g * 255)),
                   static_cast<std::uint8_t>(std::lround(b * 255))});
  }
  return out;
}

}  // namespace posesynth
