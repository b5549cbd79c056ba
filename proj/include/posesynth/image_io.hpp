#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>

#include "posesynth/core.hpp"

namespace posesynth {

/// 8-bit RGB PNG. Output bytes depend only on the pixels.
void write_png(const std::filesystem::path& path, const RgbImage& img);

/// Any PNG libpng understands, converted to 8-bit RGB.
RgbImage read_png(const std::filesystem::path& path);

/// 8-bit grayscale PNG of values in [0, 1] (value * 255, rounded).
void write_gray_png(const std::filesystem::path& path, const Raster<double>& values);

/// Paletted PNG; entry i of the raster uses palette[i].
void write_indexed_png(const std::filesystem::path& path, const Raster<int>& indices,
                       std::span<const std::array<std::uint8_t, 3>> palette);

/// Reads back the palette indices of a paletted PNG along with the palette.
Raster<int> read_indexed_png(const std::filesystem::path& path,
                             std::vector<std::array<std::uint8_t, 3>>* palette = nullptr);

/// Distinct, well separated colors for up to 256 labels.
std::vector<std::array<std::uint8_t, 3>> label_palette(int count);

}  // namespace posesynth
