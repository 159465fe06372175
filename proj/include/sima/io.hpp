#pragma once

#include <filesystem>
#include <vector>

#include "sima/core.hpp"

namespace sima::io {

// Raw float planes: "CFLW", u32 width, u32 height, u32 channels, then
// little-endian f32 planes in row-major order.
void write_planes(const std::filesystem::path& path, const std::vector<const Grid<double>*>& planes);
std::vector<Grid<double>> read_planes(const std::filesystem::path& path);

void write_flow(const std::filesystem::path& path, const FlowField& flow);  // dy plane, then dx
FlowField read_flow(const std::filesystem::path& path);
void write_foreground(const std::filesystem::path& path, const ForegroundMap& fg);
ForegroundMap read_foreground(const std::filesystem::path& path);

// 8-bit RGB PNG.
void write_rgb_png(const std::filesystem::path& path, const RgbImage& image);
RgbImage read_rgb_png(const std::filesystem::path& path);

// 16-bit grayscale PNG; ids above 65535 are rejected.
void write_label_png(const std::filesystem::path& path, const LabelMap& labels);
LabelMap read_label_png(const std::filesystem::path& path);

// 8-bit grayscale PNG (nonzero = 255).
void write_mask_png(const std::filesystem::path& path, const Mask& mask);
Mask read_mask_png(const std::filesystem::path& path);

}  // namespace sima::io
