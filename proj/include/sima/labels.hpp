#pragma once

#include <cstddef>
#include <vector>

#include "sima/core.hpp"

namespace sima {

// Summary of one instance in a label map.
struct InstanceInfo {
    InstanceId id = 0;
    std::size_t area = 0;
    int min_y = 0;
    int max_y = 0;
    int min_x = 0;
    int max_x = 0;

    int box_height() const noexcept { return max_y - min_y + 1; }
    int box_width() const noexcept { return max_x - min_x + 1; }
};

// One entry per nonzero id, sorted by id.
std::vector<InstanceInfo> instance_table(const LabelMap& labels);

// Raster indices of every instance pixel, grouped per instance in instance_table() order.
struct InstancePixels {
    std::vector<InstanceInfo> info;
    std::vector<std::size_t> offsets;  // info.size() + 1 entries
    std::vector<std::size_t> pixels;

    std::span<const std::size_t> of(std::size_t k) const {
        return {pixels.data() + offsets[k], offsets[k + 1] - offsets[k]};
    }
};

InstancePixels group_pixels(const LabelMap& labels);

const InstanceInfo& find_instance(const std::vector<InstanceInfo>& table, InstanceId id);

// Renumbers instances 1..M in raster order of their first pixel.
LabelMap relabel_sequential(const LabelMap& labels);

// 4-connected components of the nonzero pixels of `mask`, ids in raster order.
LabelMap connected_components(const Mask& mask);

// True when every nonzero id forms a single 4-connected region.
bool all_instances_connected(const LabelMap& labels);

// Nearest-neighbour resample to an explicit size.
LabelMap resize_nearest(const LabelMap& labels, int width, int height);

// Splits every instance into its 4-connected pieces; ids in raster order.
LabelMap split_components(const LabelMap& labels);

// Copies a sub-rectangle.
template <typename T>
Grid<T> crop(const Grid<T>& src, int x0, int y0, int width, int height) {
    Grid<T> out(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) out(y, x) = src(y0 + y, x0 + x);
    }
    return out;
}

}  // namespace sima
