#include "sima/labels.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

namespace sima {

std::vector<InstanceInfo> instance_table(const LabelMap& labels) {
    std::unordered_map<InstanceId, std::size_t> slot;
    std::vector<InstanceInfo> table;
    for (int y = 0; y < labels.height(); ++y) {
        for (int x = 0; x < labels.width(); ++x) {
            const InstanceId id = labels(y, x);
            if (id == 0) continue;
            auto [it, inserted] = slot.try_emplace(id, table.size());
            if (inserted) table.push_back({id, 0, y, y, x, x});
            InstanceInfo& info = table[it->second];
            ++info.area;
            info.min_y = std::min(info.min_y, y);
            info.max_y = std::max(info.max_y, y);
            info.min_x = std::min(info.min_x, x);
            info.max_x = std::max(info.max_x, x);
        }
    }
    std::sort(table.begin(), table.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return table;
}

InstancePixels group_pixels(const LabelMap& labels) {
    InstancePixels out;
    out.info = instance_table(labels);
    std::unordered_map<InstanceId, std::size_t> slot;
    out.offsets.assign(out.info.size() + 1, 0);
    for (std::size_t k = 0; k < out.info.size(); ++k) {
        slot.emplace(out.info[k].id, k);
        out.offsets[k + 1] = out.offsets[k] + out.info[k].area;
    }
    out.pixels.resize(out.offsets.back());
    std::vector<std::size_t> cursor(out.offsets.begin(), out.offsets.end() - 1);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == 0) continue;
        out.pixels[cursor[slot.at(labels[i])]++] = i;
    }
    return out;
}

const InstanceInfo& find_instance(const std::vector<InstanceInfo>& table, InstanceId id) {
    auto it = std::lower_bound(table.begin(), table.end(), id,
                               [](const InstanceInfo& info, InstanceId v) { return info.id < v; });
    if (id == 0 || it == table.end() || it->id != id) {
        throw Error(ErrorCode::NoSuchInstance, "instance " + std::to_string(id));
    }
    return *it;
}

LabelMap relabel_sequential(const LabelMap& labels) {
    LabelMap out(labels.width(), labels.height(), 0);
    std::unordered_map<InstanceId, InstanceId> remap;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == 0) continue;
        auto [it, inserted] = remap.try_emplace(labels[i], static_cast<InstanceId>(remap.size() + 1));
        out[i] = it->second;
    }
    return out;
}

namespace {

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t i) {
    while (parent[i] != i) {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    return i;
}

void unite(std::vector<std::size_t>& parent, std::size_t a, std::size_t b) {
    a = find_root(parent, a);
    b = find_root(parent, b);
    if (a == b) return;
    if (a < b) std::swap(a, b);
    parent[a] = b;
}

// Components of pixels sharing the same key; key 0 is excluded.
template <typename T>
LabelMap components_by_key(const Grid<T>& keys) {
    const int w = keys.width();
    const int h = keys.height();
    std::vector<std::size_t> parent(keys.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const T k = keys(y, x);
            if (k == 0) continue;
            if (x > 0 && keys(y, x - 1) == k) unite(parent, keys.index(y, x), keys.index(y, x - 1));
            if (y > 0 && keys(y - 1, x) == k) unite(parent, keys.index(y, x), keys.index(y - 1, x));
        }
    }
    LabelMap out(w, h, 0);
    std::unordered_map<std::size_t, InstanceId> ids;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (keys[i] == 0) continue;
        auto [it, inserted] =
            ids.try_emplace(find_root(parent, i), static_cast<InstanceId>(ids.size() + 1));
        out[i] = it->second;
    }
    return out;
}

}  // namespace

LabelMap connected_components(const Mask& mask) {
    Mask binary(mask.width(), mask.height(), 0);
    for (std::size_t i = 0; i < mask.size(); ++i) binary[i] = mask[i] ? 1 : 0;
    return components_by_key(binary);
}

bool all_instances_connected(const LabelMap& labels) {
    const LabelMap comps = components_by_key(labels);
    return instance_table(comps).size() == instance_table(labels).size();
}

LabelMap resize_nearest(const LabelMap& labels, int width, int height) {
    LabelMap out(width, height, 0);
    if (labels.empty() || out.empty()) return out;
    const double sy = static_cast<double>(labels.height()) / height;
    const double sx = static_cast<double>(labels.width()) / width;
    std::vector<int> src_x(static_cast<std::size_t>(width));
    for (int x = 0; x < width; ++x) {
        src_x[static_cast<std::size_t>(x)] = std::min(labels.width() - 1, static_cast<int>((x + 0.5) * sx));
    }
    for (int y = 0; y < height; ++y) {
        const int yy = std::min(labels.height() - 1, static_cast<int>((y + 0.5) * sy));
        for (int x = 0; x < width; ++x) out(y, x) = labels(yy, src_x[static_cast<std::size_t>(x)]);
    }
    return out;
}

LabelMap split_components(const LabelMap& labels) { return components_by_key(labels); }

}  // namespace sima
