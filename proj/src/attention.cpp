#include "sima/attention.hpp"

#include <algorithm>
#include <cmath>

#include "sima/labels.hpp"

namespace sima {

namespace {

CrystalLength length_of(const InstanceInfo& info, const LabelMap& labels) {
    CrystalLength out;
    out.length = std::max(info.box_height(), info.box_width());
    out.relative = 100.0 * out.length / std::max(labels.height(), labels.width());
    return out;
}

Grid<double> blur_plane(const Grid<double>& src, double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * i * i / (sigma * sigma));
        kernel[static_cast<std::size_t>(i + radius)] = v;
        total += v;
    }
    for (double& v : kernel) v /= total;

    const int w = src.width();
    const int h = src.height();
    Grid<double> tmp(w, h, 0.0);
    Grid<double> out(w, h, 0.0);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const int xx = std::clamp(x + k, 0, w - 1);
                acc += kernel[static_cast<std::size_t>(k + radius)] * src(y, xx);
            }
            tmp(y, x) = acc;
        }
    }
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const int yy = std::clamp(y + k, 0, h - 1);
                acc += kernel[static_cast<std::size_t>(k + radius)] * tmp(yy, x);
            }
            out(y, x) = acc;
        }
    }
    return out;
}

}  // namespace

CrystalLength crystal_length(const LabelMap& labels, InstanceId id) {
    const std::vector<InstanceInfo> table = instance_table(labels);
    return length_of(find_instance(table, id), labels);
}

void validate_thresholds(std::span<const double> t) {
    if (t.empty()) throw Error(ErrorCode::BadThresholds, "empty threshold list");
    if (t.front() != 100.0) throw Error(ErrorCode::BadThresholds, "first threshold must be 100");
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (!(t[i] < t[i - 1]) || !(t[i] > 0.0)) {
            throw Error(ErrorCode::BadThresholds, "thresholds must strictly decrease and stay > 0");
        }
    }
}

std::vector<double> default_thresholds(std::size_t levels) {
    std::vector<double> t;
    double v = 100.0;
    for (std::size_t i = 0; i < levels; ++i, v *= 0.5) t.push_back(v);
    return t;
}

std::size_t size_level(double relative, std::span<const double> t) {
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
        if (relative >= t[i + 1]) return i;
    }
    return t.size() - 1;
}

AttentionStack gt_attention(const LabelMap& labels, std::span<const double> t) {
    validate_thresholds(t);
    const std::size_t n = t.size();
    AttentionStack stack;
    stack.thresholds.assign(t.begin(), t.end());
    stack.maps.assign(n + 1, Grid<double>(labels.width(), labels.height(), 0.0));

    const InstancePixels groups = group_pixels(labels);
    for (std::size_t k = 0; k < groups.info.size(); ++k) {
        const std::size_t level = size_level(length_of(groups.info[k], labels).relative, t);
        for (std::size_t p : groups.of(k)) stack.maps[level][p] = 1.0;
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == 0) stack.maps[n][i] = 1.0;
    }
    return stack;
}

AttentionStack normalize_stack(AttentionStack stack) {
    const std::size_t n = stack.levels();
    if (n == 0 || stack.maps.size() < n) return stack;
    const std::size_t pixels = stack.maps[0].size();
    const double uniform = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < pixels; ++i) {
        double sum = 0.0;
        for (std::size_t m = 0; m < n; ++m) sum += stack.maps[m][i];
        if (sum > 1e-6) {
            for (std::size_t m = 0; m < n; ++m) stack.maps[m][i] /= sum;
        } else {
            for (std::size_t m = 0; m < n; ++m) stack.maps[m][i] = uniform;
        }
    }
    return stack;
}

AttentionStack blur_stack(const AttentionStack& stack, double sigma) {
    if (!(sigma > 0.0)) return stack;
    AttentionStack out;
    out.thresholds = stack.thresholds;
    for (const Grid<double>& m : stack.maps) out.maps.push_back(blur_plane(m, sigma));
    return out;
}

}  // namespace sima
