#include "sima/flowfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sima {

namespace {

constexpr double kNormEps = 1e-12;

double median_of(std::vector<int>& v) {
    const std::size_t n = v.size();
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n / 2), v.end());
    const double hi = v[n / 2];
    if (n % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n / 2));
    return 0.5 * (lo + hi);
}

void write_unit(FlowField& flow, std::size_t idx, double gy, double gx) {
    const double mag = std::sqrt(gy * gy + gx * gx);
    if (mag > kNormEps) {
        flow.dy[idx] = gy / mag;
        flow.dx[idx] = gx / mag;
    } else {
        flow.dy[idx] = 0.0;
        flow.dx[idx] = 0.0;
    }
}

// Sentinel for pixels the heat never reached (or underflowed).
constexpr double kUnreached = -std::numeric_limits<double>::infinity();

double log_heat(double v) { return v > 0.0 ? std::log(v) : kUnreached; }

// Masked central difference; one-sided where only one neighbour is inside.
double masked_diff(bool has_lo, double lo, double mid, bool has_hi, double hi) {
    if (has_lo && has_hi) return 0.5 * (hi - lo);
    if (has_hi) return hi - mid;
    if (has_lo) return mid - lo;
    return 0.0;
}

void diffuse_instance(const InstanceInfo& info, std::span<const std::size_t> pixels, int width,
                      FlowField& flow, ForegroundMap& fg) {
    const int bw = info.box_width();
    const int bh = info.box_height();
    const std::size_t n = pixels.size();

    std::vector<int> local(static_cast<std::size_t>(bw) * static_cast<std::size_t>(bh), -1);
    auto box_index = [&](std::size_t raster) {
        const int y = static_cast<int>(raster / static_cast<std::size_t>(width)) - info.min_y;
        const int x = static_cast<int>(raster % static_cast<std::size_t>(width)) - info.min_x;
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(bw) + static_cast<std::size_t>(x);
    };
    for (std::size_t i = 0; i < n; ++i) local[box_index(pixels[i])] = static_cast<int>(i);

    // Neighbour table: up, down, left, right (-1 when outside the mask).
    // Outside pixels hold zero heat, so the mask border absorbs.
    std::vector<int> nb(4 * n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t b = box_index(pixels[i]);
        const int by = static_cast<int>(b / static_cast<std::size_t>(bw));
        const int bx = static_cast<int>(b % static_cast<std::size_t>(bw));
        if (by > 0) nb[4 * i + 0] = local[b - static_cast<std::size_t>(bw)];
        if (by + 1 < bh) nb[4 * i + 1] = local[b + static_cast<std::size_t>(bw)];
        if (bx > 0) nb[4 * i + 2] = local[b - 1];
        if (bx + 1 < bw) nb[4 * i + 3] = local[b + 1];
    }

    const Pixel c = median_center_of(pixels, width);
    const int source = local[static_cast<std::size_t>(c.y - info.min_y) * static_cast<std::size_t>(bw) +
                             static_cast<std::size_t>(c.x - info.min_x)];

    std::vector<double> heat(n, 0.0);
    std::vector<double> next(n, 0.0);
    const int iters = diffusion_iterations(info);
    for (int it = 0; it < iters; ++it) {
        heat[static_cast<std::size_t>(source)] += 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            double sum = heat[i];
            for (int k = 0; k < 4; ++k) {
                const int j = nb[4 * i + static_cast<std::size_t>(k)];
                if (j >= 0) sum += heat[static_cast<std::size_t>(j)];
            }
            next[i] = sum / 5.0;
        }
        heat.swap(next);
    }

    // Log heat: same gradient direction, but far-field pixels keep a usable magnitude.
    for (double& v : heat) v = log_heat(v);
    for (std::size_t i = 0; i < n; ++i) {
        auto reached = [&](int k) { return k >= 0 && heat[static_cast<std::size_t>(k)] != kUnreached; };
        auto value = [&](int k) { return reached(k) ? heat[static_cast<std::size_t>(k)] : 0.0; };
        const int up = nb[4 * i + 0];
        const int down = nb[4 * i + 1];
        const int left = nb[4 * i + 2];
        const int right = nb[4 * i + 3];
        double gy = 0.0;
        double gx = 0.0;
        if (heat[i] != kUnreached) {
            gy = masked_diff(reached(up), value(up), heat[i], reached(down), value(down));
            gx = masked_diff(reached(left), value(left), heat[i], reached(right), value(right));
        }
        write_unit(flow, pixels[i], gy, gx);
        fg[pixels[i]] = 1.0;
    }
}

}  // namespace

Pixel median_center_of(std::span<const std::size_t> pixels, int width) {
    if (pixels.empty()) throw Error(ErrorCode::NoSuchInstance, "empty pixel set");
    const auto w = static_cast<std::size_t>(width);
    std::vector<int> ys;
    std::vector<int> xs;
    ys.reserve(pixels.size());
    xs.reserve(pixels.size());
    for (std::size_t p : pixels) {
        ys.push_back(static_cast<int>(p / w));
        xs.push_back(static_cast<int>(p % w));
    }
    const double my = median_of(ys);
    const double mx = median_of(xs);

    Pixel best;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t p : pixels) {  // raster order gives the tie-break
        const int y = static_cast<int>(p / w);
        const int x = static_cast<int>(p % w);
        const double d = (y - my) * (y - my) + (x - mx) * (x - mx);
        if (d < best_d) {
            best_d = d;
            best = {y, x};
        }
    }
    return best;
}

Pixel median_center(const LabelMap& labels, InstanceId id) {
    if (id == 0) throw Error(ErrorCode::NoSuchInstance, "id 0 is background");
    std::vector<std::size_t> pixels;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == id) pixels.push_back(i);
    }
    if (pixels.empty()) throw Error(ErrorCode::NoSuchInstance, "instance " + std::to_string(id));
    return median_center_of(pixels, labels.width());
}

int diffusion_iterations(const InstanceInfo& info) {
    const double diag = std::hypot(static_cast<double>(info.box_height()), static_cast<double>(info.box_width()));
    return std::max(20, static_cast<int>(std::ceil(2.0 * diag)));
}

FlowPrediction compute_flow(const LabelMap& labels) {
    FlowPrediction out{FlowField(labels.width(), labels.height()),
                       ForegroundMap(labels.width(), labels.height(), 0.0)};
    const InstancePixels groups = group_pixels(labels);
    const auto count = static_cast<std::ptrdiff_t>(groups.info.size());

    // Largest instances first so dynamic scheduling balances well.
    std::vector<std::size_t> order(groups.info.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return groups.info[a].area > groups.info[b].area; });

#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t k = 0; k < count; ++k) {
        const std::size_t g = order[static_cast<std::size_t>(k)];
        diffuse_instance(groups.info[g], groups.of(g), labels.width(), out.flow, out.fg);
    }
    return out;
}

namespace serial {

FlowPrediction compute_flow(const LabelMap& labels) {
    FlowPrediction out{FlowField(labels.width(), labels.height()),
                       ForegroundMap(labels.width(), labels.height(), 0.0)};
    for (const InstanceInfo& info : instance_table(labels)) {
        const int bw = info.box_width();
        const int bh = info.box_height();
        auto inside = [&](int y, int x) {
            return y >= info.min_y && y <= info.max_y && x >= info.min_x && x <= info.max_x &&
                   labels(y, x) == info.id;
        };
        Grid<double> heat(bw, bh, 0.0);
        Grid<double> next(bw, bh, 0.0);
        const Pixel c = median_center(labels, info.id);
        const int iters = diffusion_iterations(info);
        for (int it = 0; it < iters; ++it) {
            heat(c.y - info.min_y, c.x - info.min_x) += 1.0;
            for (int y = info.min_y; y <= info.max_y; ++y) {
                for (int x = info.min_x; x <= info.max_x; ++x) {
                    if (!inside(y, x)) continue;
                    const int ly = y - info.min_y;
                    const int lx = x - info.min_x;
                    double sum = heat(ly, lx);
                    if (inside(y - 1, x)) sum += heat(ly - 1, lx);
                    if (inside(y + 1, x)) sum += heat(ly + 1, lx);
                    if (inside(y, x - 1)) sum += heat(ly, lx - 1);
                    if (inside(y, x + 1)) sum += heat(ly, lx + 1);
                    next(ly, lx) = sum / 5.0;
                }
            }
            std::swap(heat, next);
        }
        for (double& v : heat.values()) v = log_heat(v);
        auto reached = [&](int y, int x) {
            return inside(y, x) && heat(y - info.min_y, x - info.min_x) != kUnreached;
        };
        auto at = [&](int y, int x) { return reached(y, x) ? heat(y - info.min_y, x - info.min_x) : 0.0; };
        for (int y = info.min_y; y <= info.max_y; ++y) {
            for (int x = info.min_x; x <= info.max_x; ++x) {
                if (!inside(y, x)) continue;
                double gy = 0.0;
                double gx = 0.0;
                if (reached(y, x)) {
                    gy = masked_diff(reached(y - 1, x), at(y - 1, x), at(y, x), reached(y + 1, x), at(y + 1, x));
                    gx = masked_diff(reached(y, x - 1), at(y, x - 1), at(y, x), reached(y, x + 1), at(y, x + 1));
                }
                write_unit(out.flow, labels.index(y, x), gy, gx);
                out.fg(y, x) = 1.0;
            }
        }
    }
    return out;
}

}  // namespace serial

}  // namespace sima
