#include "sima/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sima {

void TrackerParams::validate() const {
    if (n_steps < 1) throw Error(ErrorCode::BadConfig, "n_steps must be >= 1");
    if (!(step_size > 0.0)) throw Error(ErrorCode::BadConfig, "step_size must be > 0");
    if (!(cluster_radius > 0.0)) throw Error(ErrorCode::BadConfig, "cluster_radius must be > 0");
    if (min_instance_px < 1) throw Error(ErrorCode::BadConfig, "min_instance_px must be >= 1");
    if (!(h >= 0.0 && h < 1.0)) throw Error(ErrorCode::BadConfig, "h must be in [0,1)");
}

void sample_flow(const FlowField& flow, double y, double x, double& dy, double& dx) {
    const int h = flow.height();
    const int w = flow.width();
    if (!(y >= 0.0 && x >= 0.0 && y <= h - 1 && x <= w - 1)) {
        dy = 0.0;
        dx = 0.0;
        return;
    }
    const int y0 = static_cast<int>(y);
    const int x0 = static_cast<int>(x);
    const int y1 = std::min(y0 + 1, h - 1);
    const int x1 = std::min(x0 + 1, w - 1);
    const double fy = y - y0;
    const double fx = x - x0;
    const double w00 = (1.0 - fy) * (1.0 - fx);
    const double w01 = (1.0 - fy) * fx;
    const double w10 = fy * (1.0 - fx);
    const double w11 = fy * fx;
    dy = w00 * flow.dy(y0, x0) + w01 * flow.dy(y0, x1) + w10 * flow.dy(y1, x0) + w11 * flow.dy(y1, x1);
    dx = w00 * flow.dx(y0, x0) + w01 * flow.dx(y0, x1) + w10 * flow.dx(y1, x0) + w11 * flow.dx(y1, x1);
}

namespace {

std::vector<std::size_t> seed_pixels(const ForegroundMap& fg, double h) {
    std::vector<std::size_t> seeds;
    for (std::size_t i = 0; i < fg.size(); ++i) {
        if (fg[i] > h) seeds.push_back(i);
    }
    return seeds;
}

void track_one(const FlowField& flow, const TrackerParams& params, std::size_t pixel, double& y, double& x) {
    const int w = flow.width();
    const double ymax = flow.height() - 1;
    const double xmax = w - 1;
    y = static_cast<double>(pixel / static_cast<std::size_t>(w));
    x = static_cast<double>(pixel % static_cast<std::size_t>(w));
    for (int step = 0; step < params.n_steps; ++step) {
        double dy = 0.0;
        double dx = 0.0;
        sample_flow(flow, y, x, dy, dx);
        if (dy == 0.0 && dx == 0.0) break;  // fixed point, further steps are no-ops
        y = std::clamp(y + params.step_size * dy, 0.0, ymax);
        x = std::clamp(x + params.step_size * dx, 0.0, xmax);
    }
}

void check_inputs(const FlowField& flow, const ForegroundMap& fg, const TrackerParams& params) {
    params.validate();
    require_same_shape(flow.dy, fg, "euler_track flow/fg");
    require_same_shape(flow.dy, flow.dx, "euler_track flow planes");
}

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

}  // namespace

ParticleTrace integrate_particles(const FlowField& flow, const ForegroundMap& fg, const TrackerParams& params) {
    check_inputs(flow, fg, params);
    ParticleTrace trace;
    trace.pixels = seed_pixels(fg, params.h);
    trace.y.resize(trace.pixels.size());
    trace.x.resize(trace.pixels.size());
    const auto n = static_cast<std::ptrdiff_t>(trace.pixels.size());
#pragma omp parallel for schedule(dynamic, 1024)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        const auto i = static_cast<std::size_t>(k);
        track_one(flow, params, trace.pixels[i], trace.y[i], trace.x[i]);
    }
    return trace;
}

LabelMap cluster_particles(const ParticleTrace& trace, int width, int height, const TrackerParams& params) {
    LabelMap out(width, height, 0);
    const std::size_t n = trace.pixels.size();
    if (n == 0) return out;

    // Any two particles sharing a cell of side r/sqrt(2) are within r of each other,
    // and any pair within r is at most two cells apart on each axis.
    const double r = params.cluster_radius;
    const double r2 = r * r;
    const double cell = r / std::sqrt(2.0);
    const int gw = static_cast<int>(std::floor((width - 1) / cell)) + 1;
    const int gh = static_cast<int>(std::floor((height - 1) / cell)) + 1;
    auto cell_of = [&](std::size_t k) {
        const int cy = std::min(gh - 1, static_cast<int>(trace.y[k] / cell));
        const int cx = std::min(gw - 1, static_cast<int>(trace.x[k] / cell));
        return static_cast<std::size_t>(cy) * static_cast<std::size_t>(gw) + static_cast<std::size_t>(cx);
    };

    // Bucket particles by cell (counting sort keeps raster order inside a cell).
    const std::size_t ncells = static_cast<std::size_t>(gw) * static_cast<std::size_t>(gh);
    std::vector<std::size_t> start(ncells + 1, 0);
    std::vector<std::size_t> cell_id(n);
    for (std::size_t k = 0; k < n; ++k) {
        cell_id[k] = cell_of(k);
        ++start[cell_id[k] + 1];
    }
    std::partial_sum(start.begin(), start.end(), start.begin());
    std::vector<std::size_t> members(n);
    {
        std::vector<std::size_t> cursor(start.begin(), start.end() - 1);
        for (std::size_t k = 0; k < n; ++k) members[cursor[cell_id[k]]++] = k;
    }

    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    for (std::size_t c = 0; c < ncells; ++c) {
        for (std::size_t m = start[c] + 1; m < start[c + 1]; ++m) unite(parent, members[start[c]], members[m]);
    }

    for (int cy = 0; cy < gh; ++cy) {
        for (int cx = 0; cx < gw; ++cx) {
            const std::size_t c = static_cast<std::size_t>(cy) * static_cast<std::size_t>(gw) + static_cast<std::size_t>(cx);
            if (start[c] == start[c + 1]) continue;
            // Forward half of the 5x5 neighbourhood so each cell pair is visited once.
            for (int oy = 0; oy <= 2; ++oy) {
                for (int ox = -2; ox <= 2; ++ox) {
                    if (oy == 0 && ox <= 0) continue;
                    const int ny = cy + oy;
                    const int nx = cx + ox;
                    if (ny >= gh || nx < 0 || nx >= gw) continue;
                    const std::size_t d = static_cast<std::size_t>(ny) * static_cast<std::size_t>(gw) + static_cast<std::size_t>(nx);
                    if (start[d] == start[d + 1]) continue;
                    if (find_root(parent, members[start[c]]) == find_root(parent, members[start[d]])) continue;
                    bool linked = false;
                    for (std::size_t a = start[c]; a < start[c + 1] && !linked; ++a) {
                        const std::size_t pa = members[a];
                        for (std::size_t b = start[d]; b < start[d + 1]; ++b) {
                            const std::size_t pb = members[b];
                            const double ey = trace.y[pa] - trace.y[pb];
                            const double ex = trace.x[pa] - trace.x[pb];
                            if (ey * ey + ex * ex <= r2) {
                                unite(parent, pa, pb);
                                linked = true;
                                break;
                            }
                        }
                    }
                }
            }
        }
    }

    // Cluster sizes, then ids in raster order of each cluster's first pixel.
    std::vector<std::size_t> size(n, 0);
    for (std::size_t k = 0; k < n; ++k) ++size[find_root(parent, k)];
    std::vector<InstanceId> id_of(n, 0);
    InstanceId next_id = 0;
    for (std::size_t k = 0; k < n; ++k) {  // trace.pixels is in raster order
        const std::size_t root = find_root(parent, k);
        if (size[root] < static_cast<std::size_t>(params.min_instance_px)) continue;
        if (id_of[root] == 0) id_of[root] = ++next_id;
        out[trace.pixels[k]] = id_of[root];
    }
    return out;
}

LabelMap euler_track(const FlowField& flow, const ForegroundMap& fg, const TrackerParams& params) {
    const ParticleTrace trace = integrate_particles(flow, fg, params);
    return cluster_particles(trace, flow.width(), flow.height(), params);
}

namespace serial {

ParticleTrace integrate_particles(const FlowField& flow, const ForegroundMap& fg, const TrackerParams& params) {
    check_inputs(flow, fg, params);
    ParticleTrace trace;
    trace.pixels = seed_pixels(fg, params.h);
    trace.y.resize(trace.pixels.size());
    trace.x.resize(trace.pixels.size());
    for (std::size_t k = 0; k < trace.pixels.size(); ++k) {
        track_one(flow, params, trace.pixels[k], trace.y[k], trace.x[k]);
    }
    return trace;
}

LabelMap euler_track(const FlowField& flow, const ForegroundMap& fg, const TrackerParams& params) {
    const ParticleTrace trace = serial::integrate_particles(flow, fg, params);
    return cluster_particles(trace, flow.width(), flow.height(), params);
}

}  // namespace serial

}  // namespace sima
