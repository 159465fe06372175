#pragma once

#include <vector>

#include "sima/core.hpp"

namespace sima {

struct TrackerParams {
    int n_steps = 200;
    double step_size = 1.0;
    double cluster_radius = 2.5;
    int min_instance_px = 15;
    double h = 0.0;  // foreground threshold, pixels with fg > h are tracked

    void validate() const;
};

// Final particle positions (row, col) for every tracked pixel, in raster order.
struct ParticleTrace {
    std::vector<std::size_t> pixels;
    std::vector<double> y;
    std::vector<double> x;
};

// Bilinear flow lookup; zero outside the image.
void sample_flow(const FlowField& flow, double y, double x, double& dy, double& dx);

ParticleTrace integrate_particles(const FlowField& flow, const ForegroundMap& fg, const TrackerParams& params);

// Single-linkage clustering of final positions into a canonical label map.
LabelMap cluster_particles(const ParticleTrace& trace, int width, int height, const TrackerParams& params);

// Euler-integration gradient flow tracking.
LabelMap euler_track(const FlowField& flow, const ForegroundMap& fg, const TrackerParams& params);

namespace serial {

ParticleTrace integrate_particles(const FlowField& flow, const ForegroundMap& fg, const TrackerParams& params);
LabelMap euler_track(const FlowField& flow, const ForegroundMap& fg, const TrackerParams& params);

}  // namespace serial

}  // namespace sima
