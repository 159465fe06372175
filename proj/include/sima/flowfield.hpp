#pragma once

#include <span>

#include "sima/core.hpp"
#include "sima/labels.hpp"

namespace sima {

struct FlowPrediction {
    FlowField flow;
    ForegroundMap fg;
};

// Coordinate-wise median of the instance's pixels, snapped to the nearest
// instance pixel (ties: smallest row, then smallest column).
Pixel median_center(const LabelMap& labels, InstanceId id);

// Same, for a raster-ordered pixel list of an image `width` pixels wide.
Pixel median_center_of(std::span<const std::size_t> pixels, int width);

// Number of diffusion iterations used for an instance.
int diffusion_iterations(const InstanceInfo& info);

// Heat-diffusion flow field and binary foreground for every instance.
// Instances are processed in parallel; the result does not depend on the schedule.
FlowPrediction compute_flow(const LabelMap& labels);

namespace serial {

// Reference implementation: one instance at a time over its bounding box.
FlowPrediction compute_flow(const LabelMap& labels);

}  // namespace serial

}  // namespace sima
