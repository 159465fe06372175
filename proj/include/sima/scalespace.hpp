#pragma once

#include <optional>
#include <vector>

#include "sima/core.hpp"
#include "sima/flowfield.hpp"

namespace sima {

// Ascending resize factors r_1 < ... < r_N = 1 and the network patch size.
struct ResizeSchedule {
    std::vector<double> factors;
    int patch_size = 224;

    std::size_t levels() const noexcept { return factors.size(); }
};

// Default schedule: r_1 = s / max(w, h) (replaced by 0.25 when r_1 >= 0.25),
// then 0.5, 0.75, 1.0. `levels` < 4 keeps r_1 and 1.0 and drops intermediates
// (3 levels keep 0.75). Overrides are validated, sorted and deduplicated.
ResizeSchedule build_schedule(int img_w, int img_h, int s,
                              const std::optional<std::vector<double>>& overrides = std::nullopt,
                              int levels = 4);

// Output size of a resize: round(n * factor), at least 1.
int scaled_size(int n, double factor);

// Half-pixel-centred bilinear resampling of a scalar plane.
Grid<double> resample(const Grid<double>& src, int width, int height);

RgbImage resize_image(const RgbImage& img, double factor);

// Flow/foreground resampling followed by flow renormalisation.
FlowPrediction resize_flow(const FlowField& flow, const ForegroundMap& fg, double factor);
FlowPrediction resize_flow_to(const FlowField& flow, const ForegroundMap& fg, int width, int height);

// Vectors with magnitude > 0.1 become unit length, the rest become zero.
void renormalize_flow(FlowField& flow);

struct Rect {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;
    friend bool operator==(const Rect&, const Rect&) = default;
};

// s x s patches at stride s/2, the last row/column shifted inward.
std::vector<Rect> tile(int img_w, int img_h, int s);

struct PatchOutput {
    Rect rect;
    FlowField flow;
    ForegroundMap fg;
};

// Per-axis sigmoid taper of one patch; image-border edges get weight 1.
std::vector<double> taper_profile(int length, bool lo_on_border, bool hi_on_border);

// Taper-weighted average of overlapping patch predictions.
FlowPrediction stitch(const std::vector<PatchOutput>& patches, int img_w, int img_h);

namespace serial {

Grid<double> resample(const Grid<double>& src, int width, int height);

}  // namespace serial

}  // namespace sima
