#pragma once

#include <cstdint>
#include <vector>

#include "sima/core.hpp"

namespace sima {

struct SynthParams {
    int width = 512;
    int height = 512;
    int n_seeds_small = 0;   // placed in one dense cluster
    int n_seeds_large = 12;  // spread over the rest of the grain
    int boundary_px = 5;
    int scratch_count = 2;
    double noise_sigma = 6.0;
    int grain_margin = 16;
    double cluster_radius_frac = 0.25;  // cluster radius relative to the grain radius
    double elongation = 1.0;            // cell stretch along elongation_angle (anisotropic distance)
    double elongation_angle = 0.0;      // radians
    std::uint64_t seed = 0;

    void validate() const;
};

struct SynthSample {
    RgbImage image;
    LabelMap labels;
    Mask grain_mask;
    int cls = 0;
    double homogeneity = 0.0;
    SynthParams params;  // parameters that produced this sample
};

// Voronoi polycrystal inside a random star-shaped grain. Instances are the
// Voronoi cells shrunk away from every ridge by boundary_px / 2.
SynthSample generate(const SynthParams& params, int patch_size = 224);

// Randomised parameters aimed at one difficulty class (1, 2 or 3).
SynthParams preset_params(int cls, std::uint64_t seed);

// Draws preset samples (derived seeds) until one lands in the requested class.
SynthSample generate_class_sample(int cls, std::uint64_t seed, int patch_size = 224, int max_attempts = 64);

struct SplitResult {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
    bool undersized_class = false;  // some class had fewer members than split parts
};

// Per-class shuffle and largest-remainder split.
SplitResult stratified_split(const std::vector<int>& classes, double train, double val, double test,
                             std::uint64_t seed);

// Per-sample seed derived from a master seed and sample index.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace sima
