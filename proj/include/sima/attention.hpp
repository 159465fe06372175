#pragma once

#include <span>
#include <vector>

#include "sima/core.hpp"

namespace sima {

struct CrystalLength {
    int length = 0;         // max(bbox height, bbox width), pixels
    double relative = 0.0;  // percent of max(image height, image width)
};

CrystalLength crystal_length(const LabelMap& labels, InstanceId id);

// maps[0..N-1] are size levels (largest crystals first), maps[N] is background.
struct AttentionStack {
    std::vector<Grid<double>> maps;
    std::vector<double> thresholds;

    std::size_t levels() const noexcept { return thresholds.size(); }
};

// Throws BadThresholds unless t is non-empty, starts at 100 and strictly decreases to > 0.
void validate_thresholds(std::span<const double> t);

// Default thresholds for N levels: 100, 50, 25, ... (halving).
std::vector<double> default_thresholds(std::size_t levels);

// Level index for a relative crystal length: t[i+1] <= rel <= t[i], t[N] = 0; ties go to the larger level.
std::size_t size_level(double relative, std::span<const double> t);

AttentionStack gt_attention(const LabelMap& labels, std::span<const double> t);

// Divides the N size maps by their per-pixel sum (uniform 1/N where the sum is ~0).
AttentionStack normalize_stack(AttentionStack stack);

// Separable Gaussian blur of every map, used to mimic an imperfect attention model.
AttentionStack blur_stack(const AttentionStack& stack, double sigma);

}  // namespace sima
