#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sima/core.hpp"

namespace sima {

struct MatchedPair {
    InstanceId pred = 0;
    InstanceId gt = 0;
    double iou = 0.0;
};

struct MatchResult {
    std::vector<MatchedPair> tp;  // ordered by gt id
    std::vector<InstanceId> fp;   // unmatched predictions, ascending
    std::vector<InstanceId> fn;   // unmatched ground truth, ascending
};

struct PanopticResult {
    double pq = 0.0;
    MatchResult match;
};

struct SizeReport {
    double acs_gt = 0.0;
    double acs_pred = 0.0;
    double mae = 0.0;
    double mre = 0.0;
};

struct Homogeneity {
    double score = 0.0;
    int cls = 0;  // 1, 2 or 3
};

// |a ∩ b| / |a ∪ b| over raster-index pixel sets (any order, no duplicates).
double iou(std::span<const std::size_t> a, std::span<const std::size_t> b);

// Overlap table between two label maps.
struct Contingency {
    std::vector<InstanceId> gt_ids;
    std::vector<InstanceId> pred_ids;
    std::vector<std::size_t> gt_area;
    std::vector<std::size_t> pred_area;
    // (gt index, pred index, intersection) for every overlapping pair
    struct Cell {
        std::size_t g;
        std::size_t p;
        std::size_t inter;
    };
    std::vector<Cell> cells;
};

Contingency contingency(const LabelMap& gt, const LabelMap& pred);

// Matches at IoU > 0.5; a doubly empty image scores 1.
PanopticResult panoptic_quality(const LabelMap& gt, const LabelMap& pred);

double aggregated_jaccard(const LabelMap& gt, const LabelMap& pred);

// Area-equivalent circle diameter 2*sqrt(area/pi).
double crystal_size(double area_px);

double acs(const LabelMap& labels);

SizeReport size_errors(const LabelMap& gt, const LabelMap& pred);

Homogeneity homogeneity_and_class(const LabelMap& labels, int s);

}  // namespace sima
