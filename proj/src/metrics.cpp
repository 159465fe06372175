#include "sima/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <unordered_map>

#include "sima/labels.hpp"

namespace sima {

double iou(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    if (a.empty() && b.empty()) throw Error(ErrorCode::EmptyOperands, "iou of two empty sets");
    std::vector<std::size_t> sa(a.begin(), a.end());
    std::vector<std::size_t> sb(b.begin(), b.end());
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    std::size_t inter = 0;
    for (std::size_t i = 0, j = 0; i < sa.size() && j < sb.size();) {
        if (sa[i] < sb[j]) {
            ++i;
        } else if (sb[j] < sa[i]) {
            ++j;
        } else {
            ++inter;
            ++i;
            ++j;
        }
    }
    return static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
}

Contingency contingency(const LabelMap& gt, const LabelMap& pred) {
    require_same_shape(gt, pred, "metrics");
    Contingency c;
    std::unordered_map<InstanceId, std::size_t> gslot;
    std::unordered_map<InstanceId, std::size_t> pslot;
    for (const InstanceInfo& info : instance_table(gt)) {
        gslot.emplace(info.id, c.gt_ids.size());
        c.gt_ids.push_back(info.id);
        c.gt_area.push_back(info.area);
    }
    for (const InstanceInfo& info : instance_table(pred)) {
        pslot.emplace(info.id, c.pred_ids.size());
        c.pred_ids.push_back(info.id);
        c.pred_area.push_back(info.area);
    }
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> overlap;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (gt[i] == 0 || pred[i] == 0) continue;
        ++overlap[{gslot.at(gt[i]), pslot.at(pred[i])}];
    }
    for (const auto& [key, inter] : overlap) c.cells.push_back({key.first, key.second, inter});
    return c;
}

PanopticResult panoptic_quality(const LabelMap& gt, const LabelMap& pred) {
    const Contingency c = contingency(gt, pred);
    PanopticResult out;
    std::vector<bool> gt_used(c.gt_ids.size(), false);
    std::vector<bool> pred_used(c.pred_ids.size(), false);
    double iou_sum = 0.0;
    for (const auto& cell : c.cells) {  // ordered by gt index, then pred index
        const double u = static_cast<double>(c.gt_area[cell.g] + c.pred_area[cell.p] - cell.inter);
        const double v = static_cast<double>(cell.inter) / u;
        if (v > 0.5) {
            out.match.tp.push_back({c.pred_ids[cell.p], c.gt_ids[cell.g], v});
            gt_used[cell.g] = true;
            pred_used[cell.p] = true;
            iou_sum += v;
        }
    }
    for (std::size_t g = 0; g < c.gt_ids.size(); ++g) {
        if (!gt_used[g]) out.match.fn.push_back(c.gt_ids[g]);
    }
    for (std::size_t p = 0; p < c.pred_ids.size(); ++p) {
        if (!pred_used[p]) out.match.fp.push_back(c.pred_ids[p]);
    }
    const double denom = static_cast<double>(out.match.tp.size()) + 0.5 * static_cast<double>(out.match.fp.size()) +
                         0.5 * static_cast<double>(out.match.fn.size());
    out.pq = denom == 0.0 ? 1.0 : iou_sum / denom;
    return out;
}

double aggregated_jaccard(const LabelMap& gt, const LabelMap& pred) {
    const Contingency c = contingency(gt, pred);
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> overlaps(c.gt_ids.size());
    for (const auto& cell : c.cells) overlaps[cell.g].push_back({cell.p, cell.inter});

    std::vector<bool> used(c.pred_ids.size(), false);
    double inter_sum = 0.0;
    double union_sum = 0.0;
    for (std::size_t g = 0; g < c.gt_ids.size(); ++g) {
        std::size_t best = c.pred_ids.size();
        double best_iou = 0.0;
        std::size_t best_inter = 0;
        for (const auto& [p, inter] : overlaps[g]) {  // ascending pred index
            if (used[p]) continue;
            const double v = static_cast<double>(inter) / static_cast<double>(c.gt_area[g] + c.pred_area[p] - inter);
            if (v > best_iou) {
                best_iou = v;
                best = p;
                best_inter = inter;
            }
        }
        if (best == c.pred_ids.size()) {
            union_sum += static_cast<double>(c.gt_area[g]);
            continue;
        }
        used[best] = true;
        inter_sum += static_cast<double>(best_inter);
        union_sum += static_cast<double>(c.gt_area[g] + c.pred_area[best] - best_inter);
    }
    for (std::size_t p = 0; p < c.pred_ids.size(); ++p) {
        if (!used[p]) union_sum += static_cast<double>(c.pred_area[p]);
    }
    if (union_sum == 0.0) return 1.0;
    return inter_sum / union_sum;
}

double crystal_size(double area_px) {
    if (!(area_px > 0.0)) throw Error(ErrorCode::EmptyInstance, "crystal area must be positive");
    return 2.0 * std::sqrt(area_px / std::numbers::pi);
}

double acs(const LabelMap& labels) {
    const std::vector<InstanceInfo> table = instance_table(labels);
    if (table.empty()) throw Error(ErrorCode::EmptyLabelMap, "no instances");
    double sum = 0.0;
    for (const InstanceInfo& info : table) sum += crystal_size(static_cast<double>(info.area));
    return sum / static_cast<double>(table.size());
}

SizeReport size_errors(const LabelMap& gt, const LabelMap& pred) {
    require_same_shape(gt, pred, "size_errors");
    SizeReport r;
    r.acs_gt = acs(gt);
    r.acs_pred = instance_table(pred).empty() ? 0.0 : acs(pred);
    r.mae = std::abs(r.acs_gt - r.acs_pred);
    r.mre = r.mae / r.acs_gt;
    return r;
}

Homogeneity homogeneity_and_class(const LabelMap& labels, int s) {
    const std::vector<InstanceInfo> table = instance_table(labels);
    if (table.empty()) throw Error(ErrorCode::EmptyLabelMap, "no instances");
    int lo = 0;
    int hi = 0;
    for (const InstanceInfo& info : table) {
        const int len = std::max(info.box_height(), info.box_width());
        lo = lo == 0 ? len : std::min(lo, len);
        hi = std::max(hi, len);
    }
    Homogeneity out;
    out.score = static_cast<double>(lo) / hi;
    if (hi < s) {
        out.cls = 1;
    } else if (out.score < 0.1) {
        out.cls = 2;
    } else {
        out.cls = 3;
    }
    return out;
}

}  // namespace sima
