#pragma once

// Shared fixtures and brute-force reference implementations for tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "sima/core.hpp"

namespace testing {

using sima::Grid;
using sima::InstanceId;
using sima::LabelMap;

inline void paint_disk(LabelMap& m, double cy, double cx, double r, InstanceId id) {
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r) m(y, x) = id;
        }
    }
}

inline void paint_rect(LabelMap& m, int y0, int x0, int h, int w, InstanceId id) {
    for (int y = y0; y < y0 + h; ++y) {
        for (int x = x0; x < x0 + w; ++x) m(y, x) = id;
    }
}

inline LabelMap disk_map(int size, double r) {
    LabelMap m(size, size, 0);
    paint_disk(m, size / 2.0, size / 2.0, r, 1);
    return m;
}

inline std::size_t count_pixels(const LabelMap& m, InstanceId id) {
    return static_cast<std::size_t>(std::count(m.values().begin(), m.values().end(), id));
}

inline std::set<InstanceId> ids_of(const LabelMap& m) {
    std::set<InstanceId> out;
    for (InstanceId v : m.values()) {
        if (v != 0) out.insert(v);
    }
    return out;
}

// Random blobs: up to `max_instances` rectangles/disks with arbitrary ids, overlaps overwrite.
inline LabelMap random_blobs(std::mt19937_64& rng, int w, int h, int max_instances) {
    LabelMap m(w, h, 0);
    std::uniform_int_distribution<int> count(0, max_instances);
    std::uniform_int_distribution<InstanceId> idd(1, 50);
    const int n = count(rng);
    for (int k = 0; k < n; ++k) {
        const InstanceId id = idd(rng);
        const int y0 = std::uniform_int_distribution<int>(0, h - 1)(rng);
        const int x0 = std::uniform_int_distribution<int>(0, w - 1)(rng);
        const int hh = std::uniform_int_distribution<int>(1, std::max(1, h / 2))(rng);
        const int ww = std::uniform_int_distribution<int>(1, std::max(1, w / 2))(rng);
        if (rng() & 1) {
            paint_rect(m, y0, x0, std::min(hh, h - y0), std::min(ww, w - x0), id);
        } else {
            paint_disk(m, y0, x0, std::min(hh, ww) / 1.5 + 0.5, id);
        }
    }
    return m;
}

// Dense IoU table by direct pixel scans.
struct IouTable {
    std::vector<InstanceId> gt, pred;
    std::vector<std::vector<double>> iou;      // [g][p]
    std::vector<std::vector<double>> inter;    // [g][p]
    std::vector<double> gt_area, pred_area;
};

inline IouTable iou_table(const LabelMap& gt, const LabelMap& pred) {
    IouTable t;
    const std::set<InstanceId> g = ids_of(gt);
    const std::set<InstanceId> p = ids_of(pred);
    t.gt.assign(g.begin(), g.end());
    t.pred.assign(p.begin(), p.end());
    t.iou.assign(t.gt.size(), std::vector<double>(t.pred.size(), 0.0));
    t.inter = t.iou;
    for (InstanceId a : t.gt) t.gt_area.push_back(static_cast<double>(count_pixels(gt, a)));
    for (InstanceId b : t.pred) t.pred_area.push_back(static_cast<double>(count_pixels(pred, b)));
    for (std::size_t i = 0; i < t.gt.size(); ++i) {
        for (std::size_t j = 0; j < t.pred.size(); ++j) {
            double in = 0.0;
            for (std::size_t k = 0; k < gt.size(); ++k) {
                if (gt[k] == t.gt[i] && pred[k] == t.pred[j]) in += 1.0;
            }
            t.inter[i][j] = in;
            t.iou[i][j] = in / (t.gt_area[i] + t.pred_area[j] - in);
        }
    }
    return t;
}

// Exhaustive search over every partial one-to-one gt->pred assignment restricted to
// IoU > 0.5 pairs; keeps the assignment with the largest matched IoU sum.
inline double brute_force_pq(const LabelMap& gt, const LabelMap& pred) {
    const IouTable t = iou_table(gt, pred);
    if (t.gt.empty() && t.pred.empty()) return 1.0;
    double best_sum = 0.0;
    std::size_t best_tp = 0;
    std::vector<bool> used(t.pred.size(), false);
    std::function<void(std::size_t, double, std::size_t)> rec = [&](std::size_t g, double sum, std::size_t tp) {
        if (g == t.gt.size()) {
            if (tp > best_tp || (tp == best_tp && sum > best_sum)) {
                best_tp = tp;
                best_sum = sum;
            }
            return;
        }
        rec(g + 1, sum, tp);
        for (std::size_t p = 0; p < t.pred.size(); ++p) {
            if (used[p] || !(t.iou[g][p] > 0.5)) continue;
            used[p] = true;
            rec(g + 1, sum + t.iou[g][p], tp + 1);
            used[p] = false;
        }
    };
    rec(0, 0.0, 0);
    const double fp = static_cast<double>(t.pred.size() - best_tp);
    const double fn = static_cast<double>(t.gt.size() - best_tp);
    return best_sum / (static_cast<double>(best_tp) + 0.5 * fp + 0.5 * fn);
}

// Aggregated Jaccard straight from the definition: gts in id order take their best
// still-unused pred (ties to the lower pred id), leftovers inflate the union.
inline double brute_force_aji(const LabelMap& gt, const LabelMap& pred) {
    const IouTable t = iou_table(gt, pred);
    std::vector<bool> used(t.pred.size(), false);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t g = 0; g < t.gt.size(); ++g) {
        int best = -1;
        for (std::size_t p = 0; p < t.pred.size(); ++p) {
            if (used[p] || t.inter[g][p] == 0.0) continue;
            if (best < 0 || t.iou[g][p] > t.iou[g][static_cast<std::size_t>(best)]) best = static_cast<int>(p);
        }
        if (best < 0) {
            den += t.gt_area[g];
            continue;
        }
        const auto b = static_cast<std::size_t>(best);
        used[b] = true;
        num += t.inter[g][b];
        den += t.gt_area[g] + t.pred_area[b] - t.inter[g][b];
    }
    for (std::size_t p = 0; p < t.pred.size(); ++p) {
        if (!used[p]) den += t.pred_area[p];
    }
    return den == 0.0 ? 1.0 : num / den;
}

// Median of coordinates (even counts averaged), then the nearest instance pixel by a full scan.
inline sima::Pixel brute_force_center(const LabelMap& m, InstanceId id) {
    std::vector<int> ys, xs;
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            if (m(y, x) == id) {
                ys.push_back(y);
                xs.push_back(x);
            }
        }
    }
    auto median = [](std::vector<int> v) {
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return n % 2 ? static_cast<double>(v[n / 2]) : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    const double my = median(ys);
    const double mx = median(xs);
    sima::Pixel best{-1, -1};
    double best_d = 1e300;
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            if (m(y, x) != id) continue;
            const double d = (y - my) * (y - my) + (x - mx) * (x - mx);
            if (d < best_d) {
                best_d = d;
                best = {y, x};
            }
        }
    }
    return best;
}

inline double angle_deg(double ay, double ax, double by, double bx) {
    const double na = std::hypot(ay, ax);
    const double nb = std::hypot(by, bx);
    double c = (ay * by + ax * bx) / (na * nb);
    c = std::clamp(c, -1.0, 1.0);
    return std::acos(c) * 180.0 / 3.14159265358979323846;
}

}  // namespace testing
