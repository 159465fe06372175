#include "sima/scalespace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sima {

namespace {

constexpr double kMinFlowMagnitude = 0.1;
constexpr double kTaperSoftWidth = 4.0;
constexpr double kTaperSlope = 2.0;
constexpr double kTaperFloor = 0.02;

std::vector<double> strictly_ascending(std::vector<double> factors) {
    std::sort(factors.begin(), factors.end());
    std::vector<double> out;
    for (double f : factors) {
        if (out.empty() || f > out.back()) out.push_back(f);
    }
    return out;
}

// Source coordinate and weights along one axis for half-pixel-centred sampling.
struct Tap {
    int lo;
    int hi;
    double frac;
};

std::vector<Tap> axis_taps(int src_n, int dst_n) {
    std::vector<Tap> taps(static_cast<std::size_t>(dst_n));
    const double scale = static_cast<double>(src_n) / dst_n;
    for (int i = 0; i < dst_n; ++i) {
        const double s = std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(src_n - 1));
        const int lo = static_cast<int>(s);
        taps[static_cast<std::size_t>(i)] = {lo, std::min(lo + 1, src_n - 1), s - lo};
    }
    return taps;
}

void resample_row(const Grid<double>& src, Grid<double>& dst, const Tap& ty, const std::vector<Tap>& tx, int y) {
    for (int x = 0; x < dst.width(); ++x) {
        const Tap& t = tx[static_cast<std::size_t>(x)];
        const double top = (1.0 - t.frac) * src(ty.lo, t.lo) + t.frac * src(ty.lo, t.hi);
        const double bot = (1.0 - t.frac) * src(ty.hi, t.lo) + t.frac * src(ty.hi, t.hi);
        dst(y, x) = (1.0 - ty.frac) * top + ty.frac * bot;
    }
}

}  // namespace

ResizeSchedule build_schedule(int img_w, int img_h, int s, const std::optional<std::vector<double>>& overrides,
                              int levels) {
    if (img_w < 1 || img_h < 1) throw Error(ErrorCode::BadSchedule, "image dimensions must be >= 1");
    if (s < 32) throw Error(ErrorCode::BadSchedule, "patch size must be >= 32");
    ResizeSchedule schedule;
    schedule.patch_size = s;

    if (overrides) {
        if (overrides->empty()) throw Error(ErrorCode::BadSchedule, "empty factor list");
        bool has_one = false;
        for (double f : *overrides) {
            if (!(f > 0.0 && f <= 1.0)) throw Error(ErrorCode::BadSchedule, "factor outside (0,1]: " + std::to_string(f));
            has_one = has_one || f == 1.0;
        }
        if (!has_one) throw Error(ErrorCode::BadSchedule, "factor list must contain 1.0");
        schedule.factors = strictly_ascending(*overrides);
        return schedule;
    }

    if (levels < 1 || levels > 4) throw Error(ErrorCode::BadSchedule, "levels must be in 1..4");
    double r1 = static_cast<double>(s) / std::max(img_w, img_h);
    if (r1 >= 0.5 * 0.5) r1 = 0.25;  // image already near the patch size
    std::vector<double> factors;
    switch (levels) {
        case 1: factors = {1.0}; break;
        case 2: factors = {r1, 1.0}; break;
        case 3: factors = {r1, 0.75, 1.0}; break;
        default: factors = {r1, 0.5, 0.75, 1.0}; break;
    }
    schedule.factors = strictly_ascending(std::move(factors));
    return schedule;
}

int scaled_size(int n, double factor) {
    return std::max(1, static_cast<int>(std::lround(n * factor)));
}

Grid<double> resample(const Grid<double>& src, int width, int height) {
    Grid<double> dst(width, height, 0.0);
    if (src.empty() || dst.empty()) return dst;
    const std::vector<Tap> ty = axis_taps(src.height(), height);
    const std::vector<Tap> tx = axis_taps(src.width(), width);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < height; ++y) resample_row(src, dst, ty[static_cast<std::size_t>(y)], tx, y);
    return dst;
}

namespace serial {

Grid<double> resample(const Grid<double>& src, int width, int height) {
    Grid<double> dst(width, height, 0.0);
    if (src.empty() || dst.empty()) return dst;
    const std::vector<Tap> ty = axis_taps(src.height(), height);
    const std::vector<Tap> tx = axis_taps(src.width(), width);
    for (int y = 0; y < height; ++y) resample_row(src, dst, ty[static_cast<std::size_t>(y)], tx, y);
    return dst;
}

}  // namespace serial

RgbImage resize_image(const RgbImage& img, double factor) {
    if (!(factor > 0.0)) throw Error(ErrorCode::BadSchedule, "resize factor must be > 0");
    if (factor == 1.0) return img;
    const int w = scaled_size(img.width(), factor);
    const int h = scaled_size(img.height(), factor);
    RgbImage out(w, h);
    for (int c = 0; c < 3; ++c) {
        Grid<double> plane(img.width(), img.height(), 0.0);
        for (std::size_t i = 0; i < img.size(); ++i) {
            plane[i] = c == 0 ? img[i].r : c == 1 ? img[i].g : img[i].b;
        }
        const Grid<double> scaled = resample(plane, w, h);
        for (std::size_t i = 0; i < out.size(); ++i) {
            const auto v = static_cast<std::uint8_t>(std::clamp(std::lround(scaled[i]), 0L, 255L));
            (c == 0 ? out[i].r : c == 1 ? out[i].g : out[i].b) = v;
        }
    }
    return out;
}

void renormalize_flow(FlowField& flow) {
    const auto n = static_cast<std::ptrdiff_t>(flow.dy.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        const auto i = static_cast<std::size_t>(k);
        const double mag = std::sqrt(flow.dy[i] * flow.dy[i] + flow.dx[i] * flow.dx[i]);
        if (mag <= kMinFlowMagnitude) {
            flow.dy[i] = 0.0;
            flow.dx[i] = 0.0;
        } else if (std::abs(mag - 1.0) > 1e-12) {
            flow.dy[i] /= mag;
            flow.dx[i] /= mag;
        }
    }
}

FlowPrediction resize_flow_to(const FlowField& flow, const ForegroundMap& fg, int width, int height) {
    require_same_shape(flow.dy, fg, "resize_flow");
    if (width == flow.width() && height == flow.height()) return {flow, fg};
    FlowPrediction out;
    out.flow.dy = resample(flow.dy, width, height);
    out.flow.dx = resample(flow.dx, width, height);
    out.fg = resample(fg, width, height);
    renormalize_flow(out.flow);
    return out;
}

FlowPrediction resize_flow(const FlowField& flow, const ForegroundMap& fg, double factor) {
    if (!(factor > 0.0)) throw Error(ErrorCode::BadSchedule, "resize factor must be > 0");
    return resize_flow_to(flow, fg, scaled_size(flow.width(), factor), scaled_size(flow.height(), factor));
}

std::vector<Rect> tile(int img_w, int img_h, int s) {
    auto starts = [s](int n) {
        std::vector<int> out;
        if (n <= s) return std::vector<int>{0};
        const int stride = std::max(1, s / 2);
        for (int p = 0; p + s < n; p += stride) out.push_back(p);
        if (out.back() != n - s) out.push_back(n - s);
        return out;
    };
    std::vector<Rect> rects;
    if (img_w < 1 || img_h < 1) return rects;
    const std::vector<int> ys = starts(img_h);
    const std::vector<int> xs = starts(img_w);
    for (int y : ys) {
        for (int x : xs) rects.push_back({x, y, std::min(s, img_w), std::min(s, img_h)});
    }
    return rects;
}

std::vector<double> taper_profile(int length, bool lo_on_border, bool hi_on_border) {
    std::vector<double> w(static_cast<std::size_t>(length), 1.0);
    const double inf = std::numeric_limits<double>::infinity();
    for (int i = 0; i < length; ++i) {
        const double d_lo = lo_on_border ? inf : i;
        const double d_hi = hi_on_border ? inf : length - 1 - i;
        const double d = std::min(d_lo, d_hi);
        if (d == inf) continue;
        const double sig = 1.0 / (1.0 + std::exp(-(d - kTaperSoftWidth) / kTaperSlope));
        w[static_cast<std::size_t>(i)] = std::max(kTaperFloor, sig);
    }
    return w;
}

FlowPrediction stitch(const std::vector<PatchOutput>& patches, int img_w, int img_h) {
    Grid<double> wsum(img_w, img_h, 0.0);
    Grid<double> sdy(img_w, img_h, 0.0);
    Grid<double> sdx(img_w, img_h, 0.0);
    Grid<double> sfg(img_w, img_h, 0.0);

    for (const PatchOutput& p : patches) {
        const Rect& r = p.rect;
        if (r.x < 0 || r.y < 0 || r.width < 1 || r.height < 1 || r.x + r.width > img_w || r.y + r.height > img_h) {
            throw Error(ErrorCode::BadRect, "patch rect outside image");
        }
        if (p.flow.width() != r.width || p.flow.height() != r.height || !p.fg.same_shape(p.flow.dy)) {
            throw Error(ErrorCode::BadRect, "patch output does not match its rect");
        }
        const std::vector<double> wy = taper_profile(r.height, r.y == 0, r.y + r.height == img_h);
        const std::vector<double> wx = taper_profile(r.width, r.x == 0, r.x + r.width == img_w);
        // Rows are disjoint, so the fixed rect order keeps every pixel's sum deterministic.
#pragma omp parallel for schedule(static)
        for (int y = 0; y < r.height; ++y) {
            for (int x = 0; x < r.width; ++x) {
                const double w = wy[static_cast<std::size_t>(y)] * wx[static_cast<std::size_t>(x)];
                const std::size_t dst = wsum.index(r.y + y, r.x + x);
                wsum[dst] += w;
                sdy[dst] += w * p.flow.dy(y, x);
                sdx[dst] += w * p.flow.dx(y, x);
                sfg[dst] += w * p.fg(y, x);
            }
        }
    }

    FlowPrediction out{FlowField(img_w, img_h), ForegroundMap(img_w, img_h, 0.0)};
    for (std::size_t i = 0; i < wsum.size(); ++i) {
        if (wsum[i] <= 0.0) continue;
        out.flow.dy[i] = sdy[i] / wsum[i];
        out.flow.dx[i] = sdx[i] / wsum[i];
        out.fg[i] = sfg[i] / wsum[i];
    }
    renormalize_flow(out.flow);
    return out;
}

}  // namespace sima
