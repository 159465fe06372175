#include "sima/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <numbers>
#include <random>
#include <set>

#include "sima/io.hpp"
#include "sima/labels.hpp"
#include "sima/metrics.hpp"

namespace sima {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_string(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

void rotate_flow(FlowField& flow, double sigma_deg, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> angle(0.0, sigma_deg * std::numbers::pi / 180.0);
    for (std::size_t i = 0; i < flow.dy.size(); ++i) {
        const double a = angle(rng);
        if (flow.dy[i] == 0.0 && flow.dx[i] == 0.0) continue;
        const double c = std::cos(a);
        const double s = std::sin(a);
        const double dy = flow.dy[i];
        const double dx = flow.dx[i];
        flow.dy[i] = c * dy + s * dx;
        flow.dx[i] = -s * dy + c * dx;
    }
}

}  // namespace

void PredictorSpec::validate() const {
    if (min_detectable_px < 1) throw Error(ErrorCode::BadConfig, "min_detectable_px must be >= 1");
    if (!(large_break_factor > 0.0)) throw Error(ErrorCode::BadConfig, "large_break_factor must be > 0");
    if (!(noise_deg >= 0.0)) throw Error(ErrorCode::BadConfig, "noise_deg must be >= 0");
}

Fusion parse_fusion(const std::string& name) {
    if (name == "attention") return Fusion::Attention;
    if (name == "average") return Fusion::Average;
    if (name == "max") return Fusion::Max;
    if (name == "single") return Fusion::Single;
    throw Error(ErrorCode::BadConfig, "unknown fusion strategy '" + name + "'");
}

const char* to_string(Fusion fusion) {
    switch (fusion) {
        case Fusion::Attention: return "attention";
        case Fusion::Average: return "average";
        case Fusion::Max: return "max";
        case Fusion::Single: return "single";
    }
    return "unknown";
}

PredictorKind parse_predictor(const std::string& name) {
    if (name == "oracle") return PredictorKind::Oracle;
    if (name == "noisy-oracle") return PredictorKind::NoisyOracle;
    if (name == "external") return PredictorKind::External;
    throw Error(ErrorCode::BadConfig, "unknown predictor kind '" + name + "'");
}

const char* to_string(PredictorKind kind) {
    switch (kind) {
        case PredictorKind::Oracle: return "oracle";
        case PredictorKind::NoisyOracle: return "noisy-oracle";
        case PredictorKind::External: return "external";
    }
    return "unknown";
}

void PipelineConfig::validate() const {
    tracker.validate();
    predictor.validate();
    if (!(h >= 0.0 && h < 1.0)) throw Error(ErrorCode::BadConfig, "h must be in [0,1)");
    if (patch_size < 32) throw Error(ErrorCode::BadConfig, "patch_size must be >= 32");
    if (levels < 1 || levels > 4) throw Error(ErrorCode::BadConfig, "levels must be in 1..4");
    if (!(single_factor > 0.0 && single_factor <= 1.0)) throw Error(ErrorCode::BadConfig, "single_factor must be in (0,1]");
    if (!(attention_blur_sigma >= 0.0)) throw Error(ErrorCode::BadConfig, "attention_blur_sigma must be >= 0");
    if (!(d > 0.0)) throw Error(ErrorCode::BadConfig, "d must be > 0");
    if (thresholds) validate_thresholds(*thresholds);
}

std::string prediction_file_name(const std::string& prefix, const std::string& image_id, double factor) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", factor);
    return prefix + "_" + image_id + "_" + buf + ".f32";
}

FlowPrediction oracle_prediction_scaled(const LabelMap& gt, double r, const PredictorSpec& spec, int s,
                                        const std::string& image_id) {
    const int w = scaled_size(gt.width(), r);
    const int h = scaled_size(gt.height(), r);
    LabelMap scaled = r == 1.0 ? gt : resize_nearest(gt, w, h);
    const int patch = spec.tiled ? s : std::max(w, h);

    // Vanishing small crystals; over-large ones are handled patch by patch.
    std::set<InstanceId> large;
    std::set<InstanceId> gone;
    for (const InstanceInfo& info : instance_table(scaled)) {
        const int len = std::max(info.box_height(), info.box_width());
        if (len < spec.min_detectable_px) {
            gone.insert(info.id);
        } else if (len > spec.large_break_factor * patch) {
            large.insert(info.id);
        }
    }
    LabelMap regular = scaled;
    LabelMap broken(w, h, 0);
    for (std::size_t i = 0; i < scaled.size(); ++i) {
        const InstanceId id = scaled[i];
        if (id == 0) continue;
        if (gone.count(id)) {
            regular[i] = 0;
        } else if (large.count(id)) {
            regular[i] = 0;
            broken[i] = id;
        }
    }

    const FlowPrediction whole = compute_flow(regular);
    const std::vector<Rect> rects = tile(w, h, patch);
    std::vector<PatchOutput> patches(rects.size());
    const std::uint64_t base_seed = splitmix(spec.seed ^ splitmix(hash_string(image_id) ^ std::bit_cast<std::uint64_t>(r)));

#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(rects.size()); ++k) {
        const auto idx = static_cast<std::size_t>(k);
        const Rect& rc = rects[idx];
        PatchOutput& out = patches[idx];
        out.rect = rc;
        out.flow.dy = crop(whole.flow.dy, rc.x, rc.y, rc.width, rc.height);
        out.flow.dx = crop(whole.flow.dx, rc.x, rc.y, rc.width, rc.height);
        out.fg = crop(whole.fg, rc.x, rc.y, rc.width, rc.height);
        if (!large.empty()) {
            const LabelMap local = split_components(crop(broken, rc.x, rc.y, rc.width, rc.height));
            const FlowPrediction part = compute_flow(local);
            for (std::size_t i = 0; i < local.size(); ++i) {
                if (local[i] == 0) continue;
                out.flow.dy[i] = part.flow.dy[i];
                out.flow.dx[i] = part.flow.dx[i];
                out.fg[i] = 1.0;
            }
        }
        if (spec.kind == PredictorKind::NoisyOracle && spec.noise_deg > 0.0) {
            rotate_flow(out.flow, spec.noise_deg, splitmix(base_seed + idx));
        }
    }
    return stitch(patches, w, h);
}

ScalePrediction predict_at_scale(const RgbImage& image, const LabelMap& gt, double r, const PredictorSpec& spec,
                                 int s, const std::string& image_id) {
    if (!(r > 0.0 && r <= 1.0)) throw Error(ErrorCode::BadSchedule, "scale factor outside (0,1]");
    spec.validate();
    ScalePrediction out;
    out.factor = r;
    if (spec.kind == PredictorKind::External) {
        const int w = image.empty() ? gt.width() : image.width();
        const int h = image.empty() ? gt.height() : image.height();
        const auto flow_path = spec.path / prediction_file_name("flow", image_id, r);
        const auto fg_path = spec.path / prediction_file_name("fg", image_id, r);
        if (!std::filesystem::exists(flow_path) || !std::filesystem::exists(fg_path)) {
            throw Error(ErrorCode::PredictionUnavailable, "missing " + flow_path.string() + " or " + fg_path.string());
        }
        FlowField flow = io::read_flow(flow_path);
        ForegroundMap fg = io::read_foreground(fg_path);
        out.pred = resize_flow_to(flow, fg, w, h);
        return out;
    }
    if (!image.empty()) require_same_shape(image, gt, "predict_at_scale image/gt");
    const FlowPrediction scaled = oracle_prediction_scaled(gt, r, spec, s, image_id);
    out.pred = resize_flow_to(scaled.flow, scaled.fg, gt.width(), gt.height());
    return out;
}

std::vector<ScalePrediction> predict_scales(const RgbImage& image, const LabelMap& gt,
                                            const std::vector<double>& factors, const PredictorSpec& spec, int s,
                                            const std::string& image_id) {
    std::vector<ScalePrediction> out(factors.size());
    std::vector<std::exception_ptr> failures(factors.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(factors.size()); ++k) {
        const auto i = static_cast<std::size_t>(k);
        try {
            out[i] = predict_at_scale(image, gt, factors[i], spec, s, image_id);
        } catch (...) {
            failures[i] = std::current_exception();
        }
    }
    for (const std::exception_ptr& e : failures) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

FlowPrediction fuse(const std::vector<FlowPrediction>& scales, const AttentionStack& attn, Fusion strategy,
                    std::size_t single_index) {
    if (scales.empty()) throw Error(ErrorCode::ScaleCountMismatch, "no scales to fuse");
    for (const FlowPrediction& p : scales) {
        require_same_shape(scales.front().fg, p.fg, "fuse");
        require_same_shape(p.fg, p.flow.dy, "fuse");
    }
    const std::size_t n = scales.size();
    const int w = scales.front().fg.width();
    const int h = scales.front().fg.height();
    FlowPrediction out{FlowField(w, h), ForegroundMap(w, h, 0.0)};
    const auto pixels = static_cast<std::ptrdiff_t>(out.fg.size());

    switch (strategy) {
        case Fusion::Attention: {
            if (attn.levels() != n || attn.maps.size() < n) {
                throw Error(ErrorCode::ScaleCountMismatch,
                            std::to_string(n) + " scales vs " + std::to_string(attn.levels()) + " attention maps");
            }
            for (std::size_t m = 0; m < n; ++m) require_same_shape(attn.maps[m], out.fg, "fuse attention");
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t k = 0; k < pixels; ++k) {
                const auto i = static_cast<std::size_t>(k);
                double dy = 0.0, dx = 0.0, p = 0.0;
                for (std::size_t m = 0; m < n; ++m) {
                    const double a = attn.maps[m][i];
                    dy += a * scales[m].flow.dy[i];
                    dx += a * scales[m].flow.dx[i];
                    p += a * scales[m].fg[i];
                }
                out.flow.dy[i] = dy;
                out.flow.dx[i] = dx;
                out.fg[i] = p;
            }
            break;
        }
        case Fusion::Average: {
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t k = 0; k < pixels; ++k) {
                const auto i = static_cast<std::size_t>(k);
                double dy = 0.0, dx = 0.0, p = 0.0;
                for (std::size_t m = 0; m < n; ++m) {
                    dy += scales[m].flow.dy[i];
                    dx += scales[m].flow.dx[i];
                    p += scales[m].fg[i];
                }
                out.flow.dy[i] = dy / static_cast<double>(n);
                out.flow.dx[i] = dx / static_cast<double>(n);
                out.fg[i] = p / static_cast<double>(n);
            }
            break;
        }
        case Fusion::Max: {
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t k = 0; k < pixels; ++k) {
                const auto i = static_cast<std::size_t>(k);
                std::size_t best = 0;
                for (std::size_t m = 1; m < n; ++m) {
                    if (scales[m].fg[i] > scales[best].fg[i]) best = m;
                }
                out.flow.dy[i] = scales[best].flow.dy[i];
                out.flow.dx[i] = scales[best].flow.dx[i];
                out.fg[i] = scales[best].fg[i];
            }
            break;
        }
        case Fusion::Single: {
            if (single_index >= n) throw Error(ErrorCode::ScaleCountMismatch, "single scale index out of range");
            out = scales[single_index];
            break;
        }
    }
    renormalize_flow(out.flow);
    return out;
}

ResizeSchedule schedule_for(int width, int height, const PipelineConfig& config) {
    if (config.fusion == Fusion::Single) {
        ResizeSchedule s;
        s.patch_size = config.patch_size;
        s.factors = {config.single_factor};
        return s;
    }
    return build_schedule(width, height, config.patch_size, config.factors, config.levels);
}

AttentionStack fusion_attention(const LabelMap& gt, std::size_t levels, const PipelineConfig& config) {
    std::vector<double> t = config.thresholds ? *config.thresholds : default_thresholds(levels);
    if (t.size() != levels) {
        throw Error(ErrorCode::ScaleCountMismatch,
                    std::to_string(levels) + " scales vs " + std::to_string(t.size()) + " thresholds");
    }
    AttentionStack stack = gt_attention(gt, t);
    if (config.attention_blur_sigma > 0.0) stack = blur_stack(stack, config.attention_blur_sigma);
    stack = normalize_stack(std::move(stack));
    if (config.reverse_pairing) std::reverse(stack.maps.begin(), stack.maps.begin() + static_cast<std::ptrdiff_t>(levels));
    return stack;
}

LabelMap segment_from_predictions(const std::vector<ScalePrediction>& predictions, const LabelMap& gt,
                                  const PipelineConfig& config) {
    config.validate();
    const ResizeSchedule schedule = schedule_for(gt.width(), gt.height(), config);
    std::vector<FlowPrediction> scales;
    for (double f : schedule.factors) {
        auto it = std::find_if(predictions.begin(), predictions.end(),
                               [f](const ScalePrediction& p) { return p.factor == f; });
        if (it == predictions.end()) {
            throw Error(ErrorCode::PredictionUnavailable, "no prediction for factor " + std::to_string(f));
        }
        scales.push_back(it->pred);
    }
    AttentionStack attn;
    if (config.fusion == Fusion::Attention) attn = fusion_attention(gt, scales.size(), config);
    const FlowPrediction fused = fuse(scales, attn, config.fusion, scales.size() - 1);
    TrackerParams tp = config.tracker;
    tp.h = config.h;
    return euler_track(fused.flow, fused.fg, tp);
}

LabelMap segment(const RgbImage& image, const LabelMap& gt, const PipelineConfig& config, const std::string& image_id) {
    config.validate();
    const ResizeSchedule schedule = schedule_for(gt.width(), gt.height(), config);
    const std::vector<ScalePrediction> preds =
        predict_scales(image, gt, schedule.factors, config.predictor, config.patch_size, image_id);
    return segment_from_predictions(preds, gt, config);
}

double baseline_factor(const LabelMap& gt, double d) {
    if (instance_table(gt).empty()) return 1.0;
    return std::min(1.0, d / acs(gt));
}

LabelMap segment_single_scale_baseline(const RgbImage& image, const LabelMap& gt, const PipelineConfig& config,
                                       const std::string& image_id) {
    config.validate();
    const double r = baseline_factor(gt, config.d);
    const ScalePrediction p = predict_at_scale(image, gt, r, config.predictor, config.patch_size, image_id);
    TrackerParams tp = config.tracker;
    tp.h = config.h;
    return euler_track(p.pred.flow, p.pred.fg, tp);
}

}  // namespace sima
