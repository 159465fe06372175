#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sima/attention.hpp"
#include "sima/core.hpp"
#include "sima/flowfield.hpp"
#include "sima/scalespace.hpp"
#include "sima/tracker.hpp"

namespace sima {

enum class PredictorKind { Oracle, NoisyOracle, External };

// Stand-in for the flow network. Oracle kinds derive predictions from ground truth
// and reproduce two failure modes: crystals that shrink below min_detectable_px
// vanish, and crystals longer than large_break_factor * s get one center per patch.
struct PredictorSpec {
    PredictorKind kind = PredictorKind::Oracle;
    int min_detectable_px = 4;
    double large_break_factor = 1.0;
    double noise_deg = 0.0;
    std::filesystem::path path;  // external predictions
    std::uint64_t seed = 0;
    bool tiled = true;  // false: the whole scaled image is one patch

    void validate() const;
};

enum class Fusion { Attention, Average, Max, Single };

Fusion parse_fusion(const std::string& name);
const char* to_string(Fusion fusion);
PredictorKind parse_predictor(const std::string& name);
const char* to_string(PredictorKind kind);

struct PipelineConfig {
    int patch_size = 224;
    int levels = 4;
    std::optional<std::vector<double>> factors;     // schedule override
    std::optional<std::vector<double>> thresholds;  // default: 100, 50, 25, ...
    double h = 0.5;
    Fusion fusion = Fusion::Attention;
    double single_factor = 1.0;  // scale used by Fusion::Single
    TrackerParams tracker;
    PredictorSpec predictor;
    double attention_blur_sigma = 1.0;  // 0: exact oracle attention with hard instance edges
    double d = 50.0;  // target crystal size of the single-scale baseline
    bool reverse_pairing = false;  // diagnostic: pair map 1 with r_N

    void validate() const;
};

struct ScalePrediction {
    double factor = 1.0;
    FlowPrediction pred;  // at original resolution
};

// File name of an external prediction, e.g. flow_img001_0.25.f32.
std::string prediction_file_name(const std::string& prefix, const std::string& image_id, double factor);

// Prediction at the scaled resolution, before resizing back.
FlowPrediction oracle_prediction_scaled(const LabelMap& gt, double r, const PredictorSpec& spec, int s,
                                        const std::string& image_id);

ScalePrediction predict_at_scale(const RgbImage& image, const LabelMap& gt, double r, const PredictorSpec& spec,
                                 int s, const std::string& image_id = {});

// One prediction per factor, computed in parallel.
std::vector<ScalePrediction> predict_scales(const RgbImage& image, const LabelMap& gt,
                                            const std::vector<double>& factors, const PredictorSpec& spec, int s,
                                            const std::string& image_id = {});

// Combines per-scale predictions. For Fusion::Attention, `attn` must hold a normalised
// stack whose map i pairs with scales[i] (ascending factor). `single_index` selects
// the scale for Fusion::Single.
FlowPrediction fuse(const std::vector<FlowPrediction>& scales, const AttentionStack& attn, Fusion strategy,
                    std::size_t single_index = 0);

// Schedule used by segment() for an image of the given size.
ResizeSchedule schedule_for(int width, int height, const PipelineConfig& config);

// Attention stack fed to fusion: oracle maps, optional blur, normalised, optional reversal.
AttentionStack fusion_attention(const LabelMap& gt, std::size_t levels, const PipelineConfig& config);

// Fuse + track, reusing precomputed predictions (they must cover the schedule).
LabelMap segment_from_predictions(const std::vector<ScalePrediction>& predictions, const LabelMap& gt,
                                  const PipelineConfig& config);

LabelMap segment(const RgbImage& image, const LabelMap& gt, const PipelineConfig& config,
                 const std::string& image_id = {});

// d / ACS(gt), clamped to (0, 1].
double baseline_factor(const LabelMap& gt, double d);

LabelMap segment_single_scale_baseline(const RgbImage& image, const LabelMap& gt, const PipelineConfig& config,
                                       const std::string& image_id = {});

}  // namespace sima
