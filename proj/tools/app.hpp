#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sima/pipeline.hpp"

namespace sima::app {

enum class Method { Pipeline, Baseline };

// Everything a config file can set. One flat JSON object; every key optional,
// unknown keys rejected. See README for the schema.
struct AppConfig {
    // synth
    int count = 30;
    std::vector<int> classes{1, 2, 3};  // sample i gets classes[i % size]
    double train_frac = 0.6;
    double val_frac = 0.2;
    double test_frac = 0.2;
    std::uint64_t seed = 0;

    // segment
    PipelineConfig pipeline;
    Method method = Method::Pipeline;
    bool overlays = false;
};

AppConfig parse_config(const std::string& json_text);
AppConfig load_config(const std::filesystem::path& path);  // empty path -> defaults

enum class Split { Train, Val, Test, All };
Split parse_split(const std::string& name);
const char* to_string(Split split);

struct ManifestEntry {
    std::string id;
    int cls = 0;
    double homogeneity = 0.0;
    std::string split;
    std::uint64_t seed = 0;
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& dataset);
std::vector<ManifestEntry> select_split(const std::vector<ManifestEntry>& entries, Split split);

struct RunOptions {
    std::optional<std::uint64_t> seed;
    std::optional<Fusion> fusion;
    Split split = Split::Test;
    int jobs = 1;
};

void cmd_synth(const AppConfig& config, const std::filesystem::path& out, const RunOptions& opts);

struct SegmentOutcome {
    std::vector<std::string> done;
    std::vector<std::pair<std::string, std::string>> errors;  // id, message
};

SegmentOutcome cmd_segment(const std::filesystem::path& dataset, const AppConfig& config,
                           const std::filesystem::path& out, const RunOptions& opts);

// Writes flow_<id>_<r>.f32 / fg_<id>_<r>.f32 oracle predictions for an external-predictor run.
void cmd_predict(const std::filesystem::path& dataset, const AppConfig& config, const std::filesystem::path& out,
                 const RunOptions& opts);

struct ReportRow {
    std::string id;
    int cls = 0;
    double homogeneity = 0.0;
    double pq = 0.0;
    double aji = 0.0;
    double acs_gt = 0.0;
    double acs_pred = 0.0;
    double mae = 0.0;
    double mre = 0.0;
};

struct Stat {
    double mean = 0.0;
    double std = 0.0;  // population
};

struct Aggregate {
    std::string group;  // "all" or "class N"
    std::size_t count = 0;
    Stat pq, aji, acs_gt, acs_pred, mae, mre;
};

struct ExperimentReport {
    std::string strategy;
    std::vector<ReportRow> rows;  // sorted by id
    std::vector<Aggregate> aggregates;
};

Stat mean_std(const std::vector<double>& values);
std::vector<Aggregate> aggregate_rows(const std::vector<ReportRow>& rows);
std::string report_json(const ExperimentReport& report);
std::string report_table(const ExperimentReport& report);

// Writes <out> (JSON) and <out>.txt (table).
ExperimentReport cmd_eval(const std::filesystem::path& dataset, const std::filesystem::path& predictions,
                          const std::filesystem::path& out, const RunOptions& opts);

// Boundary pixels of the labels drawn over the image.
RgbImage render_overlay(const RgbImage& image, const LabelMap& labels);

}  // namespace sima::app
