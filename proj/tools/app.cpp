#include "app.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sima/io.hpp"
#include "sima/labels.hpp"
#include "sima/metrics.hpp"
#include "sima/synth.hpp"

namespace sima::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
T get_as(const json& v, const std::string& key) {
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::BadConfig, "bad value for '" + key + "': " + v.dump());
    }
}

double get_number(const json& v, const std::string& key) {
    if (!v.is_number()) throw Error(ErrorCode::BadConfig, "'" + key + "' must be a number");
    return v.get<double>();
}

int get_int(const json& v, const std::string& key) {
    if (!v.is_number_integer()) throw Error(ErrorCode::BadConfig, "'" + key + "' must be an integer");
    return v.get<int>();
}

std::vector<double> get_numbers(const json& v, const std::string& key) {
    if (!v.is_array()) throw Error(ErrorCode::BadConfig, "'" + key + "' must be an array");
    std::vector<double> out;
    for (const json& e : v) out.push_back(get_number(e, key));
    return out;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

void make_dirs(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
}

json params_json(const SynthParams& p) {
    return {{"width", p.width},
            {"height", p.height},
            {"n_seeds_small", p.n_seeds_small},
            {"n_seeds_large", p.n_seeds_large},
            {"boundary_px", p.boundary_px},
            {"scratch_count", p.scratch_count},
            {"noise_sigma", p.noise_sigma},
            {"grain_margin", p.grain_margin},
            {"cluster_radius_frac", p.cluster_radius_frac},
            {"elongation", p.elongation},
            {"elongation_angle", p.elongation_angle},
            {"seed", p.seed}};
}

std::string sample_id(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "img%04zu", i);
    return buf;
}

fs::path image_path(const fs::path& dataset, const std::string& id) { return dataset / "images" / (id + ".png"); }
fs::path label_path(const fs::path& dataset, const std::string& id) { return dataset / "labels" / (id + ".png"); }

PipelineConfig effective_pipeline(const AppConfig& config, const RunOptions& opts) {
    PipelineConfig pc = config.pipeline;
    pc.predictor.seed = opts.seed.value_or(config.seed);
    if (opts.fusion) pc.fusion = *opts.fusion;
    pc.validate();
    return pc;
}

std::string strategy_name(const AppConfig& config, const PipelineConfig& pc) {
    if (config.method == Method::Baseline) return "baseline";
    return to_string(pc.fusion);
}

}  // namespace

AppConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::BadConfig, std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw Error(ErrorCode::BadConfig, "config must be a JSON object");

    AppConfig c;
    PipelineConfig& p = c.pipeline;
    for (const auto& [key, v] : doc.items()) {
        if (key == "count") {
            c.count = get_int(v, key);
        } else if (key == "classes") {
            if (!v.is_array() || v.empty()) throw Error(ErrorCode::BadConfig, "'classes' must be a non-empty array");
            c.classes.clear();
            for (const json& e : v) c.classes.push_back(get_int(e, key));
        } else if (key == "train_frac") {
            c.train_frac = get_number(v, key);
        } else if (key == "val_frac") {
            c.val_frac = get_number(v, key);
        } else if (key == "test_frac") {
            c.test_frac = get_number(v, key);
        } else if (key == "seed") {
            if (!v.is_number_unsigned()) throw Error(ErrorCode::BadConfig, "'seed' must be a non-negative integer");
            c.seed = v.get<std::uint64_t>();
        } else if (key == "patch_size") {
            p.patch_size = get_int(v, key);
        } else if (key == "levels") {
            p.levels = get_int(v, key);
        } else if (key == "factors") {
            p.factors = get_numbers(v, key);
        } else if (key == "thresholds") {
            p.thresholds = get_numbers(v, key);
        } else if (key == "h") {
            p.h = get_number(v, key);
        } else if (key == "fusion") {
            p.fusion = parse_fusion(get_as<std::string>(v, key));
        } else if (key == "single_factor") {
            p.single_factor = get_number(v, key);
        } else if (key == "n_steps") {
            p.tracker.n_steps = get_int(v, key);
        } else if (key == "step_size") {
            p.tracker.step_size = get_number(v, key);
        } else if (key == "cluster_radius") {
            p.tracker.cluster_radius = get_number(v, key);
        } else if (key == "min_instance_px") {
            p.tracker.min_instance_px = get_int(v, key);
        } else if (key == "predictor") {
            p.predictor.kind = parse_predictor(get_as<std::string>(v, key));
        } else if (key == "min_detectable_px") {
            p.predictor.min_detectable_px = get_int(v, key);
        } else if (key == "large_break_factor") {
            p.predictor.large_break_factor = get_number(v, key);
        } else if (key == "noise_deg") {
            p.predictor.noise_deg = get_number(v, key);
        } else if (key == "prediction_path") {
            p.predictor.path = get_as<std::string>(v, key);
        } else if (key == "tiled") {
            p.predictor.tiled = get_as<bool>(v, key);
        } else if (key == "attention_blur_sigma") {
            p.attention_blur_sigma = get_number(v, key);
        } else if (key == "d") {
            p.d = get_number(v, key);
        } else if (key == "method") {
            const std::string m = get_as<std::string>(v, key);
            if (m == "pipeline") {
                c.method = Method::Pipeline;
            } else if (m == "baseline") {
                c.method = Method::Baseline;
            } else {
                throw Error(ErrorCode::BadConfig, "unknown method '" + m + "'");
            }
        } else if (key == "overlays") {
            c.overlays = get_as<bool>(v, key);
        } else {
            throw Error(ErrorCode::BadConfig, "unknown config key '" + key + "'");
        }
    }
    if (c.count < 0) throw Error(ErrorCode::BadConfig, "'count' must be >= 0");
    for (int cls : c.classes) {
        if (cls < 1 || cls > 3) throw Error(ErrorCode::BadConfig, "classes must be 1, 2 or 3");
    }
    p.validate();
    return c;
}

AppConfig load_config(const fs::path& path) {
    if (path.empty()) return AppConfig{};
    return parse_config(read_text(path));
}

Split parse_split(const std::string& name) {
    if (name == "train") return Split::Train;
    if (name == "val") return Split::Val;
    if (name == "test") return Split::Test;
    if (name == "all") return Split::All;
    throw Error(ErrorCode::BadConfig, "unknown split '" + name + "'");
}

const char* to_string(Split split) {
    switch (split) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
        case Split::All: return "all";
    }
    return "unknown";
}

std::vector<ManifestEntry> read_manifest(const fs::path& dataset) {
    const fs::path path = dataset / "manifest.json";
    json doc;
    try {
        doc = json::parse(read_text(path));
        std::vector<ManifestEntry> out;
        for (const json& s : doc.at("samples")) {
            ManifestEntry e;
            e.id = s.at("id").get<std::string>();
            e.cls = s.at("class").get<int>();
            e.homogeneity = s.at("homogeneity").get<double>();
            e.split = s.at("split").get<std::string>();
            e.seed = s.at("seed").get<std::uint64_t>();
            out.push_back(std::move(e));
        }
        return out;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Io, "malformed manifest " + path.string() + ": " + e.what());
    }
}

std::vector<ManifestEntry> select_split(const std::vector<ManifestEntry>& entries, Split split) {
    std::vector<ManifestEntry> out;
    for (const ManifestEntry& e : entries) {
        if (split == Split::All || e.split == to_string(split)) out.push_back(e);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return out;
}

void cmd_synth(const AppConfig& config, const fs::path& out, const RunOptions& opts) {
    const std::uint64_t master = opts.seed.value_or(config.seed);
    const int s = config.pipeline.patch_size;
    const auto n = static_cast<std::size_t>(config.count);
    make_dirs(out / "images");
    make_dirs(out / "labels");
    make_dirs(out / "masks");

    std::vector<int> wanted(n);
    for (std::size_t i = 0; i < n; ++i) wanted[i] = config.classes[i % config.classes.size()];

    std::vector<SynthSample> samples(n);
    std::vector<std::string> failures(n);
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, opts.jobs))
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(n); ++k) {
        const auto i = static_cast<std::size_t>(k);
        try {
            samples[i] = generate_class_sample(wanted[i], derive_seed(master, i), s);
            const std::string id = sample_id(i);
            io::write_rgb_png(out / "images" / (id + ".png"), samples[i].image);
            io::write_label_png(out / "labels" / (id + ".png"), samples[i].labels);
            io::write_mask_png(out / "masks" / (id + ".png"), samples[i].grain_mask);
        } catch (const std::exception& e) {
            failures[i] = e.what();
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!failures[i].empty()) throw Error(ErrorCode::Io, sample_id(i) + ": " + failures[i]);
    }

    std::vector<int> classes(n);
    for (std::size_t i = 0; i < n; ++i) classes[i] = samples[i].cls;
    const SplitResult split = stratified_split(classes, config.train_frac, config.val_frac, config.test_frac, master);
    std::vector<std::string> part(n);
    for (std::size_t i : split.train) part[i] = "train";
    for (std::size_t i : split.val) part[i] = "val";
    for (std::size_t i : split.test) part[i] = "test";

    json manifest;
    manifest["seed"] = master;
    manifest["patch_size"] = s;
    manifest["fractions"] = {config.train_frac, config.val_frac, config.test_frac};
    manifest["undersized_class"] = split.undersized_class;
    json list = json::array();
    for (std::size_t i = 0; i < n; ++i) {
        const std::string id = sample_id(i);
        list.push_back({{"id", id},
                        {"class", samples[i].cls},
                        {"homogeneity", samples[i].homogeneity},
                        {"split", part[i]},
                        {"seed", derive_seed(master, i)},
                        {"image", "images/" + id + ".png"},
                        {"labels", "labels/" + id + ".png"},
                        {"mask", "masks/" + id + ".png"},
                        {"params", params_json(samples[i].params)}});
    }
    manifest["samples"] = std::move(list);
    write_text(out / "manifest.json", manifest.dump(2) + "\n");
}

SegmentOutcome cmd_segment(const fs::path& dataset, const AppConfig& config, const fs::path& out,
                           const RunOptions& opts) {
    const PipelineConfig pc = effective_pipeline(config, opts);
    const std::vector<ManifestEntry> entries = select_split(read_manifest(dataset), opts.split);
    make_dirs(out / "labels");
    if (config.overlays) make_dirs(out / "overlays");

    std::vector<std::string> errors(entries.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, opts.jobs))
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(entries.size()); ++k) {
        const ManifestEntry& e = entries[static_cast<std::size_t>(k)];
        try {
            const RgbImage image = io::read_rgb_png(image_path(dataset, e.id));
            const LabelMap gt = io::read_label_png(label_path(dataset, e.id));
            const LabelMap pred = config.method == Method::Baseline
                                      ? segment_single_scale_baseline(image, gt, pc, e.id)
                                      : segment(image, gt, pc, e.id);
            io::write_label_png(out / "labels" / (e.id + ".png"), pred);
            if (config.overlays) io::write_rgb_png(out / "overlays" / (e.id + ".png"), render_overlay(image, pred));
        } catch (const std::exception& ex) {
            errors[static_cast<std::size_t>(k)] = ex.what();
        }
    }

    SegmentOutcome outcome;
    json images = json::array();
    json errs = json::array();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (errors[i].empty()) {
            outcome.done.push_back(entries[i].id);
            images.push_back(entries[i].id);
        } else {
            outcome.errors.emplace_back(entries[i].id, errors[i]);
            errs.push_back({{"id", entries[i].id}, {"error", errors[i]}});
        }
    }
    json doc;
    doc["split"] = to_string(opts.split);
    doc["strategy"] = strategy_name(config, pc);
    doc["seed"] = pc.predictor.seed;
    doc["predictor"] = to_string(pc.predictor.kind);
    doc["images"] = std::move(images);
    doc["errors"] = std::move(errs);
    write_text(out / "predictions.json", doc.dump(2) + "\n");
    return outcome;
}

void cmd_predict(const fs::path& dataset, const AppConfig& config, const fs::path& out, const RunOptions& opts) {
    PipelineConfig pc = effective_pipeline(config, opts);
    if (pc.predictor.kind == PredictorKind::External) {
        throw Error(ErrorCode::BadConfig, "predict needs an oracle predictor");
    }
    const std::vector<ManifestEntry> entries = select_split(read_manifest(dataset), opts.split);
    make_dirs(out);
    std::vector<std::string> errors(entries.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, opts.jobs))
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(entries.size()); ++k) {
        const ManifestEntry& e = entries[static_cast<std::size_t>(k)];
        try {
            const LabelMap gt = io::read_label_png(label_path(dataset, e.id));
            std::vector<double> factors = schedule_for(gt.width(), gt.height(), pc).factors;
            factors.push_back(baseline_factor(gt, pc.d));
            std::sort(factors.begin(), factors.end());
            factors.erase(std::unique(factors.begin(), factors.end()), factors.end());
            for (double r : factors) {
                const ScalePrediction sp = predict_at_scale({}, gt, r, pc.predictor, pc.patch_size, e.id);
                io::write_flow(out / prediction_file_name("flow", e.id, r), sp.pred.flow);
                io::write_foreground(out / prediction_file_name("fg", e.id, r), sp.pred.fg);
            }
        } catch (const std::exception& ex) {
            errors[static_cast<std::size_t>(k)] = ex.what();
        }
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!errors[i].empty()) throw Error(ErrorCode::Io, entries[i].id + ": " + errors[i]);
    }
}

Stat mean_std(const std::vector<double>& values) {
    Stat st;
    if (values.empty()) return st;
    double sum = 0.0;
    for (double v : values) sum += v;
    st.mean = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values) sq += (v - st.mean) * (v - st.mean);
    st.std = std::sqrt(sq / static_cast<double>(values.size()));
    return st;
}

std::vector<Aggregate> aggregate_rows(const std::vector<ReportRow>& rows) {
    auto summarize = [](const std::string& group, const std::vector<const ReportRow*>& members) {
        Aggregate a;
        a.group = group;
        a.count = members.size();
        auto column = [&](double ReportRow::*field) {
            std::vector<double> v;
            for (const ReportRow* r : members) v.push_back(r->*field);
            return mean_std(v);
        };
        a.pq = column(&ReportRow::pq);
        a.aji = column(&ReportRow::aji);
        a.acs_gt = column(&ReportRow::acs_gt);
        a.acs_pred = column(&ReportRow::acs_pred);
        a.mae = column(&ReportRow::mae);
        a.mre = column(&ReportRow::mre);
        return a;
    };
    std::vector<Aggregate> out;
    std::vector<const ReportRow*> all;
    std::map<int, std::vector<const ReportRow*>> by_class;
    for (const ReportRow& r : rows) {
        all.push_back(&r);
        by_class[r.cls].push_back(&r);
    }
    out.push_back(summarize("all", all));
    for (const auto& [cls, members] : by_class) out.push_back(summarize("class " + std::to_string(cls), members));
    return out;
}

std::string report_json(const ExperimentReport& report) {
    auto stat = [](const Stat& s) { return json{{"mean", s.mean}, {"std", s.std}}; };
    json doc;
    doc["strategy"] = report.strategy;
    json rows = json::array();
    for (const ReportRow& r : report.rows) {
        rows.push_back({{"id", r.id},
                        {"class", r.cls},
                        {"homogeneity", r.homogeneity},
                        {"pq", r.pq},
                        {"aji", r.aji},
                        {"acs_gt", r.acs_gt},
                        {"acs_pred", r.acs_pred},
                        {"mae", r.mae},
                        {"mre", r.mre}});
    }
    doc["rows"] = std::move(rows);
    json aggs = json::array();
    for (const Aggregate& a : report.aggregates) {
        aggs.push_back({{"group", a.group},
                        {"count", a.count},
                        {"pq", stat(a.pq)},
                        {"aji", stat(a.aji)},
                        {"acs_gt", stat(a.acs_gt)},
                        {"acs_pred", stat(a.acs_pred)},
                        {"mae", stat(a.mae)},
                        {"mre", stat(a.mre)}});
    }
    doc["aggregates"] = std::move(aggs);
    return doc.dump(2) + "\n";
}

std::string report_table(const ExperimentReport& report) {
    std::string out = "strategy: " + report.strategy + "\n\n";
    char line[256];
    std::snprintf(line, sizeof line, "%-10s %5s %6s %7s %7s %8s %8s %7s %7s\n", "id", "class", "hom", "PQ", "AJI",
                  "ACS_gt", "ACS_pred", "MAE", "MRE");
    out += line;
    for (const ReportRow& r : report.rows) {
        std::snprintf(line, sizeof line, "%-10s %5d %6.3f %7.2f %7.2f %8.1f %8.1f %7.2f %7.4f\n", r.id.c_str(), r.cls,
                      r.homogeneity, 100.0 * r.pq, 100.0 * r.aji, r.acs_gt, r.acs_pred, r.mae, r.mre);
        out += line;
    }
    out += "\n";
    std::snprintf(line, sizeof line, "%-8s %4s %15s %15s %15s %17s\n", "group", "n", "PQ", "AJI", "MAE", "MRE");
    out += line;
    for (const Aggregate& a : report.aggregates) {
        std::snprintf(line, sizeof line, "%-8s %4zu %7.2f ± %5.2f %7.2f ± %5.2f %7.2f ± %5.2f %8.4f ± %6.4f\n",
                      a.group.c_str(), a.count, 100.0 * a.pq.mean, 100.0 * a.pq.std, 100.0 * a.aji.mean,
                      100.0 * a.aji.std, a.mae.mean, a.mae.std, a.mre.mean, a.mre.std);
        out += line;
    }
    return out;
}

ExperimentReport cmd_eval(const fs::path& dataset, const fs::path& predictions, const fs::path& out,
                          const RunOptions& opts) {
    const std::vector<ManifestEntry> entries = select_split(read_manifest(dataset), opts.split);
    json doc;
    std::set<std::string> predicted;
    try {
        doc = json::parse(read_text(predictions / "predictions.json"));
        for (const json& id : doc.at("images")) predicted.insert(id.get<std::string>());
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Io, "malformed predictions.json: " + std::string(e.what()));
    }
    std::set<std::string> expected;
    for (const ManifestEntry& e : entries) expected.insert(e.id);
    if (predicted != expected) {
        std::string detail;
        for (const std::string& id : expected) {
            if (!predicted.count(id)) detail += " missing " + id;
        }
        for (const std::string& id : predicted) {
            if (!expected.count(id)) detail += " unexpected " + id;
        }
        throw Error(ErrorCode::ManifestMismatch, "predictions do not match split '" +
                                                     std::string(to_string(opts.split)) + "':" + detail);
    }

    ExperimentReport report;
    report.strategy = doc.value("strategy", "unknown");
    report.rows.resize(entries.size());
    std::vector<std::string> errors(entries.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, opts.jobs))
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(entries.size()); ++k) {
        const auto i = static_cast<std::size_t>(k);
        const ManifestEntry& e = entries[i];
        try {
            const LabelMap gt = io::read_label_png(label_path(dataset, e.id));
            const LabelMap pred = io::read_label_png(predictions / "labels" / (e.id + ".png"));
            require_same_shape(gt, pred, e.id.c_str());
            const SizeReport sz = size_errors(gt, pred);
            ReportRow& r = report.rows[i];
            r.id = e.id;
            r.cls = e.cls;
            r.homogeneity = e.homogeneity;
            r.pq = panoptic_quality(gt, pred).pq;
            r.aji = aggregated_jaccard(gt, pred);
            r.acs_gt = sz.acs_gt;
            r.acs_pred = sz.acs_pred;
            r.mae = sz.mae;
            r.mre = sz.mre;
        } catch (const std::exception& ex) {
            errors[i] = ex.what();
        }
    }
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!errors[i].empty()) throw Error(ErrorCode::Io, entries[i].id + ": " + errors[i]);
    }
    report.aggregates = aggregate_rows(report.rows);

    if (!out.parent_path().empty()) make_dirs(out.parent_path());
    write_text(out, report_json(report));
    fs::path table = out;
    table += ".txt";
    write_text(table, report_table(report));
    return report;
}

RgbImage render_overlay(const RgbImage& image, const LabelMap& labels) {
    require_same_shape(image, labels, "render_overlay");
    RgbImage out = image;
    const int w = labels.width();
    const int h = labels.height();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const InstanceId id = labels(y, x);
            if (id == 0) continue;
            const bool edge = (y == 0 || labels(y - 1, x) != id) || (y == h - 1 || labels(y + 1, x) != id) ||
                              (x == 0 || labels(y, x - 1) != id) || (x == w - 1 || labels(y, x + 1) != id);
            if (edge) out(y, x) = Rgb{255, 220, 0};
        }
    }
    return out;
}

}  // namespace sima::app
