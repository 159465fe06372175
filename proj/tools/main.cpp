#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "app.hpp"

namespace {

struct Flags {
    std::string config;
    std::string out;
    std::string dataset;
    std::string predictions;
    std::uint64_t seed = 0;
    int jobs = 1;
    std::string fusion;
    std::string split = "test";
};

sima::app::RunOptions options(const Flags& f, const CLI::App& cmd) {
    sima::app::RunOptions o;
    if (cmd.count("--seed") > 0) o.seed = f.seed;
    if (!f.fusion.empty()) o.fusion = sima::parse_fusion(f.fusion);
    o.split = sima::app::parse_split(f.split);
    o.jobs = f.jobs;
    return o;
}

void common_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "JSON config file");
    cmd->add_option("--out", f.out, "output location")->required();
    cmd->add_option("--seed", f.seed, "master seed (overrides config)");
    cmd->add_option("--jobs", f.jobs, "parallel images")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-scale crystal instance segmentation"};
    app.require_subcommand(1);
    Flags f;

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    common_flags(synth, f);

    CLI::App* segment = app.add_subcommand("segment", "segment a dataset split");
    common_flags(segment, f);
    segment->add_option("dataset", f.dataset, "dataset directory")->required();
    segment->add_option("--fusion", f.fusion, "fusion strategy")
        ->check(CLI::IsMember({"attention", "average", "max", "single"}));
    segment->add_option("--split", f.split, "dataset split")->check(CLI::IsMember({"train", "val", "test", "all"}));

    CLI::App* eval = app.add_subcommand("eval", "score predictions against ground truth");
    common_flags(eval, f);
    eval->add_option("dataset", f.dataset, "dataset directory")->required();
    eval->add_option("predictions", f.predictions, "segment output directory")->required();
    eval->add_option("--split", f.split, "dataset split")->check(CLI::IsMember({"train", "val", "test", "all"}));

    CLI::App* predict = app.add_subcommand("predict", "export oracle flow/foreground files");
    common_flags(predict, f);
    predict->add_option("dataset", f.dataset, "dataset directory")->required();
    predict->add_option("--split", f.split, "dataset split")->check(CLI::IsMember({"train", "val", "test", "all"}));

    CLI11_PARSE(app, argc, argv);

    try {
        const sima::app::AppConfig config = sima::app::load_config(f.config);
        if (synth->parsed()) {
            sima::app::cmd_synth(config, f.out, options(f, *synth));
        } else if (segment->parsed()) {
            const auto outcome = sima::app::cmd_segment(f.dataset, config, f.out, options(f, *segment));
            for (const auto& [id, msg] : outcome.errors) std::fprintf(stderr, "%s: %s\n", id.c_str(), msg.c_str());
            std::printf("segmented %zu images, %zu failed\n", outcome.done.size(), outcome.errors.size());
            if (!outcome.errors.empty()) return 1;
        } else if (eval->parsed()) {
            const auto report = sima::app::cmd_eval(f.dataset, f.predictions, f.out, options(f, *eval));
            std::fputs(sima::app::report_table(report).c_str(), stdout);
        } else if (predict->parsed()) {
            sima::app::cmd_predict(f.dataset, config, f.out, options(f, *predict));
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
