// Serial reference kernels vs their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include "sima/flowfield.hpp"
#include "sima/scalespace.hpp"
#include "sima/synth.hpp"
#include "sima/tracker.hpp"

using namespace sima;

namespace {

const SynthSample& sample() {
    static const SynthSample s = [] {
        SynthParams p;
        p.width = 768;
        p.height = 768;
        p.n_seeds_small = 30;
        p.n_seeds_large = 20;
        p.seed = 1;
        return generate(p);
    }();
    return s;
}

const FlowPrediction& flow() {
    static const FlowPrediction f = compute_flow(sample().labels);
    return f;
}

void BM_compute_flow_serial(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(serial::compute_flow(sample().labels));
}

void BM_compute_flow_parallel(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(compute_flow(sample().labels));
}

void BM_euler_track_serial(benchmark::State& st) {
    TrackerParams tp;
    tp.h = 0.5;
    for (auto _ : st) benchmark::DoNotOptimize(serial::euler_track(flow().flow, flow().fg, tp));
}

void BM_euler_track_parallel(benchmark::State& st) {
    TrackerParams tp;
    tp.h = 0.5;
    for (auto _ : st) benchmark::DoNotOptimize(euler_track(flow().flow, flow().fg, tp));
}

void BM_resample_serial(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(serial::resample(flow().fg, 2048, 2048));
}

void BM_resample_parallel(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(resample(flow().fg, 2048, 2048));
}

}  // namespace

BENCHMARK(BM_compute_flow_serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_compute_flow_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_euler_track_serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_euler_track_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_resample_serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_resample_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
