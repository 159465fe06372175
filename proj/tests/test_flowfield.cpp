#include <doctest.h>

#include <cmath>
#include <random>

#include "sima/flowfield.hpp"
#include "sima/labels.hpp"
#include "sima/tracker.hpp"
#include "support.hpp"

using namespace sima;

TEST_CASE("median_center basic cases") {
    LabelMap m(10, 10, 0);
    m(3, 7) = 4;
    CHECK(median_center(m, 4) == Pixel{3, 7});

    LabelMap sq(5, 5, 0);
    testing::paint_rect(sq, 0, 0, 3, 3, 1);
    CHECK(median_center(sq, 1) == Pixel{1, 1});
}

TEST_CASE("median_center of a U shape snaps to the nearest instance pixel") {
    LabelMap m(20, 20, 0);
    testing::paint_rect(m, 2, 2, 14, 3, 9);   // left arm
    testing::paint_rect(m, 2, 14, 14, 3, 9);  // right arm
    testing::paint_rect(m, 13, 2, 3, 15, 9);  // bottom bar
    const Pixel c = median_center(m, 9);
    CHECK(m(c.y, c.x) == 9u);
    CHECK(c == testing::brute_force_center(m, 9));
}

TEST_CASE("median_center agrees with a brute-force scan on random shapes") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 60; ++trial) {
        const LabelMap m = testing::random_blobs(rng, 24, 20, 5);
        for (InstanceId id : testing::ids_of(m)) CHECK(median_center(m, id) == testing::brute_force_center(m, id));
    }
}

TEST_CASE("median_center rejects unknown ids") {
    LabelMap m(4, 4, 0);
    m(1, 1) = 2;
    CHECK_THROWS_AS(median_center(m, 3), Error);
    try {
        median_center(m, 3);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NoSuchInstance);
    }
}

TEST_CASE("diffusion iteration count") {
    InstanceInfo small{1, 1, 0, 0, 0, 0};
    CHECK(diffusion_iterations(small) == 20);
    InstanceInfo big{1, 1, 0, 29, 0, 39};  // 30 x 40 box, diagonal 50
    CHECK(diffusion_iterations(big) == 100);
}

TEST_CASE("compute_flow on an empty map") {
    const FlowPrediction p = compute_flow(LabelMap(8, 6, 0));
    for (double v : p.flow.dy.values()) CHECK(v == 0.0);
    for (double v : p.flow.dx.values()) CHECK(v == 0.0);
    for (double v : p.fg.values()) CHECK(v == 0.0);
}

TEST_CASE("disk flows point at the center") {
    const LabelMap m = testing::disk_map(61, 20.0);
    const FlowPrediction p = compute_flow(m);
    const double c = 30.5;
    const Pixel mc = median_center(m, 1);
    int checked = 0;
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            if (m(y, x) == 0) continue;
            const double ry = mc.y - y;
            const double rx = mc.x - x;
            const double dist = std::hypot(ry, rx);
            if (dist <= 2.0) continue;
            const double dot = (p.flow.dy(y, x) * ry + p.flow.dx(y, x) * rx) / dist;
            CHECK(dot > 0.7);
            ++checked;
        }
    }
    CHECK(checked > 1000);
    CHECK(std::abs(mc.y - c) <= 1.0);
}

TEST_CASE("flow magnitudes: unit on foreground, zero on background") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const LabelMap m = testing::random_blobs(rng, 40, 30, 6);
        const FlowPrediction p = compute_flow(m);
        const InstancePixels groups = group_pixels(m);
        std::vector<std::size_t> centers;
        for (std::size_t k = 0; k < groups.info.size(); ++k) {
            const Pixel c = median_center(m, groups.info[k].id);
            centers.push_back(m.index(c.y, c.x));
        }
        for (std::size_t i = 0; i < m.size(); ++i) {
            const double mag = std::hypot(p.flow.dy[i], p.flow.dx[i]);
            CHECK(mag <= 1.0 + 1e-6);
            if (m[i] == 0) {
                CHECK(mag == 0.0);
                CHECK(p.fg[i] == 0.0);
            } else {
                CHECK(p.fg[i] == 1.0);
                const bool is_center = std::find(centers.begin(), centers.end(), i) != centers.end();
                if (!is_center && mag != 0.0) CHECK(std::abs(mag - 1.0) <= 1e-6);
            }
        }
    }
}

TEST_CASE("following the flow never crosses into another instance") {
    LabelMap m(80, 40, 0);
    testing::paint_disk(m, 20, 20, 15, 1);
    testing::paint_disk(m, 20, 58, 15, 2);
    const FlowPrediction p = compute_flow(m);
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            if (m(y, x) != 1) continue;
            double py = y;
            double px = x;
            for (int step = 0; step < 200; ++step) {
                double dy = 0.0;
                double dx = 0.0;
                sample_flow(p.flow, py, px, dy, dx);
                py = std::clamp(py + dy, 0.0, 39.0);
                px = std::clamp(px + dx, 0.0, 79.0);
                CHECK(m(static_cast<int>(std::lround(py)), static_cast<int>(std::lround(px))) != 2u);
            }
        }
    }
}

TEST_CASE("compute_flow is invariant under id permutation") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 15; ++trial) {
        const LabelMap m = testing::random_blobs(rng, 36, 28, 6);
        LabelMap permuted = m;
        for (InstanceId& v : permuted.values()) {
            if (v != 0) v = 1000 - v;
        }
        const FlowPrediction a = compute_flow(m);
        const FlowPrediction b = compute_flow(permuted);
        CHECK(a.flow == b.flow);
        CHECK(a.fg == b.fg);
    }
}

TEST_CASE("compute_flow is translation equivariant") {
    LabelMap a(50, 50, 0);
    testing::paint_disk(a, 20, 18, 9, 1);
    testing::paint_rect(a, 5, 30, 6, 12, 2);
    LabelMap b(50, 50, 0);
    for (int y = 0; y + 3 < 50; ++y) {
        for (int x = 0; x + 5 < 50; ++x) b(y + 3, x + 5) = a(y, x);
    }
    const FlowPrediction fa = compute_flow(a);
    const FlowPrediction fb = compute_flow(b);
    for (int y = 1; y + 4 < 49; ++y) {
        for (int x = 1; x + 6 < 49; ++x) {
            CHECK(fa.flow.dy(y, x) == fb.flow.dy(y + 3, x + 5));
            CHECK(fa.flow.dx(y, x) == fb.flow.dx(y + 3, x + 5));
        }
    }
}

TEST_CASE("parallel compute_flow matches the serial reference bit for bit") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 10; ++trial) {
        const LabelMap m = testing::random_blobs(rng, 64, 48, 6);
        const FlowPrediction par = compute_flow(m);
        const FlowPrediction ser = serial::compute_flow(m);
        CHECK(par.flow == ser.flow);
        CHECK(par.fg == ser.fg);
    }
}

TEST_CASE("thin diagonal and narrow instances still carry flow") {
    LabelMap m(40, 40, 0);
    for (int k = 0; k < 30; ++k) {
        m(5 + k, 5 + k) = 1;
        m(5 + k, 6 + k) = 1;
    }
    const FlowPrediction p = compute_flow(m);
    const Pixel c = median_center(m, 1);
    for (int y = 0; y < 40; ++y) {
        for (int x = 0; x < 40; ++x) {
            if (m(y, x) == 0 || (y == c.y && x == c.x)) continue;
            CHECK(std::hypot(p.flow.dy(y, x), p.flow.dx(y, x)) > 0.5);
        }
    }
}
