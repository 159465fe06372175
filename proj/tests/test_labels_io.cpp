#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "sima/flowfield.hpp"
#include "sima/io.hpp"
#include "sima/labels.hpp"
#include "support.hpp"

using namespace sima;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("sima_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("Error messages carry the code name") {
    const Error e(ErrorCode::BadRect, "rect 3");
    CHECK(std::string(e.what()) == "BadRect: rect 3");
    CHECK(e.code() == ErrorCode::BadRect);
}

TEST_CASE("instance table") {
    LabelMap m(10, 8, 0);
    testing::paint_rect(m, 1, 2, 3, 4, 7);
    m(6, 9) = 2;
    const std::vector<InstanceInfo> t = instance_table(m);
    REQUIRE(t.size() == 2);
    CHECK(t[0].id == 2u);
    CHECK(t[0].area == 1u);
    CHECK(t[1].id == 7u);
    CHECK(t[1].area == 12u);
    CHECK(t[1].box_height() == 3);
    CHECK(t[1].box_width() == 4);
    CHECK(find_instance(t, 7).min_x == 2);
    CHECK_THROWS_AS(find_instance(t, 3), Error);
}

TEST_CASE("relabel and connected components") {
    LabelMap m(6, 3, 0);
    m(0, 5) = 9;
    m(2, 0) = 4;
    m(2, 1) = 4;
    const LabelMap r = relabel_sequential(m);
    CHECK(r(0, 5) == 1u);
    CHECK(r(2, 0) == 2u);

    Mask mask(5, 5, 0);
    mask(0, 0) = 1;
    mask(1, 1) = 1;  // diagonal only: separate components
    mask(1, 2) = 1;
    const LabelMap cc = connected_components(mask);
    CHECK(cc(0, 0) == 1u);
    CHECK(cc(1, 1) == 2u);
    CHECK(cc(1, 2) == 2u);

    LabelMap split(7, 1, 0);
    split(0, 0) = 5;
    split(0, 1) = 5;
    split(0, 4) = 5;
    CHECK_FALSE(all_instances_connected(split));
    const LabelMap pieces = split_components(split);
    CHECK(pieces(0, 0) == 1u);
    CHECK(pieces(0, 4) == 2u);
    CHECK(all_instances_connected(pieces));
}

TEST_CASE("nearest-neighbour label resize") {
    LabelMap m(4, 4, 0);
    testing::paint_rect(m, 0, 0, 2, 2, 1);
    testing::paint_rect(m, 2, 2, 2, 2, 2);
    const LabelMap up = resize_nearest(m, 8, 8);
    CHECK(up(0, 0) == 1u);
    CHECK(up(3, 3) == 1u);
    CHECK(up(4, 4) == 2u);
    CHECK(resize_nearest(up, 4, 4) == m);
}

TEST_CASE("label PNG round trip") {
    const fs::path dir = scratch_dir("labels");
    std::mt19937_64 rng(12);
    LabelMap m(37, 23, 0);
    for (InstanceId& v : m.values()) v = static_cast<InstanceId>(rng() % 65536);
    io::write_label_png(dir / "l.png", m);
    CHECK(io::read_label_png(dir / "l.png") == m);

    LabelMap big(2, 2, 0);
    big(0, 0) = 70000;
    CHECK_THROWS_AS(io::write_label_png(dir / "big.png", big), Error);
}

TEST_CASE("RGB and mask PNG round trip") {
    const fs::path dir = scratch_dir("rgb");
    std::mt19937_64 rng(13);
    RgbImage img(19, 11);
    for (Rgb& p : img.values()) {
        p = {static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng())};
    }
    io::write_rgb_png(dir / "i.png", img);
    CHECK(io::read_rgb_png(dir / "i.png") == img);

    Mask mask(9, 4, 0);
    mask(1, 3) = 1;
    mask(3, 8) = 1;
    io::write_mask_png(dir / "m.png", mask);
    const Mask back = io::read_mask_png(dir / "m.png");
    CHECK(back(1, 3) != 0);
    CHECK(back(3, 8) != 0);
    CHECK(back(0, 0) == 0);
}

TEST_CASE("flow file round trip and layout") {
    const fs::path dir = scratch_dir("flow");
    const FlowPrediction p = compute_flow(testing::disk_map(21, 7.0));
    io::write_flow(dir / "flow_a_1.f32", p.flow);
    io::write_foreground(dir / "fg_a_1.f32", p.fg);
    const FlowField f = io::read_flow(dir / "flow_a_1.f32");
    const ForegroundMap g = io::read_foreground(dir / "fg_a_1.f32");
    for (std::size_t i = 0; i < p.fg.size(); ++i) {
        CHECK(f.dy[i] == static_cast<double>(static_cast<float>(p.flow.dy[i])));
        CHECK(f.dx[i] == static_cast<double>(static_cast<float>(p.flow.dx[i])));
        CHECK(g[i] == p.fg[i]);
    }

    std::ifstream in(dir / "flow_a_1.f32", std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    REQUIRE(bytes.size() == 16 + 2 * 21 * 21 * 4);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "CFLW");
    CHECK(bytes[4] == 21);
    CHECK(bytes[8] == 21);
    CHECK(bytes[12] == 2);

    CHECK_THROWS_AS(io::read_flow(dir / "missing.f32"), Error);
    CHECK_THROWS_AS(io::read_flow(dir / "fg_a_1.f32"), Error);  // one channel
}
