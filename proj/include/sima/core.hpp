#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sima {

enum class ErrorCode {
    NoSuchInstance,
    ShapeMismatch,
    BadSchedule,
    BadRect,
    BadThresholds,
    ScaleCountMismatch,
    PredictionUnavailable,
    EmptyOperands,
    EmptyInstance,
    EmptyLabelMap,
    SynthInfeasible,
    ManifestMismatch,
    BadConfig,
    Io,
};

const char* to_string(ErrorCode code);

// All library failures surface as sima::Error; what() is "<Code>: <detail>".
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail);
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Row-major 2-D raster.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(int width, int height, T fill = T{})
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
        if (width < 0 || height < 0) throw Error(ErrorCode::ShapeMismatch, "negative grid size");
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::size_t index(int y, int x) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }
    bool contains(int y, int x) const noexcept { return y >= 0 && x >= 0 && y < height_ && x < width_; }

    T& operator()(int y, int x) noexcept { return data_[index(y, x)]; }
    const T& operator()(int y, int x) const noexcept { return data_[index(y, x)]; }
    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }

    template <typename U>
    bool same_shape(const Grid<U>& other) const noexcept {
        return width_ == other.width() && height_ == other.height();
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using InstanceId = std::uint32_t;

// 0 is background; other ids need not be consecutive.
using LabelMap = Grid<InstanceId>;

// Per-pixel foreground probability in [0,1].
using ForegroundMap = Grid<double>;

using Mask = Grid<std::uint8_t>;

struct Pixel {
    int y = 0;
    int x = 0;
    friend bool operator==(const Pixel&, const Pixel&) = default;
};

// Center-pointing vector field, stored as two planes.
struct FlowField {
    Grid<double> dy;
    Grid<double> dx;

    FlowField() = default;
    FlowField(int width, int height) : dy(width, height, 0.0), dx(width, height, 0.0) {}

    int width() const noexcept { return dy.width(); }
    int height() const noexcept { return dy.height(); }

    friend bool operator==(const FlowField&, const FlowField&) = default;
};

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

using RgbImage = Grid<Rgb>;

template <typename A, typename B>
void require_same_shape(const Grid<A>& a, const Grid<B>& b, const char* what) {
    if (!a.same_shape(b)) {
        throw Error(ErrorCode::ShapeMismatch,
                    std::string(what) + ": " + std::to_string(a.width()) + "x" + std::to_string(a.height()) +
                        " vs " + std::to_string(b.width()) + "x" + std::to_string(b.height()));
    }
}

}  // namespace sima
