#include "sima/io.hpp"

#include <png.h>

#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

namespace sima::io {

namespace {

constexpr std::array<char, 4> kMagic{'C', 'F', 'L', 'W'};

void put_u32(std::ostream& os, std::uint32_t v) {
    const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    os.write(b.data(), 4);
}

std::uint32_t get_u32(std::istream& is) {
    std::array<unsigned char, 4> b{};
    is.read(reinterpret_cast<char*>(b.data()), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

Error io_error(const std::filesystem::path& path, const std::string& what) {
    return Error(ErrorCode::Io, path.string() + ": " + what);
}

struct FileCloser {
    void operator()(std::FILE* f) const noexcept {
        if (f) std::fclose(f);
    }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_file(const std::filesystem::path& path, const char* mode) {
    File f(std::fopen(path.c_str(), mode));
    if (!f) throw io_error(path, std::string("cannot open (") + mode + ")");
    return f;
}

// Writes rows of `bytes_per_row` bytes; `row` fills one row buffer.
template <typename RowFn>
void write_png(const std::filesystem::path& path, int width, int height, int bit_depth, int color_type,
               std::size_t bytes_per_row, RowFn row) {
    File f = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw io_error(path, "png init failed");
    }
    std::vector<png_byte> buf(bytes_per_row);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw io_error(path, "png write failed");
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y) {
        row(y, buf.data());
        png_write_row(png, buf.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

struct PngData {
    int width = 0;
    int height = 0;
    int bit_depth = 0;
    int channels = 0;
    std::vector<png_byte> bytes;  // rows packed, big-endian samples for 16-bit
    std::size_t row_bytes = 0;
};

PngData read_png(const std::filesystem::path& path) {
    File f = open_file(path, "rb");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw io_error(path, "png init failed");
    }
    PngData out;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw io_error(path, "not a readable png");
    }
    png_init_io(png, f.get());
    png_read_info(png, info);
    const png_byte color = png_get_color_type(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.bit_depth = png_get_bit_depth(png, info);
    out.channels = png_get_channels(png, info);
    out.row_bytes = png_get_rowbytes(png, info);
    out.bytes.resize(out.row_bytes * static_cast<std::size_t>(out.height));
    std::vector<png_bytep> rows(static_cast<std::size_t>(out.height));
    for (int y = 0; y < out.height; ++y) rows[static_cast<std::size_t>(y)] = out.bytes.data() + out.row_bytes * static_cast<std::size_t>(y);
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

}  // namespace

void write_planes(const std::filesystem::path& path, const std::vector<const Grid<double>*>& planes) {
    if (planes.empty()) throw io_error(path, "no planes to write");
    const int w = planes.front()->width();
    const int h = planes.front()->height();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw io_error(path, "cannot open for writing");
    os.write(kMagic.data(), 4);
    put_u32(os, static_cast<std::uint32_t>(w));
    put_u32(os, static_cast<std::uint32_t>(h));
    put_u32(os, static_cast<std::uint32_t>(planes.size()));
    for (const Grid<double>* p : planes) {
        require_same_shape(*planes.front(), *p, "write_planes");
        for (double v : p->values()) {
            put_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
        }
    }
    if (!os) throw io_error(path, "write failed");
}

std::vector<Grid<double>> read_planes(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error(path, "cannot open for reading");
    std::array<char, 4> magic{};
    is.read(magic.data(), 4);
    if (!is || magic != kMagic) throw io_error(path, "bad magic");
    const std::uint32_t w = get_u32(is);
    const std::uint32_t h = get_u32(is);
    const std::uint32_t c = get_u32(is);
    if (!is || w > (1u << 16) || h > (1u << 16) || c == 0 || c > 16) throw io_error(path, "bad header");
    std::vector<Grid<double>> planes;
    for (std::uint32_t k = 0; k < c; ++k) {
        Grid<double> g(static_cast<int>(w), static_cast<int>(h), 0.0);
        for (double& v : g.values()) v = std::bit_cast<float>(get_u32(is));
        planes.push_back(std::move(g));
    }
    if (!is) throw io_error(path, "truncated data");
    return planes;
}

void write_flow(const std::filesystem::path& path, const FlowField& flow) {
    write_planes(path, {&flow.dy, &flow.dx});
}

FlowField read_flow(const std::filesystem::path& path) {
    std::vector<Grid<double>> planes = read_planes(path);
    if (planes.size() != 2) throw io_error(path, "flow file must have 2 channels");
    FlowField flow;
    flow.dy = std::move(planes[0]);
    flow.dx = std::move(planes[1]);
    return flow;
}

void write_foreground(const std::filesystem::path& path, const ForegroundMap& fg) { write_planes(path, {&fg}); }

ForegroundMap read_foreground(const std::filesystem::path& path) {
    std::vector<Grid<double>> planes = read_planes(path);
    if (planes.size() != 1) throw io_error(path, "foreground file must have 1 channel");
    return std::move(planes[0]);
}

void write_rgb_png(const std::filesystem::path& path, const RgbImage& image) {
    write_png(path, image.width(), image.height(), 8, PNG_COLOR_TYPE_RGB, 3 * static_cast<std::size_t>(image.width()),
              [&](int y, png_byte* row) {
                  for (int x = 0; x < image.width(); ++x) {
                      const Rgb& p = image(y, x);
                      row[3 * x + 0] = p.r;
                      row[3 * x + 1] = p.g;
                      row[3 * x + 2] = p.b;
                  }
              });
}

RgbImage read_rgb_png(const std::filesystem::path& path) {
    const PngData d = read_png(path);
    if (d.bit_depth != 8) throw io_error(path, "expected 8-bit image");
    RgbImage img(d.width, d.height);
    for (int y = 0; y < d.height; ++y) {
        const png_byte* row = d.bytes.data() + d.row_bytes * static_cast<std::size_t>(y);
        for (int x = 0; x < d.width; ++x) {
            if (d.channels >= 3) {
                img(y, x) = {row[3 * x], row[3 * x + 1], row[3 * x + 2]};
            } else {
                img(y, x) = {row[x], row[x], row[x]};
            }
        }
    }
    return img;
}

void write_label_png(const std::filesystem::path& path, const LabelMap& labels) {
    for (InstanceId v : labels.values()) {
        if (v > 0xffff) throw io_error(path, "instance id exceeds 65535");
    }
    write_png(path, labels.width(), labels.height(), 16, PNG_COLOR_TYPE_GRAY, 2 * static_cast<std::size_t>(labels.width()),
              [&](int y, png_byte* row) {
                  for (int x = 0; x < labels.width(); ++x) {
                      const InstanceId v = labels(y, x);
                      row[2 * x] = static_cast<png_byte>(v >> 8);
                      row[2 * x + 1] = static_cast<png_byte>(v & 0xff);
                  }
              });
}

LabelMap read_label_png(const std::filesystem::path& path) {
    const PngData d = read_png(path);
    if (d.channels != 1) throw io_error(path, "label png must be single-channel");
    LabelMap labels(d.width, d.height, 0);
    for (int y = 0; y < d.height; ++y) {
        const png_byte* row = d.bytes.data() + d.row_bytes * static_cast<std::size_t>(y);
        for (int x = 0; x < d.width; ++x) {
            labels(y, x) = d.bit_depth == 16 ? (static_cast<InstanceId>(row[2 * x]) << 8) | row[2 * x + 1] : row[x];
        }
    }
    return labels;
}

void write_mask_png(const std::filesystem::path& path, const Mask& mask) {
    write_png(path, mask.width(), mask.height(), 8, PNG_COLOR_TYPE_GRAY, static_cast<std::size_t>(mask.width()),
              [&](int y, png_byte* row) {
                  for (int x = 0; x < mask.width(); ++x) row[x] = mask(y, x) ? 255 : 0;
              });
}

Mask read_mask_png(const std::filesystem::path& path) {
    const PngData d = read_png(path);
    if (d.channels != 1 || d.bit_depth != 8) throw io_error(path, "mask png must be 8-bit single-channel");
    Mask mask(d.width, d.height, 0);
    for (int y = 0; y < d.height; ++y) {
        const png_byte* row = d.bytes.data() + d.row_bytes * static_cast<std::size_t>(y);
        for (int x = 0; x < d.width; ++x) mask(y, x) = row[x] ? 1 : 0;
    }
    return mask;
}

}  // namespace sima::io
