#include "nlss/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <vector>

namespace nlss {

namespace {

[[noreturn]] void io_fail(const std::string& path, const std::string& what) {
    throw std::runtime_error(what + ": " + path);
}

bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::uint8_t quantize(double v) {
    double r = std::nearbyint(v);
    return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// ---- PGM (P5, 8-bit) ----

int pgm_next_token(std::istream& in, std::string& token) {
    token.clear();
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch)) {
            if (!token.empty()) return 1;
            continue;
        }
        token.push_back(static_cast<char>(ch));
    }
    return token.empty() ? 0 : 1;
}

DenseTensor load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) io_fail(path, "cannot open file");

    char magic[2];
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || magic[1] != '5') io_fail(path, "not a binary PGM (P5) file");

    std::string token;
    std::size_t fields[3];
    for (int i = 0; i < 3; ++i) {
        if (!pgm_next_token(in, token)) io_fail(path, "truncated PGM header");
        try {
            fields[i] = std::stoul(token);
        } catch (const std::exception&) {
            io_fail(path, "malformed PGM header");
        }
    }
    const std::size_t width = fields[0], height = fields[1], maxval = fields[2];
    if (maxval != 255) io_fail(path, "unsupported PGM bit depth (need maxval 255)");
    if (width == 0 || height == 0) io_fail(path, "degenerate PGM dimensions");

    std::vector<std::uint8_t> raw(width * height);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) io_fail(path, "truncated PGM payload");

    DenseTensor out({height, width});
    double* dst = out.data();
    for (std::size_t r = 0; r < height; ++r)
        for (std::size_t c = 0; c < width; ++c) dst[r + c * height] = raw[r * width + c];
    return out;
}

void save_pgm(const DenseTensor& image, const std::string& path) {
    if (image.order() != 2) io_fail(path, "PGM output requires a grayscale image");
    const std::size_t h = image.extent(1), w = image.extent(2);

    std::ofstream out(path, std::ios::binary);
    if (!out) io_fail(path, "cannot open file for writing");
    out << "P5\n" << w << " " << h << "\n255\n";
    std::vector<std::uint8_t> row(w);
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) row[c] = quantize(image[r + c * h]);
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(w));
    }
    if (!out) io_fail(path, "write failed");
}

// ---- PNG (libpng, 8-bit gray or RGB) ----

DenseTensor load_png(const std::string& path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) io_fail(path, "cannot open file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) io_fail(path, "libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        io_fail(path, "libpng init failed");
    }
    std::vector<png_bytep> rows;
    std::vector<std::uint8_t> pixels;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        io_fail(path, "corrupt or unreadable PNG");
    }

    png_init_io(png, file.get());
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);

    if (bit_depth != 8 ||
        (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_RGB)) {
        png_destroy_read_struct(&png, &info, nullptr);
        io_fail(path, "unsupported PNG format (need 8-bit grayscale or RGB)");
    }

    const std::size_t channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    const std::size_t stride = static_cast<std::size_t>(width) * channels;
    pixels.resize(stride * height);
    rows.resize(height);
    for (std::size_t r = 0; r < height; ++r) rows[r] = pixels.data() + r * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    const std::size_t h = height, w = width;
    DenseTensor out(channels == 1 ? std::vector<std::size_t>{h, w}
                                  : std::vector<std::size_t>{h, w, channels});
    double* dst = out.data();
    const std::size_t plane = h * w;
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c)
            for (std::size_t ch = 0; ch < channels; ++ch)
                dst[r + c * h + ch * plane] = pixels[r * stride + c * channels + ch];
    return out;
}

void save_png(const DenseTensor& image, const std::string& path) {
    if (image.order() != 2 && !(image.order() == 3 && image.extent(3) == 3))
        io_fail(path, "PNG output requires a grayscale or 3-channel image");
    const std::size_t h = image.extent(1), w = image.extent(2);
    const std::size_t channels = image.order() == 3 ? 3 : 1;
    const std::size_t plane = h * w;

    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) io_fail(path, "cannot open file for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) io_fail(path, "libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        io_fail(path, "libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        io_fail(path, "PNG write failed");
    }

    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<std::uint8_t> row(w * channels);
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c)
            for (std::size_t ch = 0; ch < channels; ++ch)
                row[c * channels + ch] = quantize(image[r + c * h + ch * plane]);
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// ---- raw volume container ----

constexpr char kVolumeMagic[8] = {'N', 'L', 'S', 'S', 'V', 'O', 'L', '1'};

std::uint32_t read_u32_le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_u32_le(std::ostream& out, std::uint32_t v) {
    std::uint8_t b[4] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
                         static_cast<std::uint8_t>(v >> 16), static_cast<std::uint8_t>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

double read_f64_le(const std::uint8_t* p) {
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void write_f64_le(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    std::uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

}  // namespace

DenseTensor load_image(const std::string& path) {
    if (has_suffix(path, ".pgm")) return load_pgm(path);
    if (has_suffix(path, ".png")) return load_png(path);
    io_fail(path, "unsupported image extension (need .png or .pgm)");
}

void save_image(const DenseTensor& image, const std::string& path) {
    if (has_suffix(path, ".pgm")) return save_pgm(image, path);
    if (has_suffix(path, ".png")) return save_png(image, path);
    io_fail(path, "unsupported image extension (need .png or .pgm)");
}

Volume load_volume(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) io_fail(path, "cannot open file");

    std::uint8_t header[8 + 12 + 8];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (static_cast<std::size_t>(in.gcount()) != sizeof(header))
        io_fail(path, "truncated volume header");
    if (std::memcmp(header, kVolumeMagic, 8) != 0) io_fail(path, "bad volume magic");

    const std::size_t dim0 = read_u32_le(header + 8);
    const std::size_t dim1 = read_u32_le(header + 12);
    const std::size_t dim2 = read_u32_le(header + 16);
    const double peak = read_f64_le(header + 20);
    if (dim0 == 0 || dim1 == 0 || dim2 == 0) io_fail(path, "degenerate volume dimensions");
    if (!(peak > 0.0) || !std::isfinite(peak)) io_fail(path, "invalid volume peak");

    const std::size_t count = dim0 * dim1 * dim2;
    std::vector<float> payload(count);
    in.read(reinterpret_cast<char*>(payload.data()),
            static_cast<std::streamsize>(count * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != count * sizeof(float))
        io_fail(path, "volume payload shorter than declared shape");
    if (in.peek() != EOF) io_fail(path, "volume payload longer than declared shape");

    Volume vol;
    vol.peak = peak;
    // payload order matches the tensor layout: dim0 fastest, dim2 slowest
    DenseTensor t({dim0, dim1, dim2});
    for (std::size_t i = 0; i < count; ++i) t[i] = static_cast<double>(payload[i]);
    vol.tensor = std::move(t);
    return vol;
}

void save_volume(const DenseTensor& volume, double peak, const std::string& path) {
    if (volume.order() != 3) io_fail(path, "volume output requires an order-3 tensor");
    if (!(peak > 0.0)) io_fail(path, "volume peak must be positive");

    std::ofstream out(path, std::ios::binary);
    if (!out) io_fail(path, "cannot open file for writing");
    out.write(kVolumeMagic, 8);
    write_u32_le(out, static_cast<std::uint32_t>(volume.extent(1)));
    write_u32_le(out, static_cast<std::uint32_t>(volume.extent(2)));
    write_u32_le(out, static_cast<std::uint32_t>(volume.extent(3)));
    write_f64_le(out, peak);

    std::vector<float> payload(volume.size());
    for (std::size_t i = 0; i < volume.size(); ++i) payload[i] = static_cast<float>(volume[i]);
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!out) io_fail(path, "write failed");
}

}  // namespace nlss
