#include "nlss/synth.hpp"

#include <algorithm>
#include <stdexcept>

namespace nlss {

namespace {

struct Lcg {
    std::uint64_t state;
    explicit Lcg(std::uint64_t seed) : state(seed * 6364136223846793005ULL + 1442695040888963407ULL) {}
    std::uint64_t next() {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return state >> 17;
    }
    std::size_t below(std::size_t n) { return static_cast<std::size_t>(next() % n); }
};

// Small palette so distinct regions still offer similar patches.
constexpr double kPalette[8] = {16, 48, 80, 112, 144, 176, 208, 240};

}  // namespace

SynthKind parse_synth_kind(const std::string& name) {
    if (name == "flat") return SynthKind::flat;
    if (name == "piecewise") return SynthKind::piecewise;
    if (name == "gradient") return SynthKind::gradient;
    throw std::invalid_argument("unknown synthetic kind: " + name);
}

DenseTensor make_synthetic(SynthKind kind, std::size_t height, std::size_t width,
                           std::size_t channels, std::uint64_t seed) {
    if (height == 0 || width == 0) throw std::invalid_argument("synthetic size must be positive");
    if (channels != 1 && channels != 3)
        throw std::invalid_argument("synthetic channels must be 1 or 3");

    DenseTensor out(channels == 1 ? std::vector<std::size_t>{height, width}
                                  : std::vector<std::size_t>{height, width, channels});
    const std::size_t plane = height * width;
    double* d = out.data();

    switch (kind) {
        case SynthKind::flat:
            for (std::size_t i = 0; i < out.size(); ++i) d[i] = 128.0;
            break;
        case SynthKind::gradient:
            for (std::size_t ch = 0; ch < channels; ++ch)
                for (std::size_t c = 0; c < width; ++c) {
                    double v = width > 1
                                   ? 255.0 * static_cast<double>(c) / static_cast<double>(width - 1)
                                   : 128.0;
                    for (std::size_t r = 0; r < height; ++r) d[r + c * height + ch * plane] = v;
                }
            break;
        case SynthKind::piecewise: {
            Lcg rng(seed ^ 0xC0FFEEULL);
            for (std::size_t i = 0; i < out.size(); ++i) d[i] = 128.0;
            const std::size_t rects = 4 + (height * width) / 2048;
            for (std::size_t n = 0; n < rects; ++n) {
                std::size_t rh = 4 + rng.below(std::max<std::size_t>(height / 2, 1));
                std::size_t rw = 4 + rng.below(std::max<std::size_t>(width / 2, 1));
                rh = std::min(rh, height);
                rw = std::min(rw, width);
                std::size_t r0 = rng.below(height - rh + 1);
                std::size_t c0 = rng.below(width - rw + 1);
                for (std::size_t ch = 0; ch < channels; ++ch) {
                    double v = kPalette[rng.below(8)];
                    for (std::size_t c = c0; c < c0 + rw; ++c)
                        for (std::size_t r = r0; r < r0 + rh; ++r)
                            d[r + c * height + ch * plane] = v;
                }
            }
            break;
        }
    }
    return out;
}

DenseTensor make_synthetic_volume(std::size_t dim0, std::size_t dim1, std::size_t dim2,
                                  std::uint64_t seed) {
    if (dim0 == 0 || dim1 == 0 || dim2 == 0)
        throw std::invalid_argument("synthetic volume dims must be positive");

    DenseTensor out({dim0, dim1, dim2});
    double* d = out.data();
    for (std::size_t i = 0; i < out.size(); ++i) d[i] = 128.0;

    Lcg rng(seed ^ 0xBEEFULL);
    const std::size_t boxes = 4 + (dim0 * dim1 * dim2) / 8192;
    const std::size_t plane = dim0 * dim1;
    for (std::size_t n = 0; n < boxes; ++n) {
        std::size_t s0 = 2 + rng.below(std::max<std::size_t>(dim0 / 2, 1));
        std::size_t s1 = 2 + rng.below(std::max<std::size_t>(dim1 / 2, 1));
        std::size_t s2 = 2 + rng.below(std::max<std::size_t>(dim2 / 2, 1));
        s0 = std::min(s0, dim0);
        s1 = std::min(s1, dim1);
        s2 = std::min(s2, dim2);
        std::size_t o0 = rng.below(dim0 - s0 + 1);
        std::size_t o1 = rng.below(dim1 - s1 + 1);
        std::size_t o2 = rng.below(dim2 - s2 + 1);
        double v = kPalette[rng.below(8)];
        for (std::size_t z = o2; z < o2 + s2; ++z)
            for (std::size_t c = o1; c < o1 + s1; ++c)
                for (std::size_t r = o0; r < o0 + s0; ++r) d[r + c * dim0 + z * plane] = v;
    }
    return out;
}

}  // namespace nlss
