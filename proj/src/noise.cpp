#include "nlss/noise.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nlss {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Two standard normals keyed on (seed, element index) via Box-Muller.
inline void counter_normal_pair(std::uint64_t seed, std::uint64_t index, double& z0, double& z1) {
    std::uint64_t h = splitmix64(splitmix64(seed ^ 0x5851F42D4C957F2DULL) + index);
    std::uint64_t h2 = splitmix64(h);
    // u1 in (0,1] so log(u1) is finite; u2 in [0,1).
    double u1 = static_cast<double>((h >> 11) + 1) * 0x1.0p-53;
    double u2 = static_cast<double>(h2 >> 11) * 0x1.0p-53;
    double r = std::sqrt(-2.0 * std::log(u1));
    z0 = r * std::cos(kTwoPi * u2);
    z1 = r * std::sin(kTwoPi * u2);
}

void check_sigma(const NoiseSpec& spec) {
    if (!(spec.sigma > 0.0)) throw std::invalid_argument("noise sigma must be positive");
}

}  // namespace

DenseTensor add_awgn(const DenseTensor& x, const NoiseSpec& spec) {
    if (spec.kind != NoiseKind::awgn) throw std::invalid_argument("add_awgn: spec kind mismatch");
    check_sigma(spec);
    DenseTensor y = x;
    double* out = y.data();
    const std::size_t n = y.size();
    for (std::size_t i = 0; i < n; ++i) {
        double z0, z1;
        counter_normal_pair(spec.seed, i, z0, z1);
        out[i] += spec.sigma * z0;
    }
    return y;
}

DenseTensor add_rician(const DenseTensor& x, const NoiseSpec& spec) {
    if (spec.kind != NoiseKind::rician)
        throw std::invalid_argument("add_rician: spec kind mismatch");
    check_sigma(spec);
    for (double v : x.values())
        if (v < 0.0) throw std::invalid_argument("add_rician: input intensities must be >= 0");

    DenseTensor y = x;
    double* out = y.data();
    const std::size_t n = y.size();
    for (std::size_t i = 0; i < n; ++i) {
        double zr, zi;
        counter_normal_pair(spec.seed, i, zr, zi);
        double re = out[i] + spec.sigma * zr;
        double im = spec.sigma * zi;
        out[i] = std::sqrt(re * re + im * im);
    }
    return y;
}

double estimate_sigma_mad(const DenseTensor& y) {
    if (y.size() < 64) throw std::invalid_argument("estimate_sigma_mad: need at least 64 elements");
    if (y.order() < 2) throw std::invalid_argument("estimate_sigma_mad: need an order >= 2 tensor");

    const std::size_t h = y.extent(1);
    const std::size_t w = y.extent(2);
    const std::size_t channels = y.order() >= 3 ? y.extent(3) : 1;
    const std::size_t plane = h * w;
    const double* d = y.data();

    auto pixel = [&](std::size_t r, std::size_t c) {
        if (channels == 3) {
            // BT.601 luminance
            return 0.299 * d[r + c * h] + 0.587 * d[r + c * h + plane] +
                   0.114 * d[r + c * h + 2 * plane];
        }
        return d[r + c * h];
    };

    // Diagonal detail of a one-level separable Haar transform; for iid
    // Gaussian input each coefficient has standard deviation sigma.
    std::vector<double> detail;
    detail.reserve((h / 2) * (w / 2));
    for (std::size_t r = 0; r + 1 < h; r += 2) {
        for (std::size_t c = 0; c + 1 < w; c += 2) {
            double v = 0.5 * (pixel(r, c) - pixel(r, c + 1) - pixel(r + 1, c) + pixel(r + 1, c + 1));
            detail.push_back(v);
        }
    }
    if (detail.empty()) return 0.0;

    auto median_of = [](std::vector<double>& v) {
        std::size_t mid = v.size() / 2;
        std::nth_element(v.begin(), v.begin() + mid, v.end());
        double m = v[mid];
        if (v.size() % 2 == 0) {
            std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
            m = 0.5 * (m + v[mid - 1]);
        }
        return m;
    };

    double med = median_of(detail);
    for (double& v : detail) v = std::abs(v - med);
    double mad = median_of(detail);
    return mad / 0.6745;
}

}  // namespace nlss
