#pragma once

#include <cstdint>

#include "nlss/tensor.hpp"

namespace nlss {

enum class NoiseKind { awgn, rician };

/// Seeded corruption request. `sigma` is in the intensity units of the data
/// it is applied to; percentage conventions are converted by callers.
struct NoiseSpec {
    NoiseKind kind = NoiseKind::awgn;
    double sigma = 0.0;
    std::uint64_t seed = 0;
};

/// y = x + n with n ~ iid Gaussian(0, sigma^2). Not clipped. The generator is
/// counter-based (keyed on seed and element index), so output is bitwise
/// reproducible and independent of any threading in the caller.
DenseTensor add_awgn(const DenseTensor& x, const NoiseSpec& spec);

/// y = sqrt((x + sigma*nr)^2 + (sigma*ni)^2), nr/ni iid standard normal.
/// Requires x >= 0 elementwise; output is always >= 0.
DenseTensor add_rician(const DenseTensor& x, const NoiseSpec& spec);

/// Robust noise-level estimate: MAD of the one-level diagonal Haar detail
/// coefficients of the luminance (or first) channel, divided by 0.6745.
/// Returns 0 for constant input. Requires at least 64 elements.
double estimate_sigma_mad(const DenseTensor& y);

}  // namespace nlss
