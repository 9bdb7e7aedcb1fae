#pragma once

#include <cstddef>

#include "nlss/tensor.hpp"

namespace nlss {

struct MetricParams {
    double peak = 255.0;          // D
    std::size_t ssim_window = 11; // odd, >= 3
    double ssim_sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double ergas_scale_ratio = 1.0;
};

/// 10*log10(D^2 / MSE), joint MSE over every element (all channels at once).
/// Identical inputs return +infinity.
double psnr(const DenseTensor& x, const DenseTensor& y, double peak);

/// PSNR restricted to the foreground of the clean image x, defined as the
/// elements with x > 10*D/255. Throws std::domain_error when empty.
double psnr_foreground(const DenseTensor& x, const DenseTensor& y, double peak);

/// Mean local SSIM with a Gaussian-weighted window over the valid region;
/// multi-channel inputs are scored per channel and averaged.
double ssim(const DenseTensor& x, const DenseTensor& y, const MetricParams& params = {});

/// Mean spectral angle (radians) over pixels; spectra run along mode 3.
/// Pixels whose spectrum has zero norm in either input are skipped and
/// counted; throws std::domain_error if no pixel survives.
double sam(const DenseTensor& x, const DenseTensor& y, std::size_t* skipped = nullptr);

/// 100 * scale_ratio * sqrt(mean_b((RMSE_b / mean_b)^2)) with band means
/// taken from the reference x. Throws std::domain_error on a zero band mean.
double ergas(const DenseTensor& x, const DenseTensor& y, const MetricParams& params = {});

/// Sequence conventions: metric of each mode-3 slice, averaged.
double psnr_frame_mean(const DenseTensor& x, const DenseTensor& y, double peak);
double ssim_frame_mean(const DenseTensor& x, const DenseTensor& y,
                       const MetricParams& params = {});

}  // namespace nlss
