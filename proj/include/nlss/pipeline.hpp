#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "nlss/filtering.hpp"
#include "nlss/grouping.hpp"
#include "nlss/tensor.hpp"

namespace nlss {

enum class WeightMode { uniform, inverse_retained };

/// Everything one denoise call needs. `workers` only affects wall-clock
/// time: chunking of the reference grid is fixed, so results are bitwise
/// identical for any worker count.
struct DenoiseConfig {
    GroupingParams grouping;
    FilterParams filter;
    WeightMode weight_mode = WeightMode::uniform;
    bool clip_output = false;
    double peak = 255.0;  // D, intensity ceiling used by clipping
    int workers = 1;

    static DenoiseConfig image2d_defaults(std::size_t channels = 1);
    static DenoiseConfig volume3d_defaults();
};

/// Weighted-average accumulator for overlapping filtered patches.
class AggregationCanvas {
public:
    AggregationCanvas(const std::vector<std::size_t>& image_shape, WeightMode mode);

    /// Adds weight*pixel and weight at every pixel covered by the group.
    /// The weight is 1 (uniform) or 1/(1+retained_count) (inverse_retained).
    void scatter_group(const PatchGroup& filtered, std::size_t retained_count);

    /// Per-pixel value/weight quotient. Throws if any pixel is uncovered.
    DenseTensor finalize() const;

    const DenseTensor& value_accumulator() const { return value_; }
    const DenseTensor& weight_accumulator() const { return weight_; }

private:
    DenseTensor value_;
    DenseTensor weight_;
    WeightMode mode_;
    std::vector<std::size_t> original_shape_;
};

/// Grouping -> collaborative filtering -> aggregation over the full
/// reference grid. Accepts order-2 (H x W) or order-3 (H x W x C) input and
/// preserves the input shape. Deterministic for a fixed config.
DenseTensor denoise(const DenseTensor& image, const DenoiseConfig& cfg);

/// Same pipeline for order-3 volumes; cubic patches search along all three
/// axes when the patch does not span the full depth.
DenseTensor denoise_volume(const DenseTensor& volume, const DenoiseConfig& cfg);

/// Variance-stabilizing wrapper contract for Rician data: forward() maps the
/// noisy magnitudes into a domain a Gaussian denoiser can handle (returning
/// the stabilized noise level), inverse() maps the denoised result back.
class RicianStabilizer {
public:
    virtual ~RicianStabilizer() = default;
    virtual std::pair<DenseTensor, double> forward(const DenseTensor& noisy,
                                                   double sigma) const = 0;
    virtual DenseTensor inverse(const DenseTensor& denoised, double sigma) const = 0;
};

/// Default stabilizer: identity forward (sigma_vst = sigma), magnitude bias
/// correction sqrt(max(m^2 - 2*sigma^2, 0)) as the inverse step.
class MagnitudeBiasCorrection final : public RicianStabilizer {
public:
    std::pair<DenseTensor, double> forward(const DenseTensor& noisy, double sigma) const override;
    DenseTensor inverse(const DenseTensor& denoised, double sigma) const override;
};

/// Rician denoising: stabilize, run the Gaussian pipeline, invert.
/// Output is clamped nonnegative.
DenseTensor denoise_rician(const DenseTensor& volume, double sigma, const DenoiseConfig& cfg,
                           const RicianStabilizer* stabilizer = nullptr);

}  // namespace nlss
