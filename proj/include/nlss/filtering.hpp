#pragma once

#include <array>
#include <cstddef>
#include <utility>

#include "nlss/grouping.hpp"
#include "nlss/tensor.hpp"

namespace nlss {

enum class FilterFamily { msvd, hosvd4d };

/// Opponent color decorrelation is applied to 3-channel groups before
/// filtering and inverted afterwards.
enum class ColorMode { none, opponent };

struct FilterParams {
    double sigma = 0.0;    // noise std in intensity units
    double lambda = 2.7;   // threshold multiplier, tau = lambda * sigma
    FilterFamily family = FilterFamily::msvd;
    ColorMode color_mode = ColorMode::none;
};

/// Learned orthogonal transforms for one group.
struct TransformSet {
    FilterFamily family = FilterFamily::msvd;
    // msvd: group-level (K x K) and patch-level ((H*W*N) x K) factors
    Matrix group_u;
    Matrix patch_v;
    // hosvd4d: one factor per tensor mode
    std::array<Matrix, 4> factors;
};

/// Fixed opponent color transform along `channel_mode` (extent must be 3).
DenseTensor opponent_forward(const DenseTensor& t, std::size_t channel_mode = 3);
DenseTensor opponent_inverse(const DenseTensor& t, std::size_t channel_mode = 3);

/// Keep coefficients with |c| >= tau, zero the rest; returns the kept count.
std::pair<DenseTensor, std::size_t> hard_threshold(const DenseTensor& coeffs, double tau);

/// Group-level transform U from the mode-4 unfolding (K x K) and patch-level
/// transform V from its transpose, truncated to K columns. With opponent
/// color mode the transforms are learned in the opponent domain.
TransformSet learn_msvd_transforms(const PatchGroup& group, ColorMode color_mode);

struct FilterResult {
    PatchGroup group;
    std::size_t retained = 0;
};

/// Hard thresholding of C = U^T G_(4) V, reconstruction U C_trun V^T.
FilterResult msvd_filter_group(const PatchGroup& group, const FilterParams& params);

/// Hard thresholding of the full Tucker core with per-mode SVD factors.
FilterResult hosvd_filter_group(const PatchGroup& group, const FilterParams& params);

/// Dispatch on params.family.
FilterResult filter_group(const PatchGroup& group, const FilterParams& params);

}  // namespace nlss
