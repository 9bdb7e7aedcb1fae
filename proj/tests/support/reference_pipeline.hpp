#pragma once

#include <vector>

#include "nlss/grouping.hpp"
#include "nlss/pipeline.hpp"
#include "nlss/tensor.hpp"

// Naive single-threaded reference implementations used as oracles. They share
// only the svd kernel (whose sign convention is part of the library contract)
// with the production code; search, unfolding, filtering algebra, and
// aggregation are all written independently with plain loops.
namespace nlss::testing {

/// Exhaustive window scan with full distance sort; returns the group's
/// coordinate list (reference first, ties by raster order, cyclic repeats).
std::vector<Coord> reference_search(const DenseTensor& image, const Coord& ref,
                                    const GroupingParams& params);

/// Dense-matrix group filters: transforms formed explicitly, products via
/// plain loops. `retained` (optional) receives the kept-coefficient count.
DenseTensor reference_msvd_filter(const DenseTensor& group, double tau, bool opponent,
                                  std::size_t* retained = nullptr);
DenseTensor reference_hosvd_filter(const DenseTensor& group, double tau, bool opponent,
                                   std::size_t* retained = nullptr);

/// Whole-pipeline reference: sequential scan over the reference grid with
/// dense full-image accumulators.
DenseTensor reference_denoise(const DenseTensor& image, const DenoiseConfig& cfg);

}  // namespace nlss::testing
