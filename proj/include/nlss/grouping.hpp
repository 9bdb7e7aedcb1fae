#pragma once

#include <cstddef>
#include <vector>

#include "nlss/tensor.hpp"

namespace nlss {

/// Channel rule for the patch-matching distance.
enum class DistanceChannel { luminance, first_channel, all_channels };

struct GroupingParams {
    std::size_t patch_h = 8;
    std::size_t patch_w = 8;
    std::size_t patch_depth = 1;  // channels/bands/frames spanned by one patch
    std::size_t group_size = 32;  // K
    std::size_t search_radius = 19;
    std::size_t ref_stride = 4;
    DistanceChannel distance_channel = DistanceChannel::all_channels;
};

/// Top-left corner of a patch; depth is 0 for single-plane data.
struct Coord {
    std::size_t row = 0;
    std::size_t col = 0;
    std::size_t depth = 0;

    bool operator==(const Coord& o) const {
        return row == o.row && col == o.col && depth == o.depth;
    }
};

/// K stacked similar patches (patch_h x patch_w x patch_depth x K) plus their
/// source coordinates. coords[0] is the reference patch, distances[0] == 0,
/// and distances are sorted ascending. unique_count < K means the search
/// window held fewer candidates than K and the best ones repeat.
struct PatchGroup {
    DenseTensor data;
    std::vector<Coord> coords;
    std::vector<double> distances;
    std::size_t unique_count = 0;
};

/// Strided grid of reference coordinates with the trailing row/column/slice
/// snapped inward so the patches cover every pixel.
std::vector<Coord> reference_grid(const std::vector<std::size_t>& image_shape,
                                  const GroupingParams& params);

/// Euclidean (Frobenius) distance between two patches restricted to the
/// channel(s) selected by `rule`. luminance requires 3-channel patches.
double patch_distance(const DenseTensor& a, const DenseTensor& b, DistanceChannel rule);

/// Reusable searcher; precomputes the luminance plane when the distance rule
/// asks for it, so repeated searches over one image stay cheap.
class PatchSearcher {
public:
    PatchSearcher(const DenseTensor& image, const GroupingParams& params);

    /// Candidates within Chebyshev distance search_radius of `ref` (clamped
    /// to bounds; the depth axis joins the window only when patches do not
    /// span the full depth). Keeps the K-1 closest plus the reference first.
    /// Ties break by raster order of the candidate top-left coordinate
    /// ((row, col, depth) lexicographic).
    PatchGroup search(const Coord& ref) const;

    const GroupingParams& params() const { return params_; }

private:
    const DenseTensor* image_;
    GroupingParams params_;
    std::size_t height_ = 0, width_ = 0, channels_ = 0;
    std::vector<double> luminance_;  // H*W plane, only for the luminance rule
};

/// One-shot convenience wrapper around PatchSearcher.
PatchGroup search_similar(const DenseTensor& image, const Coord& ref,
                          const GroupingParams& params);

/// Copies the patches at `coords` into a fresh group tensor. The coords
/// double as the scatter footprint for aggregation.
PatchGroup gather_group(const DenseTensor& image, const std::vector<Coord>& coords,
                        const GroupingParams& params);

}  // namespace nlss
