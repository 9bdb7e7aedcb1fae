#include "nlss/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <queue>
#include <stdexcept>

namespace nlss {

namespace {

struct Dims {
    std::size_t h, w, c;
};

Dims image_dims(const DenseTensor& image) {
    if (image.order() < 2 || image.order() > 3)
        throw std::invalid_argument("grouping expects an order-2 or order-3 tensor");
    return {image.extent(1), image.extent(2), image.order() == 3 ? image.extent(3) : 1};
}

void validate_params(const Dims& d, const GroupingParams& p) {
    if (p.patch_h < 2 || p.patch_w < 2)
        throw std::invalid_argument("patch height/width must be >= 2");
    if (p.patch_depth < 1) throw std::invalid_argument("patch depth must be >= 1");
    if (p.group_size < 1) throw std::invalid_argument("group size must be >= 1");
    if (p.ref_stride < 1) throw std::invalid_argument("reference stride must be >= 1");
    if (p.patch_h > d.h || p.patch_w > d.w || p.patch_depth > d.c)
        throw std::invalid_argument("image smaller than patch");
    if (p.distance_channel == DistanceChannel::luminance && (d.c != 3 || p.patch_depth != 3))
        throw std::invalid_argument("luminance distance requires 3-channel data and patches");
}

// 0, stride, 2*stride, ... with the last position snapped to extent-patch.
std::vector<std::size_t> axis_positions(std::size_t extent, std::size_t patch,
                                        std::size_t stride) {
    const std::size_t last = extent - patch;
    std::vector<std::size_t> pos;
    for (std::size_t p = 0;; p += stride) {
        if (p >= last) {
            pos.push_back(last);
            break;
        }
        pos.push_back(p);
    }
    return pos;
}

}  // namespace

std::vector<Coord> reference_grid(const std::vector<std::size_t>& image_shape,
                                  const GroupingParams& params) {
    if (image_shape.size() < 2 || image_shape.size() > 3)
        throw std::invalid_argument("reference_grid expects a 2D or 3D shape");
    Dims d{image_shape[0], image_shape[1], image_shape.size() == 3 ? image_shape[2] : 1};
    validate_params(d, params);

    auto rows = axis_positions(d.h, params.patch_h, params.ref_stride);
    auto cols = axis_positions(d.w, params.patch_w, params.ref_stride);
    auto deps = axis_positions(d.c, params.patch_depth, params.ref_stride);

    std::vector<Coord> grid;
    grid.reserve(rows.size() * cols.size() * deps.size());
    for (std::size_t r : rows)
        for (std::size_t c : cols)
            for (std::size_t z : deps) grid.push_back({r, c, z});
    return grid;
}

double patch_distance(const DenseTensor& a, const DenseTensor& b, DistanceChannel rule) {
    if (!a.same_shape(b)) throw std::invalid_argument("patch_distance: shape mismatch");
    Dims d = image_dims(a);

    const double* pa = a.data();
    const double* pb = b.data();
    const std::size_t plane = d.h * d.w;
    double sum = 0.0;

    switch (rule) {
        case DistanceChannel::luminance: {
            if (d.c != 3)
                throw std::invalid_argument("patch_distance: luminance rule needs 3 channels");
            for (std::size_t i = 0; i < plane; ++i) {
                double ya = 0.299 * pa[i] + 0.587 * pa[i + plane] + 0.114 * pa[i + 2 * plane];
                double yb = 0.299 * pb[i] + 0.587 * pb[i + plane] + 0.114 * pb[i + 2 * plane];
                double diff = ya - yb;
                sum += diff * diff;
            }
            break;
        }
        case DistanceChannel::first_channel: {
            for (std::size_t i = 0; i < plane; ++i) {
                double diff = pa[i] - pb[i];
                sum += diff * diff;
            }
            break;
        }
        case DistanceChannel::all_channels: {
            const std::size_t n = a.size();
            for (std::size_t i = 0; i < n; ++i) {
                double diff = pa[i] - pb[i];
                sum += diff * diff;
            }
            break;
        }
    }
    return std::sqrt(sum);
}

PatchSearcher::PatchSearcher(const DenseTensor& image, const GroupingParams& params)
    : image_(&image), params_(params) {
    Dims d = image_dims(image);
    validate_params(d, params);
    height_ = d.h;
    width_ = d.w;
    channels_ = d.c;

    if (params_.distance_channel == DistanceChannel::luminance) {
        const double* p = image.data();
        const std::size_t plane = height_ * width_;
        luminance_.resize(plane);
        for (std::size_t i = 0; i < plane; ++i)
            luminance_[i] = 0.299 * p[i] + 0.587 * p[i + plane] + 0.114 * p[i + 2 * plane];
    }
}

PatchGroup PatchSearcher::search(const Coord& ref) const {
    const std::size_t ph = params_.patch_h, pw = params_.patch_w, pd = params_.patch_depth;
    const std::size_t max_r = height_ - ph, max_c = width_ - pw, max_z = channels_ - pd;
    if (ref.row > max_r || ref.col > max_c || ref.depth > max_z)
        throw std::invalid_argument("search: reference coordinate out of bounds");

    const std::size_t radius = params_.search_radius;
    const std::size_t lo_r = ref.row > radius ? ref.row - radius : 0;
    const std::size_t hi_r = std::min(max_r, ref.row + radius);
    const std::size_t lo_c = ref.col > radius ? ref.col - radius : 0;
    const std::size_t hi_c = std::min(max_c, ref.col + radius);
    const std::size_t lo_z = ref.depth > radius ? ref.depth - radius : 0;
    const std::size_t hi_z = std::min(max_z, ref.depth + radius);

    struct Entry {
        double dist2;
        std::size_t raster;
        Coord coord;
    };
    auto closer = [](const Entry& a, const Entry& b) {
        if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
        return a.raster < b.raster;
    };
    // max-heap: worst kept candidate on top
    std::priority_queue<Entry, std::vector<Entry>, decltype(closer)> kept(closer);
    const std::size_t want = params_.group_size - 1;

    const std::size_t plane = height_ * width_;
    const double* img = image_->data();
    const double* lum = luminance_.data();

    for (std::size_t r = lo_r; r <= hi_r; ++r) {
        for (std::size_t c = lo_c; c <= hi_c; ++c) {
            for (std::size_t z = lo_z; z <= hi_z; ++z) {
                if (r == ref.row && c == ref.col && z == ref.depth) continue;
                const double bound = (want > 0 && kept.size() == want)
                                         ? kept.top().dist2
                                         : std::numeric_limits<double>::infinity();

                double sum = 0.0;
                bool aborted = false;
                const std::size_t nplanes =
                    params_.distance_channel == DistanceChannel::all_channels ? pd : 1;
                for (std::size_t zz = 0; zz < nplanes && !aborted; ++zz) {
                    const double* base;
                    std::size_t ref_off, cand_off;
                    if (params_.distance_channel == DistanceChannel::luminance) {
                        base = lum;
                        ref_off = ref.row + ref.col * height_;
                        cand_off = r + c * height_;
                    } else if (params_.distance_channel == DistanceChannel::first_channel) {
                        base = img;
                        ref_off = ref.row + ref.col * height_;
                        cand_off = r + c * height_;
                    } else {
                        base = img;
                        ref_off = ref.row + ref.col * height_ + (ref.depth + zz) * plane;
                        cand_off = r + c * height_ + (z + zz) * plane;
                    }
                    for (std::size_t cc = 0; cc < pw; ++cc) {
                        const double* ra = base + ref_off + cc * height_;
                        const double* rb = base + cand_off + cc * height_;
                        for (std::size_t rr = 0; rr < ph; ++rr) {
                            double diff = ra[rr] - rb[rr];
                            sum += diff * diff;
                        }
                        if (sum > bound) {
                            aborted = true;
                            break;
                        }
                    }
                }
                if (aborted || want == 0) continue;

                Entry e{sum, (r * width_ + c) * channels_ + z, {r, c, z}};
                if (kept.size() < want) {
                    kept.push(e);
                } else if (closer(e, kept.top())) {
                    kept.pop();
                    kept.push(e);
                }
            }
        }
    }

    std::vector<Entry> sorted;
    sorted.reserve(kept.size() + 1);
    while (!kept.empty()) {
        sorted.push_back(kept.top());
        kept.pop();
    }
    std::sort(sorted.begin(), sorted.end(), closer);
    sorted.insert(sorted.begin(), Entry{0.0, 0, ref});

    const std::size_t k = params_.group_size;
    const std::size_t m = sorted.size();  // distinct patches available
    std::vector<Coord> coords;
    std::vector<double> distances;
    coords.reserve(k);
    distances.reserve(k);
    // Fewer candidates than K: repeat the best ones cyclically, keeping the
    // distance list sorted by emitting repeats adjacently.
    for (std::size_t p = 0; p < m && coords.size() < k; ++p) {
        std::size_t copies = (k - p + m - 1) / m;  // how many of sorted[p]
        for (std::size_t t = 0; t < copies && coords.size() < k; ++t) {
            coords.push_back(sorted[p].coord);
            distances.push_back(std::sqrt(sorted[p].dist2));
        }
    }

    PatchGroup group = gather_group(*image_, coords, params_);
    group.distances = std::move(distances);
    group.unique_count = std::min(m, k);
    return group;
}

PatchGroup search_similar(const DenseTensor& image, const Coord& ref,
                          const GroupingParams& params) {
    return PatchSearcher(image, params).search(ref);
}

PatchGroup gather_group(const DenseTensor& image, const std::vector<Coord>& coords,
                        const GroupingParams& params) {
    Dims d = image_dims(image);
    validate_params(d, params);
    if (coords.empty()) throw std::invalid_argument("gather_group: no coordinates");

    const std::size_t ph = params.patch_h, pw = params.patch_w, pd = params.patch_depth;
    const std::size_t k = coords.size();
    const std::size_t plane = d.h * d.w;

    DenseTensor data({ph, pw, pd, k});
    double* dst = data.data();
    const double* src = image.data();

    for (std::size_t i = 0; i < k; ++i) {
        const Coord& at = coords[i];
        if (at.row + ph > d.h || at.col + pw > d.w || at.depth + pd > d.c)
            throw std::invalid_argument("gather_group: coordinate out of bounds");
        for (std::size_t z = 0; z < pd; ++z) {
            for (std::size_t c = 0; c < pw; ++c) {
                const double* col = src + at.row + (at.col + c) * d.h + (at.depth + z) * plane;
                double* out = dst + ph * (c + pw * (z + pd * i));
                std::memcpy(out, col, ph * sizeof(double));
            }
        }
    }

    PatchGroup group;
    group.data = std::move(data);
    group.coords = coords;
    group.distances.assign(k, 0.0);
    std::size_t distinct = 0;
    for (std::size_t i = 0; i < k; ++i) {
        bool seen = false;
        for (std::size_t j = 0; j < i && !seen; ++j) seen = coords[i] == coords[j];
        if (!seen) ++distinct;
    }
    group.unique_count = distinct;
    return group;
}

}  // namespace nlss
