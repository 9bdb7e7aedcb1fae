#include "support/reference_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nlss::testing {

namespace {

struct Dims {
    std::size_t h, w, c;
};

Dims dims_of(const DenseTensor& image) {
    return {image.extent(1), image.extent(2), image.order() == 3 ? image.extent(3) : 1};
}

double at3(const DenseTensor& t, const Dims& d, std::size_t r, std::size_t c, std::size_t z) {
    return t.data()[r + c * d.h + z * d.h * d.w];
}

// Squared patch distance, accumulated plane -> column -> row so that exact
// ties match the production scan bit for bit.
double distance2(const DenseTensor& image, const Dims& d, const GroupingParams& p,
                 const Coord& a, const Coord& b) {
    double sum = 0.0;
    if (p.distance_channel == DistanceChannel::luminance) {
        for (std::size_t c = 0; c < p.patch_w; ++c)
            for (std::size_t r = 0; r < p.patch_h; ++r) {
                double ya = 0.299 * at3(image, d, a.row + r, a.col + c, 0) +
                            0.587 * at3(image, d, a.row + r, a.col + c, 1) +
                            0.114 * at3(image, d, a.row + r, a.col + c, 2);
                double yb = 0.299 * at3(image, d, b.row + r, b.col + c, 0) +
                            0.587 * at3(image, d, b.row + r, b.col + c, 1) +
                            0.114 * at3(image, d, b.row + r, b.col + c, 2);
                double diff = ya - yb;
                sum += diff * diff;
            }
        return sum;
    }
    const std::size_t planes = p.distance_channel == DistanceChannel::all_channels ? p.patch_depth : 1;
    for (std::size_t z = 0; z < planes; ++z)
        for (std::size_t c = 0; c < p.patch_w; ++c)
            for (std::size_t r = 0; r < p.patch_h; ++r) {
                double diff = at3(image, d, a.row + r, a.col + c, a.depth + z) -
                              at3(image, d, b.row + r, b.col + c, b.depth + z);
                sum += diff * diff;
            }
    return sum;
}

std::vector<std::size_t> grid_axis(std::size_t extent, std::size_t patch, std::size_t stride) {
    std::vector<std::size_t> out;
    const std::size_t last = extent - patch;
    for (std::size_t p = 0;; p += stride) {
        if (p >= last) {
            out.push_back(last);
            break;
        }
        out.push_back(p);
    }
    return out;
}

// ---- plain-loop matrix helpers on column-major Matrix ----

Matrix transpose_ref(const Matrix& m) {
    Matrix out(m.cols, m.rows);
    for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t c = 0; c < m.cols; ++c) out(c, r) = m(r, c);
    return out;
}

Matrix multiply_ref(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw std::logic_error("reference multiply: shape mismatch");
    Matrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < b.cols; ++j) {
            double sum = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) sum += a(i, k) * b(k, j);
            out(i, j) = sum;
        }
    return out;
}

// Mode-4 unfolding of an (I1, I2, I3, I4) tensor straight from the index map:
// row i4, column i1 + i2*I1 + i3*I1*I2.
Matrix unfold4_ref(const DenseTensor& g) {
    const std::size_t i1 = g.extent(1), i2 = g.extent(2), i3 = g.extent(3), i4 = g.extent(4);
    Matrix out(i4, i1 * i2 * i3);
    for (std::size_t a = 0; a < i1; ++a)
        for (std::size_t b = 0; b < i2; ++b)
            for (std::size_t c = 0; c < i3; ++c)
                for (std::size_t k = 0; k < i4; ++k)
                    out(k, a + b * i1 + c * i1 * i2) =
                        g.at({a, b, c, k});
    return out;
}

Matrix unfold_mode_ref(const DenseTensor& g, std::size_t mode) {
    const std::vector<std::size_t>& shape = g.shape();
    const std::size_t n = mode - 1;
    std::size_t cols = 1;
    for (std::size_t k = 0; k < shape.size(); ++k)
        if (k != n) cols *= shape[k];
    Matrix out(shape[n], cols);

    std::vector<std::size_t> idx(shape.size(), 0);
    const std::size_t total = g.size();
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rem = flat;
        for (std::size_t k = 0; k < shape.size(); ++k) {
            idx[k] = rem % shape[k];
            rem /= shape[k];
        }
        std::size_t j = 0, stride = 1;
        for (std::size_t k = 0; k < shape.size(); ++k) {
            if (k == n) continue;
            j += idx[k] * stride;
            stride *= shape[k];
        }
        out(idx[n], j) = g[flat];
    }
    return out;
}

const double kOpp[3][3] = {{1.0 / 3, 1.0 / 3, 1.0 / 3},
                           {1.0 / 2, 0.0, -1.0 / 2},
                           {1.0 / 4, -1.0 / 2, 1.0 / 4}};
const double kOppInv[3][3] = {{1.0, 1.0, 2.0 / 3},
                              {1.0, 0.0, -4.0 / 3},
                              {1.0, -1.0, 2.0 / 3}};

DenseTensor apply_channel_ref(const DenseTensor& g, const double m[3][3]) {
    const std::size_t i1 = g.extent(1), i2 = g.extent(2), i4 = g.extent(4);
    if (g.extent(3) != 3) throw std::logic_error("reference opponent: need 3 channels");
    DenseTensor out(g.shape());
    for (std::size_t k = 0; k < i4; ++k)
        for (std::size_t b = 0; b < i2; ++b)
            for (std::size_t a = 0; a < i1; ++a) {
                double v[3];
                for (std::size_t c = 0; c < 3; ++c) v[c] = g.at({a, b, c, k});
                for (std::size_t c = 0; c < 3; ++c)
                    out.at({a, b, c, k}) = m[c][0] * v[0] + m[c][1] * v[1] + m[c][2] * v[2];
            }
    return out;
}

std::size_t threshold_ref(std::vector<double>& v, double tau) {
    std::size_t retained = 0;
    for (double& x : v) {
        if (std::abs(x) >= tau)
            ++retained;
        else
            x = 0.0;
    }
    return retained;
}

bool zero_ref(const DenseTensor& g) {
    for (double v : g.values())
        if (v != 0.0) return false;
    return true;
}

}  // namespace

std::vector<Coord> reference_search(const DenseTensor& image, const Coord& ref,
                                    const GroupingParams& p) {
    Dims d = dims_of(image);
    const std::size_t max_r = d.h - p.patch_h;
    const std::size_t max_c = d.w - p.patch_w;
    const std::size_t max_z = d.c - p.patch_depth;
    const std::size_t radius = p.search_radius;

    struct Cand {
        double dist2;
        std::size_t raster;
        Coord coord;
    };
    std::vector<Cand> cands;
    for (std::size_t r = ref.row > radius ? ref.row - radius : 0;
         r <= std::min(max_r, ref.row + radius); ++r)
        for (std::size_t c = ref.col > radius ? ref.col - radius : 0;
             c <= std::min(max_c, ref.col + radius); ++c)
            for (std::size_t z = ref.depth > radius ? ref.depth - radius : 0;
                 z <= std::min(max_z, ref.depth + radius); ++z) {
                Coord coord{r, c, z};
                if (coord == ref) continue;
                cands.push_back(
                    {distance2(image, d, p, ref, coord), (r * d.w + c) * d.c + z, coord});
            }

    std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
        return a.raster < b.raster;
    });

    std::vector<Coord> sorted{ref};
    for (const Cand& c : cands) sorted.push_back(c.coord);
    const std::size_t m = std::min(sorted.size(), p.group_size);

    std::vector<Coord> out;
    for (std::size_t pos = 0; pos < m && out.size() < p.group_size; ++pos) {
        std::size_t copies = (p.group_size - pos + m - 1) / m;
        for (std::size_t t = 0; t < copies && out.size() < p.group_size; ++t)
            out.push_back(sorted[pos]);
    }
    return out;
}

DenseTensor reference_msvd_filter(const DenseTensor& group, double tau, bool opponent,
                                  std::size_t* retained) {
    if (retained) *retained = 0;
    if (zero_ref(group)) return group;
    DenseTensor g = opponent ? apply_channel_ref(group, kOpp) : group;

    Matrix g4 = unfold4_ref(g);
    Matrix u = svd(g4).u;
    Matrix v = svd(transpose_ref(g4)).u;

    Matrix coeffs = multiply_ref(multiply_ref(transpose_ref(u), g4), v);
    std::size_t kept = threshold_ref(coeffs.data, tau);
    if (retained) *retained = kept;
    Matrix rebuilt = multiply_ref(multiply_ref(u, coeffs), transpose_ref(v));

    const std::size_t i1 = g.extent(1), i2 = g.extent(2), i3 = g.extent(3), i4 = g.extent(4);
    DenseTensor out(g.shape());
    for (std::size_t a = 0; a < i1; ++a)
        for (std::size_t b = 0; b < i2; ++b)
            for (std::size_t c = 0; c < i3; ++c)
                for (std::size_t k = 0; k < i4; ++k)
                    out.at({a, b, c, k}) = rebuilt(k, a + b * i1 + c * i1 * i2);
    return opponent ? apply_channel_ref(out, kOppInv) : out;
}

DenseTensor reference_hosvd_filter(const DenseTensor& group, double tau, bool opponent) {
    if (zero_ref(group)) return group;
    DenseTensor g = opponent ? apply_channel_ref(group, kOpp) : group;

    const std::size_t e[4] = {g.extent(1), g.extent(2), g.extent(3), g.extent(4)};
    Matrix u[4];
    std::size_t r[4];
    for (std::size_t m = 0; m < 4; ++m) {
        u[m] = svd(unfold_mode_ref(g, m + 1)).u;
        r[m] = u[m].cols;
    }

    // Full contraction for the core and the reconstruction; O(n^2) but robust.
    DenseTensor core({r[0], r[1], r[2], r[3]});
    for (std::size_t j0 = 0; j0 < r[0]; ++j0)
        for (std::size_t j1 = 0; j1 < r[1]; ++j1)
            for (std::size_t j2 = 0; j2 < r[2]; ++j2)
                for (std::size_t j3 = 0; j3 < r[3]; ++j3) {
                    double sum = 0.0;
                    for (std::size_t a = 0; a < e[0]; ++a)
                        for (std::size_t b = 0; b < e[1]; ++b)
                            for (std::size_t c = 0; c < e[2]; ++c)
                                for (std::size_t k = 0; k < e[3]; ++k)
                                    sum += g.at({a, b, c, k}) * u[0](a, j0) * u[1](b, j1) *
                                           u[2](c, j2) * u[3](k, j3);
                    core.at({j0, j1, j2, j3}) = sum;
                }

    threshold_ref(core.values(), tau);

    DenseTensor out(g.shape());
    for (std::size_t a = 0; a < e[0]; ++a)
        for (std::size_t b = 0; b < e[1]; ++b)
            for (std::size_t c = 0; c < e[2]; ++c)
                for (std::size_t k = 0; k < e[3]; ++k) {
                    double sum = 0.0;
                    for (std::size_t j0 = 0; j0 < r[0]; ++j0)
                        for (std::size_t j1 = 0; j1 < r[1]; ++j1)
                            for (std::size_t j2 = 0; j2 < r[2]; ++j2)
                                for (std::size_t j3 = 0; j3 < r[3]; ++j3)
                                    sum += core.at({j0, j1, j2, j3}) * u[0](a, j0) * u[1](b, j1) *
                                           u[2](c, j2) * u[3](k, j3);
                    out.at({a, b, c, k}) = sum;
                }
    return opponent ? apply_channel_ref(out, kOppInv) : out;
}

DenseTensor reference_denoise(const DenseTensor& image, const DenoiseConfig& cfg) {
    Dims d = dims_of(image);
    const GroupingParams& p = cfg.grouping;
    const double tau = cfg.filter.lambda * cfg.filter.sigma;
    const bool opponent = cfg.filter.color_mode == ColorMode::opponent;

    std::vector<double> value(d.h * d.w * d.c, 0.0);
    std::vector<double> weight(d.h * d.w * d.c, 0.0);

    DenseTensor image3 = image.order() == 3 ? image : DenseTensor({d.h, d.w, 1}, image.values());

    for (std::size_t gr : grid_axis(d.h, p.patch_h, p.ref_stride))
        for (std::size_t gc : grid_axis(d.w, p.patch_w, p.ref_stride))
            for (std::size_t gz : grid_axis(d.c, p.patch_depth, p.ref_stride)) {
                std::vector<Coord> coords = reference_search(image3, {gr, gc, gz}, p);

                DenseTensor group({p.patch_h, p.patch_w, p.patch_depth, coords.size()});
                for (std::size_t k = 0; k < coords.size(); ++k)
                    for (std::size_t z = 0; z < p.patch_depth; ++z)
                        for (std::size_t c = 0; c < p.patch_w; ++c)
                            for (std::size_t r = 0; r < p.patch_h; ++r)
                                group.at({r, c, z, k}) =
                                    at3(image3, d, coords[k].row + r, coords[k].col + c,
                                        coords[k].depth + z);

                DenseTensor filtered;
                std::size_t retained = 0;
                if (cfg.filter.family == FilterFamily::msvd) {
                    filtered = reference_msvd_filter(group, tau, opponent);
                } else {
                    filtered = reference_hosvd_filter(group, tau, opponent);
                }
                // retained count recomputed for the aggregation weight
                if (cfg.weight_mode == WeightMode::inverse_retained) {
                    DenseTensor g = opponent ? apply_channel_ref(group, kOpp) : group;
                    if (!zero_ref(g)) {
                        Matrix g4 = unfold4_ref(g);
                        Matrix u = svd(g4).u;
                        Matrix v = svd(transpose_ref(g4)).u;
                        Matrix coeffs = multiply_ref(multiply_ref(transpose_ref(u), g4), v);
                        retained = threshold_ref(coeffs.data, tau);
                    }
                }
                const double w = cfg.weight_mode == WeightMode::uniform
                                     ? 1.0
                                     : 1.0 / (1.0 + static_cast<double>(retained));

                for (std::size_t k = 0; k < coords.size(); ++k)
                    for (std::size_t z = 0; z < p.patch_depth; ++z)
                        for (std::size_t c = 0; c < p.patch_w; ++c)
                            for (std::size_t r = 0; r < p.patch_h; ++r) {
                                std::size_t i = (coords[k].row + r) + (coords[k].col + c) * d.h +
                                                (coords[k].depth + z) * d.h * d.w;
                                value[i] += w * filtered.at({r, c, z, k});
                                weight[i] += w;
                            }
            }

    DenseTensor out(image.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = value[i] / weight[i];
    if (cfg.clip_output)
        for (double& v : out.values()) v = std::clamp(v, 0.0, cfg.peak);
    return out;
}

}  // namespace nlss::testing
