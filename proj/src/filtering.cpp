#include "nlss/filtering.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "eigen_bridge.hpp"

namespace nlss {

namespace {

const Matrix& opponent_matrix() {
    static const Matrix o(3, 3,
                          {1.0 / 3.0, 1.0 / 2.0, 1.0 / 4.0,    // column 1
                           1.0 / 3.0, 0.0, -1.0 / 2.0,         // column 2
                           1.0 / 3.0, -1.0 / 2.0, 1.0 / 4.0}); // column 3
    return o;
}

const Matrix& opponent_matrix_inverse() {
    static const Matrix o(3, 3,
                          {1.0, 1.0, 1.0,                        // column 1
                           1.0, 0.0, -1.0,                       // column 2
                           2.0 / 3.0, -4.0 / 3.0, 2.0 / 3.0});   // column 3
    return o;
}

DenseTensor apply_channel_matrix(const DenseTensor& t, std::size_t mode, const Matrix& m) {
    if (mode < 1 || mode > t.order())
        throw std::invalid_argument("opponent transform: mode out of range");
    if (t.extent(mode) != 3)
        throw std::invalid_argument("opponent transform: channel extent must be 3");
    return mode_n_product(t, m, mode);
}

bool all_zero(const DenseTensor& t) {
    for (double v : t.values())
        if (v != 0.0) return false;
    return true;
}

std::size_t threshold_in_place(std::vector<double>& values, double tau) {
    std::size_t retained = 0;
    for (double& v : values) {
        if (std::abs(v) >= tau)
            ++retained;
        else
            v = 0.0;
    }
    return retained;
}

void check_filter_params(const FilterParams& p) {
    if (!(p.sigma > 0.0)) throw std::invalid_argument("filter sigma must be positive");
    if (!(p.lambda > 0.0)) throw std::invalid_argument("filter lambda must be positive");
}

// Transforms from an already color-transformed group tensor.
TransformSet msvd_transforms_from(const DenseTensor& gprime) {
    const std::size_t k = gprime.extent(4);
    const std::size_t hwn = gprime.size() / k;

    TransformSet set;
    set.family = FilterFamily::msvd;

    if (all_zero(gprime)) {
        set.group_u = Matrix::identity(k);
        const std::size_t r = std::min(hwn, k);
        set.patch_v = Matrix(hwn, r);
        for (std::size_t i = 0; i < r; ++i) set.patch_v(i, i) = 1.0;
        return set;
    }

    // The linear layout of (H, W, N, K) is exactly the (H*W*N) x K mode-4
    // unfolding transpose, so both factor matrices come from one buffer.
    Matrix g4(k, hwn);
    {
        Eigen::Map<const Eigen::MatrixXd> natural(gprime.data(),
                                                  static_cast<Eigen::Index>(hwn),
                                                  static_cast<Eigen::Index>(k));
        detail::map_matrix(g4) = natural.transpose();
    }
    set.group_u = svd(g4).u;

    Matrix g4t(hwn, k, gprime.values());
    set.patch_v = svd(g4t).u;
    return set;
}

DenseTensor msvd_reconstruct(const DenseTensor& gprime, const TransformSet& set,
                             double tau, std::size_t& retained) {
    const std::size_t k = gprime.extent(4);
    const std::size_t hwn = gprime.size() / k;

    auto u = detail::map_matrix(set.group_u);   // K x r
    auto v = detail::map_matrix(set.patch_v);   // HWN x r
    Eigen::Map<const Eigen::MatrixXd> natural(gprime.data(), static_cast<Eigen::Index>(hwn),
                                              static_cast<Eigen::Index>(k));

    // C = U^T G_(4) V, with G_(4) = natural^T
    Matrix coeffs = detail::from_eigen(u.transpose() * natural.transpose() * v);
    retained = threshold_in_place(coeffs.data, tau);

    // G_(4) = U C V^T, stored back in natural (HWN x K) orientation
    DenseTensor out(gprime.shape());
    Eigen::Map<Eigen::MatrixXd> out_map(out.data(), static_cast<Eigen::Index>(hwn),
                                        static_cast<Eigen::Index>(k));
    out_map = v * detail::map_matrix(coeffs).transpose() * u.transpose();
    return out;
}

}  // namespace

DenseTensor opponent_forward(const DenseTensor& t, std::size_t channel_mode) {
    return apply_channel_matrix(t, channel_mode, opponent_matrix());
}

DenseTensor opponent_inverse(const DenseTensor& t, std::size_t channel_mode) {
    return apply_channel_matrix(t, channel_mode, opponent_matrix_inverse());
}

std::pair<DenseTensor, std::size_t> hard_threshold(const DenseTensor& coeffs, double tau) {
    if (tau < 0.0) throw std::invalid_argument("hard_threshold: tau must be >= 0");
    DenseTensor out = coeffs;
    std::size_t retained = threshold_in_place(out.values(), tau);
    return {std::move(out), retained};
}

TransformSet learn_msvd_transforms(const PatchGroup& group, ColorMode color_mode) {
    if (group.data.order() != 4)
        throw std::invalid_argument("learn_msvd_transforms: group tensor must be order 4");
    if (color_mode == ColorMode::opponent)
        return msvd_transforms_from(opponent_forward(group.data, 3));
    return msvd_transforms_from(group.data);
}

FilterResult msvd_filter_group(const PatchGroup& group, const FilterParams& params) {
    if (params.family != FilterFamily::msvd)
        throw std::invalid_argument("msvd_filter_group: wrong filter family");
    check_filter_params(params);
    if (group.data.order() != 4)
        throw std::runtime_error("msvd_filter_group: group tensor must be order 4");

    FilterResult result;
    result.group = group;
    if (all_zero(group.data)) return result;  // degenerate group, nothing to do

    const bool opponent = params.color_mode == ColorMode::opponent;
    DenseTensor gprime = opponent ? opponent_forward(group.data, 3) : group.data;

    TransformSet set = msvd_transforms_from(gprime);
    const double tau = params.lambda * params.sigma;
    DenseTensor filtered = msvd_reconstruct(gprime, set, tau, result.retained);

    result.group.data = opponent ? opponent_inverse(filtered, 3) : std::move(filtered);
    return result;
}

FilterResult hosvd_filter_group(const PatchGroup& group, const FilterParams& params) {
    if (params.family != FilterFamily::hosvd4d)
        throw std::invalid_argument("hosvd_filter_group: wrong filter family");
    check_filter_params(params);
    if (group.data.order() != 4)
        throw std::runtime_error("hosvd_filter_group: group tensor must be order 4");

    FilterResult result;
    result.group = group;
    if (all_zero(group.data)) return result;

    const bool opponent = params.color_mode == ColorMode::opponent;
    DenseTensor gprime = opponent ? opponent_forward(group.data, 3) : group.data;

    std::array<Matrix, 4> factors;
    for (std::size_t m = 1; m <= 4; ++m) factors[m - 1] = svd(unfold(gprime, m)).u;

    DenseTensor core = gprime;
    for (std::size_t m = 1; m <= 4; ++m) {
        Matrix ut = detail::from_eigen(detail::map_matrix(factors[m - 1]).transpose());
        core = mode_n_product(core, ut, m);
    }

    const double tau = params.lambda * params.sigma;
    result.retained = threshold_in_place(core.values(), tau);

    for (std::size_t m = 1; m <= 4; ++m) core = mode_n_product(core, factors[m - 1], m);

    result.group.data = opponent ? opponent_inverse(core, 3) : std::move(core);
    return result;
}

FilterResult filter_group(const PatchGroup& group, const FilterParams& params) {
    return params.family == FilterFamily::msvd ? msvd_filter_group(group, params)
                                               : hosvd_filter_group(group, params);
}

}  // namespace nlss
