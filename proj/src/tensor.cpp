#include "nlss/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "eigen_bridge.hpp"

namespace nlss {

namespace {

std::size_t checked_product(const std::vector<std::size_t>& shape) {
    if (shape.empty()) throw std::invalid_argument("tensor order must be >= 1");
    std::size_t n = 1;
    for (std::size_t e : shape) {
        if (e == 0) throw std::invalid_argument("tensor extents must be >= 1");
        n *= e;
    }
    return n;
}

}  // namespace

DenseTensor::DenseTensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(checked_product(shape_), 0.0) {}

DenseTensor::DenseTensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_product(shape_) != data_.size())
        throw std::invalid_argument("tensor data length does not match shape product");
}

std::size_t DenseTensor::extent(std::size_t mode) const {
    if (mode < 1 || mode > shape_.size())
        throw std::invalid_argument("mode out of range");
    return shape_[mode - 1];
}

std::size_t DenseTensor::linear_index(const std::vector<std::size_t>& index) const {
    if (index.size() != shape_.size())
        throw std::invalid_argument("index order does not match tensor order");
    std::size_t offset = 0;
    std::size_t stride = 1;
    for (std::size_t k = 0; k < shape_.size(); ++k) {
        if (index[k] >= shape_[k]) throw std::invalid_argument("index out of bounds");
        offset += index[k] * stride;
        stride *= shape_[k];
    }
    return offset;
}

double DenseTensor::at(const std::vector<std::size_t>& index) const {
    return data_[linear_index(index)];
}

double& DenseTensor::at(const std::vector<std::size_t>& index) {
    return data_[linear_index(index)];
}

bool DenseTensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> d)
    : rows(r), cols(c), data(std::move(d)) {
    if (rows * cols != data.size())
        throw std::invalid_argument("matrix data length does not match rows*cols");
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseTensor Matrix::to_tensor() const {
    return DenseTensor({rows, cols}, data);
}

Matrix Matrix::from_tensor(const DenseTensor& t) {
    if (t.order() != 2) throw std::invalid_argument("matrix view requires an order-2 tensor");
    return Matrix(t.extent(1), t.extent(2), t.values());
}

namespace {

// Shared odometer walk for unfold/fold. Visits columns of the mode-n
// unfolding in ascending j while tracking the base offset of each column in
// the tensor's linear layout; `fn(col, base, mode_stride)` handles the copy.
template <typename Fn>
void for_each_unfold_column(const std::vector<std::size_t>& shape, std::size_t mode, Fn&& fn) {
    const std::size_t order = shape.size();
    const std::size_t n = mode - 1;

    std::vector<std::size_t> strides(order);
    std::size_t s = 1;
    for (std::size_t k = 0; k < order; ++k) {
        strides[k] = s;
        s *= shape[k];
    }

    std::size_t cols = 1;
    for (std::size_t k = 0; k < order; ++k)
        if (k != n) cols *= shape[k];

    std::vector<std::size_t> idx(order, 0);
    std::size_t base = 0;
    for (std::size_t j = 0; j < cols; ++j) {
        fn(j, base, strides[n]);
        for (std::size_t k = 0; k < order; ++k) {
            if (k == n) continue;
            ++idx[k];
            base += strides[k];
            if (idx[k] < shape[k]) break;
            base -= shape[k] * strides[k];
            idx[k] = 0;
        }
    }
}

}  // namespace

Matrix unfold(const DenseTensor& t, std::size_t mode) {
    if (mode < 1 || mode > t.order()) throw std::invalid_argument("unfold: mode out of range");
    const std::size_t rows = t.extent(mode);
    const std::size_t cols = t.size() / rows;
    Matrix out(rows, cols);
    const double* src = t.data();
    double* dst = out.data.data();
    for_each_unfold_column(t.shape(), mode, [&](std::size_t j, std::size_t base, std::size_t stride) {
        double* col = dst + j * rows;
        for (std::size_t r = 0; r < rows; ++r) col[r] = src[base + r * stride];
    });
    return out;
}

DenseTensor fold(const Matrix& m, std::size_t mode, const std::vector<std::size_t>& shape) {
    if (mode < 1 || mode > shape.size()) throw std::invalid_argument("fold: mode out of range");
    std::size_t total = checked_product(shape);
    if (m.rows != shape[mode - 1] || m.rows * m.cols != total)
        throw std::invalid_argument("fold: matrix dimensions inconsistent with target shape");
    DenseTensor out(shape);
    const double* src = m.data.data();
    double* dst = out.data();
    const std::size_t rows = m.rows;
    for_each_unfold_column(shape, mode, [&](std::size_t j, std::size_t base, std::size_t stride) {
        const double* col = src + j * rows;
        for (std::size_t r = 0; r < rows; ++r) dst[base + r * stride] = col[r];
    });
    return out;
}

DenseTensor mode_n_product(const DenseTensor& t, const Matrix& u, std::size_t mode) {
    if (mode < 1 || mode > t.order())
        throw std::invalid_argument("mode_n_product: mode out of range");
    if (u.cols != t.extent(mode))
        throw std::invalid_argument("mode_n_product: matrix columns must match tensor extent");

    Matrix unfolded = unfold(t, mode);
    Matrix product = detail::from_eigen(detail::map_matrix(u) * detail::map_matrix(unfolded));

    std::vector<std::size_t> new_shape = t.shape();
    new_shape[mode - 1] = u.rows;
    return fold(product, mode, new_shape);
}

double frobenius_norm(const DenseTensor& t) {
    double sum = 0.0;
    for (double v : t.values()) sum += v * v;
    return std::sqrt(sum);
}

double frobenius_norm(const Matrix& m) {
    double sum = 0.0;
    for (double v : m.data) sum += v * v;
    return std::sqrt(sum);
}

SvdResult svd(const Matrix& m) {
    for (double v : m.data)
        if (!std::isfinite(v)) throw std::invalid_argument("svd: input has non-finite entries");
    if (m.rows == 0 || m.cols == 0) throw std::invalid_argument("svd: empty matrix");

    Eigen::JacobiSVD<Eigen::MatrixXd> dec(detail::map_matrix(m),
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (dec.info() != Eigen::Success) {
        std::ostringstream msg;
        msg << "svd: decomposition failed on a " << m.rows << "x" << m.cols << " matrix";
        throw std::runtime_error(msg.str());
    }

    Eigen::MatrixXd u = dec.matrixU();
    Eigen::MatrixXd v = dec.matrixV();

    // Sign convention: largest-magnitude entry of each left singular vector
    // nonnegative, ties broken by lowest row index.
    for (Eigen::Index c = 0; c < u.cols(); ++c) {
        Eigen::Index imax = 0;
        double best = std::abs(u(0, c));
        for (Eigen::Index r = 1; r < u.rows(); ++r) {
            double a = std::abs(u(r, c));
            if (a > best) {
                best = a;
                imax = r;
            }
        }
        if (u(imax, c) < 0.0) {
            u.col(c) = -u.col(c);
            v.col(c) = -v.col(c);
        }
    }

    SvdResult out;
    out.u = detail::from_eigen(u);
    out.v = detail::from_eigen(v);
    out.singular_values.assign(dec.singularValues().data(),
                               dec.singularValues().data() + dec.singularValues().size());
    return out;
}

}  // namespace nlss
