#pragma once

#include <cstddef>
#include <vector>

namespace nlss {

/// Dense N-dimensional array of doubles.
///
/// Storage is linear with the FIRST index varying fastest: element
/// (i1, ..., iN) lives at offset i1 + I1*(i2 + I2*(i3 + ...)) with 0-based
/// indices. Modes are numbered 1..N in the public algebra (unfold, fold,
/// mode_n_product) so that the mode-n unfolding places element (i1,...,iN)
/// at row in and column j = sum_{k != n} ik * Jk, Jk = prod_{m<k, m!=n} Im.
class DenseTensor {
public:
    DenseTensor() = default;

    /// Zero-filled tensor of the given shape. Every extent must be >= 1.
    explicit DenseTensor(std::vector<std::size_t> shape);

    /// Takes ownership of `data`; its length must equal the shape product.
    DenseTensor(std::vector<std::size_t> shape, std::vector<double> data);

    std::size_t order() const { return shape_.size(); }
    const std::vector<std::size_t>& shape() const { return shape_; }

    /// Extent along `mode` (1-based).
    std::size_t extent(std::size_t mode) const;

    std::size_t size() const { return data_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

    /// Element access by multi-index (0-based, one entry per mode).
    double at(const std::vector<std::size_t>& index) const;
    double& at(const std::vector<std::size_t>& index);

    /// Offset of a multi-index in the linear layout.
    std::size_t linear_index(const std::vector<std::size_t>& index) const;

    bool same_shape(const DenseTensor& other) const { return shape_ == other.shape_; }

    /// True when every element is finite (no NaN/Inf).
    bool all_finite() const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

/// Column-major matrix; interoperates with DenseTensor as its order-2 case.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // element (r, c) at data[r + c*rows]

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> d);

    double operator()(std::size_t r, std::size_t c) const { return data[r + c * rows]; }
    double& operator()(std::size_t r, std::size_t c) { return data[r + c * rows]; }

    static Matrix identity(std::size_t n);

    DenseTensor to_tensor() const;
    static Matrix from_tensor(const DenseTensor& t);
};

/// Mode-n unfolding (modes are 1-based). Result has extent(mode) rows.
Matrix unfold(const DenseTensor& t, std::size_t mode);

/// Exact inverse of unfold: unfold(fold(m, mode, s), mode) == m.
DenseTensor fold(const Matrix& m, std::size_t mode, const std::vector<std::size_t>& shape);

/// n-mode product t x_mode u; replaces extent(mode) by u.rows.
DenseTensor mode_n_product(const DenseTensor& t, const Matrix& u, std::size_t mode);

double frobenius_norm(const DenseTensor& t);
double frobenius_norm(const Matrix& m);

struct SvdResult {
    Matrix u;                            // rows x r, orthonormal columns
    std::vector<double> singular_values; // nonincreasing, length r = min(rows, cols)
    Matrix v;                            // cols x r, orthonormal columns
};

/// Thin SVD with a fixed sign convention: the largest-magnitude entry of each
/// column of `u` is nonnegative (ties broken by lowest row index), and the
/// matching column of `v` is flipped with it so m == u * diag(s) * v^T holds.
SvdResult svd(const Matrix& m);

}  // namespace nlss
