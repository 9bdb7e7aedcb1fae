#pragma once

#include <Eigen/Dense>

#include "nlss/tensor.hpp"

namespace nlss::detail {

inline Eigen::Map<const Eigen::MatrixXd> map_matrix(const Matrix& m) {
    return {m.data.data(), static_cast<Eigen::Index>(m.rows),
            static_cast<Eigen::Index>(m.cols)};
}

inline Eigen::Map<Eigen::MatrixXd> map_matrix(Matrix& m) {
    return {m.data.data(), static_cast<Eigen::Index>(m.rows),
            static_cast<Eigen::Index>(m.cols)};
}

inline Matrix from_eigen(const Eigen::MatrixXd& e) {
    Matrix m(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
    Eigen::Map<Eigen::MatrixXd>(m.data.data(), e.rows(), e.cols()) = e;
    return m;
}

}  // namespace nlss::detail
