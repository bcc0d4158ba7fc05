#ifndef LASIL_TENSOR_HPP
#define LASIL_TENSOR_HPP

#include <Eigen/Core>

namespace lasil {

/// Dense row-major matrix of doubles; rows index nodes throughout.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

}  // namespace lasil

#endif  // LASIL_TENSOR_HPP
