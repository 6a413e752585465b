#ifndef COXFOLD_TYPES_HPP
#define COXFOLD_TYPES_HPP

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace coxfold {

/**
 * Dense Eigen aliases used across the library. Everything numeric is
 * templated on the scalar type T (double in practice; float/long double
 * compile as well), and T is the only knob: index types are Eigen::Index
 * throughout.
 */
template <class T>
using vec_t = Eigen::Matrix<T, Eigen::Dynamic, 1>;

template <class T>
using mat_t = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

/** Row-major matrix, used where per-row (per-subject) access dominates. */
template <class T>
using rowmat_t =
    Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using ivec_t = Eigen::Matrix<Eigen::Index, Eigen::Dynamic, 1>;
using index_list_t = std::vector<Eigen::Index>;

using seed_t = std::uint64_t;

}  // namespace coxfold

#endif  // COXFOLD_TYPES_HPP
