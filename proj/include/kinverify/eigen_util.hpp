#pragma once

#include <Eigen/Dense>

namespace kinverify {

/// Shape and element-wise equality; Eigen's operator== asserts on shape.
template <class A, class B>
bool identical(const Eigen::DenseBase<A>& a, const Eigen::DenseBase<B>& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.derived().array() == b.derived().array()).all();
}

}  // namespace kinverify
