#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Core>

namespace btnv::test {

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), std::numeric_limits<double>::min());
}

template <class A, class B>
double rel_err(const Eigen::MatrixBase<A>& got, const Eigen::MatrixBase<B>& want) {
  return (got - want).norm() / std::max(want.norm(), std::numeric_limits<double>::min());
}

}  // namespace btnv::test
