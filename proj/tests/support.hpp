#ifndef BLOCHFEM_TESTS_SUPPORT_HPP
#define BLOCHFEM_TESTS_SUPPORT_HPP

#include <doctest.h>

#include <random>

#include "blochfem/types.hpp"

namespace testing {

using blochfem::Complex;
using blochfem::CVector;
using blochfem::Real;

inline CVector random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<Real> u(-1.0, 1.0);
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = Complex(u(rng), u(rng));
  return v;
}

inline Real rel_diff(const CVector& a, const CVector& b) { return (a - b).norm() / b.norm(); }

}  // namespace testing

#endif  // BLOCHFEM_TESTS_SUPPORT_HPP
