#ifndef BLOCHFEM_MANUFACTURED_HPP
#define BLOCHFEM_MANUFACTURED_HPP

#include <functional>
#include <string>

#include "blochfem/assembly.hpp"
#include "blochfem/material.hpp"

namespace blochfem {

/// Reference solution with its Bloch transform, the transformed volume source
/// and the transformed top-boundary correction r = d_n u - T u.
struct ManufacturedCase {
  std::string id;
  int d = 2;
  int translates = 0;  ///< |j|_inf cutoff of periodised sums
  int modes = 0;       ///< |m|_inf cutoff of Rayleigh series
  Coefficient exact;
  std::function<Complex(const Alpha&, const Point&)> transformed;
  TransformedSource source;
  /// Physical boundary correction r(x) on the top; empty for the Gaussian cases.
  Coefficient correction;
};

/// "u1"/"u2" (d = 2) or "u3"/"u4" (d = 3). Throws ConfigError otherwise.
/// The material supplies k, k^2 n_p^2 and k^2 q.
ManufacturedCase manufactured_case(const std::string& id, std::shared_ptr<const Material> material);

}  // namespace blochfem

#endif  // BLOCHFEM_MANUFACTURED_HPP
