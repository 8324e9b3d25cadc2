#ifndef BLOCHFEM_SPECIAL_HPP
#define BLOCHFEM_SPECIAL_HPP

#include "blochfem/types.hpp"

namespace blochfem {

Real bessel_j0(Real z);
/// Throws ConfigError for z <= 0.
Real bessel_y0(Real z);
/// H_0^{(1)}(z) = J_0(z) + i Y_0(z) for real z > 0.
Complex hankel0(Real z);

/// sin(t)/t for complex t, continuous at 0.
Complex sinc(Complex t);

}  // namespace blochfem

#endif  // BLOCHFEM_SPECIAL_HPP
