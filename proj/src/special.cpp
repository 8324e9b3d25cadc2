#include "blochfem/special.hpp"

#include <cmath>

namespace blochfem {

Real bessel_j0(Real z) { return std::cyl_bessel_j(0.0, std::abs(z)); }

Real bessel_y0(Real z) {
  if (!(z > 0.0)) throw ConfigError("bessel_y0: argument must be positive");
  return std::cyl_neumann(0.0, z);
}

Complex hankel0(Real z) {
  if (!(z > 0.0)) throw ConfigError("hankel0: argument must be positive");
  return {std::cyl_bessel_j(0.0, z), std::cyl_neumann(0.0, z)};
}

Complex sinc(Complex t) {
  if (std::abs(t) < 1e-4) {
    const Complex t2 = t * t;
    return 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
  }
  return std::sin(t) / t;
}

}  // namespace blochfem
