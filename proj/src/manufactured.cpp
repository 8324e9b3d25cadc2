#include "blochfem/manufactured.hpp"

#include <cmath>

#include "blochfem/special.hpp"

namespace blochfem {

namespace {

// exp(sum_k -(x_k - c_k)^2/10 + (z - 5)^2/10) z/5 and its Laplacian.
struct Gaussian {
  int d;
  Alpha c;

  Real exponent(const Point& x) const {
    Real e = 0.0;
    for (int k = 0; k < d - 1; ++k) e -= (x[k] - c[k]) * (x[k] - c[k]) / 10.0;
    const Real z = x[d - 1];
    return e + (z - 5.0) * (z - 5.0) / 10.0;
  }
  Real value(const Point& x) const { return std::exp(exponent(x)) * x[d - 1] / 5.0; }
  Real laplacian(const Point& x) const {
    const Real z = x[d - 1];
    Real h = 0.0;
    for (int k = 0; k < d - 1; ++k) {
      const Real a1 = -(x[k] - c[k]) / 5.0;
      h += a1 * a1 - 0.2;
    }
    const Real b1 = (z - 5.0) / 5.0;
    const Real v = b1 * (b1 * z / 5.0 + 0.2) + z / 25.0 + b1 / 5.0;
    return std::exp(exponent(x)) * (h * z / 5.0 + v);
  }
  /// Fourier transform of the top trace exp(-|x - c|^2/10).
  Complex trace_hat(const Alpha& xi) const {
    Real s = 0.0, dot = 0.0;
    for (int k = 0; k < d - 1; ++k) {
      s += xi[k] * xi[k];
      dot += xi[k] * c[k];
    }
    return std::pow(10.0 * kPi, 0.5 * (d - 1)) * std::exp(Complex(-2.5 * s, dot));
  }
};

// Sum over translates x + 2 pi j with phase e^{2 pi i alpha.j}, skipping
// terms whose Gaussian factor underflows.
template <class F>
Complex periodise(const Gaussian& g, int J, const Alpha& alpha, const Point& x, F&& f) {
  const int d = g.d;
  Complex acc = 0.0;
  const int J2 = d == 3 ? J : 0;
  for (int j2 = -J2; j2 <= J2; ++j2) {
    for (int j1 = -J; j1 <= J; ++j1) {
      Point y = x;
      y[0] += 2.0 * kPi * j1;
      if (d == 3) y[1] += 2.0 * kPi * j2;
      if (g.exponent(y) < -700.0) continue;
      acc += f(y) * std::exp(Complex(0.0, 2.0 * kPi * (alpha[0] * j1 + alpha[1] * j2)));
    }
  }
  return acc;
}

std::vector<Alpha> mode_list(int d, int J) {
  std::vector<Alpha> m;
  const int J2 = d == 3 ? J : 0;
  for (int j2 = -J2; j2 <= J2; ++j2)
    for (int j1 = -J; j1 <= J; ++j1) m.emplace_back(j1, j2);
  return m;
}

ManufacturedCase gaussian_case(const std::string& id, int d, std::shared_ptr<const Material> mat) {
  const Gaussian g{d, d == 2 ? Alpha(1.0, 0.0) : Alpha(1.0, 2.0)};
  const Real k = mat->k();
  ManufacturedCase c;
  c.id = id;
  c.d = d;
  c.translates = d == 2 ? 30 : 10;
  c.modes = d == 2 ? 30 : 10;
  const int J = c.translates;
  const auto modes = mode_list(d, c.modes);
  const Real norm = std::pow(2.0 * kPi, -(d - 1.0));
  c.exact = [g](const Point& x) { return Complex(g.value(x)); };
  c.transformed = [g, J](const Alpha& a, const Point& x) {
    return periodise(g, J, a, x, [&](const Point& y) { return g.value(y); });
  };
  c.source.volume = [g, J, mat](const Alpha& a, const Point& x) {
    Complex lap = 0.0, val = 0.0;
    const int d = g.d;
    const int J2 = d == 3 ? J : 0;
    for (int j2 = -J2; j2 <= J2; ++j2) {
      for (int j1 = -J; j1 <= J; ++j1) {
        Point y = x;
        y[0] += 2.0 * kPi * j1;
        if (d == 3) y[1] += 2.0 * kPi * j2;
        if (g.exponent(y) < -700.0) continue;
        const Complex ph = std::exp(Complex(0.0, 2.0 * kPi * (a[0] * j1 + a[1] * j2)));
        lap += ph * g.laplacian(y);
        val += ph * g.value(y);
      }
    }
    return -lap - mat->k2np2(x) * val - mat->k2q(x) * g.value(x);
  };
  c.source.boundary = [g, k, modes, norm](const Alpha& a, const Point& x) {
    const int d = g.d;
    Complex acc = 0.0;
    for (const Alpha& m : modes) {
      const Alpha xi = a + m;
      if (2.5 * xi.squaredNorm() > 700.0) continue;
      const Complex b = beta(k, a, m);
      acc += g.trace_hat(xi) * (0.2 - kI * b) * std::exp(-kI * xi.dot(horizontal(x, d)));
    }
    return norm * acc;
  };
  return c;
}

// Point sources at depth -7 and -9 (difference), times z/5.
ManufacturedCase source_case(const std::string& id, int d, std::shared_ptr<const Material> mat) {
  const Real k = mat->k();
  ManufacturedCase c;
  c.id = id;
  c.d = d;
  c.translates = 0;
  c.modes = d == 2 ? 100 : 10;
  const auto modes = mode_list(d, c.modes);
  const Real norm = std::pow(2.0 * kPi, -(d - 1.0));

  auto v_exact = [k, d](const Point& x) -> Complex {
    Real h2 = 0.0;
    for (int i = 0; i < d - 1; ++i) h2 += x[i] * x[i];
    const Real z = x[d - 1];
    const Real r1 = std::sqrt(h2 + (z + 7.0) * (z + 7.0));
    const Real r2 = std::sqrt(h2 + (z + 9.0) * (z + 9.0));
    if (d == 2) return 0.25 * kI * (hankel0(k * r1) - hankel0(k * r2));
    return std::exp(kI * k * r1) / (4.0 * kPi * r1) - std::exp(kI * k * r2) / (4.0 * kPi * r2);
  };
  // Jv and d_z Jv from the Rayleigh series.
  auto series = [k, modes, norm, d](const Alpha& a, const Point& x, bool derivative) -> Complex {
    const Real z = x[d - 1];
    const Alpha xh = horizontal(x, d);
    Complex acc = 0.0;
    for (const Alpha& m : modes) {
      const Complex b = beta(k, a, m);
      if (b.imag() * (z + 7.0) > 40.0) continue;
      const Complex e9 = std::exp(kI * b * (z + 9.0)), e7 = std::exp(kI * b * (z + 7.0));
      Complex E;
      if (derivative)
        E = 0.5 * (e9 - e7);
      else
        E = std::abs(b) < 1e-8 ? std::exp(kI * b * (z + 8.0)) : (e9 - e7) / (2.0 * kI * b);
      acc += E * std::exp(-kI * (a + m).dot(xh));
    }
    return norm * acc;
  };
  c.exact = [v_exact, d](const Point& x) { return v_exact(x) * x[d - 1] / 5.0; };
  c.transformed = [series, d](const Alpha& a, const Point& x) { return series(a, x, false) * x[d - 1] / 5.0; };
  c.source.volume = [series, mat, k, v_exact, d](const Alpha& a, const Point& x) {
    const Complex Jv = series(a, x, false), dJv = series(a, x, true);
    const Complex Ju = Jv * x[d - 1] / 5.0;
    Complex out = -0.4 * dJv - (mat->k2np2(x) - k * k) * Ju;
    const Complex q = mat->k2q(x);
    if (q != Complex(0.0)) out -= q * v_exact(x) * x[d - 1] / 5.0;
    return out;
  };
  c.source.boundary = [series, d](const Alpha& a, const Point& x) {
    return series(a, x, false) / 5.0;
  };
  c.correction = [v_exact](const Point& x) { return v_exact(x) / 5.0; };
  return c;
}

}  // namespace

ManufacturedCase manufactured_case(const std::string& id, std::shared_ptr<const Material> material) {
  if (!material) throw ConfigError("manufactured_case: material required");
  const int d = material->dim();
  if (id == "u1" || id == "u3") {
    if ((id == "u1") != (d == 2)) throw ConfigError("manufactured_case: " + id + " does not match dimension");
    return gaussian_case(id, d, material);
  }
  if (id == "u2" || id == "u4") {
    if ((id == "u2") != (d == 2)) throw ConfigError("manufactured_case: " + id + " does not match dimension");
    return source_case(id, d, material);
  }
  throw ConfigError("manufactured_case: unknown case '" + id + "'");
}

}  // namespace blochfem
