#include <cmath>

#include "blochfem/spectral.hpp"
#include "blochfem/special.hpp"
#include "support.hpp"

using namespace blochfem;

namespace {

const Real k0 = std::sqrt(0.4);

int mode_index(const RayleighSpectrum& s, int j1, int j2 = 0) {
  for (int i = 0; i < s.size(); ++i)
    if (s.modes()[i] == Alpha(j1, j2)) return i;
  return -1;
}

// Fourier coefficient of the piecewise-linear interpolant of nodal values on
// the 2D top boundary, by 8-point Gauss on each segment.
Complex interpolant_coefficient(const CVector& v, int j) {
  const int P = static_cast<int>(v.size());
  const Real h = 2.0 * kPi / P;
  static const Real xg[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
  static const Real wg[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
  Complex acc = 0.0;
  for (int l = 0; l < P; ++l)
    for (int g = 0; g < 4; ++g)
      for (int s : {-1, 1}) {
        const Real t = 0.5 * (1.0 + s * xg[g]);
        const Real x = -kPi + (l + t) * h;
        const Complex u = (1.0 - t) * v[l] + t * v[(l + 1) % P];
        acc += 0.5 * h * wg[g] * u * std::exp(kI * Real(j) * x);
      }
  return acc / std::sqrt(2.0 * kPi);
}

}  // namespace

TEST_SUITE("spectral") {

TEST_CASE("alpha grid midpoints") {
  const BlochGrid g4 = alpha_grid(4, 2);
  const Real expect[4] = {-0.375, -0.125, 0.125, 0.375};
  REQUIRE(g4.size() == 4);
  for (int n = 0; n < 4; ++n) {
    CHECK(g4.points[n][0] == doctest::Approx(expect[n]));
    CHECK(g4.weights[n] == doctest::Approx(0.25));
  }
  const BlochGrid g1 = alpha_grid(1, 2);
  REQUIRE(g1.size() == 1);
  CHECK(g1.points[0].norm() == 0.0);

  const BlochGrid g3 = alpha_grid(2, 3);
  const Alpha e3[4] = {{-0.25, -0.25}, {-0.25, 0.25}, {0.25, -0.25}, {0.25, 0.25}};
  REQUIRE(g3.size() == 4);
  for (int n = 0; n < 4; ++n) CHECK((g3.points[n] - e3[n]).norm() < 1e-15);
}

TEST_CASE("transformed grid is symmetric and sums to one") {
  const BlochGrid g = alpha_grid(16, 2, true, k0);
  Real sum = 0.0;
  for (int n = 0; n < g.size(); ++n) {
    sum += g.weights[n];
    CHECK(g.points[n][0] == -g.points[g.size() - 1 - n][0]);
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::abs(sum - 1.0) > std::abs([] {
    const BlochGrid f = alpha_grid(64, 2, true, k0);
    Real t = 0.0;
    for (Real w : f.weights) t += w;
    return t - 1.0;
  }()));
  CHECK_FALSE(alpha_grid(4, 3, true, k0).transformed);
}

TEST_CASE("beta examples") {
  CHECK(std::abs(beta(k0, Alpha::Zero(), Alpha::Zero()) - Complex(k0, 0.0)) < 1e-15);
  CHECK(std::abs(beta(k0, Alpha::Zero(), Alpha(1, 0)) - Complex(0.0, std::sqrt(0.6))) < 1e-15);
  CHECK(std::abs(beta(k0, Alpha(k0 - 1.0, 0), Alpha(1, 0))) < 1e-7);
}

TEST_CASE("beta branch invariants on random inputs") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<Real> ua(-0.5, 0.5), uk(0.05, 4.0);
  std::uniform_int_distribution<int> uj(-6, 6);
  int violations = 0;
  for (int t = 0; t < 1000; ++t) {
    const Real k = uk(rng);
    const Alpha a(ua(rng), ua(rng)), j(uj(rng), uj(rng));
    const Complex b = beta(k, a, j);
    const Real s = (a + j).norm();
    if (b.real() < 0.0 || b.imag() < 0.0) ++violations;
    if (s < k && b.imag() != 0.0) ++violations;
    if (s > k && b.real() != 0.0) ++violations;
    if (std::abs(b * b - (k * k - s * s)) > 1e-12 * (1.0 + k * k + s * s)) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("boundary form signs") {
  const RayleighSpectrum s(k0, 2, 2);
  CVector u = CVector::Zero(s.size());
  u[mode_index(s, 0)] = 1.0;
  const Complex prop = dtn_form(s, Alpha::Zero(), u, u);
  CHECK(std::abs(prop - Complex(0.0, k0)) < 1e-15);

  u.setZero();
  u[mode_index(s, 1)] = 1.0;
  CHECK(-dtn_form(s, Alpha::Zero(), u, u).real() == doctest::Approx(std::sqrt(0.6)));

  CHECK(std::abs(dtn_form(s, Alpha::Zero(), CVector::Zero(s.size()), CVector::Zero(s.size()))) == 0.0);
}

TEST_CASE("boundary form sign inequalities on random traces") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<Real> ua(-0.5, 0.5), uk(0.1, 3.0);
  int violations = 0;
  for (int t = 0; t < 1000; ++t) {
    const int d = t % 2 ? 3 : 2;
    const RayleighSpectrum s(uk(rng), 3, d);
    const Alpha a(ua(rng), d == 3 ? ua(rng) : 0.0);
    const CVector u = testing::random_vector(s.size(), rng);
    const Complex f = dtn_form(s, a, u, u);
    if (f.imag() < -1e-14) ++violations;
    if (f.real() > 1e-14) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("trace_fourier") {
  for (int d : {2, 3}) {
    const Mesh m(d, 5.0, 3);
    const CVector c = CVector::Constant(m.top_dof_count(), Complex(0.3, -1.2));
    const CVector t = trace_fourier(m, c, 4);
    const RayleighSpectrum s(0.0, 4, d);
    for (int i = 0; i < s.size(); ++i) {
      const Complex expect = s.modes()[i].norm() == 0.0 ? c[0] * std::pow(2.0 * kPi, 0.5 * (d - 1)) : 0.0;
      CHECK(std::abs(t[i] - expect) < 1e-12);
    }
    CHECK(trace_fourier(m, CVector::Zero(m.top_dof_count()), 4).norm() == 0.0);
  }

  const Mesh m(2, 5.0, 4);
  std::mt19937_64 rng(2);
  CVector v(m.P());
  for (int l = 0; l < m.P(); ++l) v[l] = std::exp(-kI * 3.0 * (-kPi + l * m.hx()));
  const CVector t = trace_fourier(m, v, 5);
  const RayleighSpectrum s(0.0, 5, 2);
  for (int i = 0; i < s.size(); ++i) {
    const int j = static_cast<int>(s.modes()[i][0]);
    CHECK(std::abs(t[i] - interpolant_coefficient(v, j)) < 1e-12);
    if (j != 3) CHECK(std::abs(t[i]) < 1e-12);
  }
  CHECK(std::abs(t[mode_index(s, 3)]) == doctest::Approx(std::sqrt(2.0 * kPi) * std::pow(std::sin(1.5 * m.hx()) / (1.5 * m.hx()), 2)));

  const CVector r = testing::random_vector(m.P(), rng);
  const CVector tr = trace_fourier(m, r, 7);
  for (int i = 0; i < tr.size(); ++i) CHECK(std::abs(tr[i] - interpolant_coefficient(r, i - 7)) < 1e-12);
}

TEST_CASE("dtn block matches the boundary form") {
  std::mt19937_64 rng(9);
  for (int d : {2, 3}) {
    const Mesh m(d, 5.0, 2);
    const RayleighSpectrum s(k0, 6, d);
    const Alpha a(0.21, d == 3 ? -0.13 : 0.0);
    const CMatrix D = dtn_block(m, s, a);
    const CVector u = testing::random_vector(m.top_dof_count(), rng);
    const CVector v = testing::random_vector(m.top_dof_count(), rng);
    const Complex lhs = v.dot(D * u);
    const Complex rhs = -dtn_form(s, a, trace_fourier(m, u, 6), trace_fourier(m, v, 6));
    CHECK(std::abs(lhs - rhs) < 1e-12 * std::abs(rhs));
  }
}

TEST_CASE("inverse_bloch") {
  auto mesh = std::make_shared<const Mesh>(2, 5.0, 3);
  const BlochGrid g = alpha_grid(8, 2);
  const Complex c(0.7, -0.2);

  std::vector<NodalField> phased;
  for (int n = 0; n < g.size(); ++n)
    phased.push_back(NodalField::interpolate(
        mesh, [&](const Point& x) { return std::exp(kI * g.points[n][0] * x[0]) * c; }));
  const NodalField u = inverse_bloch(g, phased);
  CHECK((u.values().array() - c).abs().maxCoeff() < 1e-14);

  const BlochGrid g1 = alpha_grid(1, 2);
  const auto w = NodalField::interpolate(mesh, [](const Point& x) { return Complex(x[0], x[1]); });
  CHECK((inverse_bloch(g1, {w}).values() - w.values()).norm() < 1e-15);

  const NodalField same = inverse_bloch(g, std::vector<NodalField>(g.size(), w));
  for (Eigen::Index node = 0; node < mesh->node_count(); ++node) {
    const Real x = mesh->node_point(node)[0];
    Complex sum = 0.0;
    for (int n = 0; n < 8; ++n) sum += std::exp(kI * (-0.5 + (2 * n + 1) / 16.0) * x);
    CHECK(std::abs(same[node] - w[node] * std::conj(sum) / 8.0) < 1e-14);
  }
}

TEST_CASE("modulation round trip") {
  std::mt19937_64 rng(4);
  for (int d : {2, 3}) {
    auto mesh = std::make_shared<const Mesh>(d, 5.0, 2);
    const BlochGrid g = d == 2 ? alpha_grid(16, 2) : alpha_grid(4, 3);
    const NodalField u(mesh, testing::random_vector(mesh->node_count(), rng));
    const NodalField back = inverse_bloch(g, modulate(g, u));
    CHECK((back.values() - u.values()).cwiseAbs().maxCoeff() <= 1e-12);
  }
  auto mesh = std::make_shared<const Mesh>(2, 5.0, 3);
  const BlochGrid g = alpha_grid(16, 2, true, k0);
  Real total = 0.0;
  for (Real w : g.weights) total += w;
  const NodalField u(mesh, testing::random_vector(mesh->node_count(), rng));
  const NodalField back = inverse_bloch(g, modulate(g, u));
  CHECK((back.values() - total * u.values()).cwiseAbs().maxCoeff() <= 1e-12);
  {
  }
}

TEST_CASE("variable transform") {
  const VariableTransform g(k0);
  CHECK(g.khat() == doctest::Approx(0.367544).epsilon(1e-6));
  CHECK(g(-0.5).first == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(g(0.5).first == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(g(g.khat()).first == doctest::Approx(g.khat()).epsilon(1e-12));
  CHECK(std::abs(g(g.khat()).second) < 1e-8);
  CHECK(std::abs(g(-g.khat()).second) < 1e-8);

  Real prev = -1.0;
  for (int i = 0; i <= 200; ++i) {
    const Real t = -0.5 + i / 200.0;
    const auto [v, dv] = g(t);
    CHECK(v >= prev - 1e-13);
    CHECK(dv >= 0.0);
    CHECK(g(-t).first == -v);
    prev = v;
  }
  const Real t = 0.123, h = 1e-6;
  CHECK(g(t).second == doctest::Approx((g(t + h).first - g(t - h).first) / (2 * h)).epsilon(1e-6));

  CHECK_THROWS_AS(VariableTransform(1.0), ConfigError);
  CHECK_THROWS_AS(VariableTransform(1.5), ConfigError);
}

TEST_CASE("hankel function") {
  const Complex h = hankel0(1.0);
  CHECK(h.real() == doctest::Approx(0.7651976866).epsilon(1e-10));
  CHECK(h.imag() == doctest::Approx(0.0882569642).epsilon(1e-9));
  CHECK(std::abs(hankel0(100.0)) == doctest::Approx(std::sqrt(2.0 / (kPi * 100.0))).epsilon(0.01));
  CHECK(bessel_j0(0.0) == 1.0);
  // mpmath: besselj(0, 7.5), bessely(0, 7.5), bessely(0, 0.1)
  CHECK(bessel_j0(7.5) == doctest::Approx(0.266339657880378).epsilon(1e-11));
  CHECK(bessel_y0(7.5) == doctest::Approx(0.117313286148209).epsilon(1e-11));
  CHECK(bessel_y0(0.1) == doctest::Approx(-1.53423865135037).epsilon(1e-11));
  CHECK_THROWS_AS(bessel_y0(0.0), ConfigError);
  CHECK(std::abs(sinc(Complex(0.0)) - 1.0) == 0.0);
}

}  // TEST_SUITE
