#include "blochfem/spectral.hpp"

#include <cmath>
#include <limits>

namespace blochfem {

using Eigen::Index;

namespace {

Real sinc(Real x) { return std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x; }

// 10-point Gauss-Legendre on [-1, 1].
constexpr Real kGx[5] = {0.1488743389816312, 0.4333953941292472, 0.6794095682990244,
                         0.8650633666889845, 0.9739065285171717};
constexpr Real kGw[5] = {0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
                         0.1494513491505806, 0.0666713443086881};

Real gl10(const std::function<Real(Real)>& f, Real a, Real b) {
  const Real c = 0.5 * (a + b), h = 0.5 * (b - a);
  Real s = 0.0;
  for (int i = 0; i < 5; ++i) s += kGw[i] * (f(c - h * kGx[i]) + f(c + h * kGx[i]));
  return s * h;
}

Real adapt(const std::function<Real(Real)>& f, Real a, Real b, Real whole, Real tol, int depth) {
  const Real m = 0.5 * (a + b);
  const Real left = gl10(f, a, m), right = gl10(f, m, b);
  if (std::abs(left + right - whole) <= tol || depth > 40) return left + right;
  return adapt(f, a, m, left, 0.5 * tol, depth + 1) + adapt(f, m, b, right, 0.5 * tol, depth + 1);
}

}  // namespace

Real adaptive_integrate(const std::function<Real(Real)>& f, Real a, Real b, Real tol) {
  if (a == b) return 0.0;
  if (a > b) return -adaptive_integrate(f, b, a, tol);
  return adapt(f, a, b, gl10(f, a, b), tol, 0);
}

Real reduced_wavenumber(Real k) { return std::abs(k - std::floor(k + 0.5)); }

VariableTransform::VariableTransform(Real k, Real tol) : khat_(reduced_wavenumber(k)), tol_(tol) {
  if (khat_ < 1e-10 || khat_ > 0.5 - 1e-10)
    throw ConfigError("variable transform: degenerate split, |k - round(k)| must lie in (0, 1/2); "
                      "use the identity transform");
  total_[0] = piece_integral(0, -0.5, -khat_);
  total_[1] = piece_integral(1, -khat_, khat_);
  total_[2] = piece_integral(2, khat_, 0.5);
}

Real VariableTransform::density(int piece, Real s) const {
  const Real kh = khat_;
  switch (piece) {
    case 0: {
      const Real den = s + kh;
      if (std::abs(den) < 1e-300) return 0.0;
      return std::exp(-(s + 0.5) * (s + 0.5) / (9.0 * den * den));
    }
    case 1: {
      const Real den = (s + kh) * (s - kh);
      if (std::abs(den) < 1e-300) return 0.0;
      return std::exp(-1.0 / (9.0 * den * den));
    }
    default: {
      const Real den = s - kh;
      if (std::abs(den) < 1e-300) return 0.0;
      return std::exp(-(s - 0.5) * (s - 0.5) / (9.0 * den * den));
    }
  }
}

Real VariableTransform::piece_integral(int piece, Real a, Real b) const {
  return adaptive_integrate([&](Real s) { return density(piece, s); }, a, b, tol_);
}

std::pair<Real, Real> VariableTransform::operator()(Real t) const {
  if (t < -0.5 - 1e-14 || t > 0.5 + 1e-14) throw ConfigError("variable transform: t outside [-1/2, 1/2]");
  if (t < 0.0) {
    const auto [g, dg] = (*this)(-t);
    return {-g, dg};
  }
  const Real kh = khat_;
  if (t <= kh) {
    const Real scale = 2.0 * kh / total_[1];
    return {scale * piece_integral(1, 0.0, t), scale * density(1, t)};
  }
  const Real scale = (0.5 - kh) / total_[2];
  return {0.5 - scale * piece_integral(2, t, 0.5), scale * density(2, t)};
}

BlochGrid alpha_grid(int N, int d, bool transform_enabled, Real k) {
  if (N <= 0) throw ConfigError("alpha_grid: N must be positive");
  if (d != 2 && d != 3) throw ConfigError("alpha_grid: dimension must be 2 or 3");
  BlochGrid grid;
  grid.N = N;
  grid.d = d;
  grid.transformed = transform_enabled && d == 2;
  auto mid = [N](int n) { return (2.0 * n - 1.0 - N) / (2.0 * N); };
  if (d == 2) {
    for (int n = 1; n <= N; ++n) grid.midpoints.emplace_back(mid(n), 0.0);
  } else {
    for (int n = 0; n < N * N; ++n) grid.midpoints.emplace_back(mid(n / N + 1), mid(n % N + 1));
  }
  const Real w0 = 1.0 / std::pow(static_cast<Real>(N), d - 1);
  if (grid.transformed) {
    VariableTransform g(k);
    for (const Alpha& t : grid.midpoints) {
      auto [gt, dg] = g(t[0]);
      grid.points.emplace_back(gt, 0.0);
      grid.weights.push_back(dg * w0);
    }
  } else {
    grid.points = grid.midpoints;
    grid.weights.assign(grid.midpoints.size(), w0);
  }
  return grid;
}

Complex beta(Real k, const Alpha& alpha, const Alpha& j) {
  const Real arg = k * k - (alpha + j).squaredNorm();
  return arg >= 0.0 ? Complex(std::sqrt(arg), 0.0) : Complex(0.0, std::sqrt(-arg));
}

RayleighSpectrum::RayleighSpectrum(Real k, int J, int d) : k_(k), J_(J), d_(d) {
  if (J < 0) throw ConfigError("fourier cutoff must be >= 0");
  if (d != 2 && d != 3) throw ConfigError("spectrum: dimension must be 2 or 3");
  if (d == 2) {
    for (int j = -J; j <= J; ++j) modes_.emplace_back(j, 0.0);
  } else {
    for (int j2 = -J; j2 <= J; ++j2)
      for (int j1 = -J; j1 <= J; ++j1) modes_.emplace_back(j1, j2);
  }
}

CVector RayleighSpectrum::betas(const Alpha& alpha) const {
  CVector b(size());
  for (int i = 0; i < size(); ++i) b[i] = beta(k_, alpha, modes_[i]);
  return b;
}

CVector dtn_apply(const RayleighSpectrum& spectrum, const Alpha& alpha, const CVector& coeffs) {
  if (coeffs.size() != spectrum.size()) throw ConfigError("dtn_apply: coefficient count does not match the cutoff");
  return (kI * spectrum.betas(alpha)).cwiseProduct(coeffs);
}

Complex dtn_form(const RayleighSpectrum& spectrum, const Alpha& alpha, const CVector& u, const CVector& v) {
  if (v.size() != spectrum.size()) throw ConfigError("dtn_form: coefficient count does not match the cutoff");
  return v.dot(dtn_apply(spectrum, alpha, u));
}

CVector trace_fourier(const Mesh& mesh, const CVector& top_values, int J) {
  if (J < 0) throw ConfigError("trace_fourier: cutoff must be >= 0");
  if (top_values.size() != mesh.top_dof_count()) throw ConfigError("trace_fourier: trace size mismatch");
  const int d = mesh.dim(), P = mesh.P();
  const Real h = mesh.hx();
  const Real norm = std::pow(2.0 * kPi, -0.5 * (d - 1)) * std::pow(h, d - 1);
  RayleighSpectrum modes(0.0, J, d);
  CVector out(modes.size());
  for (int i = 0; i < modes.size(); ++i) {
    const Alpha& j = modes.modes()[i];
    Real s = 1.0;
    for (int k = 0; k < d - 1; ++k) s *= std::pow(sinc(0.5 * j[k] * h), 2);
    Complex acc = 0.0;
    for (Index l = 0; l < top_values.size(); ++l) {
      const Real x1 = -kPi + (l % P) * h;
      const Real x2 = d == 3 ? -kPi + (l / P) * h : 0.0;
      acc += top_values[l] * std::exp(kI * (j[0] * x1 + j[1] * x2));
    }
    out[i] = norm * s * acc;
  }
  return out;
}

CMatrix dtn_block(const Mesh& mesh, const RayleighSpectrum& spectrum, const Alpha& alpha) {
  const int d = mesh.dim(), P = mesh.P();
  if (spectrum.dim() != d) throw ConfigError("dtn_block: dimension mismatch");
  const Real h = mesh.hx();
  const Real norm = std::pow(2.0 * kPi, -(d - 1.0)) * std::pow(h, 2.0 * (d - 1));
  const CVector b = spectrum.betas(alpha);
  const int n2 = d == 3 ? P : 1;
  // circulant symbol c(delta) = sum_j i beta_j S_j^2 e^{i j.delta h}
  CMatrix symbol = CMatrix::Zero(P, n2);
  for (int i = 0; i < spectrum.size(); ++i) {
    const Alpha& j = spectrum.modes()[i];
    Real s = 1.0;
    for (int k = 0; k < d - 1; ++k) s *= std::pow(sinc(0.5 * j[k] * h), 2);
    const Complex coef = kI * b[i] * s * s;
    if (coef == Complex(0.0)) continue;
    for (int e2 = 0; e2 < n2; ++e2)
      for (int e1 = 0; e1 < P; ++e1) symbol(e1, e2) += coef * std::exp(kI * h * (j[0] * e1 + j[1] * e2));
  }
  const Index n = mesh.top_dof_count();
  CMatrix D(n, n);
  for (Index m = 0; m < n; ++m) {
    for (Index l = 0; l < n; ++l) {
      const int e1 = static_cast<int>(((l % P) - (m % P) + P) % P);
      const int e2 = static_cast<int>(((l / P) - (m / P) + n2) % n2);
      D(m, l) = -norm * symbol(e1, e2);
    }
  }
  return D;
}

NodalField inverse_bloch(const BlochGrid& grid, std::shared_ptr<const Mesh> mesh,
                         const std::vector<CVector>& dof_blocks) {
  if (static_cast<int>(dof_blocks.size()) != grid.size())
    throw ConfigError("inverse_bloch: one block per alpha sample required");
  const int d = mesh->dim();
  if (d != grid.d) throw ConfigError("inverse_bloch: dimension mismatch");
  for (const CVector& w : dof_blocks)
    if (w.size() != mesh->dof_count()) throw ConfigError("inverse_bloch: block/mesh mismatch");
  NodalField u(mesh);
  for (Index node = 0; node < mesh->node_count(); ++node) {
    const Index dof = mesh->dof_of_node(node);
    if (dof < 0) continue;
    const Alpha x = horizontal(mesh->node_point(node), d);
    Complex acc = 0.0;
    for (int n = 0; n < grid.size(); ++n)
      acc += grid.weights[n] * std::exp(-kI * grid.points[n].dot(x)) * dof_blocks[n][dof];
    u.values()[node] = acc;
  }
  return u;
}

NodalField inverse_bloch(const BlochGrid& grid, const std::vector<NodalField>& blocks) {
  if (static_cast<int>(blocks.size()) != grid.size() || blocks.empty())
    throw ConfigError("inverse_bloch: one block per alpha sample required");
  const auto& mesh = blocks.front().mesh_ptr();
  if (mesh->dim() != grid.d) throw ConfigError("inverse_bloch: dimension mismatch");
  for (const NodalField& b : blocks)
    if (b.values().size() != mesh->node_count())
      throw ConfigError("inverse_bloch: block/mesh mismatch");
  NodalField u(mesh);
  for (Index node = 0; node < mesh->node_count(); ++node) {
    const Alpha x = horizontal(mesh->node_point(node), grid.d);
    Complex acc = 0.0;
    for (int n = 0; n < grid.size(); ++n)
      acc += grid.weights[n] * std::exp(-kI * grid.points[n].dot(x)) * blocks[n][node];
    u.values()[node] = acc;
  }
  return u;
}

std::vector<NodalField> modulate(const BlochGrid& grid, const NodalField& u) {
  const Mesh& mesh = u.mesh();
  std::vector<NodalField> out;
  for (int n = 0; n < grid.size(); ++n) {
    NodalField w(u.mesh_ptr());
    for (Index node = 0; node < mesh.node_count(); ++node)
      w.values()[node] = std::exp(kI * grid.points[n].dot(horizontal(mesh.node_point(node), grid.d))) * u[node];
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace blochfem
