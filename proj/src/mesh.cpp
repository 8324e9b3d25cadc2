#include "blochfem/mesh.hpp"

#include <algorithm>
#include <cmath>

namespace blochfem {

using Eigen::Index;

Mesh::Mesh(int d, Real R, int M, Index node_budget) : d_(d), R_(R), M_(M) {
  if (d != 2 && d != 3) throw ConfigError("mesh: dimension must be 2 or 3");
  if (!(R > 0.0)) throw ConfigError("mesh: height R must be positive");
  if (M < 1) throw ConfigError("mesh: refinement level M must be >= 1");
  if (M > 24) throw ConfigError("mesh: refinement level too large");
  P_ = 1 << M;
  V_ = 1 << M;
  const double nodes = std::pow(P_ + 1.0, d - 1) * (V_ + 1.0);
  if (nodes > static_cast<double>(node_budget))
    throw ConfigError("mesh: node count exceeds the configured budget");
  n_nodes_ = static_cast<Index>(nodes);
  n_cells_ = static_cast<Index>(std::pow(P_, d - 1)) * V_;
  n_dofs_ = static_cast<Index>(std::pow(P_, d - 1)) * V_;
}

Real Mesh::cell_volume() const noexcept {
  return std::pow(hx(), d_ - 1) * hz();
}

Index Mesh::top_dof_count() const noexcept {
  return d_ == 2 ? P_ : Index(P_) * P_;
}

Index Mesh::node_index(int i1, int i2, int j) const noexcept {
  const Index n = P_ + 1;
  return d_ == 2 ? i1 + n * j : i1 + n * (i2 + n * Index(j));
}

std::array<int, 3> Mesh::node_coords(Index node) const noexcept {
  const Index n = P_ + 1;
  if (d_ == 2) return {int(node % n), 0, int(node / n)};
  return {int(node % n), int((node / n) % n), int(node / (n * n))};
}

Point Mesh::node_point(Index node) const noexcept {
  const auto c = node_coords(node);
  if (d_ == 2) return Point(-kPi + c[0] * hx(), c[2] * hz(), 0.0);
  return Point(-kPi + c[0] * hx(), -kPi + c[1] * hx(), c[2] * hz());
}

Index Mesh::dof_of_node(Index node) const noexcept {
  const auto c = node_coords(node);
  if (c[2] == 0) return -1;
  const Index i1 = c[0] % P_;
  const Index i2 = c[1] % P_;
  return d_ == 2 ? i1 + Index(P_) * (c[2] - 1) : i1 + Index(P_) * (i2 + Index(P_) * (c[2] - 1));
}

Index Mesh::node_of_dof(Index dof) const noexcept {
  if (d_ == 2) return node_index(int(dof % P_), 0, int(dof / P_) + 1);
  return node_index(int(dof % P_), int((dof / P_) % P_), int(dof / (Index(P_) * P_)) + 1);
}

Point Mesh::dof_point(Index dof) const noexcept { return node_point(node_of_dof(dof)); }

std::vector<Index> Mesh::top_dofs() const {
  std::vector<Index> out;
  out.reserve(top_dof_count());
  if (d_ == 2) {
    for (int i = 0; i < P_; ++i) out.push_back(dof_of_node(node_index(i, 0, V_)));
  } else {
    for (int i2 = 0; i2 < P_; ++i2)
      for (int i1 = 0; i1 < P_; ++i1) out.push_back(dof_of_node(node_index(i1, i2, V_)));
  }
  return out;
}

std::array<int, 3> Mesh::cell_coords(Index cell) const noexcept {
  if (d_ == 2) return {int(cell % P_), 0, int(cell / P_)};
  return {int(cell % P_), int((cell / P_) % P_), int(cell / (Index(P_) * P_))};
}

Point Mesh::cell_origin(Index cell) const noexcept {
  const auto c = cell_coords(cell);
  if (d_ == 2) return Point(-kPi + c[0] * hx(), c[2] * hz(), 0.0);
  return Point(-kPi + c[0] * hx(), -kPi + c[1] * hx(), c[2] * hz());
}

std::array<Index, 8> Mesh::cell_nodes(Index cell) const noexcept {
  std::array<Index, 8> out{};
  const auto c = cell_coords(cell);
  for (int a = 0; a < corners(); ++a) {
    if (d_ == 2) {
      out[a] = node_index(c[0] + (a & 1), 0, c[2] + ((a >> 1) & 1));
    } else {
      out[a] = node_index(c[0] + (a & 1), c[1] + ((a >> 1) & 1), c[2] + ((a >> 2) & 1));
    }
  }
  return out;
}

std::array<Index, 8> Mesh::cell_dofs(Index cell) const noexcept {
  auto nodes = cell_nodes(cell);
  std::array<Index, 8> out{};
  for (int a = 0; a < corners(); ++a) out[a] = dof_of_node(nodes[a]);
  return out;
}

bool Mesh::contains(const Point& x, Real tol) const noexcept {
  for (int k = 0; k < d_ - 1; ++k)
    if (x[k] < -kPi - tol || x[k] > kPi + tol) return false;
  return x[d_ - 1] >= -tol && x[d_ - 1] <= R_ + tol;
}

std::pair<Index, Point> Mesh::locate(const Point& x) const {
  if (!contains(x, 1e-9)) throw ConfigError("mesh: point outside the periodic cell");
  std::array<int, 3> c{0, 0, 0};
  Point xi = Point::Zero();
  auto axis = [&](Real t, Real lo, Real h, int n, int& ci, Real& r) {
    Real s = (t - lo) / h;
    ci = std::clamp(static_cast<int>(std::floor(s)), 0, n - 1);
    r = std::clamp(s - ci, 0.0, 1.0);
  };
  axis(x[0], -kPi, hx(), P_, c[0], xi[0]);
  if (d_ == 3) axis(x[1], -kPi, hx(), P_, c[1], xi[1]);
  axis(x[d_ - 1], 0.0, hz(), V_, c[2], xi[d_ - 1]);
  const Index cell = d_ == 2 ? c[0] + Index(P_) * c[2] : c[0] + Index(P_) * (c[1] + Index(P_) * c[2]);
  return {cell, xi};
}

std::pair<std::vector<Real>, std::vector<Real>> gauss_legendre_01(int n) {
  if (n < 1) throw ConfigError("gauss_legendre: n must be >= 1");
  std::vector<Real> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    Real z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    Real dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      Real p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        Real p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      Real dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // recompute derivative at converged root
    Real p0 = 1.0, p1 = z;
    for (int k = 2; k <= n; ++k) {
      Real p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n == 1 ? 1.0 : n * (z * p1 - p0) / (z * z - 1.0);
    x[n - 1 - i] = 0.5 * (1.0 + z);
    w[n - 1 - i] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

std::array<Real, 8> q1_shape(const Point& xi, int d) {
  std::array<Real, 8> phi{};
  for (int a = 0; a < (1 << d); ++a) {
    Real v = 1.0;
    for (int k = 0; k < d; ++k) v *= ((a >> k) & 1) ? xi[k] : 1.0 - xi[k];
    phi[a] = v;
  }
  return phi;
}

CellQuadrature::CellQuadrature(const Mesh& mesh, int n) : corners(mesh.corners()) {
  const int d = mesh.dim();
  auto [x, w] = gauss_legendre_01(n);
  const int total = d == 2 ? n * n : n * n * n;
  const Real vol = mesh.cell_volume();
  Point h = Point::Zero();
  for (int k = 0; k < d - 1; ++k) h[k] = mesh.hx();
  h[d - 1] = mesh.hz();
  for (int q = 0; q < total; ++q) {
    int idx[3] = {q % n, (q / n) % n, q / (n * n)};
    Point xi = Point::Zero();
    Real wq = vol;
    for (int k = 0; k < d; ++k) {
      xi[k] = x[idx[k]];
      wq *= w[idx[k]];
    }
    reference.push_back(xi);
    weights.push_back(wq);
    shape.push_back(q1_shape(xi, d));
    std::array<Point, 8> g{};
    for (int a = 0; a < corners; ++a) {
      Point ga = Point::Zero();
      for (int k = 0; k < d; ++k) {
        Real v = ((a >> k) & 1) ? 1.0 : -1.0;
        for (int l = 0; l < d; ++l)
          if (l != k) v *= ((a >> l) & 1) ? xi[l] : 1.0 - xi[l];
        ga[k] = v / h[k];
      }
      g[a] = ga;
    }
    gradient.push_back(g);
  }
}

Point CellQuadrature::point(const Mesh& mesh, Index cell, int q) const {
  Point x = mesh.cell_origin(cell);
  const int d = mesh.dim();
  for (int k = 0; k < d - 1; ++k) x[k] += reference[q][k] * mesh.hx();
  x[d - 1] += reference[q][d - 1] * mesh.hz();
  return x;
}

std::vector<std::pair<Point, Real>> quadrature(const Mesh& mesh, Index cell, int n) {
  if (cell < 0 || cell >= mesh.cell_count()) throw ConfigError("quadrature: invalid cell");
  CellQuadrature rule(mesh, n);
  std::vector<std::pair<Point, Real>> out;
  for (int q = 0; q < rule.size(); ++q) out.emplace_back(rule.point(mesh, cell, q), rule.weights[q]);
  return out;
}

// NodalField ----------------------------------------------------------------

NodalField::NodalField(std::shared_ptr<const Mesh> mesh)
    : mesh_(std::move(mesh)), values_(CVector::Zero(mesh_->node_count())) {}

NodalField::NodalField(std::shared_ptr<const Mesh> mesh, CVector values)
    : mesh_(std::move(mesh)), values_(std::move(values)) {
  if (values_.size() != mesh_->node_count())
    throw ConfigError("NodalField: coefficient count does not match the node count");
}

Complex NodalField::evaluate(Index cell, const Point& xi) const {
  const auto nodes = mesh_->cell_nodes(cell);
  const auto phi = q1_shape(xi, mesh_->dim());
  Complex v = 0.0;
  for (int a = 0; a < mesh_->corners(); ++a) v += phi[a] * values_[nodes[a]];
  return v;
}

Complex NodalField::evaluate(const Point& x) const {
  auto [cell, xi] = mesh_->locate(x);
  return evaluate(cell, xi);
}

NodalField NodalField::interpolate(std::shared_ptr<const Mesh> mesh,
                                   const std::function<Complex(const Point&)>& f) {
  NodalField out(mesh);
  for (Index n = 0; n < mesh->node_count(); ++n) out.values_[n] = f(mesh->node_point(n));
  return out;
}

NodalField NodalField::from_dofs(std::shared_ptr<const Mesh> mesh, const CVector& dofs) {
  if (dofs.size() != mesh->dof_count()) throw ConfigError("NodalField: dof vector size mismatch");
  NodalField out(mesh);
  for (Index n = 0; n < mesh->node_count(); ++n) {
    const Index dof = mesh->dof_of_node(n);
    out.values_[n] = dof < 0 ? Complex(0.0) : dofs[dof];
  }
  return out;
}

CVector NodalField::to_dofs() const {
  CVector out(mesh_->dof_count());
  for (Index dof = 0; dof < mesh_->dof_count(); ++dof) out[dof] = values_[mesh_->node_of_dof(dof)];
  return out;
}

namespace {

int nesting_factor(const Mesh& fine, const Mesh& coarse) {
  if (fine.dim() != coarse.dim() || std::abs(fine.height() - coarse.height()) > 1e-14 * fine.height() ||
      fine.level() < coarse.level())
    throw ConfigError("interpolate_down: meshes are not nested");
  return 1 << (fine.level() - coarse.level());
}

}  // namespace

NodalField interpolate_down(const NodalField& fine, std::shared_ptr<const Mesh> coarse) {
  const int r = nesting_factor(fine.mesh(), *coarse);
  NodalField out(coarse);
  for (Index n = 0; n < coarse->node_count(); ++n) {
    auto c = coarse->node_coords(n);
    out.values()[n] = fine[fine.mesh().node_index(c[0] * r, c[1] * r, c[2] * r)];
  }
  return out;
}

CVector restrict_dofs(const Mesh& fine, const CVector& dofs, const Mesh& coarse) {
  const int r = nesting_factor(fine, coarse);
  if (dofs.size() != fine.dof_count()) throw ConfigError("restrict_dofs: size mismatch");
  CVector out(coarse.dof_count());
  for (Index dof = 0; dof < coarse.dof_count(); ++dof) {
    auto c = coarse.node_coords(coarse.node_of_dof(dof));
    out[dof] = dofs[fine.dof_of_node(fine.node_index(c[0] * r, c[1] * r, c[2] * r))];
  }
  return out;
}

Real l2_norm(const NodalField& field, int n) {
  const Mesh& mesh = field.mesh();
  CellQuadrature rule(mesh, n);
  Real sum = 0.0;
  for (Index c = 0; c < mesh.cell_count(); ++c)
    for (int q = 0; q < rule.size(); ++q) sum += rule.weights[q] * std::norm(field.evaluate(c, rule.reference[q]));
  return std::sqrt(sum);
}

Real relative_l2_error(const NodalField& field, const std::function<Complex(const Point&)>& reference,
                       int n) {
  const Mesh& mesh = field.mesh();
  CellQuadrature rule(mesh, n);
  Real err = 0.0, ref = 0.0;
  for (Index c = 0; c < mesh.cell_count(); ++c) {
    for (int q = 0; q < rule.size(); ++q) {
      const Complex exact = reference(rule.point(mesh, c, q));
      err += rule.weights[q] * std::norm(field.evaluate(c, rule.reference[q]) - exact);
      ref += rule.weights[q] * std::norm(exact);
    }
  }
  if (!(ref > 0.0)) throw ConfigError("relative_l2_error: reference has zero norm");
  return std::sqrt(err / ref);
}

CSparse assemble_mass(const Mesh& mesh) {
  CellQuadrature rule(mesh, 2);
  std::vector<CTriplet> trip;
  trip.reserve(mesh.cell_count() * 64);
  for (Index c = 0; c < mesh.cell_count(); ++c) {
    const auto dofs = mesh.cell_dofs(c);
    for (int a = 0; a < rule.corners; ++a) {
      if (dofs[a] < 0) continue;
      for (int b = 0; b < rule.corners; ++b) {
        if (dofs[b] < 0) continue;
        Real v = 0.0;
        for (int q = 0; q < rule.size(); ++q) v += rule.weights[q] * rule.shape[q][a] * rule.shape[q][b];
        trip.emplace_back(dofs[a], dofs[b], v);
      }
    }
  }
  CSparse m(mesh.dof_count(), mesh.dof_count());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

CSparse assemble_top_mass(const Mesh& mesh) {
  // 1D periodic hat mass: h/6 [4 1; 1 4] pattern, tensorised in 3D.
  const int P = mesh.P();
  const Real h = mesh.hx();
  std::vector<CTriplet> trip;
  auto m1 = [&](int i, int j) -> Real {
    int dlt = ((j - i) % P + P) % P;
    if (P == 1) return h;  // single periodic hat is the constant
    if (P == 2) return dlt == 0 ? 2.0 * h / 3.0 : h / 3.0;
    if (dlt == 0) return 2.0 * h / 3.0;
    if (dlt == 1 || dlt == P - 1) return h / 6.0;
    return 0.0;
  };
  if (mesh.dim() == 2) {
    for (int i = 0; i < P; ++i)
      for (int j = 0; j < P; ++j)
        if (Real v = m1(i, j); v != 0.0) trip.emplace_back(i, j, v);
  } else {
    for (int i2 = 0; i2 < P; ++i2)
      for (int i1 = 0; i1 < P; ++i1)
        for (int j2 = 0; j2 < P; ++j2)
          for (int j1 = 0; j1 < P; ++j1) {
            Real v = m1(i1, j1) * m1(i2, j2);
            if (v != 0.0) trip.emplace_back(i1 + P * i2, j1 + P * j2, v);
          }
  }
  CSparse m(mesh.top_dof_count(), mesh.top_dof_count());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

RVector lumped_node_mass(const Mesh& mesh) {
  RVector out = RVector::Zero(mesh.node_count());
  const Real share = mesh.cell_volume() / mesh.corners();
  for (Index c = 0; c < mesh.cell_count(); ++c) {
    const auto nodes = mesh.cell_nodes(c);
    for (int a = 0; a < mesh.corners(); ++a) out[nodes[a]] += share;
  }
  return out;
}

}  // namespace blochfem
