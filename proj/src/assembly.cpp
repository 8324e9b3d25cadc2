#include "blochfem/assembly.hpp"

#include <cmath>

namespace blochfem {

using Eigen::Index;

namespace {

using Local = Eigen::Matrix<Real, 8, 8>;

CSparse assemble_uniform(const Mesh& mesh, const Local& local) {
  const int nc = mesh.corners();
  std::vector<CTriplet> trip;
  trip.reserve(static_cast<size_t>(mesh.cell_count()) * nc * nc);
  for (Index c = 0; c < mesh.cell_count(); ++c) {
    const auto dofs = mesh.cell_dofs(c);
    for (int a = 0; a < nc; ++a) {
      if (dofs[a] < 0) continue;
      for (int b = 0; b < nc; ++b)
        if (dofs[b] >= 0 && local(a, b) != 0.0) trip.emplace_back(dofs[a], dofs[b], local(a, b));
    }
  }
  CSparse out(mesh.dof_count(), mesh.dof_count());
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

Complex phase(const Alpha& alpha, const Point& x, int d) { return std::exp(kI * alpha.dot(horizontal(x, d))); }

}  // namespace

CMatrix sample_at_quadrature(const Mesh& mesh, const CellQuadrature& rule, const Coefficient& f) {
  CMatrix out(mesh.cell_count(), rule.size());
  for (Index c = 0; c < mesh.cell_count(); ++c)
    for (int q = 0; q < rule.size(); ++q) out(c, q) = f(rule.point(mesh, c, q));
  return out;
}

CMatrix sample_at_quadrature(const Mesh& mesh, const CellQuadrature& rule, const NodalField& f) {
  if (f.values().size() != mesh.node_count()) throw ConfigError("sample_at_quadrature: field/mesh mismatch");
  CMatrix out(mesh.cell_count(), rule.size());
  for (Index c = 0; c < mesh.cell_count(); ++c) {
    const auto nodes = mesh.cell_nodes(c);
    for (int q = 0; q < rule.size(); ++q) {
      Complex v = 0.0;
      for (int a = 0; a < rule.corners; ++a) v += rule.shape[q][a] * f[nodes[a]];
      out(c, q) = v;
    }
  }
  return out;
}

BlockAssembler::BlockAssembler(std::shared_ptr<const Mesh> mesh, const Coefficient& k2np2, Real k, int J)
    : mesh_(std::move(mesh)), k_(k), J_(J) {
  const Mesh& m = *mesh_;
  const int d = m.dim(), nc = m.corners();
  CellQuadrature rule(m, 2);
  Local Kl = Local::Zero(), Ml = Local::Zero(), Sl[2] = {Local::Zero(), Local::Zero()};
  for (int q = 0; q < rule.size(); ++q) {
    const Real w = rule.weights[q];
    for (int a = 0; a < nc; ++a)
      for (int b = 0; b < nc; ++b) {
        Kl(a, b) += w * rule.gradient[q][a].dot(rule.gradient[q][b]);
        Ml(a, b) += w * rule.shape[q][a] * rule.shape[q][b];
        for (int k = 0; k < d - 1; ++k)
          Sl[k](a, b) += w * (rule.gradient[q][b][k] * rule.shape[q][a] - rule.shape[q][b] * rule.gradient[q][a][k]);
      }
  }
  K_ = assemble_uniform(m, Kl);
  M_ = assemble_uniform(m, Ml);
  for (int k = 0; k < d - 1; ++k) S_[k] = assemble_uniform(m, Sl[k]);

  const CMatrix n2 = sample_at_quadrature(m, rule, k2np2);
  std::vector<CTriplet> trip;
  trip.reserve(static_cast<size_t>(m.cell_count()) * nc * nc);
  for (Index c = 0; c < m.cell_count(); ++c) {
    const auto dofs = m.cell_dofs(c);
    for (int a = 0; a < nc; ++a) {
      if (dofs[a] < 0) continue;
      for (int b = 0; b < nc; ++b) {
        if (dofs[b] < 0) continue;
        Complex v = 0.0;
        for (int q = 0; q < rule.size(); ++q) v += rule.weights[q] * n2(c, q) * rule.shape[q][a] * rule.shape[q][b];
        trip.emplace_back(dofs[a], dofs[b], v);
      }
    }
  }
  Mn_.resize(m.dof_count(), m.dof_count());
  Mn_.setFromTriplets(trip.begin(), trip.end());
}

CSparse BlockAssembler::assemble_A(const Alpha& alpha) const {
  const Mesh& m = *mesh_;
  const int d = m.dim();
  CSparse A = K_ - Mn_;
  A += Complex(alpha.squaredNorm()) * M_;
  for (int k = 0; k < d - 1; ++k)
    if (alpha[k] != 0.0) A += (kI * alpha[k]) * S_[k];
  if (J_ >= 0) {
    RayleighSpectrum spectrum(k_, J_, d);
    const CMatrix D = dtn_block(m, spectrum, alpha);
    const auto top = m.top_dofs();
    std::vector<CTriplet> trip;
    trip.reserve(D.size());
    for (Index i = 0; i < D.rows(); ++i)
      for (Index j = 0; j < D.cols(); ++j) trip.emplace_back(top[i], top[j], D(i, j));
    CSparse Ds(m.dof_count(), m.dof_count());
    Ds.setFromTriplets(trip.begin(), trip.end());
    A += Ds;
  }
  A.makeCompressed();
  return A;
}

CSparse assemble_A(std::shared_ptr<const Mesh> mesh, const Coefficient& k2np2, Real k, const Alpha& alpha, int J) {
  return BlockAssembler(std::move(mesh), k2np2, k, J).assemble_A(alpha);
}

CSparse assemble_B(const Mesh& mesh, const CMatrix& k2q, const Alpha& alpha) {
  CellQuadrature rule(mesh, 2);
  if (k2q.rows() != mesh.cell_count() || k2q.cols() != rule.size())
    throw ConfigError("assemble_B: coefficient samples do not match the quadrature");
  const int d = mesh.dim(), nc = mesh.corners();
  std::vector<CTriplet> trip;
  for (Index c = 0; c < mesh.cell_count(); ++c) {
    if (k2q.row(c).isZero(0.0)) continue;
    const auto dofs = mesh.cell_dofs(c);
    Complex wq[27];
    for (int q = 0; q < rule.size(); ++q)
      wq[q] = -rule.weights[q] * k2q(c, q) * phase(alpha, rule.point(mesh, c, q), d);
    for (int a = 0; a < nc; ++a) {
      if (dofs[a] < 0) continue;
      for (int b = 0; b < nc; ++b) {
        if (dofs[b] < 0) continue;
        Complex v = 0.0;
        for (int q = 0; q < rule.size(); ++q) v += wq[q] * rule.shape[q][a] * rule.shape[q][b];
        trip.emplace_back(dofs[a], dofs[b], v);
      }
    }
  }
  CSparse B(mesh.dof_count(), mesh.dof_count());
  B.setFromTriplets(trip.begin(), trip.end());
  return B;
}

CVector assemble_C(const BlochGrid& grid, const Mesh& mesh, int n) {
  if (n < 0 || n >= grid.size()) throw ConfigError("assemble_C: alpha index out of range");
  CVector c(mesh.dof_count());
  for (Index m = 0; m < mesh.dof_count(); ++m)
    c[m] = -grid.weights[n] * std::exp(-kI * grid.points[n].dot(horizontal(mesh.dof_point(m), mesh.dim())));
  return c;
}

CVector assemble_F(const Mesh& mesh, const Alpha& alpha, const TransformedSource& source) {
  const int d = mesh.dim(), nc = mesh.corners();
  CVector F = CVector::Zero(mesh.dof_count());
  CellQuadrature rule(mesh, 2);
  if (source.volume) {
    for (Index c = 0; c < mesh.cell_count(); ++c) {
      const auto dofs = mesh.cell_dofs(c);
      for (int q = 0; q < rule.size(); ++q) {
        const Point x = rule.point(mesh, c, q);
        const Complex v = rule.weights[q] * phase(alpha, x, d) * source.volume(alpha, x);
        for (int a = 0; a < nc; ++a)
          if (dofs[a] >= 0) F[dofs[a]] += v * rule.shape[q][a];
      }
    }
  }
  if (source.boundary) {
    // top faces: tensor Gauss rule on the (d-1)-dimensional face
    auto [gx, gw] = gauss_legendre_01(2);
    const int P = mesh.P();
    const Real h = mesh.hx();
    const int faces = d == 2 ? P : P * P;
    const int nq = d == 2 ? 2 : 4;
    for (int f = 0; f < faces; ++f) {
      const int c1 = f % P, c2 = f / P;
      const Index cell = d == 2 ? c1 + Index(P) * (mesh.V() - 1)
                                : c1 + Index(P) * (c2 + Index(P) * (mesh.V() - 1));
      const auto dofs = mesh.cell_dofs(cell);
      for (int q = 0; q < nq; ++q) {
        Point xi = Point::Zero();
        xi[0] = gx[q % 2];
        Real w = gw[q % 2] * h;
        if (d == 3) {
          xi[1] = gx[q / 2];
          w *= gw[q / 2] * h;
        }
        xi[d - 1] = 1.0;
        Point x = mesh.cell_origin(cell);
        x[0] += xi[0] * h;
        if (d == 3) x[1] += xi[1] * h;
        x[d - 1] = mesh.height();
        const auto phi = q1_shape(xi, d);
        const Complex v = w * phase(alpha, x, d) * source.boundary(alpha, x);
        for (int a = 0; a < nc; ++a)
          if (dofs[a] >= 0 && phi[a] != 0.0) F[dofs[a]] += v * phi[a];
      }
    }
  }
  return F;
}

CVector assemble_F(const Mesh& mesh, const Alpha& alpha, const Coefficient& f) {
  CellQuadrature rule(mesh, 2);
  return assemble_F(mesh, alpha, sample_at_quadrature(mesh, rule, f));
}

CVector assemble_F(const Mesh& mesh, const Alpha& alpha, const CMatrix& fs) {
  const int d = mesh.dim(), nc = mesh.corners();
  CellQuadrature rule(mesh, 2);
  if (fs.rows() != mesh.cell_count() || fs.cols() != rule.size())
    throw ConfigError("assemble_F: source samples do not match the quadrature");
  CVector F = CVector::Zero(mesh.dof_count());
  for (Index c = 0; c < mesh.cell_count(); ++c) {
    if (fs.row(c).isZero(0.0)) continue;
    const auto dofs = mesh.cell_dofs(c);
    for (int q = 0; q < rule.size(); ++q) {
      const Complex v = rule.weights[q] * phase(alpha, rule.point(mesh, c, q), d) * fs(c, q);
      for (int a = 0; a < nc; ++a)
        if (dofs[a] >= 0) F[dofs[a]] += v * rule.shape[q][a];
    }
  }
  return F;
}

CouplingOperator::CouplingOperator(std::shared_ptr<const Mesh> mesh, CMatrix k2q)
    : mesh_(std::move(mesh)), rule_(*mesh_, 2), q_(std::move(k2q)) {
  if (q_.rows() != mesh_->cell_count() || q_.cols() != rule_.size())
    throw ConfigError("CouplingOperator: coefficient samples do not match the quadrature");
  empty_ = q_.isZero(0.0);
}

CVector CouplingOperator::apply(const Alpha& alpha, const CVector& U) const {
  const Mesh& m = *mesh_;
  const int d = m.dim(), nc = m.corners();
  CVector out = CVector::Zero(m.dof_count());
  if (empty_) return out;
  for (Index c = 0; c < m.cell_count(); ++c) {
    if (q_.row(c).isZero(0.0)) continue;
    const auto dofs = m.cell_dofs(c);
    for (int q = 0; q < rule_.size(); ++q) {
      Complex u = 0.0;
      for (int a = 0; a < nc; ++a)
        if (dofs[a] >= 0) u += rule_.shape[q][a] * U[dofs[a]];
      const Complex v = -rule_.weights[q] * q_(c, q) * phase(alpha, rule_.point(m, c, q), d) * u;
      for (int a = 0; a < nc; ++a)
        if (dofs[a] >= 0) out[dofs[a]] += v * rule_.shape[q][a];
    }
  }
  return out;
}

CVector CouplingOperator::apply_adjoint(const Alpha& alpha, const CVector& y) const {
  const Mesh& m = *mesh_;
  const int d = m.dim(), nc = m.corners();
  CVector out = CVector::Zero(m.dof_count());
  if (empty_) return out;
  for (Index c = 0; c < m.cell_count(); ++c) {
    if (q_.row(c).isZero(0.0)) continue;
    const auto dofs = m.cell_dofs(c);
    for (int q = 0; q < rule_.size(); ++q) {
      Complex t = 0.0;
      for (int a = 0; a < nc; ++a)
        if (dofs[a] >= 0) t += rule_.shape[q][a] * y[dofs[a]];
      const Complex v = std::conj(-rule_.weights[q] * q_(c, q) * phase(alpha, rule_.point(m, c, q), d)) * t;
      for (int a = 0; a < nc; ++a)
        if (dofs[a] >= 0) out[dofs[a]] += v * rule_.shape[q][a];
    }
  }
  return out;
}

}  // namespace blochfem
