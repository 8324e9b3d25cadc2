#include "blochfem/measurement.hpp"

#include <cmath>
#include <random>

namespace blochfem {

using Eigen::Index;

CMatrix RhsBasis::samples(const Mesh& mesh, int f) const {
  if (f < 0 || f >= size()) throw ConfigError("RhsBasis: function index out of range");
  CellQuadrature rule(mesh, 2);
  const int m = f % regions_count();
  CMatrix out = CMatrix::Zero(mesh.cell_count(), rule.size());
  for (Index c = 0; c < mesh.cell_count(); ++c)
    for (int q = 0; q < rule.size(); ++q) {
      const Point x = rule.point(mesh, c, q);
      for (int r = 0; r < regions_count(); ++r)
        if (regions[r].contains(x, d)) {
          if (r == m) out(c, q) = value(f);
          break;
        }
    }
  return out;
}

RhsBasis make_rhs_basis(int d, Real R0, int nx, int nz) {
  if (d != 2 && d != 3) throw ConfigError("make_rhs_basis: dimension must be 2 or 3");
  if (nx < 1 || nz < 1) throw ConfigError("make_rhs_basis: partition counts must be >= 1");
  if (!(R0 > 0.0)) throw ConfigError("make_rhs_basis: R0 must be positive");
  RhsBasis b;
  b.d = d;
  const Real hx = 2.0 * kPi / nx, hz = R0 / nz;
  const int ny = d == 3 ? nx : 1;
  for (int kz = 0; kz < nz; ++kz)
    for (int ky = 0; ky < ny; ++ky)
      for (int kx = 0; kx < nx; ++kx) {
        Box box;
        box.value = 1.0;
        box.lo[0] = -kPi + kx * hx;
        box.hi[0] = -kPi + (kx + 1) * hx;
        if (d == 3) {
          box.lo[1] = -kPi + ky * hx;
          box.hi[1] = -kPi + (ky + 1) * hx;
        }
        box.lo[d - 1] = kz * hz;
        box.hi[d - 1] = (kz + 1) * hz;
        b.regions.push_back(box);
      }
  return b;
}

// ---------------------------------------------------------------------------

MeasurementSpace::MeasurementSpace(std::shared_ptr<const Mesh> mesh, MeasurementMode mode, int fields)
    : mesh_(std::move(mesh)), mode_(mode), fields_(fields) {
  if (fields_ < 1) throw ConfigError("MeasurementSpace: at least one field required");
  if (mode_ == MeasurementMode::Volume) {
    W_ = assemble_mass(*mesh_);
    n_ = mesh_->dof_count();
  } else {
    W_ = assemble_top_mass(*mesh_);
    top_ = mesh_->top_dofs();
    n_ = static_cast<Index>(top_.size());
  }
}

CVector MeasurementSpace::restrict(const CVector& U) const {
  if (U.size() != mesh_->dof_count()) throw ConfigError("MeasurementSpace::restrict: size mismatch");
  if (mode_ == MeasurementMode::Volume) return U;
  CVector out(n_);
  for (Index i = 0; i < n_; ++i) out[i] = U[top_[i]];
  return out;
}

CVector MeasurementSpace::extend(const CVector& y) const {
  if (y.size() != n_) throw ConfigError("MeasurementSpace::extend: size mismatch");
  if (mode_ == MeasurementMode::Volume) return y;
  CVector out = CVector::Zero(mesh_->dof_count());
  for (Index i = 0; i < n_; ++i) out[top_[i]] = y[i];
  return out;
}

CVector MeasurementSpace::weight(const CVector& v) const {
  if (v.size() != size()) throw ConfigError("MeasurementSpace: stacked size mismatch");
  CVector out(v.size());
  for (int f = 0; f < fields_; ++f) out.segment(f * n_, n_) = W_ * v.segment(f * n_, n_);
  return out;
}

Complex MeasurementSpace::inner(const CVector& a, const CVector& b) const { return b.dot(weight(a)); }

Real MeasurementSpace::norm(const CVector& a) const { return std::sqrt(std::max(0.0, inner(a, a).real())); }

// ---------------------------------------------------------------------------

ParameterSpace::ParameterSpace(std::shared_ptr<const Mesh> mesh, Real R0) : mesh_(std::move(mesh)) {
  if (!(R0 > 0.0) || R0 > mesh_->height()) throw ConfigError("ParameterSpace: R0 outside (0, R]");
  const RVector lumped = lumped_node_mass(*mesh_);
  jmax_ = static_cast<int>(std::floor(R0 / mesh_->hz() + 1e-9));
  jmax_ = std::min(jmax_, mesh_->V());
  for (Index n = 0; n < mesh_->node_count(); ++n)
    if (mesh_->node_coords(n)[2] <= jmax_) nodes_.push_back(n);
  w_.resize(size());
  for (Index i = 0; i < size(); ++i) w_[i] = lumped[nodes_[i]];
}

NodalField ParameterSpace::to_field(const CVector& p) const {
  if (p.size() != size()) throw ConfigError("ParameterSpace: parameter size mismatch");
  NodalField f(mesh_);
  for (Index i = 0; i < size(); ++i) f.values()[nodes_[i]] = p[i];
  return f;
}

CVector ParameterSpace::from_field(const NodalField& f) const {
  if (f.values().size() != mesh_->node_count()) throw ConfigError("ParameterSpace: field/mesh mismatch");
  CVector p(size());
  for (Index i = 0; i < size(); ++i) p[i] = f[nodes_[i]];
  return p;
}

Complex ParameterSpace::inner(const CVector& a, const CVector& b) const {
  return b.dot(w_.cast<Complex>().cwiseProduct(a));
}

Real ParameterSpace::norm(const CVector& a) const { return std::sqrt(std::max(0.0, inner(a, a).real())); }

// ---------------------------------------------------------------------------

CVector MeasurementData::stacked() const {
  if (fields.empty()) return CVector();
  const Index n = fields.front().size();
  CVector out(n * static_cast<Index>(fields.size()));
  for (size_t f = 0; f < fields.size(); ++f) {
    if (fields[f].size() != n) throw ConfigError("MeasurementData: ragged fields");
    out.segment(static_cast<Index>(f) * n, n) = fields[f];
  }
  return out;
}

MeasurementData MeasurementData::from_stacked(MeasurementMode mode, const CVector& v, int count) {
  if (count < 1 || v.size() % count != 0) throw ConfigError("MeasurementData: stacked size mismatch");
  MeasurementData d;
  d.mode = mode;
  const Index n = v.size() / count;
  for (int f = 0; f < count; ++f) d.fields.push_back(v.segment(f * n, n));
  return d;
}

MeasurementData add_noise(const MeasurementData& data, const MeasurementSpace& space, Real epsilon,
                          std::uint64_t seed) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ConfigError("add_noise: epsilon must lie in [0,1)");
  MeasurementData out = data;
  out.epsilon = epsilon;
  out.seed = seed;
  if (epsilon == 0.0) return out;
  const CVector clean = data.stacked();
  const Real dn = space.norm(clean);
  if (dn == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> U(-1.0, 1.0);
  CVector noise(clean.size());
  for (Index i = 0; i < noise.size(); ++i) {
    const Real re = U(rng);
    noise[i] = Complex(re, U(rng));
  }
  noise *= epsilon * dn / space.norm(noise);
  const CVector noisy = clean + noise;
  MeasurementData r = MeasurementData::from_stacked(data.mode, noisy, static_cast<int>(data.fields.size()));
  r.epsilon = epsilon;
  r.seed = seed;
  return r;
}

// ---------------------------------------------------------------------------

MeasurementModel::MeasurementModel(std::shared_ptr<ForwardSolver> solver, RhsBasis basis, MeasurementMode mode,
                                   Real R0)
    : solver_(std::move(solver)),
      basis_(std::move(basis)),
      params_(solver_->mesh(), R0),
      space_(solver_->mesh(), mode, basis_.size()) {
  if (basis_.regions_count() < 1) throw ConfigError("MeasurementModel: empty right-hand-side basis");
  if (basis_.d != solver_->mesh()->dim()) throw ConfigError("MeasurementModel: basis dimension mismatch");
  for (const Box& b : basis_.regions)
    if (b.hi[basis_.d - 1] > R0 + 1e-12) throw ConfigError("MeasurementModel: basis region above R0");
  F_.resize(basis_.regions_count());
  for (int m = 0; m < basis_.regions_count(); ++m) F_[m] = solver_->rhs(basis_.samples(*solver_->mesh(), m));
}

CVector MeasurementModel::stack(const std::vector<CVector>& region_fields) const {
  const int nf = basis_.regions_count();
  const Index n = space_.field_size();
  CVector out(space_.size());
  for (int m = 0; m < nf; ++m) {
    const CVector y = space_.restrict(region_fields[m]);
    out.segment(m * n, n) = y;
    out.segment((m + nf) * n, n) = kI * y;
  }
  return out;
}

std::vector<CVector> MeasurementModel::fold_adjoint(const CVector& r) const {
  if (r.size() != space_.size()) throw ConfigError("adjoint: residual shape mismatch");
  const int nf = basis_.regions_count();
  const Index n = space_.field_size();
  const CVector wr = space_.weight(r);
  std::vector<CVector> z(nf);
  for (int m = 0; m < nf; ++m)
    z[m] = space_.extend(CVector(wr.segment(m * n, n) - kI * wr.segment((m + nf) * n, n)));
  return z;
}

namespace {

CMatrix parameter_samples(const ParameterSpace& params, const Mesh& mesh, const CVector& p) {
  CellQuadrature rule(mesh, 2);
  return sample_at_quadrature(mesh, rule, params.to_field(p));
}

}  // namespace

CVector IterativeModel::evaluate(const CVector& q) {
  if (q.size() != parameter_size()) throw ConfigError("evaluate: parameter size mismatch");
  q_ = q;
  solver_->set_perturbation(parameter_samples(params_, *solver_->mesh(), q));
  const int nf = basis_.regions_count();
  states_.assign(nf, CVector());
  for (int m = 0; m < nf; ++m) {
    try {
      states_[m] = solver_->solve(F_[m]).U;
    } catch (const NonConvergence& e) {
      throw NonConvergence("basis " + std::to_string(m) + ": " + e.what(), e.residual());
    } catch (const SolverError& e) {
      throw SolverError("basis " + std::to_string(m) + ": " + e.what(), e.residual());
    }
  }
  return stack(states_);
}

CVector IterativeModel::derivative(const CVector& h) {
  if (states_.empty()) throw ConfigError("derivative: no cached states, call evaluate first");
  if (h.size() != parameter_size()) throw ConfigError("derivative: parameter size mismatch");
  const int nf = basis_.regions_count();
  std::vector<CVector> dU(nf, CVector::Zero(solver_->mesh()->dof_count()));
  if (h.isZero(0.0)) return stack(dU);
  const CouplingOperator Bh(solver_->mesh(), parameter_samples(params_, *solver_->mesh(), h));
  const BlochGrid& grid = solver_->grid();
  for (int m = 0; m < nf; ++m) {
    std::vector<CVector> F(grid.size());
    for (int n = 0; n < grid.size(); ++n) F[n] = -Bh.apply(grid.points[n], states_[m]);
    dU[m] = solver_->solve(F).U;
  }
  return stack(dU);
}

CVector IterativeModel::adjoint(const CVector& r) {
  if (states_.empty()) throw ConfigError("adjoint: no cached states, call evaluate first");
  const std::vector<CVector> z = fold_adjoint(r);
  const Mesh& mesh = *solver_->mesh();
  const BlochGrid& grid = solver_->grid();
  const int d = mesh.dim(), nc = mesh.corners();
  CellQuadrature rule(mesh, 2);
  const int nq = rule.size();
  const Index ncell = std::min<Index>(mesh.cell_count(),
                                      static_cast<Index>(params_.top_layer() + 1) * mesh.cell_count() / mesh.V());
  CMatrix S = CMatrix::Zero(ncell, nq);
  const std::vector<CVector> zeroG(grid.size(), CVector::Zero(mesh.dof_count()));
  for (size_t m = 0; m < z.size(); ++m) {
    if (z[m].isZero(0.0)) continue;
    const BlockSolution adj = solve_block_adjoint(solver_->system(), zeroG, z[m], solver_->config().solver);
    const CVector& U = states_[m];
    for (int n = 0; n < grid.size(); ++n) {
      const CVector& X = adj.W[n];
      const Alpha& a = grid.points[n];
      for (Index c = 0; c < ncell; ++c) {
        const auto dofs = mesh.cell_dofs(c);
        for (int q = 0; q < nq; ++q) {
          Complex u = 0.0, x = 0.0;
          for (int k = 0; k < nc; ++k)
            if (dofs[k] >= 0) {
              u += rule.shape[q][k] * U[dofs[k]];
              x += rule.shape[q][k] * X[dofs[k]];
            }
          const Complex ph = std::exp(kI * a.dot(horizontal(rule.point(mesh, c, q), d)));
          S(c, q) += rule.weights[q] * ph * u * std::conj(x);
        }
      }
    }
  }
  CVector g = CVector::Zero(mesh.node_count());
  for (Index c = 0; c < ncell; ++c) {
    const auto nodes = mesh.cell_nodes(c);
    for (int q = 0; q < nq; ++q)
      for (int k = 0; k < nc; ++k) g[nodes[k]] += rule.shape[q][k] * S(c, q);
  }
  CVector out = params_.from_field(NodalField(solver_->mesh(), g)).conjugate();
  return out.cwiseQuotient(params_.weights().cast<Complex>());
}

// ---------------------------------------------------------------------------

std::vector<CVector> synthetic_states(const ProblemConfig& fine, const ProblemConfig& coarse,
                                      const RhsBasis& basis) {
  if (fine.d != coarse.d || fine.R != coarse.R) throw ConfigError("synthetic data: fine and coarse cells differ");
  if (fine.M < coarse.M || fine.N < coarse.N || fine.J < coarse.J)
    throw ConfigError("synthetic data: fine configuration must not be coarser than the coarse one");
  ForwardSolver solver(fine);
  const auto coarse_mesh = coarse.mesh();
  std::vector<CVector> out(basis.size());
  const int nf = basis.regions_count();
  for (int m = 0; m < nf; ++m) {
    const CVector U = solver.solve(solver.rhs(basis.samples(*solver.mesh(), m))).U;
    out[m] = restrict_dofs(*solver.mesh(), U, *coarse_mesh);
    out[m + nf] = kI * out[m];
  }
  return out;
}

MeasurementData measurement_from_states(const std::vector<CVector>& states, const Mesh& coarse,
                                        MeasurementMode mode) {
  MeasurementData d;
  d.mode = mode;
  if (mode == MeasurementMode::Volume) {
    d.fields = states;
    return d;
  }
  const auto top = coarse.top_dofs();
  for (const CVector& U : states) {
    CVector t(static_cast<Index>(top.size()));
    for (size_t i = 0; i < top.size(); ++i) t[static_cast<Index>(i)] = U[top[i]];
    d.fields.push_back(t);
  }
  return d;
}

MeasurementData generate_synthetic_data(const ProblemConfig& fine, const ProblemConfig& coarse,
                                        const RhsBasis& basis, MeasurementMode mode, Real epsilon,
                                        std::uint64_t seed) {
  const auto mesh = coarse.mesh();
  const MeasurementData clean = measurement_from_states(synthetic_states(fine, coarse, basis), *mesh, mode);
  return add_noise(clean, MeasurementSpace(mesh, mode, basis.size()), epsilon, seed);
}

Real reconstruction_error(const NodalField& q_rec, const RegionSpec& truth) {
  const int d = q_rec.mesh().dim();
  return relative_l2_error(q_rec, [&](const Point& x) { return truth(x, d); });
}

}  // namespace blochfem
