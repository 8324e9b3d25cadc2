#include "blochfem/reduced_model.hpp"

#include <array>
#include <chrono>
#include <cmath>

namespace blochfem {

using Eigen::Index;

DenseReducedModel::DenseReducedModel(std::shared_ptr<ForwardSolver> solver, RhsBasis basis, MeasurementMode mode,
                                     Real R0)
    : MeasurementModel(std::move(solver), std::move(basis), mode, R0) {
  const auto t0 = std::chrono::steady_clock::now();
  const Mesh& mesh = *solver_->mesh();
  if (mesh.dim() != 2) throw ConfigError("DenseReducedModel: only d = 2 is supported");
  const BlochGrid& grid = solver_->grid();
  const int P = mesh.P(), V = mesh.V(), jmax = params_.top_layer();
  const int smax = std::min(jmax + 1, V);
  m_ = mesh.dof_count();
  ns_ = static_cast<Index>(P) * smax;
  const Index ncell = static_cast<Index>(std::min(jmax + 1, V)) * P;

  // Offset classes by (corner x-bit, quadrature x-index, wrap).
  CellQuadrature rule(mesh, 2);
  const int nq = rule.size();
  std::array<Real, kClasses> delta{};
  std::array<bool, kClasses> seen{};
  auto class_of = [&](Index c, int q, int a, Index dof) {
    const Point xq = rule.point(mesh, c, q);
    const Real dx = xq[0] - mesh.dof_point(dof)[0];
    const int xi = rule.reference[q][0] < 0.5 ? 0 : 1;
    const int bit = a & 1;
    const int cls = bit == 0 ? xi : (dx > kPi ? 4 + xi : 2 + xi);
    if (!seen[cls]) {
      seen[cls] = true;
      delta[cls] = dx;
    }
    return cls;
  };

  std::vector<Index> param_of(mesh.node_count(), -1);
  for (Index i = 0; i < params_.size(); ++i) param_of[params_.nodes()[i]] = i;
  std::vector<Eigen::Triplet<Complex>> qt;
  for (Index c = 0; c < ncell; ++c) {
    const auto nodes = mesh.cell_nodes(c);
    const auto dofs = mesh.cell_dofs(c);
    for (int q = 0; q < nq; ++q) {
      const Index s = c * nq + q;
      for (int a = 0; a < rule.corners; ++a)
        if (param_of[nodes[a]] >= 0) qt.emplace_back(s, param_of[nodes[a]], rule.shape[q][a]);
      for (int a = 0; a < rule.corners; ++a) {
        if (dofs[a] < 0) continue;
        const int cls = class_of(c, q, a, dofs[a]);
        for (int b = 0; b < rule.corners; ++b) {
          if (dofs[b] < 0) continue;
          entries_.push_back({cls * ns_ + dofs[a], dofs[b], s,
                              -rule.weights[q] * rule.shape[q][a] * rule.shape[q][b]});
        }
      }
    }
  }
  Q_.resize(ncell * nq, params_.size());
  Q_.setFromTriplets(qt.begin(), qt.end());

  // G_delta, accumulated over the alpha samples in column chunks.
  G_ = CMatrix::Zero(m_, kClasses * ns_);
  const Index chunk = 256;
  for (int n = 0; n < grid.size(); ++n) {
    const Alpha& al = grid.points[n];
    const BlockFactorization& A = *solver_->system().A[n];
    const CVector& cn = solver_->system().C[n];
    std::array<Complex, kClasses> ph;
    for (int k = 0; k < kClasses; ++k) ph[k] = std::exp(kI * al[0] * delta[k]);
    for (Index j0 = 0; j0 < ns_; j0 += chunk) {
      const Index w = std::min(chunk, ns_ - j0);
      CMatrix R = CMatrix::Zero(m_, w);
      for (Index j = 0; j < w; ++j) R(j0 + j, j) = std::exp(kI * al[0] * mesh.dof_point(j0 + j)[0]);
      CMatrix X = A.solve(R);
      X = cn.asDiagonal() * X;
      for (int k = 0; k < kClasses; ++k) G_.middleCols(k * ns_ + j0, w) += ph[k] * X;
    }
  }

  // q = 0 states.
  const int nf = basis_.regions_count();
  BlockSystem free = with_coupling(solver_->system(), nullptr);
  U0_.resize(m_, nf);
  for (int k = 0; k < nf; ++k) U0_.col(k) = solve_block_system(free, F_[k], solver_->config().solver).U;
  setup_seconds_ = std::chrono::duration<Real>(std::chrono::steady_clock::now() - t0).count();
}

CSparse DenseReducedModel::stacked_coupling(const CVector& samples) const {
  std::vector<Eigen::Triplet<Complex>> t;
  t.reserve(entries_.size());
  for (const Entry& e : entries_) {
    const Complex v = e.coef * samples[e.sample];
    if (v != 0.0) t.emplace_back(e.row, e.col, v);
  }
  CSparse K(kClasses * ns_, ns_);
  K.setFromTriplets(t.begin(), t.end());
  return K;
}

CVector DenseReducedModel::evaluate(const CVector& q) {
  if (q.size() != parameter_size()) throw ConfigError("evaluate: parameter size mismatch");
  q_ = q;
  const CSparse K = stacked_coupling(Q_ * q);
  T_ = G_ * K;
  CMatrix I_T = -T_.topRows(ns_);
  I_T.diagonal().array() += 1.0;
  lu_.compute(I_T);
  states_matrix_.resize(m_, U0_.cols());
  states_matrix_.topRows(ns_) = lu_.solve(U0_.topRows(ns_));
  states_matrix_.bottomRows(m_ - ns_) = U0_.bottomRows(m_ - ns_) + T_.bottomRows(m_ - ns_) * states_matrix_.topRows(ns_);
  if (!states_matrix_.allFinite()) throw SolverError("reduced model: singular Schur matrix");
  states_.resize(U0_.cols());
  for (Index k = 0; k < U0_.cols(); ++k) states_[k] = states_matrix_.col(k);
  return stack(states_);
}

CVector DenseReducedModel::derivative(const CVector& h) {
  if (states_.empty()) throw ConfigError("derivative: no cached states, call evaluate first");
  if (h.size() != parameter_size()) throw ConfigError("derivative: parameter size mismatch");
  const CSparse K = stacked_coupling(Q_ * h);
  const CMatrix Y = K * states_matrix_.topRows(ns_);
  const CMatrix R = G_ * Y;
  CMatrix dU(m_, Y.cols());
  dU.topRows(ns_) = lu_.solve(R.topRows(ns_));
  dU.bottomRows(m_ - ns_) = R.bottomRows(m_ - ns_) + T_.bottomRows(m_ - ns_) * dU.topRows(ns_);
  std::vector<CVector> cols(dU.cols());
  for (Index k = 0; k < dU.cols(); ++k) cols[k] = dU.col(k);
  return stack(cols);
}

CVector DenseReducedModel::adjoint(const CVector& r) {
  if (states_.empty()) throw ConfigError("adjoint: no cached states, call evaluate first");
  const std::vector<CVector> z = fold_adjoint(r);
  const Index nf = static_cast<Index>(z.size());
  CMatrix Z(m_, nf);
  for (Index k = 0; k < nf; ++k) Z.col(k) = z[k];
  CMatrix Vm(m_, nf);
  Vm.bottomRows(m_ - ns_) = Z.bottomRows(m_ - ns_);
  const CMatrix rhs = Z.topRows(ns_) + T_.bottomRows(m_ - ns_).adjoint() * Z.bottomRows(m_ - ns_);
  Vm.topRows(ns_) = lu_.adjoint().solve(rhs);
  const CMatrix Tc = G_.adjoint() * Vm;  // 6 ns x N_f
  CVector g = CVector::Zero(Q_.rows());
  for (const Entry& e : entries_) {
    Complex acc = 0.0;
    for (Index k = 0; k < nf; ++k) acc += states_matrix_(e.col, k) * std::conj(Tc(e.row, k));
    g[e.sample] += e.coef * acc;
  }
  const CVector gp = Q_.transpose() * g;
  return gp.conjugate().cwiseQuotient(params_.weights().cast<Complex>());
}

}  // namespace blochfem
