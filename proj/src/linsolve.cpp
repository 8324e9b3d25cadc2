#include "blochfem/linsolve.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace blochfem {

using Eigen::Index;
using CGmres = std::function<CVector(const CVector&)>;

void parallel_for(int n, int workers, const std::function<void(int)>& f) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

BlockFactorization::BlockFactorization(CSparse A, const SolverConfig& config)
    : A_(std::move(A)),
      kind_(config.block_solver),
      tol_(config.inner_factor * config.tolerance),
      restart_(config.restart),
      max_iter_(config.inner_max_iterations) {
  A_.makeCompressed();
  if (kind_ == BlockSolverKind::Direct) {
    lu_ = std::make_unique<Eigen::SparseLU<CSparse, Eigen::COLAMDOrdering<int>>>();
    lu_->analyzePattern(A_);
    lu_->factorize(A_);
    if (lu_->info() != Eigen::Success) throw SolverError("sparse LU factorisation failed: " + lu_->lastErrorMessage());
  } else {
    ilu_ = std::make_unique<Ilu0<Complex>>(A_);
    AH_ = A_.adjoint();
  }
}

std::shared_ptr<const BlockFactorization> BlockFactorization::transposed(
    std::shared_ptr<const BlockFactorization> base) {
  if (!base || !base->lu_) throw ConfigError("transposed block view requires a direct factorisation");
  std::shared_ptr<BlockFactorization> v(new BlockFactorization());
  v->A_ = base->A_.transpose();
  v->kind_ = base->kind_;
  v->base_ = std::move(base);
  return v;
}

CVector BlockFactorization::solve_transposed(const CVector& b) const {
  CVector x = lu_->transpose().solve(b);
  return x;
}

CMatrix BlockFactorization::solve_transposed(const CMatrix& B) const {
  CMatrix X = lu_->transpose().solve(B);
  return X;
}

const std::string& BlockFactorization::warning() const noexcept {
  static const std::string none;
  return ilu_ ? ilu_->warning() : none;
}

CVector BlockFactorization::solve(const CVector& b, int* iterations) const {
  if (base_) return base_->solve_transposed(b);
  if (lu_) {
    CVector x = lu_->solve(b);
    if (lu_->info() != Eigen::Success) throw SolverError("sparse LU solve failed");
    return x;
  }
  CGmres op = [this](const CVector& v) { return CVector(A_ * v); };
  CGmres pc = [this](const CVector& v) { return ilu_->solve(v); };
  auto res = gmres<Complex>(op, b, pc, tol_, restart_, max_iter_);
  if (iterations) *iterations += res.iterations;
  if (!res.converged) throw NonConvergence("block GMRES did not converge", res.residual);
  return res.x;
}

CMatrix BlockFactorization::solve(const CMatrix& B) const {
  if (base_) return base_->solve_transposed(B);
  if (lu_) {
    CMatrix X = lu_->solve(B);
    if (lu_->info() != Eigen::Success) throw SolverError("sparse LU solve failed");
    return X;
  }
  CMatrix X(B.rows(), B.cols());
  for (Index j = 0; j < B.cols(); ++j) X.col(j) = solve(CVector(B.col(j)));
  return X;
}

CVector BlockFactorization::solve_adjoint(const CVector& b, int* iterations) const {
  if (base_) return base_->solve(CVector(b.conjugate())).conjugate();
  if (lu_) {
    CVector x = lu_->adjoint().solve(b);
    return x;
  }
  CGmres op = [this](const CVector& v) { return CVector(AH_ * v); };
  CGmres pc = [this](const CVector& v) { return ilu_->solve_adjoint(v); };
  auto res = gmres<Complex>(op, b, pc, tol_, restart_, max_iter_);
  if (iterations) *iterations += res.iterations;
  if (!res.converged) throw NonConvergence("adjoint block GMRES did not converge", res.residual);
  return res.x;
}

CVector BlockSystem::apply_B(int n, const CVector& U) const {
  if (!coupled()) return CVector::Zero(U.size());
  return B->apply(grid.points[n], U);
}

CVector BlockSystem::apply_B_adjoint(int n, const CVector& y) const {
  if (!coupled()) return CVector::Zero(y.size());
  return B->apply_adjoint(grid.points[n], y);
}

BlockSystem make_block_system(std::shared_ptr<const Mesh> mesh, const BlochGrid& grid,
                              const BlockAssembler& assembler, const SolverConfig& config) {
  BlockSystem sys;
  sys.mesh = mesh;
  sys.grid = grid;
  const int nb = grid.size();
  sys.A.resize(nb);
  sys.C.resize(nb);
  std::vector<int> mirror(nb, -1);
  if (config.block_solver == BlockSolverKind::Direct) {
    for (int n = 0; n < nb; ++n)
      for (int p = 0; p < n; ++p)
        if (mirror[p] < 0 && (grid.points[n] + grid.points[p]).norm() <= 1e-14) {
          mirror[n] = p;
          break;
        }
  }
  parallel_for(nb, config.workers, [&](int n) {
    if (mirror[n] < 0) sys.A[n] = std::make_shared<BlockFactorization>(assembler.assemble_A(grid.points[n]), config);
    sys.C[n] = assemble_C(grid, *mesh, n);
  });
  for (int n = 0; n < nb; ++n)
    if (mirror[n] >= 0) sys.A[n] = BlockFactorization::transposed(sys.A[mirror[n]]);
  return sys;
}

BlockSystem with_coupling(const BlockSystem& base, std::shared_ptr<const CouplingOperator> B) {
  BlockSystem sys = base;
  sys.B = std::move(B);
  return sys;
}

namespace {

// Wraps a block solve so failures carry the block index.
template <class F>
CVector guarded(int n, F&& f) {
  try {
    return f();
  } catch (const NonConvergence& e) {
    throw NonConvergence("block " + std::to_string(n) + ": " + e.what(), e.residual());
  } catch (const SolverError& e) {
    throw SolverError("block " + std::to_string(n) + ": " + e.what(), e.residual());
  }
}

CVector sum_in_order(const std::vector<CVector>& parts) {
  CVector s = parts.front();
  for (size_t i = 1; i < parts.size(); ++i) s += parts[i];
  return s;
}

}  // namespace

BlockSolution solve_block_system(const BlockSystem& sys, const std::vector<CVector>& F, const SolverConfig& config) {
  const int nb = sys.blocks();
  if (static_cast<int>(F.size()) != nb) throw ConfigError("solve_block_system: one rhs block per alpha required");
  const Index m = sys.mesh->dof_count();
  BlockSolution sol;
  sol.stats.resize(nb);
  for (int n = 0; n < nb; ++n) sol.stats[n].block = n;

  // A^{-1} F, reused for the Schur rhs and (without coupling) as W itself.
  std::vector<CVector> AinvF(nb), parts(nb);
  parallel_for(nb, config.workers, [&](int n) {
    if (F[n].size() != m) throw ConfigError("solve_block_system: rhs block size mismatch");
    AinvF[n] = guarded(n, [&] { return sys.A[n]->solve(F[n], &sol.stats[n].iterations); });
    parts[n] = -sys.C[n].cwiseProduct(AinvF[n]);
  });
  const CVector rhs = sum_in_order(parts);

  if (!sys.coupled()) {
    sol.U = rhs;
    sol.W = std::move(AinvF);
    return sol;
  }

  CGmres schur = [&](const CVector& U) {
    std::vector<CVector> t(nb);
    parallel_for(nb, config.workers, [&](int n) {
      const CVector BU = sys.apply_B(n, U);
      t[n] = sys.C[n].cwiseProduct(guarded(n, [&] { return sys.A[n]->solve(BU, &sol.stats[n].iterations); }));
    });
    return CVector(U - sum_in_order(t));
  };
  auto res = gmres<Complex>(schur, rhs, nullptr, config.tolerance, config.restart, config.max_iterations);
  sol.outer_iterations = res.iterations;
  sol.outer_residual = res.residual;
  if (!res.converged) throw NonConvergence("Schur GMRES did not converge", res.residual);
  sol.U = res.x;
  sol.W.resize(nb);
  parallel_for(nb, config.workers, [&](int n) {
    const CVector BU = sys.apply_B(n, sol.U);
    sol.W[n] = AinvF[n] - guarded(n, [&] { return sys.A[n]->solve(BU, &sol.stats[n].iterations); });
  });
  return sol;
}

BlockSolution solve_block_adjoint(const BlockSystem& sys, const std::vector<CVector>& G, const CVector& z,
                                  const SolverConfig& config) {
  const int nb = sys.blocks();
  if (static_cast<int>(G.size()) != nb) throw ConfigError("solve_block_adjoint: one block per alpha required");
  BlockSolution sol;
  sol.stats.resize(nb);
  std::vector<CVector> AinvG(nb);
  parallel_for(nb, config.workers, [&](int n) {
    AinvG[n] = guarded(n, [&] { return sys.A[n]->solve_adjoint(G[n], &sol.stats[n].iterations); });
  });
  if (!sys.coupled()) {
    sol.U = z;
    sol.W.resize(nb);
    for (int n = 0; n < nb; ++n) sol.W[n] = AinvG[n] - sys.A[n]->solve_adjoint(sys.C[n].conjugate().cwiseProduct(z));
    return sol;
  }
  std::vector<CVector> parts(nb);
  parallel_for(nb, config.workers, [&](int n) { parts[n] = sys.apply_B_adjoint(n, AinvG[n]); });
  const CVector rhs = z - sum_in_order(parts);
  CGmres schur = [&](const CVector& Y) {
    std::vector<CVector> t(nb);
    parallel_for(nb, config.workers, [&](int n) {
      const CVector cY = sys.C[n].conjugate().cwiseProduct(Y);
      t[n] = sys.apply_B_adjoint(n, guarded(n, [&] { return sys.A[n]->solve_adjoint(cY, &sol.stats[n].iterations); }));
    });
    return CVector(Y - sum_in_order(t));
  };
  auto res = gmres<Complex>(schur, rhs, nullptr, config.tolerance, config.restart, config.max_iterations);
  sol.outer_iterations = res.iterations;
  sol.outer_residual = res.residual;
  if (!res.converged) throw NonConvergence("adjoint Schur GMRES did not converge", res.residual);
  sol.U = res.x;
  sol.W.resize(nb);
  parallel_for(nb, config.workers, [&](int n) {
    const CVector cY = sys.C[n].conjugate().cwiseProduct(sol.U);
    sol.W[n] = guarded(n, [&] { return sys.A[n]->solve_adjoint(CVector(G[n] - cY), &sol.stats[n].iterations); });
  });
  return sol;
}

Real bordered_residual(const BlockSystem& sys, const std::vector<CVector>& F, const BlockSolution& sol) {
  Real r2 = 0.0, f2 = 0.0;
  CVector last = sol.U;
  for (int n = 0; n < sys.blocks(); ++n) {
    const CVector row = sys.A[n]->matrix() * sol.W[n] + sys.apply_B(n, sol.U) - F[n];
    r2 += row.squaredNorm();
    f2 += F[n].squaredNorm();
    last += sys.C[n].cwiseProduct(sol.W[n]);
  }
  r2 += last.squaredNorm();
  return std::sqrt(r2) / std::sqrt(f2);
}

CMatrix dense_bordered_matrix(const BlockSystem& sys) {
  const Index m = sys.mesh->dof_count();
  const int nb = sys.blocks();
  CMatrix K = CMatrix::Zero(m * (nb + 1), m * (nb + 1));
  for (int n = 0; n < nb; ++n) {
    K.block(n * m, n * m, m, m) = CMatrix(sys.A[n]->matrix());
    for (Index j = 0; j < m; ++j) {
      CVector e = CVector::Zero(m);
      e[j] = 1.0;
      K.block(n * m, nb * m + j, m, 1) = sys.apply_B(n, e);
    }
    K.block(nb * m, n * m, m, m) = sys.C[n].asDiagonal();
  }
  K.block(nb * m, nb * m, m, m).setIdentity();
  return K;
}

}  // namespace blochfem
