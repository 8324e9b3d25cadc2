#ifndef BLOCHFEM_LINSOLVE_HPP
#define BLOCHFEM_LINSOLVE_HPP

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "blochfem/assembly.hpp"
#include "blochfem/mesh.hpp"
#include "blochfem/spectral.hpp"

namespace blochfem {

enum class BlockSolverKind { IluGmres, Direct };

struct SolverConfig {
  Real tolerance = 1e-10;         ///< relative residual of every GMRES run
  int max_iterations = 500;       ///< outer (Schur) GMRES cap
  int restart = 100;
  BlockSolverKind block_solver = BlockSolverKind::Direct;
  Real inner_factor = 0.01;       ///< inner tolerance = inner_factor * tolerance
  int inner_max_iterations = 5000;
  int workers = 1;
};

/// Runs f(i) for i in [0, n) on up to `workers` threads. Each index is
/// handled by exactly one thread, so results written per index do not depend
/// on scheduling.
void parallel_for(int n, int workers, const std::function<void(int)>& f);

/// ILU(0) on the sparsity pattern of a square matrix. A structurally zero
/// pivot switches to Jacobi scaling and records a warning.
template <class Scalar>
class Ilu0 {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using RowMatrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor, int>;

  Ilu0() = default;
  template <class Matrix>
  explicit Ilu0(const Matrix& A) { compute(A); }

  template <class Matrix>
  void compute(const Matrix& A) {
    if (A.rows() != A.cols()) throw ConfigError("ILU(0): matrix must be square");
    LU_ = RowMatrix(A);
    LU_.makeCompressed();
    const int n = static_cast<int>(LU_.rows());
    diag_.assign(n, -1);
    fallback_ = false;
    warning_.clear();
    Scalar* val = LU_.valuePtr();
    const int* col = LU_.innerIndexPtr();
    const int* start = LU_.outerIndexPtr();
    for (int i = 0; i < n; ++i)
      for (int p = start[i]; p < start[i + 1]; ++p)
        if (col[p] == i) diag_[i] = p;
    std::vector<int> where(n, -1);
    for (int i = 0; i < n && !fallback_; ++i) {
      if (diag_[i] < 0) {
        fallback_ = true;
        break;
      }
      for (int p = start[i]; p < start[i + 1]; ++p) where[col[p]] = p;
      for (int p = start[i]; p < start[i + 1] && col[p] < i; ++p) {
        const int k = col[p];
        const Scalar pivot = val[diag_[k]];
        if (pivot == Scalar(0)) {
          fallback_ = true;
          break;
        }
        val[p] /= pivot;
        for (int r = diag_[k] + 1; r < start[k + 1]; ++r)
          if (where[col[r]] >= 0) val[where[col[r]]] -= val[p] * val[r];
      }
      for (int p = start[i]; p < start[i + 1]; ++p) where[col[p]] = -1;
      if (!fallback_ && val[diag_[i]] == Scalar(0)) fallback_ = true;
    }
    if (fallback_) {
      warning_ = "ILU(0): zero pivot, falling back to Jacobi preconditioning";
      RowMatrix B(A);
      jacobi_ = Vector::Ones(n);
      for (int i = 0; i < n; ++i) {
        const Scalar d = B.coeff(i, i);
        if (d != Scalar(0)) jacobi_[i] = Scalar(1) / d;
      }
    }
  }

  bool fallback() const noexcept { return fallback_; }
  const std::string& warning() const noexcept { return warning_; }

  Vector solve(const Vector& b) const {
    if (fallback_) return jacobi_.cwiseProduct(b);
    const int n = static_cast<int>(LU_.rows());
    const Scalar* val = LU_.valuePtr();
    const int* col = LU_.innerIndexPtr();
    const int* start = LU_.outerIndexPtr();
    Vector x = b;
    for (int i = 0; i < n; ++i)
      for (int p = start[i]; p < diag_[i]; ++p) x[i] -= val[p] * x[col[p]];
    for (int i = n - 1; i >= 0; --i) {
      for (int p = diag_[i] + 1; p < start[i + 1]; ++p) x[i] -= val[p] * x[col[p]];
      x[i] /= val[diag_[i]];
    }
    return x;
  }

  /// (LU)^{-H} b.
  Vector solve_adjoint(const Vector& b) const {
    if (fallback_) return jacobi_.conjugate().cwiseProduct(b);
    const int n = static_cast<int>(LU_.rows());
    const Scalar* val = LU_.valuePtr();
    const int* col = LU_.innerIndexPtr();
    const int* start = LU_.outerIndexPtr();
    Vector x = b;
    for (int i = 0; i < n; ++i) {
      x[i] /= Eigen::numext::conj(val[diag_[i]]);
      for (int p = diag_[i] + 1; p < start[i + 1]; ++p) x[col[p]] -= Eigen::numext::conj(val[p]) * x[i];
    }
    for (int i = n - 1; i >= 0; --i)
      for (int p = start[i]; p < diag_[i]; ++p) x[col[p]] -= Eigen::numext::conj(val[p]) * x[i];
    return x;
  }

 private:
  RowMatrix LU_;
  std::vector<int> diag_;
  Vector jacobi_;
  bool fallback_ = false;
  std::string warning_;
};

template <class Scalar>
struct GmresResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
  int iterations = 0;
  Real residual = 0.0;  ///< final relative residual ||b - A x|| / ||b||
  bool converged = false;
};

/// Restarted GMRES with right preconditioning. Convergence is judged on the
/// true relative residual at every restart boundary.
template <class Scalar>
GmresResult<Scalar> gmres(
    const std::function<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>&)>& op,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b,
    const std::function<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>&)>& precond,
    Real tol, int restart, int max_iterations,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>* x0 = nullptr) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using std::abs;
  using std::sqrt;
  if (!(tol > 0.0 && tol < 1.0)) throw ConfigError("gmres: tolerance must lie in (0,1)");
  if (restart < 1) throw ConfigError("gmres: restart must be >= 1");
  GmresResult<Scalar> out;
  const Eigen::Index n = b.size();
  out.x = x0 ? *x0 : Vector::Zero(n);
  const Real bnorm = b.norm();
  if (bnorm == 0.0) {
    out.x.setZero();
    out.converged = true;
    return out;
  }
  auto M = [&](const Vector& v) { return precond ? precond(v) : v; };
  Vector r = b - op(out.x);
  Real rnorm = r.norm();
  out.residual = rnorm / bnorm;
  if (out.residual <= tol) {
    out.converged = true;
    return out;
  }
  while (out.iterations < max_iterations) {
    const int m = std::min(restart, max_iterations - out.iterations);
    Matrix V(n, m + 1), Z(n, m);
    Matrix H = Matrix::Zero(m + 1, m);
    std::vector<Real> cs(m);
    std::vector<Scalar> sn(m);
    Vector g = Vector::Zero(m + 1);
    g[0] = rnorm;
    V.col(0) = r / rnorm;
    int j = 0;
    for (; j < m; ++j) {
      Z.col(j) = M(V.col(j));
      Vector w = op(Z.col(j));
      for (int i = 0; i <= j; ++i) {  // modified Gram-Schmidt, two passes
        const Scalar h = V.col(i).dot(w);
        H(i, j) = h;
        w -= h * V.col(i);
      }
      for (int i = 0; i <= j; ++i) {
        const Scalar h = V.col(i).dot(w);
        H(i, j) += h;
        w -= h * V.col(i);
      }
      const Real hn = w.norm();
      H(j + 1, j) = hn;
      if (hn > 0.0) V.col(j + 1) = w / hn;
      for (int i = 0; i < j; ++i) {
        const Scalar a = H(i, j), c = H(i + 1, j);
        H(i, j) = cs[i] * a + sn[i] * c;
        H(i + 1, j) = -Eigen::numext::conj(sn[i]) * a + cs[i] * c;
      }
      const Scalar h1 = H(j, j), h2 = H(j + 1, j);
      const Real rr = sqrt(std::norm(h1) + std::norm(h2));
      if (rr == 0.0) {
        cs[j] = 1.0;
        sn[j] = 0.0;
      } else if (abs(h1) == 0.0) {
        cs[j] = 0.0;
        sn[j] = 1.0;
      } else {
        cs[j] = abs(h1) / rr;
        sn[j] = (h1 / abs(h1)) * Eigen::numext::conj(h2) / rr;
      }
      H(j, j) = cs[j] * h1 + sn[j] * h2;
      H(j + 1, j) = 0.0;
      g[j + 1] = -Eigen::numext::conj(sn[j]) * g[j];
      g[j] = cs[j] * g[j];
      ++out.iterations;
      if (abs(g[j + 1]) <= 0.5 * tol * bnorm || hn == 0.0) {
        ++j;
        break;
      }
    }
    Vector y = H.topLeftCorner(j, j).template triangularView<Eigen::Upper>().solve(g.head(j));
    out.x += Z.leftCols(j) * y;
    r = b - op(out.x);
    rnorm = r.norm();
    out.residual = rnorm / bnorm;
    if (out.residual <= tol) {
      out.converged = true;
      return out;
    }
    if (!std::isfinite(out.residual)) throw SolverError("gmres: breakdown (non-finite residual)", out.residual);
  }
  return out;
}

/// Factorised (or preconditioned) A_n with forward and adjoint solves.
class BlockFactorization {
 public:
  BlockFactorization(CSparse A, const SolverConfig& config);
  /// View of base^T sharing its direct factors.
  static std::shared_ptr<const BlockFactorization> transposed(std::shared_ptr<const BlockFactorization> base);

  const CSparse& matrix() const noexcept { return A_; }
  bool is_transposed_view() const noexcept { return static_cast<bool>(base_); }
  /// Iterations of the last GMRES solve (0 for the direct path); sum over calls.
  CVector solve(const CVector& b, int* iterations = nullptr) const;
  CVector solve_adjoint(const CVector& b, int* iterations = nullptr) const;
  /// Column-wise solve of a block of right-hand sides.
  CMatrix solve(const CMatrix& B) const;
  const std::string& warning() const noexcept;

 private:
  BlockFactorization() = default;
  CVector solve_transposed(const CVector& b) const;
  CMatrix solve_transposed(const CMatrix& B) const;

  std::shared_ptr<const BlockFactorization> base_;
  CSparse A_;
  CSparse AH_;
  BlockSolverKind kind_;
  Real tol_;
  int restart_;
  int max_iter_;
  std::unique_ptr<Eigen::SparseLU<CSparse, Eigen::COLAMDOrdering<int>>> lu_;
  std::unique_ptr<Ilu0<Complex>> ilu_;
};

/// Assembled bordered system
///   [ diag(A_n)   B_col ] [W]   [F]
///   [ C_row       I     ] [U] = [0]
/// with B_n = coupling(alpha_n), C_n = diag(c_n).
struct BlockSystem {
  std::shared_ptr<const Mesh> mesh;
  BlochGrid grid;
  std::vector<std::shared_ptr<const BlockFactorization>> A;
  std::vector<CVector> C;
  std::shared_ptr<const CouplingOperator> B;  ///< null or empty when q = 0

  int blocks() const noexcept { return static_cast<int>(A.size()); }
  bool coupled() const noexcept { return B && !B->empty(); }
  CVector apply_B(int n, const CVector& U) const;
  CVector apply_B_adjoint(int n, const CVector& y) const;
};

/// Factorises A_n for every alpha sample and builds C_n. With the direct
/// solver, a block whose alpha is the negative of an earlier one reuses that
/// factorisation: A(-alpha) = A(alpha)^T.
BlockSystem make_block_system(std::shared_ptr<const Mesh> mesh, const BlochGrid& grid,
                              const BlockAssembler& assembler, const SolverConfig& config);

/// Same blocks, new coupling.
BlockSystem with_coupling(const BlockSystem& base, std::shared_ptr<const CouplingOperator> B);

struct BlockStats {
  int block = 0;
  int iterations = 0;
  Real residual = 0.0;
};

struct BlockSolution {
  std::vector<CVector> W;
  CVector U;
  int outer_iterations = 0;
  Real outer_residual = 0.0;
  std::vector<BlockStats> stats;
};

/// Schur path: (I - sum C_n A_n^{-1} B_n) U = -sum C_n A_n^{-1} F_n by GMRES,
/// then W_n = A_n^{-1}(F_n - B_n U). Without coupling the Schur stage is skipped.
BlockSolution solve_block_system(const BlockSystem& sys, const std::vector<CVector>& F,
                                 const SolverConfig& config);

/// Adjoint bordered solve K^H [X; Y] = [G; z].
BlockSolution solve_block_adjoint(const BlockSystem& sys, const std::vector<CVector>& G, const CVector& z,
                                  const SolverConfig& config);

/// Residual of the full bordered system, ||K [W;U] - [F;0]|| / ||F||.
Real bordered_residual(const BlockSystem& sys, const std::vector<CVector>& F, const BlockSolution& sol);

/// Dense bordered matrix (small instances only).
CMatrix dense_bordered_matrix(const BlockSystem& sys);

}  // namespace blochfem

#endif  // BLOCHFEM_LINSOLVE_HPP
