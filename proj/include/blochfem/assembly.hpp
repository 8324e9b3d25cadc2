#ifndef BLOCHFEM_ASSEMBLY_HPP
#define BLOCHFEM_ASSEMBLY_HPP

#include <functional>
#include <memory>
#include <vector>

#include "blochfem/mesh.hpp"
#include "blochfem/spectral.hpp"

namespace blochfem {

using Coefficient = std::function<Complex(const Point&)>;

/// Coefficient values at the quadrature points of every cell (cells x points).
CMatrix sample_at_quadrature(const Mesh& mesh, const CellQuadrature& rule, const Coefficient& f);
CMatrix sample_at_quadrature(const Mesh& mesh, const CellQuadrature& rule, const NodalField& f);

/// Caches the alpha-independent pieces of A(alpha): stiffness, the skew
/// convection matrices, the mass and the k^2 n_p^2 mass.
class BlockAssembler {
 public:
  /// J < 0 drops the DtN boundary term.
  BlockAssembler(std::shared_ptr<const Mesh> mesh, const Coefficient& k2np2, Real k, int J);

  /// A(alpha)(m,l) = a'_alpha(phi^l, phi^m) on the periodic dofs.
  CSparse assemble_A(const Alpha& alpha) const;

  const Mesh& mesh() const { return *mesh_; }
  Real k() const noexcept { return k_; }
  int cutoff() const noexcept { return J_; }
  const CSparse& stiffness() const noexcept { return K_; }
  const CSparse& mass() const noexcept { return M_; }
  const CSparse& background_mass() const noexcept { return Mn_; }
  /// S_k(m,l) = int d_k phi^l phi^m - phi^l d_k phi^m.
  const CSparse& convection(int axis) const { return S_[axis]; }

 private:
  std::shared_ptr<const Mesh> mesh_;
  Real k_;
  int J_;
  CSparse K_, M_, Mn_;
  CSparse S_[2];
};

/// One-shot A(alpha).
CSparse assemble_A(std::shared_ptr<const Mesh> mesh, const Coefficient& k2np2, Real k,
                   const Alpha& alpha, int J);

/// B(m,l) = -int e^{i alpha.x} k^2 q phi^l phi^m, with k^2 q given at the
/// 2-point quadrature nodes.
CSparse assemble_B(const Mesh& mesh, const CMatrix& k2q_samples, const Alpha& alpha);

/// Diagonal of C_n: -w_n e^{-i alpha_n . x^m}.
CVector assemble_C(const BlochGrid& grid, const Mesh& mesh, int n);

/// Bloch-transformed source: volume density Jf(alpha, x) and an optional
/// top-boundary density Jr(alpha, x) (both quasi-periodic).
struct TransformedSource {
  std::function<Complex(const Alpha&, const Point&)> volume;
  std::function<Complex(const Alpha&, const Point&)> boundary;
};

/// F_m = int e^{i alpha.x} Jf phi^m + int_top e^{i alpha.x} Jr phi^m.
CVector assemble_F(const Mesh& mesh, const Alpha& alpha, const TransformedSource& source);

/// F for an alpha-independent physical source f supported in the cell:
/// the transform of f restricted to one period is f itself.
CVector assemble_F(const Mesh& mesh, const Alpha& alpha, const Coefficient& f);
CVector assemble_F(const Mesh& mesh, const Alpha& alpha, const CMatrix& f_samples);

/// Matrix-free B(alpha) U and B(alpha)^H y.
class CouplingOperator {
 public:
  CouplingOperator(std::shared_ptr<const Mesh> mesh, CMatrix k2q_samples);

  bool empty() const noexcept { return empty_; }
  const CMatrix& samples() const noexcept { return q_; }
  CVector apply(const Alpha& alpha, const CVector& U) const;
  CVector apply_adjoint(const Alpha& alpha, const CVector& y) const;

 private:
  std::shared_ptr<const Mesh> mesh_;
  CellQuadrature rule_;
  CMatrix q_;
  bool empty_;
};

}  // namespace blochfem

#endif  // BLOCHFEM_ASSEMBLY_HPP
