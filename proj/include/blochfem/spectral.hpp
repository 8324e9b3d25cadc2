#ifndef BLOCHFEM_SPECTRAL_HPP
#define BLOCHFEM_SPECTRAL_HPP

#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "blochfem/mesh.hpp"

namespace blochfem {

/// Smooth monotone reparametrisation of [-1/2, 1/2] that is flat at the two
/// points +-khat where a Rayleigh exponent vanishes (2D only).
class VariableTransform {
 public:
  /// Throws ConfigError when khat = |k - round(k)| is 0 or 1/2.
  explicit VariableTransform(Real k, Real tol = 1e-12);

  Real khat() const noexcept { return khat_; }

  /// (g(t), g'(t)) for t in [-1/2, 1/2].
  std::pair<Real, Real> operator()(Real t) const;

 private:
  Real piece_integral(int piece, Real a, Real b) const;
  Real density(int piece, Real s) const;

  Real khat_;
  Real tol_;
  Real total_[3];
};

/// Fractional distance of k to the nearest integer, |k - floor(k + 1/2)|.
Real reduced_wavenumber(Real k);

/// Adaptive Gauss-Legendre quadrature of f on [a, b] to absolute tolerance.
Real adaptive_integrate(const std::function<Real(Real)>& f, Real a, Real b, Real tol);

/// Sample points of the alpha cell I = (-1/2, 1/2)^{d-1}.
struct BlochGrid {
  int N = 1;
  int d = 2;
  bool transformed = false;
  std::vector<Alpha> midpoints;  ///< t_n, cell midpoints
  std::vector<Alpha> points;     ///< alpha_n = g(t_n) (== t_n without transform)
  std::vector<Real> weights;     ///< quadrature weights, sum ~ 1

  int size() const noexcept { return static_cast<int>(points.size()); }
};

/// Midpoint grid -1/2 + (2n-1)/(2N) per axis, x_1 index slowest for d = 3.
/// With transform enabled (d = 2 only) nodes are g(t_n), weights g'(t_n)/N.
BlochGrid alpha_grid(int N, int d, bool transform_enabled = false, Real k = 0.0);

/// Rayleigh exponent sqrt(k^2 - |alpha + j|^2) with Re >= 0, Im >= 0.
Complex beta(Real k, const Alpha& alpha, const Alpha& j);

/// Retained Fourier modes |j|_inf <= J of the (d-1)-dimensional trace.
class RayleighSpectrum {
 public:
  RayleighSpectrum(Real k, int J, int d);

  Real k() const noexcept { return k_; }
  int cutoff() const noexcept { return J_; }
  int dim() const noexcept { return d_; }
  int size() const noexcept { return static_cast<int>(modes_.size()); }
  const std::vector<Alpha>& modes() const noexcept { return modes_; }

  CVector betas(const Alpha& alpha) const;

 private:
  Real k_;
  int J_;
  int d_;
  std::vector<Alpha> modes_;
};

/// Mode j scaled by i beta_j(alpha).
CVector dtn_apply(const RayleighSpectrum& spectrum, const Alpha& alpha, const CVector& coeffs);

/// sum_j i beta_j u_j conj(v_j).
Complex dtn_form(const RayleighSpectrum& spectrum, const Alpha& alpha, const CVector& u,
                 const CVector& v);

/// Fourier coefficients (2pi)^{-(d-1)/2} int trace(x) e^{i j.x} dx of the
/// multilinear interpolant of top-boundary values (ordered like
/// Mesh::top_dofs()), integrated exactly.
CVector trace_fourier(const Mesh& mesh, const CVector& top_values, int J);

/// Dense DtN block on the top dofs for one alpha:
/// D(m,l) = -sum_j i beta_j conj(phi_hat_j^m) phi_hat_j^l.
CMatrix dtn_block(const Mesh& mesh, const RayleighSpectrum& spectrum, const Alpha& alpha);

/// Physical field u^m = sum_n w_n e^{-i alpha_n . x^m} w^{n,m} on the closed
/// grid from periodic-dof blocks.
NodalField inverse_bloch(const BlochGrid& grid, std::shared_ptr<const Mesh> mesh,
                         const std::vector<CVector>& dof_blocks);

/// Same, with each block given on the closed grid.
NodalField inverse_bloch(const BlochGrid& grid, const std::vector<NodalField>& blocks);

/// w^{n,m} = e^{i alpha_n . x^m} u^m, the discrete modulation that
/// inverse_bloch inverts.
std::vector<NodalField> modulate(const BlochGrid& grid, const NodalField& u);

}  // namespace blochfem

#endif  // BLOCHFEM_SPECTRAL_HPP
