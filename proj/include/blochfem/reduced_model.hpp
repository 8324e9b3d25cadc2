#ifndef BLOCHFEM_REDUCED_MODEL_HPP
#define BLOCHFEM_REDUCED_MODEL_HPP

#include <Eigen/Dense>

#include "blochfem/measurement.hpp"

namespace blochfem {

/// Measurement model for d = 2 that eliminates the alpha blocks once.
///
/// The coupling factorises as B_n(q) = sum_delta e^{i alpha_n delta} D_n K_delta(q)
/// where D_n = diag(e^{i alpha_n x_m}) and delta runs over the six horizontal
/// offsets between a quadrature node and a test-function node. Precomputing
/// G_delta = sum_n e^{i alpha_n delta} C_n A_n^{-1} D_n on the dofs below the
/// perturbation layer turns every Schur operator into a dense matrix
/// T(q) = sum_delta G_delta K_delta(q), solved by one LU per outer step.
/// Results agree with IterativeModel to solver precision.
class DenseReducedModel : public MeasurementModel {
 public:
  DenseReducedModel(std::shared_ptr<ForwardSolver> solver, RhsBasis basis, MeasurementMode mode, Real R0);

  CVector evaluate(const CVector& q) override;
  CVector derivative(const CVector& h) override;
  CVector adjoint(const CVector& r) override;

  Eigen::Index reduced_size() const noexcept { return ns_; }
  Real setup_seconds() const noexcept { return setup_seconds_; }

 private:
  static constexpr int kClasses = 6;
  struct Entry {
    Eigen::Index row;     ///< class * ns + test dof
    Eigen::Index col;     ///< trial dof
    Eigen::Index sample;  ///< index into the quadrature samples
    Real coef;            ///< -w phi_a phi_b
  };

  CSparse stacked_coupling(const CVector& samples) const;

  Eigen::Index m_ = 0, ns_ = 0;
  CMatrix G_;                 ///< m x (6 ns): [G_0 | ... | G_5]
  CSparse Q_;                 ///< parameters -> quadrature samples
  std::vector<Entry> entries_;
  CMatrix U0_;                ///< q = 0 states, m x N_f
  CMatrix T_;                 ///< T(q), m x ns
  Eigen::PartialPivLU<CMatrix> lu_;
  CMatrix states_matrix_;     ///< m x N_f
  Real setup_seconds_ = 0.0;
};

}  // namespace blochfem

#endif  // BLOCHFEM_REDUCED_MODEL_HPP
