#ifndef BLOCHFEM_REGINN_HPP
#define BLOCHFEM_REGINN_HPP

#include <functional>
#include <vector>

#include "blochfem/measurement.hpp"

namespace blochfem {

struct ReginnConfig {
  Real mu_start = 0.55;
  Real gamma = 0.9;
  Real mu_max = 0.99;
  Real tau = 1.2;
  int max_outer = 50;
  int max_inner = 50;
};

struct InnerResult {
  CVector step;
  int iterations = 0;
  bool converged = true;   ///< false when the inner cap was hit
  Real residual = 0.0;     ///< ||W s - b|| after backtracking
  Real beta = 1.0;         ///< backtracking weight of the last iterate
};

/// CG on the normal equations W* W s = W* b in the weighted spaces of the
/// problem, stopped the first time ||W s_i - b|| < mu ||b||, then moved back
/// along [s_{i-1}, s_i] until the residual equals mu ||b||.
InnerResult cg_inner(NonlinearProblem& problem, const CVector& b, Real mu, int max_inner = 50);

/// Root in [0,1] of ||r0 + beta (r1 - r0)||^2 = target^2 under the given
/// data inner product, assuming ||r0|| >= target > ||r1||.
Real backtrack_weight(const NonlinearProblem& problem, const CVector& r0, const CVector& r1, Real target);

/// Tentative tolerance for outer step m >= 3 (1-based) from the two previous
/// inner counts and the previous tolerance.
Real mu_tilde(int inner_prev2, int inner_prev1, Real mu_prev1, Real gamma);

struct ReginnState {
  CVector q;                        ///< final iterate (best one if not converged)
  int outer = 0;                    ///< accepted outer steps
  std::vector<int> inner;           ///< i_m
  std::vector<Real> mu;             ///< mu_m
  std::vector<Real> mu_tilde;       ///< tentative mu_m
  std::vector<Real> residual;       ///< ||data - F(q_m)||, m = 0..outer
  std::vector<bool> inner_converged;
  Real data_norm = 0.0;
  Real target = 0.0;                ///< tau eps ||data||
  bool converged = false;
  ReginnConfig config;
};

/// Inexact Newton iteration stopped by the discrepancy principle.
ReginnState reginn(NonlinearProblem& problem, const CVector& data, Real epsilon, const CVector& q0,
                   const ReginnConfig& config = {},
                   const std::function<void(const ReginnState&)>& on_step = nullptr);

}  // namespace blochfem

#endif  // BLOCHFEM_REGINN_HPP
