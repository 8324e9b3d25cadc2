#include "blochfem/reginn.hpp"

#include <algorithm>
#include <cmath>

namespace blochfem {

Real backtrack_weight(const NonlinearProblem& problem, const CVector& r0, const CVector& r1, Real target) {
  const CVector e = r1 - r0;
  const Real A = problem.data_inner(e, e).real();
  const Real B = 2.0 * problem.data_inner(e, r0).real();
  const Real C = problem.data_inner(r0, r0).real() - target * target;
  if (A <= 0.0) return 1.0;
  if (C <= 0.0) return 0.0;
  const Real disc = std::max(0.0, B * B - 4.0 * A * C);
  const Real denom = -B + std::sqrt(disc);
  if (denom <= 0.0) return 1.0;
  return std::clamp(2.0 * C / denom, 0.0, 1.0);
}

InnerResult cg_inner(NonlinearProblem& problem, const CVector& b, Real mu, int max_inner) {
  if (!(mu > 0.0 && mu < 1.0)) throw ConfigError("cg_inner: mu must lie in (0,1)");
  InnerResult out;
  out.step = CVector::Zero(problem.parameter_size());
  const Real bn = problem.data_norm(b);
  if (bn == 0.0) return out;
  const Real target = mu * bn;

  CVector s = out.step, s_prev = s;
  CVector r = b, r_prev = r;
  CVector p = problem.adjoint(r);
  CVector d = p;
  Real gam = problem.parameter_inner(p, p).real();
  out.residual = bn;
  for (int i = 1; i <= max_inner; ++i) {
    if (gam == 0.0) break;
    const CVector Wd = problem.derivative(d);
    const Real wn = problem.data_inner(Wd, Wd).real();
    if (wn == 0.0) break;
    const Real a = gam / wn;
    s_prev = s;
    r_prev = r;
    s += a * d;
    r -= a * Wd;
    out.iterations = i;
    const Real rn = problem.data_norm(r);
    out.residual = rn;
    if (rn < target) {
      out.beta = backtrack_weight(problem, r_prev, r, target);
      out.step = out.beta * s + (1.0 - out.beta) * s_prev;
      out.residual = problem.data_norm(CVector(out.beta * r + (1.0 - out.beta) * r_prev));
      return out;
    }
    p = problem.adjoint(r);
    const Real gnew = problem.parameter_inner(p, p).real();
    d = p + (gnew / gam) * d;
    gam = gnew;
  }
  out.converged = false;
  out.step = s;
  return out;
}

Real mu_tilde(int inner_prev2, int inner_prev1, Real mu_prev1, Real gamma) {
  if (inner_prev1 > inner_prev2)
    return 1.0 - (static_cast<Real>(inner_prev2) / inner_prev1) * (1.0 - mu_prev1);
  return gamma * mu_prev1;
}

ReginnState reginn(NonlinearProblem& problem, const CVector& data, Real epsilon, const CVector& q0,
                   const ReginnConfig& config, const std::function<void(const ReginnState&)>& on_step) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw ConfigError("reginn: epsilon must lie in [0,1)");
  if (!(config.mu_start > 0.0 && config.mu_start < 1.0 && config.mu_max > 0.0 && config.mu_max < 1.0 &&
        config.gamma > 0.0 && config.gamma < 1.0 && config.tau > 1.0))
    throw ConfigError("reginn: constants out of range");
  if (config.max_outer < 1 || config.max_inner < 1) throw ConfigError("reginn: iteration caps must be >= 1");
  if (q0.size() != problem.parameter_size() || data.size() != problem.data_size())
    throw ConfigError("reginn: size mismatch");

  ReginnState st;
  st.config = config;
  st.q = q0;
  st.data_norm = problem.data_norm(data);
  st.target = config.tau * epsilon * st.data_norm;

  CVector res = data - problem.evaluate(st.q);
  Real rn = problem.data_norm(res);
  st.residual.push_back(rn);
  CVector best = st.q;
  Real best_rn = rn;
  if (on_step) on_step(st);

  for (int m = 1; m <= config.max_outer; ++m) {
    if (rn <= st.target) {
      st.converged = true;
      return st;
    }
    Real mt = config.mu_start;
    if (m >= 3) mt = mu_tilde(st.inner[m - 3], st.inner[m - 2], st.mu[m - 2], config.gamma);
    const Real mu = config.mu_max * std::max(st.target / rn, mt);
    const InnerResult inner = cg_inner(problem, res, mu, config.max_inner);
    st.q += inner.step;
    st.mu_tilde.push_back(mt);
    st.mu.push_back(mu);
    st.inner.push_back(inner.iterations);
    st.inner_converged.push_back(inner.converged);
    st.outer = m;
    res = data - problem.evaluate(st.q);
    rn = problem.data_norm(res);
    st.residual.push_back(rn);
    if (rn < best_rn) {
      best_rn = rn;
      best = st.q;
    }
    if (on_step) on_step(st);
  }
  if (rn <= st.target) {
    st.converged = true;
    return st;
  }
  st.q = best;
  return st;
}

}  // namespace blochfem
