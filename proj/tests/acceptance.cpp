// Acceptance run: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion ...]   (default: all of 1..7)

#include <chrono>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "blochfem/reduced_model.hpp"
#include "blochfem/reginn.hpp"

using namespace blochfem;

namespace {

using Clock = std::chrono::steady_clock;

Real seconds_since(Clock::time_point t0) { return std::chrono::duration<Real>(Clock::now() - t0).count(); }

bool within_factor(Real value, Real ref, Real factor) { return value <= factor * ref && value >= ref / factor; }

Real example_error(int d, const std::string& id, int M, int N, bool transform = true) {
  ProblemConfig c = example_config(d);
  c.transform = transform;
  return convergence_table(c, id, {M}, {N}).front().rel_l2_error;
}

CVector random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<Real> u(-1.0, 1.0);
  CVector v(n);
  for (auto& x : v) x = Complex(u(rng), u(rng));
  return v;
}

Real rel(const CVector& a, const CVector& b) { return (a - b).norm() / b.norm(); }

struct Outcome {
  bool pass;
  std::string detail;
};

Outcome criterion1() {
  const Real e1 = example_error(2, "u1", 5, 16);
  const Real e2 = example_error(2, "u1", 6, 64);
  char buf[256];
  std::snprintf(buf, sizeof buf, "example 1: 1024/N=16 err %.3e (ref 8.930e-03), 4096/N=64 err %.3e (ref 1.088e-03)",
                e1, e2);
  return {within_factor(e1, 8.930e-3, 3.0) && within_factor(e2, 1.088e-3, 3.0), buf};
}

Outcome criterion2() {
  const Real e = example_error(2, "u2", 5, 64);
  const Real with_g = example_error(2, "u2", 6, 32, true);
  const Real without = example_error(2, "u2", 6, 32, false);
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "example 2: 1024/N=64 err %.3e (ref 1.900e-03); 4096/N=32 transformed %.3e vs identity %.3e", e,
                with_g, without);
  return {within_factor(e, 1.900e-3, 3.0) && with_g < without, buf};
}

Outcome criterion3() {
  const auto t0 = Clock::now();
  const Real e8 = example_error(3, "u3", 1, 4);
  const Real e64 = example_error(3, "u3", 2, 4);
  const Real secs = seconds_since(t0);
  char buf[256];
  std::snprintf(buf, sizeof buf, "example 3 N^2=16: row 8 err %.3e (ref 7.534e-01), row 64 err %.3e (ref 4.807e-01), %.1fs",
                e8, e64, secs);
  return {within_factor(e8, 7.534e-1, 3.0) && within_factor(e64, 4.807e-1, 3.0) && secs <= 600.0, buf};
}

Outcome criterion4() {
  std::mt19937_64 rng(4);

  Real round_trip = 0.0;
  for (int d : {2, 3}) {
    auto mesh = std::make_shared<const Mesh>(d, 5.0, 3);
    const BlochGrid g = alpha_grid(d == 2 ? 16 : 4, d);
    const NodalField u(mesh, random_vector(mesh->node_count(), rng));
    const NodalField back = inverse_bloch(g, modulate(g, u));
    round_trip = std::max(round_trip, (back.values() - u.values()).cwiseAbs().maxCoeff());
  }

  ProblemConfig free = example_config(2);
  free.M = 3;
  free.N = 8;
  free.J = 40;
  free.perturbation = RegionSpec{};
  ForwardSolver fs(free);
  std::vector<CVector> F;
  for (int n = 0; n < fs.system().blocks(); ++n) F.push_back(random_vector(fs.mesh()->dof_count(), rng));
  const BlockSolution sol = solve_block_system(fs.system(), F, free.solver);
  CVector U = CVector::Zero(fs.mesh()->dof_count());
  Real decoupled = 0.0;
  for (int n = 0; n < fs.system().blocks(); ++n) {
    const CVector w = CMatrix(fs.system().A[n]->matrix()).partialPivLu().solve(F[n]);
    decoupled = std::max(decoupled, rel(sol.W[n], w));
    U -= fs.system().C[n].cwiseProduct(w);
  }
  decoupled = std::max(decoupled, rel(sol.U, U));

  ProblemConfig tiny = example_config(2);
  tiny.M = 3;
  tiny.N = 4;
  tiny.J = 20;
  ForwardSolver ts(tiny);
  const BlockSystem& sys = ts.system();
  const Eigen::Index m = sys.mesh->dof_count();
  const Eigen::Index unknowns = m * (sys.blocks() + 1);
  std::vector<CVector> G;
  CVector rhs = CVector::Zero(unknowns);
  for (int n = 0; n < sys.blocks(); ++n) {
    G.push_back(random_vector(m, rng));
    rhs.segment(n * m, m) = G.back();
  }
  const BlockSolution tsol = solve_block_system(sys, G, tiny.solver);
  const CVector x = dense_bordered_matrix(sys).partialPivLu().solve(rhs);
  CVector mine(unknowns);
  for (int n = 0; n < sys.blocks(); ++n) mine.segment(n * m, m) = tsol.W[n];
  mine.tail(m) = tsol.U;
  const Real bordered = rel(mine, x);

  ProblemConfig it = example_config(2);
  it.M = 4;
  it.N = 16;
  it.solver.block_solver = BlockSolverKind::IluGmres;
  it.solver.tolerance = 1e-10;
  ForwardSolver is(it);
  const auto mc = manufactured_case("u1", is.material());
  const BlochSolution isol = is.solve(mc.source);

  char buf[320];
  std::snprintf(buf, sizeof buf,
                "round trip %.2e (<=1e-12); q=0 Schur vs decoupled %.2e (<=1e-10); dense bordered (%lld unknowns) %.2e "
                "(<=1e-9); GMRES outer residual %.2e (<=1e-10)",
                round_trip, decoupled, static_cast<long long>(unknowns), bordered, isol.outer_residual);
  return {round_trip <= 1e-12 && decoupled <= 1e-10 && unknowns <= 500 && bordered <= 1e-9 &&
              isol.outer_residual <= 1e-10,
          buf};
}

Outcome criterion5() {
  ProblemConfig c = example_config(2);
  c.M = 3;
  c.N = 4;
  c.J = 20;
  auto solver = std::make_shared<ForwardSolver>(c);
  const RhsBasis basis = make_rhs_basis(2, c.R0, 2, 2);
  std::mt19937_64 rng(5);
  Real worst_ratio_dev = 0.0, worst_adj = 0.0, worst_decay = 0.0, decay_by_mode[2] = {0.0, 0.0};
  bool ok = true;
  for (auto mode : {MeasurementMode::Volume, MeasurementMode::Trace}) {
    DenseReducedModel model(solver, basis, mode, c.R0);
    const CVector q = model.parameters().from_field(sample_nodal(solver->mesh(), c.perturbation));
    const CVector h = random_vector(model.parameter_size(), rng);
    const CVector F = model.evaluate(q);
    const CVector W = model.derivative(h);
    Real rem[2];
    const Real ts[2] = {1e-2, 1e-3};
    for (int i = 0; i < 2; ++i) rem[i] = model.data_norm(CVector(model.evaluate(q + ts[i] * h) - F - ts[i] * W));
    model.evaluate(q);
    const Real ratio = rem[0] / rem[1];
    ok = ok && within_factor(ratio, 100.0, 3.0);
    worst_ratio_dev = std::max(worst_ratio_dev, std::max(ratio / 100.0, 100.0 / ratio));

    for (int t = 0; t < 5; ++t) {
      const CVector hh = random_vector(model.parameter_size(), rng);
      const CVector y = random_vector(model.data_size(), rng);
      const Complex lhs = model.data_inner(model.derivative(hh), y);
      const Complex rhs = model.parameter_inner(hh, model.adjoint(y));
      worst_adj = std::max(worst_adj, std::abs(lhs - rhs) / std::abs(lhs));
    }

    // singular values of W_d^{1/2} D W_p^{-1/2} from the weighted Gram matrix
    const Eigen::Index np = model.parameter_size();
    CMatrix D(model.data_size(), np), WD(model.data_size(), np);
    for (Eigen::Index j = 0; j < np; ++j) {
      CVector e = CVector::Zero(np);
      e[j] = 1.0 / std::sqrt(model.parameters().weights()[j]);
      D.col(j) = model.derivative(e);
      WD.col(j) = model.space().weight(D.col(j));
    }
    const CMatrix gram = D.adjoint() * WD;
    Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<CMatrix>(0.5 * (gram + gram.adjoint())).eigenvalues();
    std::sort(ev.data(), ev.data() + ev.size(), std::greater<>());
    const Real decay = std::sqrt(std::max(ev[19], 0.0) / ev[0]);
    decay_by_mode[mode == MeasurementMode::Volume ? 0 : 1] = decay;
    worst_decay = std::max(worst_decay, decay);
  }
  ok = ok && worst_adj <= 1e-8 && worst_decay <= 1e-3;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "FD remainder ratio off from 100 by factor %.3f (<=3); adjoint defect %.2e (<=1e-8); sigma_20/sigma_1 "
                "volume %.2e, trace %.2e (<=1e-3)",
                worst_ratio_dev, worst_adj, decay_by_mode[0], decay_by_mode[1]);
  return {ok, buf};
}

struct OutOfTime {};

Outcome criterion6() {
  constexpr Real budget = 3600.0;
  const auto t0 = Clock::now();
  ProblemConfig fine = example_config(2), coarse = example_config(2);
  fine.M = 7;
  fine.N = 128;
  fine.J = 600;
  coarse.M = 6;
  coarse.N = 64;
  coarse.J = 300;
  const RhsBasis basis = make_rhs_basis(2, coarse.R0, 4, 4);
  const auto states = synthetic_states(fine, coarse, basis);
  const Real synth_secs = seconds_since(t0);

  auto solver = std::make_shared<ForwardSolver>(coarse);
  const Real eps = 0.05;
  bool ok = true;
  std::string detail;
  char buf[256], progress[256] = "";
  std::snprintf(buf, sizeof buf, "fine data %.0fs;", synth_secs);
  detail += buf;
  try {
    for (auto mode : {MeasurementMode::Volume, MeasurementMode::Trace}) {
      DenseReducedModel model(solver, basis, mode, coarse.R0);
      if (seconds_since(t0) > budget) throw OutOfTime{};
      const MeasurementData clean = measurement_from_states(states, *solver->mesh(), mode);
      const CVector truth = model.parameters().from_field(sample_nodal(solver->mesh(), coarse.perturbation));
      const Real gap = model.data_norm(CVector(model.evaluate(truth) - clean.stacked())) / model.data_norm(clean.stacked());
      const Real bound = mode == MeasurementMode::Volume ? 0.55 : 0.75;
      std::snprintf(buf, sizeof buf, " %s (gap %.3f):", mode == MeasurementMode::Volume ? "volume" : "trace", gap);
      detail += buf;
      for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const MeasurementData data = add_noise(clean, model.space(), eps, seed);
        const ReginnState st = reginn(model, data.stacked(), eps, CVector::Zero(model.parameter_size()), {},
                                      [&](const ReginnState& s) {
                                        std::snprintf(progress, sizeof progress,
                                                      " seed %llu at outer step %d, residual %.4f vs target %.4f",
                                                      static_cast<unsigned long long>(seed), s.outer,
                                                      s.residual.back(), s.target);
                                        if (seconds_since(t0) > budget) throw OutOfTime{};
                                      });
        const Real err = reconstruction_error(model.parameters().to_field(st.q), coarse.perturbation);
        ok = ok && st.converged && err <= bound;
        std::snprintf(buf, sizeof buf, " seed %llu %s err %.3f (<=%.2f)", static_cast<unsigned long long>(seed),
                      st.converged ? "converged" : "NOT converged", err, bound);
        detail += buf;
      }
    }
  } catch (const OutOfTime&) {
    ok = false;
    detail += progress;
    detail += "; stopped: over the 1 hour budget";
  }
  std::snprintf(buf, sizeof buf, "; %.0fs total (<=3600)", seconds_since(t0));
  detail += buf;
  return {ok && seconds_since(t0) <= budget, detail};
}

Outcome criterion7() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<Real> ua(-0.5, 0.5), uk(0.05, 4.0);
  std::uniform_int_distribution<int> uj(-8, 8);
  int beta_bad = 0, form_bad = 0, energy_bad = 0;

  for (int t = 0; t < 1000; ++t) {
    const Real k = uk(rng);
    const Alpha a(ua(rng), ua(rng)), j(uj(rng), uj(rng));
    const Complex b = beta(k, a, j);
    const Real s = (a + j).norm();
    if (b.real() < 0.0 || b.imag() < 0.0) ++beta_bad;
    if (s < k && b.imag() != 0.0) ++beta_bad;
    if (s > k && b.real() != 0.0) ++beta_bad;
  }

  for (int t = 0; t < 1000; ++t) {
    const int d = t % 2 ? 3 : 2;
    const RayleighSpectrum spec(uk(rng), 4, d);
    const Alpha a(ua(rng), d == 3 ? ua(rng) : 0.0);
    const CVector u = random_vector(spec.size(), rng);
    const Complex f = dtn_form(spec, a, u, u);
    // Im >= 0 from propagating modes, Re <= 0 from evanescent ones
    if (f.imag() < -1e-14 * u.squaredNorm() || f.real() > 1e-14 * u.squaredNorm()) ++form_bad;
  }

  Real worst = std::numeric_limits<Real>::infinity();
  const Real ks[10] = {0.3, 0.45, std::sqrt(0.4), 0.8, 1.2, 1.37, 1.9, 2.3, 2.71, 3.3};
  for (Real k : ks) {
    ProblemConfig c = example_config(2);
    c.k = k;
    c.M = 3;
    c.N = 8;
    c.J = 30;
    c.transform = false;
    ForwardSolver s(c);
    const CellQuadrature rule(*s.mesh(), 2);
    std::uniform_int_distribution<Eigen::Index> uc(0, s.mesh()->cell_count() - 1);
    for (int t = 0; t < 100; ++t) {
      CMatrix f = CMatrix::Zero(s.mesh()->cell_count(), rule.size());
      for (int r = 0; r < 3; ++r) f.row(uc(rng)) = random_vector(rule.size(), rng).transpose();
      const BlochSolution sol = s.solve(s.rhs(f));
      const Real e = energy_balance(s, sol);
      worst = std::min(worst, e);
      if (e < -1e-10) ++energy_bad;
    }
  }
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "beta branch violations %d/1000; boundary-form sign violations %d/1000; energy balance violations "
                "%d/1000 (min %.2e)",
                beta_bad, form_bad, energy_bad, worst);
  return {beta_bad == 0 && form_bad == 0 && energy_bad == 0, buf};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> which;
  for (int i = 1; i < argc; ++i) which.insert(std::atoi(argv[i]));
  if (which.empty()) which = {1, 2, 3, 4, 5, 6, 7};
  const std::vector<std::function<Outcome()>> criteria = {criterion1, criterion2, criterion3, criterion4,
                                                          criterion5, criterion6, criterion7};
  int failed = 0;
  for (int id : which) {
    if (id < 1 || id > 7) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[id - 1]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("criterion %d: %s  %s  [%.1fs]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
