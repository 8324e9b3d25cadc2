#include "blochfem/forward.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace blochfem {

using Eigen::Index;

void ProblemConfig::validate() const {
  if (d != 2 && d != 3) throw ConfigError("d must be 2 or 3");
  if (!(k > 0.0)) throw ConfigError("k must be positive");
  if (!(R0 > 0.0 && R > R0)) throw ConfigError("heights must satisfy R > R0 > 0");
  if (M < 1) throw ConfigError("M must be >= 1");
  if (N < 1) throw ConfigError("N must be >= 1");
  if (J < 0) throw ConfigError("fourier_cutoff must be >= 0");
  if (!(solver.tolerance > 0.0 && solver.tolerance < 1.0)) throw ConfigError("solver.tolerance must lie in (0,1)");
  if (solver.restart < 1 || solver.max_iterations < 1) throw ConfigError("solver iteration limits must be >= 1");
  if (solver.workers < 1) throw ConfigError("workers must be >= 1");
  if (transform && d == 2) VariableTransform check(k);
}

std::shared_ptr<Material> ProblemConfig::material() const {
  return std::make_shared<Material>(d, k, R, R0, background, perturbation);
}

std::shared_ptr<const Mesh> ProblemConfig::mesh() const { return std::make_shared<const Mesh>(d, R, M); }

BlochGrid ProblemConfig::grid() const { return alpha_grid(N, d, transform && d == 2, k); }

ProblemConfig example_config(int d) {
  ProblemConfig c;
  c.d = d;
  c.background = example_background(d);
  c.perturbation = example_perturbation(d);
  if (d == 3) {
    c.J = 10;
    c.transform = false;
    c.M = 1;
    c.N = 4;
  }
  return c;
}

ForwardSolver::ForwardSolver(const ProblemConfig& config) : config_(config) {
  config_.validate();
  mesh_ = config_.mesh();
  material_ = config_.material();
  grid_ = config_.grid();
  auto mat = material_;
  assembler_ = std::make_unique<BlockAssembler>(
      mesh_, [mat](const Point& x) { return mat->k2np2(x); }, config_.k, config_.J);
  system_ = make_block_system(mesh_, grid_, *assembler_, config_.solver);
  use_material_perturbation();
}

void ForwardSolver::set_perturbation(const CMatrix& k2q) {
  system_.B = std::make_shared<CouplingOperator>(mesh_, k2q);
}

void ForwardSolver::use_material_perturbation() {
  CellQuadrature rule(*mesh_, 2);
  auto mat = material_;
  set_perturbation(sample_at_quadrature(*mesh_, rule, [mat](const Point& x) { return mat->k2q(x); }));
}

std::vector<CVector> ForwardSolver::rhs(const TransformedSource& source) const {
  std::vector<CVector> F(grid_.size());
  parallel_for(grid_.size(), config_.solver.workers,
               [&](int n) { F[n] = assemble_F(*mesh_, grid_.points[n], source); });
  return F;
}

std::vector<CVector> ForwardSolver::rhs(const CMatrix& fs) const {
  std::vector<CVector> F(grid_.size());
  parallel_for(grid_.size(), config_.solver.workers,
               [&](int n) { F[n] = assemble_F(*mesh_, grid_.points[n], fs); });
  return F;
}

BlochSolution ForwardSolver::solve(const std::vector<CVector>& F) const {
  const auto t0 = std::chrono::steady_clock::now();
  BlockSolution bs = solve_block_system(system_, F, config_.solver);
  BlochSolution out;
  out.grid = grid_;
  out.field = inverse_bloch(grid_, mesh_, bs.W);
  out.W = std::move(bs.W);
  out.U = std::move(bs.U);
  out.outer_iterations = bs.outer_iterations;
  out.outer_residual = bs.outer_residual;
  out.stats = std::move(bs.stats);
  out.seconds = std::chrono::duration<Real>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

BlochSolution solve_direct(const ProblemConfig& config, const TransformedSource& source) {
  const auto t0 = std::chrono::steady_clock::now();
  ForwardSolver solver(config);
  BlochSolution sol = solver.solve(source);
  sol.seconds = std::chrono::duration<Real>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

Real energy_balance(const ForwardSolver& solver, const BlochSolution& sol) {
  Real worst = std::numeric_limits<Real>::infinity();
  for (int n = 0; n < solver.grid().size(); ++n) {
    const CVector& w = sol.W[n];
    const Real nrm = w.squaredNorm();
    if (nrm == 0.0) continue;
    const Complex e = w.dot(solver.system().A[n]->matrix() * w);
    worst = std::min(worst, -e.imag() / nrm);
  }
  return worst;
}

std::vector<TableRow> convergence_table(const ProblemConfig& base, const std::string& case_id,
                                        const std::vector<int>& M_list, const std::vector<int>& N_list) {
  if (M_list.empty() || N_list.empty()) throw ConfigError("convergence_table: empty M or N list");
  std::vector<TableRow> rows;
  for (int M : M_list) {
    for (int N : N_list) {
      ProblemConfig cfg = base;
      cfg.M = M;
      cfg.N = N;
      const auto t0 = std::chrono::steady_clock::now();
      ForwardSolver solver(cfg);
      const ManufacturedCase mc = manufactured_case(case_id, solver.material());
      BlochSolution sol = solver.solve(mc.source);
      TableRow row;
      row.seconds = std::chrono::duration<Real>(std::chrono::steady_clock::now() - t0).count();
      row.cells = solver.mesh()->cell_count();
      row.N = N;
      row.rel_l2_error = relative_l2_error(sol.field, mc.exact);
      rows.push_back(row);
    }
  }
  return rows;
}

std::string table_csv(const std::vector<TableRow>& rows) {
  std::ostringstream os;
  os << "cells,N,rel_l2_error,seconds\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%lld,%d,%.9e,%.6e\n", r.cells, r.N, r.rel_l2_error, r.seconds);
    os << buf;
  }
  return os.str();
}

}  // namespace blochfem
