#ifndef BLOCHFEM_FORWARD_HPP
#define BLOCHFEM_FORWARD_HPP

#include <memory>
#include <string>
#include <vector>

#include "blochfem/assembly.hpp"
#include "blochfem/linsolve.hpp"
#include "blochfem/manufactured.hpp"
#include "blochfem/material.hpp"

namespace blochfem {

struct ProblemConfig {
  int d = 2;
  Real k = 0.6324555320336759;  // sqrt(0.4)
  Real R = 5.0;
  Real R0 = 4.5;
  int M = 4;
  int N = 16;
  int J = 300;          ///< Fourier cutoff of the DtN series
  bool transform = true;
  RegionSpec background = example_background(2);
  RegionSpec perturbation = example_perturbation(2);
  SolverConfig solver;

  /// Throws ConfigError on inconsistent values.
  void validate() const;
  std::shared_ptr<Material> material() const;
  std::shared_ptr<const Mesh> mesh() const;
  BlochGrid grid() const;
};

/// Example defaults for dimension d (material data, k, R, R0, cutoff).
ProblemConfig example_config(int d);

struct BlochSolution {
  BlochGrid grid;
  std::vector<CVector> W;  ///< periodic parts per alpha sample
  CVector U;               ///< physical field on the periodic dofs
  NodalField field;        ///< inverse transform on the closed grid
  int outer_iterations = 0;
  Real outer_residual = 0.0;
  Real seconds = 0.0;
  std::vector<BlockStats> stats;
};

/// Factorised alpha blocks for one (mesh, grid, background); many sources and
/// perturbations can be solved against it.
class ForwardSolver {
 public:
  explicit ForwardSolver(const ProblemConfig& config);

  const ProblemConfig& config() const noexcept { return config_; }
  std::shared_ptr<const Mesh> mesh() const noexcept { return mesh_; }
  const BlochGrid& grid() const noexcept { return grid_; }
  const BlockAssembler& assembler() const noexcept { return *assembler_; }
  const BlockSystem& system() const noexcept { return system_; }
  std::shared_ptr<const Material> material() const noexcept { return material_; }

  /// Replaces the coupling by k^2 q sampled at the 2-point quadrature nodes.
  void set_perturbation(const CMatrix& k2q_samples);
  /// Uses the material's own perturbation.
  void use_material_perturbation();

  std::vector<CVector> rhs(const TransformedSource& source) const;
  /// Rhs for a physical source supported inside the cell (quadrature samples).
  std::vector<CVector> rhs(const CMatrix& f_samples) const;

  BlochSolution solve(const std::vector<CVector>& F) const;
  BlochSolution solve(const TransformedSource& source) const { return solve(rhs(source)); }

 private:
  ProblemConfig config_;
  std::shared_ptr<const Mesh> mesh_;
  std::shared_ptr<Material> material_;
  BlochGrid grid_;
  std::unique_ptr<BlockAssembler> assembler_;
  BlockSystem system_;
};

BlochSolution solve_direct(const ProblemConfig& config, const TransformedSource& source);

/// min_n of -Im(W_n^H A_n W_n) / ||W_n||^2; non-negative up to rounding for
/// absorbing backgrounds.
Real energy_balance(const ForwardSolver& solver, const BlochSolution& sol);

struct TableRow {
  long long cells = 0;
  int N = 0;
  Real rel_l2_error = 0.0;
  Real seconds = 0.0;
};

/// Relative L2 errors of the manufactured case over the (M, N) grid.
std::vector<TableRow> convergence_table(const ProblemConfig& base, const std::string& case_id,
                                        const std::vector<int>& M_list, const std::vector<int>& N_list);

/// Header "cells,N,rel_l2_error,seconds", scientific notation.
std::string table_csv(const std::vector<TableRow>& rows);

}  // namespace blochfem

#endif  // BLOCHFEM_FORWARD_HPP
