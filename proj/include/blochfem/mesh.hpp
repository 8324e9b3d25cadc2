#ifndef BLOCHFEM_MESH_HPP
#define BLOCHFEM_MESH_HPP

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "blochfem/types.hpp"

namespace blochfem {

/// Structured tensor-product Q1 mesh of the periodic cell
/// (-pi, pi)^{d-1} x (0, R), with 2^M cells along every axis.
///
/// Two node numberings coexist:
///  - the closed grid, (P+1)^{d-1} (V+1) nodes including the bottom row and
///    both lateral ends, ordered lexicographically with x_1 fastest;
///  - the periodic free degrees of freedom, P^{d-1} V nodes obtained by
///    dropping the bottom row (homogeneous Dirichlet) and identifying the
///    lateral face x_k = pi with x_k = -pi.
class Mesh {
 public:
  static constexpr Eigen::Index kDefaultNodeBudget = 50'000'000;

  Mesh(int d, Real R, int M, Eigen::Index node_budget = kDefaultNodeBudget);

  int dim() const noexcept { return d_; }
  Real height() const noexcept { return R_; }
  int level() const noexcept { return M_; }

  /// Cells per horizontal axis.
  int P() const noexcept { return P_; }
  /// Cells along the vertical axis.
  int V() const noexcept { return V_; }
  Real hx() const noexcept { return 2.0 * kPi / P_; }
  Real hz() const noexcept { return R_ / V_; }
  Real cell_volume() const noexcept;

  Eigen::Index cell_count() const noexcept { return n_cells_; }
  Eigen::Index node_count() const noexcept { return n_nodes_; }
  Eigen::Index dof_count() const noexcept { return n_dofs_; }
  Eigen::Index top_dof_count() const noexcept;

  // closed grid -----------------------------------------------------------
  Eigen::Index node_index(int i1, int i2, int j) const noexcept;
  /// Grid indices (i1, i2, j) of a closed-grid node; i2 = 0 for d = 2.
  std::array<int, 3> node_coords(Eigen::Index node) const noexcept;
  Point node_point(Eigen::Index node) const noexcept;

  // periodic free dofs ----------------------------------------------------
  /// Dof of a closed-grid node, or -1 for bottom nodes.
  Eigen::Index dof_of_node(Eigen::Index node) const noexcept;
  /// Representative closed-grid node of a dof (lateral indices < P).
  Eigen::Index node_of_dof(Eigen::Index dof) const noexcept;
  Point dof_point(Eigen::Index dof) const noexcept;
  /// Dofs on the top boundary Gamma_0^R, ordered like the horizontal grid.
  std::vector<Eigen::Index> top_dofs() const;

  // cells -----------------------------------------------------------------
  /// Corner nodes (closed grid). Local corner a has per-axis offset bit k of a,
  /// the vertical axis being bit d-1.
  std::array<Eigen::Index, 8> cell_nodes(Eigen::Index cell) const noexcept;
  /// Corner dofs (periodic numbering), -1 where the corner lies on the bottom.
  std::array<Eigen::Index, 8> cell_dofs(Eigen::Index cell) const noexcept;
  std::array<int, 3> cell_coords(Eigen::Index cell) const noexcept;
  Point cell_origin(Eigen::Index cell) const noexcept;
  int corners() const noexcept { return 1 << d_; }

  /// Cell containing x (clamped to the closed cell) and reference coordinates.
  std::pair<Eigen::Index, Point> locate(const Point& x) const;

  bool contains(const Point& x, Real tol = 1e-12) const noexcept;

 private:
  int d_;
  Real R_;
  int M_;
  int P_;
  int V_;
  Eigen::Index n_cells_;
  Eigen::Index n_nodes_;
  Eigen::Index n_dofs_;
};

/// Tensor Gauss-Legendre rule on [0,1]: nodes and weights.
std::pair<std::vector<Real>, std::vector<Real>> gauss_legendre_01(int n);

/// Reference-cell quadrature with Q1 shape values and physical gradients,
/// valid for every cell of a uniform mesh.
struct CellQuadrature {
  CellQuadrature(const Mesh& mesh, int points_per_axis);

  int size() const noexcept { return static_cast<int>(weights.size()); }
  Point point(const Mesh& mesh, Eigen::Index cell, int q) const;

  int corners;
  std::vector<Point> reference;                 ///< in [0,1]^d
  std::vector<Real> weights;                    ///< physical, sum = cell volume
  std::vector<std::array<Real, 8>> shape;       ///< phi_a at reference point
  std::vector<std::array<Point, 8>> gradient;   ///< physical gradient of phi_a
};

/// Q1 shape values at reference coordinates xi in [0,1]^d.
std::array<Real, 8> q1_shape(const Point& xi, int d);

/// Quadrature points of one cell (physical point, weight); 2-point Gauss per
/// axis unless stated otherwise.
std::vector<std::pair<Point, Real>> quadrature(const Mesh& mesh, Eigen::Index cell,
                                               int points_per_axis = 2);

/// Complex nodal values on the closed grid of a mesh.
class NodalField {
 public:
  NodalField() = default;
  explicit NodalField(std::shared_ptr<const Mesh> mesh);
  NodalField(std::shared_ptr<const Mesh> mesh, CVector values);

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  const CVector& values() const noexcept { return values_; }
  CVector& values() noexcept { return values_; }

  Complex operator[](Eigen::Index node) const { return values_[node]; }

  /// Multilinear interpolation at a point of the closed cell.
  Complex evaluate(const Point& x) const;
  /// Value inside a known cell at reference coordinates.
  Complex evaluate(Eigen::Index cell, const Point& xi) const;

  /// Nodal interpolant of f.
  static NodalField interpolate(std::shared_ptr<const Mesh> mesh,
                                const std::function<Complex(const Point&)>& f);

  /// Field from a periodic-dof vector: zero on the bottom, the face x_k = pi
  /// copies x_k = -pi.
  static NodalField from_dofs(std::shared_ptr<const Mesh> mesh, const CVector& dofs);
  CVector to_dofs() const;

 private:
  std::shared_ptr<const Mesh> mesh_;
  CVector values_;
};

/// Injection onto a coarser nested mesh (same d and R, coarser level).
NodalField interpolate_down(const NodalField& fine, std::shared_ptr<const Mesh> coarse);

/// Injection of a periodic-dof vector onto the dofs of a coarser nested mesh.
CVector restrict_dofs(const Mesh& fine, const CVector& dofs, const Mesh& coarse);

/// L2(Omega_0^R) norm of a nodal field by Gauss quadrature.
Real l2_norm(const NodalField& field, int points_per_axis = 3);

/// ||field - ref|| / ||ref|| over Omega_0^R.
Real relative_l2_error(const NodalField& field,
                       const std::function<Complex(const Point&)>& reference,
                       int points_per_axis = 3);

/// Q1 mass matrix on the periodic free dofs.
CSparse assemble_mass(const Mesh& mesh);

/// Mass matrix of the top-boundary trace space, indexed like Mesh::top_dofs().
CSparse assemble_top_mass(const Mesh& mesh);

/// Lumped (row-sum) mass on the closed grid.
RVector lumped_node_mass(const Mesh& mesh);

}  // namespace blochfem

#endif  // BLOCHFEM_MESH_HPP
