#ifndef BLOCHFEM_MATERIAL_HPP
#define BLOCHFEM_MATERIAL_HPP

#include <memory>
#include <string>
#include <vector>

#include "blochfem/mesh.hpp"

namespace blochfem {

/// Closed axis-aligned box carrying a complex value.
struct Box {
  Point lo = Point::Zero();
  Point hi = Point::Zero();
  Complex value{0.0, 0.0};

  bool contains(const Point& x, int d) const noexcept;
};

/// Piecewise-constant field: default value overridden by boxes, later boxes
/// winning on overlaps.
struct RegionSpec {
  Complex default_value{0.0, 0.0};
  std::vector<Box> boxes;

  Complex operator()(const Point& x, int d) const noexcept;
};

/// Horizontal coordinates wrapped into [-pi, pi).
Point wrap_periodic(const Point& x, int d);

/// One entry of the absorption/support check.
struct MaterialIssue {
  std::string code;
  std::string message;
};

/// Background k^2 n_p^2 and perturbation k^2 q of the periodic layer.
class Material {
 public:
  /// Throws ConfigError when the perturbation is not supported below R0 or
  /// the heights are inconsistent. Other assumption violations are recorded
  /// in report().
  Material(int d, Real k, Real R, Real R0, RegionSpec background, RegionSpec perturbation);

  int dim() const noexcept { return d_; }
  Real k() const noexcept { return k_; }
  Real height() const noexcept { return R_; }
  Real R0() const noexcept { return R0_; }
  const RegionSpec& background() const noexcept { return background_; }
  const RegionSpec& perturbation() const noexcept { return perturbation_; }

  /// k^2 n_p^2 at x (periodic in the horizontal variables).
  Complex k2np2(const Point& x) const;
  /// k^2 q at x, zero above R0.
  Complex k2q(const Point& x) const;
  std::pair<Complex, Complex> eval(const Point& x) const;

  const std::vector<MaterialIssue>& report() const noexcept { return issues_; }

 private:
  void check_point(const Point& x) const;

  int d_;
  Real k_;
  Real R_;
  Real R0_;
  RegionSpec background_;
  RegionSpec perturbation_;
  std::vector<MaterialIssue> issues_;
};

RegionSpec example_background(int d);
RegionSpec example_perturbation(int d);
/// k = sqrt(0.4), R = 5, R0 = 4.5 with the example data above.
Material example_material(int d);

/// Nodal sampling of a region field on the closed grid.
NodalField sample_nodal(std::shared_ptr<const Mesh> mesh, const RegionSpec& spec);

}  // namespace blochfem

#endif  // BLOCHFEM_MATERIAL_HPP
