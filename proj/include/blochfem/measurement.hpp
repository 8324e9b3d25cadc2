#ifndef BLOCHFEM_MEASUREMENT_HPP
#define BLOCHFEM_MEASUREMENT_HPP

#include <cstdint>
#include <memory>
#include <vector>

#include "blochfem/forward.hpp"

namespace blochfem {

enum class MeasurementMode { Volume, Trace };

/// Piecewise-constant right-hand sides: N_f boxes partitioning the region
/// below R0, each used with value 1 and with value i.
struct RhsBasis {
  int d = 2;
  std::vector<Box> regions;

  int regions_count() const noexcept { return static_cast<int>(regions.size()); }
  /// 2 N_f: functions 0..N_f-1 take value 1, N_f..2N_f-1 value i.
  int size() const noexcept { return 2 * regions_count(); }
  Complex value(int f) const { return f < regions_count() ? Complex(1.0) : kI; }
  const Box& region(int f) const { return regions[f % regions_count()]; }

  /// Samples of function f at the 2-point quadrature nodes.
  CMatrix samples(const Mesh& mesh, int f) const;
};

/// nx boxes per horizontal axis times nz vertical layers over
/// (-pi, pi)^{d-1} x (0, R0).
RhsBasis make_rhs_basis(int d, Real R0, int nx, int nz);

/// Inner product of the data space: FE mass (volume) or top-boundary mass
/// (trace) per field, summed over the 2 N_f fields of a stacked vector.
class MeasurementSpace {
 public:
  MeasurementSpace(std::shared_ptr<const Mesh> mesh, MeasurementMode mode, int fields);

  MeasurementMode mode() const noexcept { return mode_; }
  int fields() const noexcept { return fields_; }
  Eigen::Index field_size() const noexcept { return n_; }
  Eigen::Index size() const noexcept { return n_ * fields_; }
  const Mesh& mesh() const { return *mesh_; }

  /// Measurement of one field from its periodic-dof vector.
  CVector restrict(const CVector& U) const;
  /// Transpose of restrict.
  CVector extend(const CVector& y) const;

  CVector weight(const CVector& stacked) const;  ///< block-diag mass times vector
  Complex inner(const CVector& a, const CVector& b) const;  ///< b^H W a
  Real norm(const CVector& a) const;

 private:
  std::shared_ptr<const Mesh> mesh_;
  MeasurementMode mode_;
  int fields_;
  Eigen::Index n_;
  CSparse W_;
  std::vector<Eigen::Index> top_;
};

/// Nodal k^2 q coefficients on closed-grid nodes with x_d <= R0; the rest of
/// the grid is frozen at zero. Inner product: lumped mass.
class ParameterSpace {
 public:
  ParameterSpace(std::shared_ptr<const Mesh> mesh, Real R0);

  Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(nodes_.size()); }
  const std::vector<Eigen::Index>& nodes() const noexcept { return nodes_; }
  const RVector& weights() const noexcept { return w_; }
  std::shared_ptr<const Mesh> mesh() const noexcept { return mesh_; }
  /// Highest vertical node index carrying a parameter.
  int top_layer() const noexcept { return jmax_; }

  NodalField to_field(const CVector& p) const;
  CVector from_field(const NodalField& f) const;
  Complex inner(const CVector& a, const CVector& b) const;
  Real norm(const CVector& a) const;

 private:
  std::shared_ptr<const Mesh> mesh_;
  std::vector<Eigen::Index> nodes_;
  RVector w_;
  int jmax_ = 0;
};

/// 2 N_f measurements, stacked field by field.
struct MeasurementData {
  MeasurementMode mode = MeasurementMode::Volume;
  std::vector<CVector> fields;
  Real epsilon = 0.0;
  std::uint64_t seed = 0;

  CVector stacked() const;
  static MeasurementData from_stacked(MeasurementMode mode, const CVector& v, int fields);
};

/// Uniform noise on [-1,1] for real and imaginary parts, rescaled so that
/// ||noise|| = epsilon ||data|| in the data norm. Deterministic in seed.
MeasurementData add_noise(const MeasurementData& data, const MeasurementSpace& space, Real epsilon,
                          std::uint64_t seed);

/// Forward map q -> data with derivative and adjoint at the last evaluated q.
/// The adjoint is taken with respect to the weighted inner products of
/// ParameterSpace and MeasurementSpace.
class NonlinearProblem {
 public:
  virtual ~NonlinearProblem() = default;
  virtual Eigen::Index parameter_size() const = 0;
  virtual Eigen::Index data_size() const = 0;
  virtual CVector evaluate(const CVector& q) = 0;
  virtual CVector derivative(const CVector& h) = 0;
  virtual CVector adjoint(const CVector& r) = 0;
  virtual Complex data_inner(const CVector& a, const CVector& b) const = 0;
  virtual Complex parameter_inner(const CVector& a, const CVector& b) const = 0;
  Real data_norm(const CVector& a) const { return std::sqrt(std::max(0.0, data_inner(a, a).real())); }
  Real parameter_norm(const CVector& a) const { return std::sqrt(std::max(0.0, parameter_inner(a, a).real())); }
};

/// Shared pieces of the PDE-based measurement models.
class MeasurementModel : public NonlinearProblem {
 public:
  MeasurementModel(std::shared_ptr<ForwardSolver> solver, RhsBasis basis, MeasurementMode mode, Real R0);

  Eigen::Index parameter_size() const override { return params_.size(); }
  Eigen::Index data_size() const override { return space_.size(); }
  Complex data_inner(const CVector& a, const CVector& b) const override { return space_.inner(a, b); }
  Complex parameter_inner(const CVector& a, const CVector& b) const override { return params_.inner(a, b); }

  const ParameterSpace& parameters() const noexcept { return params_; }
  const MeasurementSpace& space() const noexcept { return space_; }
  const RhsBasis& basis() const noexcept { return basis_; }
  ForwardSolver& solver() noexcept { return *solver_; }

  /// Physical fields U_f (periodic dofs) of the region functions at the last
  /// evaluated q; the value-i functions are i times these.
  const std::vector<CVector>& states() const noexcept { return states_; }

 protected:
  /// Stack the N_f region states (and i times them) into a data vector.
  CVector stack(const std::vector<CVector>& region_fields) const;
  /// Fold a data-space residual onto the N_f region functions:
  /// y_m - i y_{m+N_f}, weighted and extended to dofs.
  std::vector<CVector> fold_adjoint(const CVector& r) const;

  std::shared_ptr<ForwardSolver> solver_;
  RhsBasis basis_;
  ParameterSpace params_;
  MeasurementSpace space_;
  std::vector<std::vector<CVector>> F_;  ///< rhs blocks per region function
  std::vector<CVector> states_;
  CVector q_;
};

/// Matrix-free model: every evaluation, derivative and adjoint runs the
/// Schur/GMRES block solver. Works in 2D and 3D.
class IterativeModel : public MeasurementModel {
 public:
  using MeasurementModel::MeasurementModel;

  CVector evaluate(const CVector& q) override;
  CVector derivative(const CVector& h) override;
  CVector adjoint(const CVector& r) override;

 private:
  std::vector<std::vector<CVector>> W_;  ///< per region: alpha blocks
};

/// Clean measurements of the true perturbation on a fine configuration,
/// injected onto the coarse mesh, plus noise.
MeasurementData generate_synthetic_data(const ProblemConfig& fine, const ProblemConfig& coarse,
                                        const RhsBasis& basis, MeasurementMode mode, Real epsilon,
                                        std::uint64_t seed);

/// Clean volume data on the coarse dofs (all 2 N_f fields), injected from
/// the fine solve. Reused across modes and seeds.
std::vector<CVector> synthetic_states(const ProblemConfig& fine, const ProblemConfig& coarse,
                                      const RhsBasis& basis);

/// Data in the given mode from coarse-dof states.
MeasurementData measurement_from_states(const std::vector<CVector>& states, const Mesh& coarse,
                                        MeasurementMode mode);

/// ||k^2 q_rec - k^2 q_true|| / ||k^2 q_true|| over the cell.
Real reconstruction_error(const NodalField& q_rec, const RegionSpec& truth);

}  // namespace blochfem

#endif  // BLOCHFEM_MEASUREMENT_HPP
