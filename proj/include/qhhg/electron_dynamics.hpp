#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "qhhg/common.hpp"
#include "qhhg/current_table.hpp"
#include "qhhg/drive.hpp"
#include "qhhg/lattice_basis.hpp"
#include "qhhg/operators.hpp"

namespace qhhg {

/// Field-free eigenpairs of one sector, energies ascending.
struct EigenSet {
  Eigen::VectorXd energies;
  CMatrix vectors;  // columns are eigenvectors

  Eigen::Index count() const { return energies.size(); }
  EigenSet lowest(Eigen::Index m) const;
};

/// Dense diagonalization of H(A=0). Degenerate levels are rotated so that the
/// current j(A=0) is diagonal inside each degenerate block, and every vector's
/// largest component is made real and positive, which fixes the basis
/// deterministically. Throws NumericalError if a residual exceeds 1e-10.
EigenSet diagonalize_field_free(const HubbardOperators& ops);
EigenSet diagonalize_field_free(const SectorBasis& basis, const ModelParams& params);

/// Short-iterative Lanczos propagator psi -> exp(-i H dt) psi. The Krylov
/// projection is exponentiated exactly, so the norm is kept to rounding error.
/// A vanishing Lanczos residual (invariant subspace) shortens the recursion.
class KrylovPropagator {
 public:
  using ApplyFn = std::function<void(const Eigen::Ref<const CVector>&, Eigen::Ref<CVector>)>;

  KrylovPropagator(Eigen::Index dimension, int krylov_dim);

  /// Advances psi in place.
  void step(Eigen::Ref<CVector> psi, const ApplyFn& apply_h, double dt);

  int krylov_dim() const { return krylov_dim_; }
  /// Subspace size actually used by the last step.
  int last_subspace() const { return last_subspace_; }

 private:
  int krylov_dim_;
  int last_subspace_ = 0;
  CMatrix lanczos_;
  CVector work_;
};

CVector krylov_step(const CVector& psi, const SparseOperator& h, double dt, int krylov_dim);

struct PropagationOptions {
  int krylov_dim = 4;
  /// Krylov steps per grid interval, each with H frozen at its own midpoint.
  int substeps = 32;
  /// Worker threads over eigenstates; 0 picks the hardware concurrency.
  int workers = 1;
  /// Abort threshold for | |psi(t)| - 1 |.
  double max_norm_drift = 1e-6;
};

/// Called at every grid time with the current states (columns).
using TrajectoryObserver = std::function<void(std::size_t index, double t, const CMatrix& states)>;

struct PropagationReport {
  double max_norm_drift = 0.0;
  std::size_t steps = 0;
  /// Largest |J - J^dagger| of the assembled slices before they are replaced
  /// by their Hermitian part. Zero if no table was assembled.
  double raw_hermiticity_defect = 0.0;
};

/// Evolves every column of `states` through the grid under H(A(t)) using the
/// midpoint rule. The observer sees the states at each grid point (including
/// the first). Throws NumericalError on excessive norm drift.
PropagationReport propagate(const HubbardOperators& ops, const PulseParams& pulse,
                            const std::vector<double>& grid, CMatrix& states,
                            const PropagationOptions& options,
                            const TrajectoryObserver& observer = {});

/// Stored trajectory: states at every grid point. Only for small systems.
struct Trajectory {
  std::vector<double> times;
  std::vector<CMatrix> states;
  PropagationReport report;
};

Trajectory propagate_all(const EigenSet& eigs, const HubbardOperators& ops,
                         const PulseParams& pulse, const std::vector<double>& grid,
                         const PropagationOptions& options = {});

/// j_{m,n}(t) = <phi_m(t)| j(t) |phi_n(t)> from a stored trajectory. Each
/// slice is stored as the Hermitian part of the computed product, which drops
/// the rounding-level imaginary parts of the diagonal.
TransitionCurrentTable transition_currents(const Trajectory& trajectory,
                                           const HubbardOperators& ops,
                                           const PulseParams& pulse,
                                           double* raw_hermiticity_defect = nullptr);

/// Propagation and table assembly in one pass without storing states.
TransitionCurrentTable compute_transition_currents(const EigenSet& eigs,
                                                   const HubbardOperators& ops,
                                                   const PulseParams& pulse,
                                                   const std::vector<double>& grid,
                                                   const PropagationOptions& options,
                                                   PropagationReport* report = nullptr);

}  // namespace qhhg
