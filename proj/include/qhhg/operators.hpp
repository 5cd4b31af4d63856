#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "qhhg/common.hpp"
#include "qhhg/lattice_basis.hpp"

namespace qhhg {

using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

/// Hubbard chain constants in atomic units. Defaults are the Sr2CuO3 fit.
struct ModelParams {
  int sites = 8;
  double t0 = 0.0191;
  double U = 0.0;
  double a = 7.5589;

  void validate() const;
  bool operator==(const ModelParams&) const = default;
};

/// Complex sparse matrix over a SectorBasis.
struct SparseOperator {
  std::string basis_id;
  SparseMatrix matrix;
  bool hermitian = false;

  Eigen::Index dimension() const { return matrix.rows(); }
  CMatrix dense() const { return CMatrix(matrix); }
};

/// Largest |M - M^dagger| entry.
double hermiticity_defect(const SparseMatrix& m);

/// Time-independent pieces of the driven Hubbard Hamiltonian over one basis.
/// The forward hop F = sum_{j,mu} c+_{j,mu} c_{j+1,mu} is stored once; the
/// Peierls phase only rescales F and F^dagger:
///   H_hop(A) = -t0 (e^{iaA} F + e^{-iaA} F^dagger)
///   j(A)     = -i a t0 (e^{iaA} F - e^{-iaA} F^dagger)
class HubbardOperators {
 public:
  HubbardOperators(const SectorBasis& basis, const ModelParams& params);

  const ModelParams& params() const { return params_; }
  const std::string& basis_id() const { return basis_id_; }
  Eigen::Index dimension() const { return forward_.rows(); }

  const SparseMatrix& forward_hop() const { return forward_; }
  const SparseMatrix& backward_hop() const { return backward_; }
  /// Number of doubly occupied sites per basis vector.
  const Eigen::VectorXd& double_occupancy() const { return doublons_; }

  SparseOperator hopping(double vector_potential) const;
  SparseOperator interaction() const;
  SparseOperator hamiltonian(double vector_potential) const;
  SparseOperator current(double vector_potential) const;

  /// out = H(A) in, without assembling a matrix.
  void apply_hamiltonian(double vector_potential, const Eigen::Ref<const CVector>& in,
                         Eigen::Ref<CVector> out) const;
  /// out = j(A) in.
  void apply_current(double vector_potential, const Eigen::Ref<const CVector>& in,
                     Eigen::Ref<CVector> out) const;
  /// out = j(A) in for every column.
  void apply_current(double vector_potential, const CMatrix& in, CMatrix& out) const;

  /// Upper bound on the spectral radius of H(A) for any A (Gershgorin).
  double spectral_bound() const;

 private:
  ModelParams params_;
  std::string basis_id_;
  SparseMatrix forward_;
  SparseMatrix backward_;
  Eigen::VectorXd doublons_;
};

SparseOperator build_hopping(const SectorBasis& basis, const ModelParams& params,
                             double vector_potential);
SparseOperator build_interaction(const SectorBasis& basis, const ModelParams& params);
SparseOperator build_current(const SectorBasis& basis, const ModelParams& params,
                             double vector_potential);

/// Dipole operator R = sum_l (l a) n_l on an unprojected basis. With periodic
/// boundaries i[H, R] reproduces the current except on the wrap-around bond.
SparseOperator build_position(const SectorBasis& full_basis, const ModelParams& params);

/// Lowest eigenvalue of a Hermitian operator by Lanczos with full
/// reorthogonalization. Falls back to dense diagonalization for small matrices.
double ground_state_energy(const SparseOperator& op, double tolerance = 1e-12);

/// E_GS(L+1) + E_GS(L-1) - 2 E_GS(L) for the half-filled chain.
double mott_gap(const ModelParams& params);

}  // namespace qhhg
