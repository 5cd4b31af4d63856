#include "qhhg/operators.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Eigenvalues>

namespace qhhg {

namespace {

// Sign of c+_to c_from acting on one spin block (from != to, from occupied,
// to empty). Electrons of the other spin contribute equally to both operators.
int hop_sign(std::uint32_t mask, int from, int to) {
  const std::uint32_t below_from = mask & ((1u << from) - 1u);
  const std::uint32_t after_removal = mask & ~(1u << from);
  const std::uint32_t below_to = after_removal & ((1u << to) - 1u);
  return ((std::popcount(below_from) + std::popcount(below_to)) % 2 == 0) ? 1 : -1;
}

SparseMatrix build_forward_hop(const SectorBasis& basis) {
  const int sites = basis.sites();
  std::vector<Eigen::Triplet<Complex>> triplets;
  triplets.reserve(basis.dimension() * static_cast<std::size_t>(2 * sites));
  const auto norms = basis.norms();
  for (std::size_t col = 0; col < basis.dimension(); ++col) {
    const OccupationState s = basis.states()[col];
    const double inv_norm = 1.0 / std::sqrt(norms[col]);
    for (int spin = 0; spin < 2; ++spin) {
      const std::uint32_t mask = spin == 0 ? s.up : s.down;
      for (int j = 0; j < sites; ++j) {
        // c+_{j} c_{j+1}: electron moves from j+1 to j.
        const int from = (j + 1) % sites;
        const int to = j;
        if (from == to) continue;
        if (!(mask & (1u << from)) || (mask & (1u << to))) continue;
        const std::uint32_t moved = (mask & ~(1u << from)) | (1u << to);
        const OccupationState target = spin == 0 ? OccupationState{moved, s.down}
                                                 : OccupationState{s.up, moved};
        const auto proj = basis.project(target);
        if (!proj) continue;
        const double sign = hop_sign(mask, from, to);
        triplets.emplace_back(static_cast<Eigen::Index>(proj->index),
                              static_cast<Eigen::Index>(col),
                              sign * proj->amplitude * inv_norm);
      }
    }
  }
  const auto dim = static_cast<Eigen::Index>(basis.dimension());
  SparseMatrix f(dim, dim);
  f.setFromTriplets(triplets.begin(), triplets.end());
  f.prune(Complex{0.0, 0.0}, 1e-14);
  f.makeCompressed();
  return f;
}

}  // namespace

void ModelParams::validate() const {
  if (sites < 2) throw ParameterError("model needs at least 2 sites");
  if (!(t0 > 0.0)) throw ParameterError("hopping t0 must be positive");
  if (!(a > 0.0)) throw ParameterError("lattice spacing a must be positive");
  if (!(U >= 0.0)) throw ParameterError("on-site repulsion U must be non-negative");
}

double hermiticity_defect(const SparseMatrix& m) {
  const SparseMatrix diff = m - SparseMatrix(m.adjoint());
  double worst = 0.0;
  for (Eigen::Index k = 0; k < diff.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(diff, k); it; ++it) {
      worst = std::max(worst, std::abs(it.value()));
    }
  }
  return worst;
}

HubbardOperators::HubbardOperators(const SectorBasis& basis, const ModelParams& params)
    : params_(params), basis_id_(basis.id()) {
  params_.validate();
  if (basis.sites() != params.sites) {
    throw ParameterError("basis and model disagree on the number of sites");
  }
  forward_ = build_forward_hop(basis);
  backward_ = SparseMatrix(forward_.adjoint());
  doublons_.resize(static_cast<Eigen::Index>(basis.dimension()));
  for (std::size_t i = 0; i < basis.dimension(); ++i) {
    const auto& s = basis.states()[i];
    doublons_[static_cast<Eigen::Index>(i)] = std::popcount(s.up & s.down);
  }
}

SparseOperator HubbardOperators::hopping(double vector_potential) const {
  const Complex phase = std::polar(1.0, params_.a * vector_potential);
  SparseOperator op;
  op.basis_id = basis_id_;
  op.matrix = (-params_.t0 * phase) * forward_ + (-params_.t0 * std::conj(phase)) * backward_;
  op.hermitian = true;
  return op;
}

SparseOperator HubbardOperators::interaction() const {
  const Eigen::Index dim = dimension();
  SparseOperator op;
  op.basis_id = basis_id_;
  op.matrix.resize(dim, dim);
  std::vector<Eigen::Triplet<Complex>> triplets;
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (doublons_[i] != 0.0) triplets.emplace_back(i, i, Complex{params_.U * doublons_[i], 0.0});
  }
  op.matrix.setFromTriplets(triplets.begin(), triplets.end());
  op.hermitian = true;
  return op;
}

SparseOperator HubbardOperators::hamiltonian(double vector_potential) const {
  SparseOperator op = hopping(vector_potential);
  op.matrix += interaction().matrix;
  return op;
}

SparseOperator HubbardOperators::current(double vector_potential) const {
  const Complex phase = std::polar(1.0, params_.a * vector_potential);
  const Complex prefactor = -kI * params_.a * params_.t0;
  SparseOperator op;
  op.basis_id = basis_id_;
  op.matrix = (prefactor * phase) * forward_ - (prefactor * std::conj(phase)) * backward_;
  op.hermitian = true;
  return op;
}

void HubbardOperators::apply_hamiltonian(double vector_potential,
                                         const Eigen::Ref<const CVector>& in,
                                         Eigen::Ref<CVector> out) const {
  const Complex phase = std::polar(1.0, params_.a * vector_potential);
  out.noalias() = (-params_.t0 * phase) * (forward_ * in);
  out.noalias() += (-params_.t0 * std::conj(phase)) * (backward_ * in);
  out.array() += params_.U * doublons_.array().cast<Complex>() * in.array();
}

void HubbardOperators::apply_current(double vector_potential,
                                     const Eigen::Ref<const CVector>& in,
                                     Eigen::Ref<CVector> out) const {
  const Complex phase = std::polar(1.0, params_.a * vector_potential);
  const Complex prefactor = -kI * params_.a * params_.t0;
  out.noalias() = (prefactor * phase) * (forward_ * in);
  out.noalias() -= (prefactor * std::conj(phase)) * (backward_ * in);
}

void HubbardOperators::apply_current(double vector_potential, const CMatrix& in,
                                     CMatrix& out) const {
  const Complex phase = std::polar(1.0, params_.a * vector_potential);
  const Complex prefactor = -kI * params_.a * params_.t0;
  out.noalias() = (prefactor * phase) * (forward_ * in);
  out.noalias() -= (prefactor * std::conj(phase)) * (backward_ * in);
}

double HubbardOperators::spectral_bound() const {
  Eigen::VectorXd rows = params_.U * doublons_;
  for (const SparseMatrix* m : {&forward_, &backward_}) {
    for (Eigen::Index r = 0; r < m->outerSize(); ++r) {
      for (SparseMatrix::InnerIterator it(*m, r); it; ++it) rows[r] += params_.t0 * std::abs(it.value());
    }
  }
  return rows.size() == 0 ? 0.0 : rows.maxCoeff();
}

SparseOperator build_hopping(const SectorBasis& basis, const ModelParams& params,
                             double vector_potential) {
  return HubbardOperators(basis, params).hopping(vector_potential);
}

SparseOperator build_interaction(const SectorBasis& basis, const ModelParams& params) {
  return HubbardOperators(basis, params).interaction();
}

SparseOperator build_current(const SectorBasis& basis, const ModelParams& params,
                             double vector_potential) {
  return HubbardOperators(basis, params).current(vector_potential);
}

SparseOperator build_position(const SectorBasis& full_basis, const ModelParams& params) {
  if (full_basis.symmetry().projected()) {
    throw ParameterError("position operator is only defined on the unprojected basis");
  }
  const auto dim = static_cast<Eigen::Index>(full_basis.dimension());
  std::vector<Eigen::Triplet<Complex>> triplets;
  for (Eigen::Index i = 0; i < dim; ++i) {
    const auto& s = full_basis.states()[static_cast<std::size_t>(i)];
    double r = 0.0;
    for (int l = 0; l < full_basis.sites(); ++l) {
      const int n = ((s.up >> l) & 1u) + ((s.down >> l) & 1u);
      r += n * l * params.a;
    }
    triplets.emplace_back(i, i, Complex{r, 0.0});
  }
  SparseOperator op;
  op.basis_id = full_basis.id();
  op.matrix.resize(dim, dim);
  op.matrix.setFromTriplets(triplets.begin(), triplets.end());
  op.hermitian = true;
  return op;
}

double ground_state_energy(const SparseOperator& op, double tolerance) {
  const Eigen::Index dim = op.dimension();
  if (dim == 0) throw ParameterError("empty operator");
  if (dim <= 400) {
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(op.dense(), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
    return solver.eigenvalues()[0];
  }

  const Eigen::Index max_iter = std::min<Eigen::Index>(dim, 400);
  std::mt19937_64 rng(20240531);
  std::normal_distribution<double> normal;
  CVector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v[i] = Complex{normal(rng), normal(rng)};
  v.normalize();

  CMatrix basis(dim, max_iter);
  std::vector<double> alpha;
  std::vector<double> beta;
  double previous = std::numeric_limits<double>::infinity();
  CVector w(dim);
  for (Eigen::Index k = 0; k < max_iter; ++k) {
    basis.col(k) = v;
    w.noalias() = op.matrix * v;
    alpha.push_back(v.dot(w).real());
    // Full reorthogonalization (twice is enough).
    for (int pass = 0; pass < 2; ++pass) {
      const CVector overlaps = basis.leftCols(k + 1).adjoint() * w;
      w.noalias() -= basis.leftCols(k + 1) * overlaps;
    }
    const double b = w.norm();

    const auto n = static_cast<Eigen::Index>(alpha.size());
    Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), n);
    Eigen::VectorXd off = Eigen::Map<Eigen::VectorXd>(beta.data(), n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
    tri.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
    const double lowest = tri.eigenvalues()[0];
    if (b < 1e-12 || std::abs(lowest - previous) < tolerance * std::max(1.0, std::abs(lowest))) {
      return lowest;
    }
    previous = lowest;
    beta.push_back(b);
    v = w / b;
  }
  return previous;
}

double mott_gap(const ModelParams& params) {
  params.validate();
  if (params.sites % 2 != 0) throw ParameterError("Mott gap needs an even number of sites");
  const int half = params.sites / 2;
  auto energy = [&](int n_up, int n_down) {
    const SectorBasis basis = build_full_basis(params.sites, n_up, n_down);
    return ground_state_energy(HubbardOperators(basis, params).hamiltonian(0.0));
  };
  const double e_half = energy(half, half);
  const double e_plus = energy(half + 1, half);
  const double e_minus = energy(half - 1, half);
  return e_plus + e_minus - 2.0 * e_half;
}

}  // namespace qhhg
