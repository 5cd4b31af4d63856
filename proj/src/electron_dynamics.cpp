#include "qhhg/electron_dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>

namespace qhhg {

namespace {

constexpr double kResidualTolerance = 1e-10;

// Rotate each degenerate block so that j(0) is diagonal inside it.
void resolve_degeneracies(const HubbardOperators& ops, Eigen::VectorXd& energies,
                          CMatrix& vectors) {
  const Eigen::Index n = energies.size();
  const double scale = std::max(1.0, energies.cwiseAbs().maxCoeff());
  const double tolerance = 1e-9 * scale;
  const SparseMatrix current = ops.current(0.0).matrix;
  Eigen::Index begin = 0;
  while (begin < n) {
    Eigen::Index end = begin + 1;
    while (end < n && energies[end] - energies[end - 1] < tolerance) ++end;
    const Eigen::Index size = end - begin;
    if (size > 1) {
      const CMatrix block = vectors.middleCols(begin, size);
      CMatrix j_block = block.adjoint() * (current * block);
      j_block = 0.5 * (j_block + j_block.adjoint()).eval();
      Eigen::SelfAdjointEigenSolver<CMatrix> solver(j_block);
      if (solver.info() != Eigen::Success) throw NumericalError("degenerate block rotation failed");
      vectors.middleCols(begin, size) = block * solver.eigenvectors();
      const double mean = energies.segment(begin, size).mean();
      energies.segment(begin, size).setConstant(mean);
    }
    begin = end;
  }
}

// Make the first component of at least half the largest magnitude real and
// positive.
void fix_phases(CMatrix& vectors) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    auto col = vectors.col(c);
    const double largest = col.cwiseAbs().maxCoeff();
    for (Eigen::Index r = 0; r < col.size(); ++r) {
      if (std::abs(col[r]) >= 0.5 * largest) {
        col *= std::conj(col[r]) / std::abs(col[r]);
        break;
      }
    }
  }
}

struct Partition {
  Eigen::Index begin;
  Eigen::Index end;
};

std::vector<Partition> split_columns(Eigen::Index columns, int workers) {
  std::vector<Partition> parts;
  const Eigen::Index n = std::max<Eigen::Index>(1, std::min<Eigen::Index>(workers, columns));
  for (Eigen::Index w = 0; w < n; ++w) {
    parts.push_back({columns * w / n, columns * (w + 1) / n});
  }
  return parts;
}

// Stores the Hermitian part of phi^dagger (j phi) and returns the defect.
double assemble_slice(const CMatrix& phi, const CMatrix& applied, Eigen::Map<CMatrix> slice) {
  slice.noalias() = phi.adjoint() * applied;
  const double defect = slice.size() ? (slice - slice.adjoint()).cwiseAbs().maxCoeff() : 0.0;
  slice = 0.5 * (slice + slice.adjoint()).eval();
  return defect;
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

}  // namespace

EigenSet EigenSet::lowest(Eigen::Index m) const {
  if (m <= 0 || m > count()) throw ParameterError("requested eigenstate count out of range");
  return {energies.head(m), vectors.leftCols(m)};
}

EigenSet diagonalize_field_free(const HubbardOperators& ops) {
  const CMatrix h = ops.hamiltonian(0.0).dense();
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
  if (solver.info() != Eigen::Success) throw NumericalError("dense eigensolver did not converge");
  EigenSet set{solver.eigenvalues(), solver.eigenvectors()};
  resolve_degeneracies(ops, set.energies, set.vectors);
  fix_phases(set.vectors);

  const CMatrix residual = h * set.vectors - set.vectors * set.energies.asDiagonal();
  for (Eigen::Index c = 0; c < residual.cols(); ++c) {
    const double r = residual.col(c).norm();
    if (r > kResidualTolerance) {
      std::ostringstream msg;
      msg << "eigenvector " << c << " has residual " << r << " (E=" << set.energies[c] << ")";
      throw NumericalError(msg.str());
    }
  }
  return set;
}

EigenSet diagonalize_field_free(const SectorBasis& basis, const ModelParams& params) {
  return diagonalize_field_free(HubbardOperators(basis, params));
}

KrylovPropagator::KrylovPropagator(Eigen::Index dimension, int krylov_dim)
    : krylov_dim_(krylov_dim), lanczos_(dimension, krylov_dim), work_(dimension) {
  if (krylov_dim < 2) throw ParameterError("Krylov dimension must be at least 2");
}

void KrylovPropagator::step(Eigen::Ref<CVector> psi, const ApplyFn& apply_h, double dt) {
  const double norm = psi.norm();
  if (norm == 0.0) {
    last_subspace_ = 0;
    return;
  }
  const int m_max = static_cast<int>(std::min<Eigen::Index>(krylov_dim_, psi.size()));
  Eigen::VectorXd alpha(m_max);
  Eigen::VectorXd beta(m_max);
  lanczos_.col(0) = psi / norm;
  int m = m_max;
  for (int j = 0; j < m_max; ++j) {
    apply_h(lanczos_.col(j), work_);
    const double applied_norm = work_.norm();
    alpha[j] = lanczos_.col(j).dot(work_).real();
    // Full reorthogonalization against the (short) Lanczos basis.
    for (int pass = 0; pass < 2; ++pass) {
      const CVector overlaps = lanczos_.leftCols(j + 1).adjoint() * work_;
      work_.noalias() -= lanczos_.leftCols(j + 1) * overlaps;
    }
    beta[j] = work_.norm();
    if (j + 1 == m_max) break;
    if (beta[j] <= 1e-12 * applied_norm || applied_norm == 0.0) {
      m = j + 1;
      break;
    }
    lanczos_.col(j + 1) = work_ / beta[j];
  }
  last_subspace_ = m;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
  tri.computeFromTridiagonal(alpha.head(m), beta.head(m - 1), Eigen::ComputeEigenvectors);
  const Eigen::MatrixXd& s = tri.eigenvectors();
  CVector phases(m);
  for (int k = 0; k < m; ++k) phases[k] = std::polar(1.0, -tri.eigenvalues()[k] * dt);
  const CVector coeffs = s.cast<Complex>() * phases.cwiseProduct(s.row(0).transpose().cast<Complex>());
  psi.noalias() = norm * (lanczos_.leftCols(m) * coeffs);
}

CVector krylov_step(const CVector& psi, const SparseOperator& h, double dt, int krylov_dim) {
  KrylovPropagator propagator(psi.size(), krylov_dim);
  CVector out = psi;
  propagator.step(out,
                  [&](const Eigen::Ref<const CVector>& in, Eigen::Ref<CVector> res) {
                    res.noalias() = h.matrix * in;
                  },
                  dt);
  return out;
}

PropagationReport propagate(const HubbardOperators& ops, const PulseParams& pulse,
                            const std::vector<double>& grid, CMatrix& states,
                            const PropagationOptions& options, const TrajectoryObserver& observer) {
  if (grid.empty()) throw ParameterError("empty time grid");
  if (options.substeps < 1) throw ParameterError("substeps must be at least 1");
  if (states.rows() != ops.dimension()) throw ParameterError("state dimension mismatch");

  Eigen::VectorXd initial_norms = states.colwise().norm().transpose();
  PropagationReport report;
  if (observer) observer(0, grid.front(), states);
  if (grid.size() == 1) return report;

  const auto parts = split_columns(states.cols(), resolve_workers(options.workers));
  std::vector<double> drift(parts.size(), 0.0);
  std::size_t current_step = 0;
  std::exception_ptr failure;
  std::atomic<bool> abort{false};

  auto on_step_complete = [&]() noexcept {
    ++current_step;
    try {
      const double worst = *std::max_element(drift.begin(), drift.end());
      report.max_norm_drift = std::max(report.max_norm_drift, worst);
      if (worst > options.max_norm_drift) {
        std::ostringstream msg;
        msg << "norm drift " << worst << " exceeds " << options.max_norm_drift << " at t="
            << grid[current_step];
        throw NumericalError(msg.str());
      }
      if (observer) observer(current_step, grid[current_step], states);
    } catch (...) {
      failure = std::current_exception();
      abort = true;
    }
  };

  std::barrier sync(static_cast<std::ptrdiff_t>(parts.size()), on_step_complete);

  auto worker = [&](std::size_t w) {
    const Partition part = parts[w];
    KrylovPropagator krylov(ops.dimension(), options.krylov_dim);
    double a_mid = 0.0;
    const KrylovPropagator::ApplyFn apply = [&](const Eigen::Ref<const CVector>& in,
                                                Eigen::Ref<CVector> out) {
      ops.apply_hamiltonian(a_mid, in, out);
    };
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
      if (abort) {
        sync.arrive_and_drop();
        return;
      }
      const double h = (grid[k + 1] - grid[k]) / options.substeps;
      double worst = 0.0;
      for (Eigen::Index c = part.begin; c < part.end; ++c) {
        auto psi = states.col(c);
        for (int s = 0; s < options.substeps; ++s) {
          a_mid = vector_potential(grid[k] + (s + 0.5) * h, pulse);
          krylov.step(psi, apply, h);
        }
        worst = std::max(worst, std::abs(psi.norm() - initial_norms[c]));
      }
      drift[w] = worst;
      sync.arrive_and_wait();
    }
  };

  if (parts.size() == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> threads;
    for (std::size_t w = 1; w < parts.size(); ++w) threads.emplace_back(worker, w);
    worker(0);
  }
  if (failure) std::rethrow_exception(failure);
  report.steps = grid.size() - 1;
  return report;
}

Trajectory propagate_all(const EigenSet& eigs, const HubbardOperators& ops,
                         const PulseParams& pulse, const std::vector<double>& grid,
                         const PropagationOptions& options) {
  Trajectory traj;
  traj.times = grid;
  traj.states.reserve(grid.size());
  CMatrix states = eigs.vectors;
  traj.report = propagate(ops, pulse, grid, states, options,
                          [&](std::size_t, double, const CMatrix& s) { traj.states.push_back(s); });
  return traj;
}

TransitionCurrentTable transition_currents(const Trajectory& trajectory,
                                           const HubbardOperators& ops,
                                           const PulseParams& pulse,
                                           double* raw_hermiticity_defect) {
  const Eigen::Index m = trajectory.states.empty() ? 0 : trajectory.states.front().cols();
  TransitionCurrentTable table(trajectory.times, m);
  CMatrix applied;
  double defect = 0.0;
  for (std::size_t k = 0; k < trajectory.times.size(); ++k) {
    const CMatrix& phi = trajectory.states[k];
    ops.apply_current(vector_potential(trajectory.times[k], pulse), phi, applied);
    defect = std::max(defect, assemble_slice(phi, applied, table.slice(k)));
  }
  if (raw_hermiticity_defect) *raw_hermiticity_defect = defect;
  return table;
}

TransitionCurrentTable compute_transition_currents(const EigenSet& eigs,
                                                   const HubbardOperators& ops,
                                                   const PulseParams& pulse,
                                                   const std::vector<double>& grid,
                                                   const PropagationOptions& options,
                                                   PropagationReport* report) {
  TransitionCurrentTable table(grid, eigs.count());
  CMatrix states = eigs.vectors;
  CMatrix applied;
  double defect = 0.0;
  PropagationReport r =
      propagate(ops, pulse, grid, states, options,
                [&](std::size_t k, double t, const CMatrix& phi) {
                  ops.apply_current(vector_potential(t, pulse), phi, applied);
                  defect = std::max(defect, assemble_slice(phi, applied, table.slice(k)));
                });
  r.raw_hermiticity_defect = defect;
  if (report) *report = r;
  return table;
}

}  // namespace qhhg
