#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "fermion_oracle.hpp"
#include "qhhg/operators.hpp"

using namespace qhhg;

namespace {

const ModelParams kParams{4, 0.0191, 10 * 0.0191, 7.5589};

double max_abs(const CMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

// Sum of the lowest n Bloch levels -2 t0 cos(2 pi q / L).
double bloch_fill(int sites, int n, double t0) {
  std::vector<double> levels;
  for (int q = 0; q < sites; ++q) levels.push_back(-2.0 * t0 * std::cos(2.0 * kPi * q / sites));
  std::sort(levels.begin(), levels.end());
  double e = 0.0;
  for (int i = 0; i < n; ++i) e += levels[static_cast<std::size_t>(i)];
  return e;
}

}  // namespace

TEST_CASE("operators match the second-quantized oracle on full bases") {
  for (int sites : {2, 3, 4}) {
    ModelParams p = kParams;
    p.sites = sites;
    const auto full = build_full_basis(sites, (sites + 1) / 2, sites / 2);
    const oracle::FullSpace space(full);
    for (double a_value : {0.0, 0.11, -0.194}) {
      CHECK(max_abs(build_hopping(full, p, a_value).dense() - space.hopping(p, a_value)) < 1e-14);
      CHECK(max_abs(build_current(full, p, a_value).dense() - space.current(p, a_value)) < 1e-14);
    }
    CHECK(max_abs(build_interaction(full, p).dense() - space.interaction(p)) < 1e-14);
  }
}

TEST_CASE("operators are Hermitian") {
  const auto sector = build_sector_basis(6, 3, 3, 0, 1);
  ModelParams p = kParams;
  p.sites = 6;
  const HubbardOperators ops(sector, p);
  for (double a_value : {0.0, 0.05, 0.194}) {
    CHECK(hermiticity_defect(ops.hamiltonian(a_value).matrix) < 1e-13);
    CHECK(hermiticity_defect(ops.current(a_value).matrix) < 1e-13);
    CHECK(ops.hamiltonian(a_value).hermitian);
  }
  // At A=0 the hopping is real symmetric.
  p.sites = 4;
  CHECK(build_hopping(build_full_basis(4, 2, 2), p, 0.0).dense().imag().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single-electron hopping spectrum") {
  ModelParams p = kParams;
  p.sites = 2;
  auto ev = oracle::sorted_eigenvalues(build_hopping(build_full_basis(2, 1, 0), p, 0.0).dense());
  CHECK(ev[0] == doctest::Approx(-2 * p.t0));
  CHECK(ev[1] == doctest::Approx(2 * p.t0));

  p.sites = 4;
  ev = oracle::sorted_eigenvalues(build_hopping(build_full_basis(4, 1, 0), p, 0.0).dense());
  const double expected[] = {-2 * p.t0, 0.0, 0.0, 2 * p.t0};
  for (int i = 0; i < 4; ++i) CHECK(std::abs(ev[i] - expected[i]) < 1e-15);
  CHECK(ev[3] - ev[0] == doctest::Approx(4 * p.t0).epsilon(1e-14));
}

TEST_CASE("Peierls phase changes only the phase of matrix elements") {
  ModelParams p = kParams;
  const auto full = build_full_basis(4, 2, 2);
  const CMatrix h0 = build_hopping(full, p, 0.0).dense();
  const CMatrix ha = build_hopping(full, p, 0.173).dense();
  CHECK(max_abs(h0.cwiseAbs() - ha.cwiseAbs()) < 1e-15);
}

TEST_CASE("hopping spectrum is invariant under a flux quantum") {
  // a A = 2 pi / L shifts every Bloch momentum onto the next one.
  ModelParams p = kParams;
  for (int n : {1, 2}) {
    const auto basis = build_full_basis(4, n, n);
    const double a_value = 2.0 * kPi / (4 * p.a);
    const auto e0 = oracle::sorted_eigenvalues(build_hopping(basis, p, 0.0).dense());
    const auto ea = oracle::sorted_eigenvalues(build_hopping(basis, p, a_value).dense());
    CHECK((e0 - ea).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("interaction counts doublons") {
  ModelParams p = kParams;
  p.U = 0.3;
  auto diag = [&](int sites, int nu, int nd, OccupationState s) {
    const auto basis = build_full_basis(sites, nu, nd);
    const auto i = *basis.index_of(s);
    return build_interaction(basis, p).dense()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
  };
  CHECK(diag(4, 1, 1, {0b0001, 0b0001}) == doctest::Approx(0.3));
  CHECK(diag(4, 2, 2, {0b0101, 0b1010}) == 0.0);
  CHECK(diag(4, 2, 2, {0b0011, 0b0011}) == doctest::Approx(0.6));
  const CMatrix u = build_interaction(build_full_basis(4, 2, 2), p).dense();
  CHECK(max_abs(u - CMatrix(u.diagonal().asDiagonal())) == 0.0);
}

TEST_CASE("commutator with the position operator reproduces the current") {
  // With periodic boundaries the wrap-around bond carries -(L-1) instead of 1.
  ModelParams p = kParams;
  const auto full = build_full_basis(4, 2, 2);
  const oracle::FullSpace space(full);
  const CMatrix r = build_position(full, p).dense();
  CHECK(max_abs(r - space.position(p)) < 1e-14);
  for (double a_value : {0.0, 0.0731, -0.15}) {
    const CMatrix h = build_hopping(full, p, a_value).dense() + build_interaction(full, p).dense();
    const CMatrix lhs = kI * (h * r - r * h);
    const CMatrix j = build_current(full, p, a_value).dense();
    const CMatrix j_wrap = space.current(p, a_value, {3});
    CHECK(max_abs(lhs - (j - 4.0 * j_wrap)) < 1e-12);
    // Away from the wrap bond the identity is plain equality.
    CHECK(max_abs(lhs - j) > 1e-3);
  }
}

TEST_CASE("single-electron current eigenvalues") {
  ModelParams p = kParams;
  const auto ev = oracle::sorted_eigenvalues(build_current(build_full_basis(4, 1, 0), p, 0.0).dense());
  std::vector<double> expected;
  for (int q = 0; q < 4; ++q) expected.push_back(-2 * p.a * p.t0 * std::sin(2 * kPi * q / 4));
  std::sort(expected.begin(), expected.end());
  for (int i = 0; i < 4; ++i) CHECK(std::abs(ev[i] - expected[static_cast<std::size_t>(i)]) < 1e-14);
}

TEST_CASE("hopping and current commute at every vector potential") {
  for (int sites : {4, 6}) {
    ModelParams p = kParams;
    p.sites = sites;
    p.U = 0.0;
    const auto basis = sites == 4 ? build_full_basis(4, 2, 2) : build_sector_basis(6, 3, 3, 0, 1);
    const HubbardOperators ops(basis, p);
    for (double a_value : {0.0, 0.09, 0.194}) {
      const auto h = ops.hopping(a_value).matrix;
      const auto j = ops.current(a_value).matrix;
      const SparseMatrix c = h * j - j * h;
      double worst = 0.0;
      for (Eigen::Index k = 0; k < c.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(c, k); it; ++it) worst = std::max(worst, std::abs(it.value()));
      }
      CHECK(worst < 1e-12);
    }
  }
}

TEST_CASE("field-free ground state carries no current") {
  ModelParams p = kParams;
  const auto basis = build_full_basis(4, 2, 2);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(HubbardOperators(basis, p).hamiltonian(0.0).dense());
  const qhhg::CVector gs = es.eigenvectors().col(0);
  CHECK(std::abs(gs.dot(build_current(basis, p, 0.0).dense() * gs)) < 1e-15);
}

TEST_CASE("matrix-free application equals the assembled matrices") {
  const auto basis = build_sector_basis(6, 3, 3, 0, 1);
  ModelParams p = kParams;
  p.sites = 6;
  const HubbardOperators ops(basis, p);
  qhhg::CVector v = qhhg::CVector::Random(ops.dimension());
  qhhg::CVector out(ops.dimension());
  ops.apply_hamiltonian(0.12, v, out);
  CHECK((out - ops.hamiltonian(0.12).matrix * v).cwiseAbs().maxCoeff() < 1e-15);
  ops.apply_current(0.12, v, out);
  CHECK((out - ops.current(0.12).matrix * v).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(ops.spectral_bound() >= oracle::sorted_eigenvalues(ops.hamiltonian(0.12).dense()).cwiseAbs().maxCoeff());
}

TEST_CASE("Lanczos ground energy matches dense diagonalization") {
  ModelParams p = kParams;
  const auto basis = build_full_basis(4, 2, 2);
  const auto op = HubbardOperators(basis, p).hamiltonian(0.0);
  CHECK(ground_state_energy(op) == doctest::Approx(oracle::sorted_eigenvalues(op.dense())[0]).epsilon(1e-12));
  ModelParams free = p;
  free.U = 0.0;
  CHECK(ground_state_energy(HubbardOperators(basis, free).hamiltonian(0.0)) ==
        doctest::Approx(-4 * p.t0).epsilon(1e-12));
}

TEST_CASE("Mott gap at U=0 equals the Bloch-filling gap") {
  for (int sites : {4, 6, 8}) {
    ModelParams p = kParams;
    p.sites = sites;
    p.U = 0.0;
    const int h = sites / 2;
    const double expected = bloch_fill(sites, h + 1, p.t0) + bloch_fill(sites, h, p.t0) +
                            bloch_fill(sites, h - 1, p.t0) + bloch_fill(sites, h, p.t0) -
                            4.0 * bloch_fill(sites, h, p.t0);
    CHECK(std::abs(mott_gap(p) - expected) < 1e-12);
  }
}

TEST_CASE("Mott gap grows with U and stays non-negative") {
  ModelParams p = kParams;
  p.sites = 6;
  double previous = -1.0;
  for (double u_over_t0 : {0.0, 2.0, 5.0, 10.0}) {
    p.U = u_over_t0 * p.t0;
    const double gap = mott_gap(p);
    CHECK(gap >= -1e-12);
    CHECK(gap > previous);
    previous = gap;
  }
}

TEST_CASE("parameter validation") {
  ModelParams p = kParams;
  p.t0 = 0.0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p = kParams;
  p.U = -1.0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p = kParams;
  p.a = 0.0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  p = kParams;
  p.sites = 5;
  CHECK_THROWS_AS(mott_gap(p), ParameterError);
}
