#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "fermion_oracle.hpp"
#include "qhhg/electron_dynamics.hpp"
#include "qhhg/observables.hpp"
#include "qhhg/photonics.hpp"

using namespace qhhg;

namespace {

PulseParams short_pulse() {
  PulseParams pulse;
  pulse.n_cycles = 2;
  pulse.omega_L = 0.05;
  return pulse;
}

TransitionCurrentTable chain_table(double u_over_t0) {
  ModelParams p;
  p.sites = 4;
  p.U = u_over_t0 * p.t0;
  const auto sector = build_sector_basis(4, 2, 2, 0, 1);
  const HubbardOperators ops(sector, p);
  const auto eigs = diagonalize_field_free(ops);
  const PulseParams pulse = short_pulse();
  PropagationOptions options;
  options.substeps = 8;
  return compute_transition_currents(eigs, ops, pulse, time_grid(pulse, 0.5), options);
}

// Two channels with a constant off-diagonal current on a uniform grid.
TransitionCurrentTable constant_pair(Complex j01, double t_end, std::size_t points) {
  std::vector<double> times(points);
  for (std::size_t k = 0; k < points; ++k) times[k] = t_end * double(k) / double(points - 1);
  TransitionCurrentTable table(times, 2);
  for (std::size_t k = 0; k < points; ++k) {
    table.slice(k)(0, 1) = j01;
    table.slice(k)(1, 0) = std::conj(j01);
  }
  return table;
}

TransitionCurrentTable constant_diagonal(double j, double t_end, std::size_t points) {
  std::vector<double> times(points);
  for (std::size_t k = 0; k < points; ++k) times[k] = t_end * double(k) / double(points - 1);
  TransitionCurrentTable table(times, 1);
  for (std::size_t k = 0; k < points; ++k) table.slice(k)(0, 0) = j;
  return table;
}

}  // namespace

TEST_CASE("mode grid spacing and end points") {
  const auto modes = mode_grid(0.005, 0.1, 40.0, 0.1, 4e-8, 100);
  REQUIRE(modes.size() == 400);
  CHECK(modes.front().omega == doctest::Approx(0.1 * 0.005).epsilon(1e-15));
  CHECK(modes.back().omega == 40.0 * 0.005);
  CHECK(modes[49].omega == doctest::Approx(5.0 * 0.005).epsilon(1e-15));
  CHECK_THROWS_AS(mode_grid(0.005, 1.0, 0.5, 0.1, 4e-8, 100), ParameterError);
  CHECK_THROWS_AS((ModeConfig{0.0, 4e-8, 100}.validate()), ParameterError);
  CHECK_THROWS_AS((ModeConfig{1.0, 4e-8, 0}.validate()), ParameterError);
}

TEST_CASE("zero current leaves the vacuum") {
  TransitionCurrentTable table({0.0, 1.0, 2.0, 3.0}, 3);
  const auto s = integrate_mode(table, {0.4, 4e-8, 10}, {.initial_channel = 1});
  CHECK(std::abs(s.amplitudes(1, 0) - Complex(1.0, 0.0)) == 0.0);
  CHECK(s.amplitudes.squaredNorm() == 1.0);
  CHECK(s.highest_level == 0);
}

TEST_CASE("coherent amplitude of a constant current") {
  const double j = 0.013;
  const double t_end = 400.0;
  const auto table = constant_diagonal(j, t_end, 4001);
  const ModeConfig mode{0.05, 4e-8, 100};
  const auto d = table.diagonal_series(0);
  const auto beta = coherent_amplitude(table.times(), d, mode).beta;
  const Complex expected = -kI * mode.coupling() * j *
                           (std::polar(1.0, mode.omega * t_end) - 1.0) / (kI * mode.omega);
  CHECK(std::abs(beta - expected) < 1e-10 * std::abs(expected));

  const std::vector<double> zero(d.size(), 0.0);
  CHECK(coherent_amplitude(table.times(), zero, mode).beta == Complex{});

  // At an intermediate time the running integral stops there.
  const auto half = coherent_amplitude(table.times(), d, mode, 200.0).beta;
  const Complex expected_half = -kI * mode.coupling() * j *
                                (std::polar(1.0, mode.omega * 200.0) - 1.0) / (kI * mode.omega);
  CHECK(std::abs(half - expected_half) < 1e-10 * std::abs(expected_half));
}

TEST_CASE("diagonal current gives a coherent state in the equations of motion") {
  const auto table = chain_table(0.0);
  CHECK(table.max_off_diagonal() < 1e-10);
  const auto d = table.diagonal_series(0);
  for (double order : {1.0, 3.0, 4.0, 7.3}) {
    const ModeConfig mode{order * 0.05, 4e-8, 100};
    const auto state = integrate_mode(table, mode);
    const double expected = std::norm(coherent_amplitude(table.times(), d, mode).beta);
    const auto m = photon_moments(state);
    CHECK(std::abs(m.n - expected) < 1e-6 * expected);
    REQUIRE(mandel_q(m).has_value());
    CHECK(std::abs(*mandel_q(m)) < 1e-6);
    CHECK(std::abs(squeezing_db(m)) < 1e-6);
    CHECK(std::abs(state.norm() - 1.0) < 1e-8);
  }
}

TEST_CASE("strong diagonal drive still matches the coherent state") {
  const auto table = constant_diagonal(5.0, 100.0, 10001);
  const ModeConfig mode{0.3, 5e-2, 60};
  const auto state = integrate_mode(table, mode);
  const auto beta = coherent_amplitude(table.times(), table.diagonal_series(0), mode).beta;
  const auto m = photon_moments(state);
  CHECK(std::norm(beta) > 1.0);
  CHECK(m.n == doctest::Approx(std::norm(beta)).epsilon(1e-6));
  CHECK(std::abs(*mandel_q(m)) < 1e-6);
  // Schroedinger-picture <a> carries the free rotation.
  const Complex rotated = beta * std::polar(1.0, -mode.omega * 100.0);
  CHECK(std::abs(m.a - rotated) < 1e-6 * std::abs(beta));
}

TEST_CASE("two-channel constant current against a dense reference") {
  const Complex j01{0.03, -0.01};
  const double t_end = 20.0;
  const auto table = constant_pair(j01, t_end, 2001);
  const ModeConfig mode{1.0, 1.0, 3};
  const auto state = integrate_mode(table, mode);

  // Dense reference: psi = sum_m |m> (x) c^(m), H_I(t) = kappa J (x) X(t).
  CMatrix a = CMatrix::Zero(4, 4);
  for (int n = 1; n < 4; ++n) a(n - 1, n) = std::sqrt(double(n));
  CMatrix jm(2, 2);
  jm << 0.0, j01, std::conj(j01), 0.0;
  CVector psi = CVector::Zero(8);
  psi[0] = 1.0;
  const int steps = 40000;
  const double h = t_end / steps;
  for (int s = 0; s < steps; ++s) {
    const double t = (s + 0.5) * h;
    const CMatrix x = std::polar(1.0, -mode.omega * t) * a + std::polar(1.0, mode.omega * t) * a.adjoint();
    CMatrix hi(8, 8);
    for (int m = 0; m < 2; ++m) {
      for (int k = 0; k < 2; ++k) hi.block(4 * m, 4 * k, 4, 4) = mode.coupling() * jm(m, k) * x;
    }
    psi = oracle::expm_hermitian(hi, h) * psi;
  }
  double worst = 0.0;
  for (int m = 0; m < 2; ++m) {
    for (int n = 0; n < 4; ++n) worst = std::max(worst, std::abs(state.amplitudes(m, n) - psi[4 * m + n]));
  }
  CHECK(worst < 1e-6);
  CHECK(state.amplitudes.row(1).squaredNorm() > 1e-3);
}

TEST_CASE("off-diagonal population is second order in the coupling") {
  const auto table = chain_table(10.0);
  const ModeConfig weak{3.0 * 0.05, 4e-8, 100};
  const ModeConfig strong{3.0 * 0.05, 4e-7, 100};
  auto off = [&](const ModeConfig& mode) {
    const auto s = integrate_mode(table, mode);
    return s.amplitudes.bottomRows(s.amplitudes.rows() - 1).squaredNorm();
  };
  const double ratio = off(strong) / off(weak);
  CHECK(ratio == doctest::Approx(100.0).epsilon(1e-3));
}

TEST_CASE("perturbative path at U=0") {
  const auto table = chain_table(0.0);
  const auto d = table.diagonal_series(0);
  for (double order : {1.0, 5.0, 6.5}) {
    const ModeConfig mode{order * 0.05, 4e-8, 100};
    const auto s = perturbative_state(table, mode);
    const double n = number_moment(s, 1);
    const double expected = std::norm(coherent_amplitude(table.times(), d, mode).beta);
    CHECK(std::abs(n - expected) <= 1e-10 * expected);
    const auto q = mandel_q(s);
    REQUIRE(q.has_value());
    CHECK(*q != 0.0);
    CHECK(*q == doctest::Approx(-n).epsilon(1e-6));
  }
}

TEST_CASE("perturbative amplitudes match the equations of motion to leading order") {
  const auto table = chain_table(10.0);
  const ModeConfig mode{4.0 * 0.05, 4e-8, 100};
  const auto pert = perturbative_state(table, mode);
  const auto full = integrate_mode(table, mode);
  const double n_pert = number_moment(pert, 1);
  const double n_full = number_moment(full, 1);
  CHECK(std::abs(n_pert - n_full) < 1e-6 * n_full);
}

TEST_CASE("coupled-mode reference reduces to the single-mode integrator") {
  const auto table = chain_table(10.0);
  const ModeConfig mode{5.0 * 0.05, 4e-5, 6};
  const auto single = integrate_mode(table, mode);
  const auto coupled = integrate_coupled_modes(table, std::span(&mode, 1), 6);
  CHECK(coupled.number_moment(0, 1) == doctest::Approx(number_moment(single, 1)).epsilon(1e-10));

  // Two modes driven by a diagonal current factorize.
  const auto free_table = chain_table(0.0);
  const std::vector<ModeConfig> pair{{3.0 * 0.05, 4e-5, 6}, {5.0 * 0.05, 4e-5, 6}};
  const auto joint = integrate_coupled_modes(free_table, pair, 6);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto alone = integrate_mode(free_table, pair[k]);
    CHECK(joint.number_moment(k, 1) == doctest::Approx(number_moment(alone, 1)).epsilon(1e-8));
  }
  CHECK_THROWS_AS(integrate_coupled_modes(table, std::vector<ModeConfig>(4, mode), 2), ParameterError);
}

TEST_CASE("Fock tail stays empty at the default coupling") {
  const auto table = chain_table(10.0);
  const ModeConfig mode{3.0 * 0.05, 4e-8, 100};
  const auto s = integrate_mode(table, mode);
  CHECK(s.tail_population(15) < 1e-10);
  CHECK(s.highest_level < 15);
  ModeConfig wide = mode;
  wide.fock_cutoff = 200;
  const auto w = integrate_mode(table, wide);
  CHECK(std::abs(number_moment(w, 1) - number_moment(s, 1)) <= 1e-10 * number_moment(s, 1));
}

TEST_CASE("parallel mode integration matches serial") {
  const auto table = chain_table(10.0);
  const auto modes = mode_grid(0.05, 0.5, 3.0, 0.5, 4e-8, 100);
  const auto serial = integrate_modes(table, modes, 1);
  const auto parallel = integrate_modes(table, modes, 4);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) CHECK(serial[i].amplitudes == parallel[i].amplitudes);
}

TEST_CASE("mode record round trip") {
  const auto table = chain_table(10.0);
  const auto s = integrate_mode(table, {2.0 * 0.05, 4e-8, 100});
  const auto path = std::filesystem::temp_directory_path() / "qhhg_unit_mode.bin";
  write_mode_record(path, s);
  const auto back = read_mode_record(path);
  std::filesystem::remove(path);
  CHECK(back.mode.omega == s.mode.omega);
  CHECK(back.mode.g0 == s.mode.g0);
  CHECK(back.mode.fock_cutoff == 100);
  CHECK(back.time == s.time);
  CHECK(back.highest_level == s.highest_level);
  CHECK(back.max_norm_drift == s.max_norm_drift);
  CHECK(back.amplitudes == s.amplitudes);
  CHECK_THROWS(read_mode_record(path));
}
