#include <cmath>
#include <vector>

#include "doctest.h"
#include "qhhg/drive.hpp"
#include "qhhg/observables.hpp"

using namespace qhhg;

namespace {

const ModeConfig kMode{0.1, 4e-8, 100};

ModeStateSet fock(int n, int cutoff = 10) {
  ModeStateSet s;
  s.mode = {0.1, 4e-8, cutoff};
  s.amplitudes = CMatrix::Zero(1, cutoff + 1);
  s.amplitudes(0, n) = 1.0;
  return s;
}

ModeStateSet squeezed_vacuum(double r, int cutoff) {
  ModeStateSet s;
  s.mode = {0.1, 4e-8, cutoff};
  s.amplitudes = CMatrix::Zero(1, cutoff + 1);
  // c_{2k} = (-tanh r)^k sqrt((2k)!) / (2^k k!) / sqrt(cosh r)
  double c = 1.0 / std::sqrt(std::cosh(r));
  for (int k = 0; 2 * k <= cutoff; ++k) {
    if (k > 0) c *= -std::tanh(r) * std::sqrt((2.0 * k - 1.0) * (2.0 * k)) / (2.0 * k);
    s.amplitudes(0, 2 * k) = c;
  }
  return s;
}

}  // namespace

TEST_CASE("number moments of simple states") {
  const auto vac = fock(0);
  for (int l = 1; l <= 4; ++l) CHECK(number_moment(vac, l) == 0.0);
  const auto one = fock(1);
  for (int l = 1; l <= 4; ++l) CHECK(number_moment(one, l) == 1.0);

  ModeStateSet mix;
  mix.mode = kMode;
  mix.amplitudes = CMatrix::Zero(2, 3);
  mix.amplitudes(0, 0) = std::sqrt(0.75);
  mix.amplitudes(1, 1) = 0.5;
  CHECK(number_moment(mix, 1) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(number_moment(mix, 2) == doctest::Approx(0.25).epsilon(1e-15));
  // The two channels are orthogonal, so <a> vanishes.
  CHECK(std::abs(photon_moments(mix).a) == 0.0);
}

TEST_CASE("quadrature variances") {
  const auto beta = Complex(0.7, -1.2);
  const auto coherent = coherent_state(kMode, beta, 37.0);
  for (double theta : {0.0, 0.4, 1.3, 2.9}) {
    CHECK(quadrature_variance(fock(0), theta) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(quadrature_variance(coherent, theta) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(quadrature_variance(fock(1), theta) == doctest::Approx(0.75).epsilon(1e-14));
  }
}

TEST_CASE("Mandel Q") {
  const auto coherent = coherent_state(kMode, Complex(1.5, 0.5));
  CHECK(std::abs(*mandel_q(coherent)) < 1e-12);
  CHECK(*mandel_q(fock(1)) == doctest::Approx(-1.0));
  CHECK(*mandel_q(fock(3)) == doctest::Approx(-1.0));

  const double p = 0.3;
  ModeStateSet s = fock(0);
  s.amplitudes(0, 0) = std::sqrt(1 - p);
  s.amplitudes(0, 1) = std::sqrt(p);
  CHECK(*mandel_q(s) == doctest::Approx(-p).epsilon(1e-14));

  CHECK_FALSE(mandel_q(fock(0)).has_value());
  ModeStateSet tiny = fock(0);
  tiny.amplitudes(0, 1) = 1e-151;
  CHECK_FALSE(mandel_q(tiny).has_value());
  tiny.amplitudes(0, 1) = 1e-140;
  CHECK(mandel_q(tiny).has_value());
}

TEST_CASE("squeezing") {
  CHECK(std::abs(squeezing_db(fock(0))) < 1e-14);
  CHECK(std::abs(squeezing_db(coherent_state(kMode, Complex(-0.4, 2.0), 5.0))) < 1e-10);
  const auto sq = squeezed_vacuum(std::log(2.0) / 2.0, 100);
  CHECK(squeezing_db(sq) == doctest::Approx(10.0 * std::log10(2.0)).epsilon(1e-10));
  CHECK(squeezing_db(fock(1)) < 0.0);
}

TEST_CASE("closed-form variance minimum agrees with a theta grid") {
  std::vector<ModeStateSet> states{fock(2), squeezed_vacuum(0.3, 60),
                                   coherent_state(kMode, Complex(0.2, 0.9), 3.0)};
  ModeStateSet mixed;
  mixed.mode = kMode;
  mixed.time = 11.0;
  mixed.amplitudes = CMatrix::Zero(2, 6);
  mixed.amplitudes(0, 0) = 0.8;
  mixed.amplitudes(0, 2) = Complex(0.3, 0.2);
  mixed.amplitudes(1, 1) = 0.4;
  mixed.amplitudes(1, 3) = Complex(0.0, -0.2);
  mixed.amplitudes /= mixed.amplitudes.norm();
  states.push_back(mixed);
  for (const auto& s : states) {
    const double closed = min_quadrature_variance(photon_moments(s));
    // 1024-point scan, then golden-section refinement inside the best cell.
    int best = 0;
    double grid = 1e300;
    for (int i = 0; i < 1024; ++i) {
      const double v = quadrature_variance(s, kPi * i / 1024);
      if (v < grid) {
        grid = v;
        best = i;
      }
    }
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = kPi * (best - 1) / 1024;
    double hi = kPi * (best + 1) / 1024;
    for (int it = 0; it < 60; ++it) {
      const double m1 = hi - ratio * (hi - lo);
      const double m2 = lo + ratio * (hi - lo);
      if (quadrature_variance(s, m1) < quadrature_variance(s, m2)) {
        hi = m2;
      } else {
        lo = m1;
      }
    }
    const double refined = std::min(grid, quadrature_variance(s, 0.5 * (lo + hi)));
    CHECK(std::abs(closed - refined) < 1e-9);
    CHECK(closed <= grid + 1e-15);
    // The bare scan misses the minimum by at most the curvature term.
    const double amplitude = 0.5 * std::abs(photon_moments(s).a2 - photon_moments(s).a * photon_moments(s).a);
    CHECK(grid - closed <= 2.0 * amplitude * std::pow(kPi / 2048.0, 2) * 4.0 + 1e-15);
    CHECK(squeezing_db_grid(s, 1024) <= squeezing_db(s) + 1e-12);
    CHECK(squeezing_db(s) - squeezing_db_grid(s, 1024) < 1e-4);
  }
}

TEST_CASE("quantum spectrum scale") {
  const double w = 0.15;
  const double g0 = 4e-8;
  const double c = kSpeedOfLight;
  CHECK(quantum_spectrum_value(w, 2e-15, g0) ==
        doctest::Approx(w * w * w * 2e-15 / (g0 * g0 * 4 * kPi * kPi * c * c * c)).epsilon(1e-14));
  CHECK(classical_to_quantum_scale() ==
        doctest::Approx(1.0 / (4 * kPi * kPi * c * c * c)).epsilon(1e-15));

  const std::vector<double> omegas{0.005, 0.01};
  const std::vector<double> zeros{0.0, 0.0};
  const auto s = quantum_spectrum(omegas, zeros, g0, 0.005);
  CHECK(s.values == zeros);
  CHECK(s.omegas_over_wl[1] == doctest::Approx(2.0));
  CHECK(to_string(s.kind) == "quantum");
}

TEST_CASE("semiclassical spectrum of a single-frequency current peaks at that frequency") {
  const PulseParams pulse;
  const auto times = time_grid(pulse, 2.0);
  std::vector<double> j(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) j[k] = std::sin(5.0 * pulse.omega_L * times[k]);
  std::vector<double> omegas;
  for (int i = 1; i <= 100; ++i) omegas.push_back(0.1 * i * pulse.omega_L);
  const auto s = semiclassical_spectrum(times, j, omegas, pulse.omega_L);
  std::size_t best = 0;
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    CHECK(s.values[i] >= 0.0);
    if (s.values[i] > s.values[best]) best = i;
  }
  CHECK(s.omegas_over_wl[best] == doctest::Approx(5.0));

  const std::vector<double> zero(times.size(), 0.0);
  CHECK(semiclassical_spectrum_value(times, zero, 0.02) == 0.0);
}

TEST_CASE("U=0 quantum spectrum does not depend on g0") {
  const PulseParams pulse;
  const auto times = time_grid(pulse, 1.0);
  std::vector<double> j(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    j[k] = 1e-3 * std::sin(3.0 * pulse.omega_L * times[k]) * vector_potential(times[k], pulse);
  }
  for (double order : {1.0, 3.0, 4.5}) {
    const double w = order * pulse.omega_L;
    std::vector<double> s;
    for (double g0 : {4e-9, 4e-8, 8e-8}) {
      const ModeConfig mode{w, g0, 100};
      const auto state = coherent_state(mode, coherent_amplitude(times, j, mode).beta, times.back());
      s.push_back(quantum_spectrum_value(w, number_moment(state, 1), g0));
    }
    CHECK(std::abs(s[1] - s[0]) < 1e-10 * s[0]);
    CHECK(std::abs(s[2] - s[0]) < 1e-10 * s[0]);
    const double classical = semiclassical_spectrum_value(times, j, w) * classical_to_quantum_scale();
    CHECK(std::abs(s[1] - classical) < 1e-10 * classical);
  }
}

TEST_CASE("window averages") {
  std::vector<double> x;
  for (int i = 1; i <= 50; ++i) x.push_back(0.1 * i);
  const std::vector<double> constant(x.size(), 3.5);
  CHECK(window_average(x, constant, 2.0) == doctest::Approx(3.5));

  std::vector<double> ramp;
  for (double v : x) ramp.push_back(2.0 * v + 1.0);
  CHECK(window_average(x, ramp, 2.5) == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(window_average(x, ramp, 2.5, 0.05) == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(window_average(x, ramp, 2.0, 0.1, WindowMode::relative) == doctest::Approx(5.0).epsilon(1e-12));
  CHECK_THROWS_AS(window_average(x, ramp, 10.0, 0.2), ParameterError);
  CHECK_THROWS_AS(window_average(x, ramp, 2.55, 0.01), ParameterError);
}

TEST_CASE("time-resolved occupation") {
  const PulseParams pulse;
  const auto times = time_grid(pulse, 1.0);
  std::vector<double> j(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    j[k] = std::sin(3.0 * pulse.omega_L * times[k]) * vector_potential(times[k], pulse);
  }
  const double w = 4.0 * pulse.omega_L;
  const auto occ = time_resolved_occupation(times, j, w);
  REQUIRE(occ.size() == times.size());
  CHECK(occ.front() == 0.0);
  CHECK(occ[occ.size() / 2] > 0.0);
  CHECK(occ.back() == doctest::Approx(semiclassical_spectrum_value(times, j, w)).epsilon(1e-12));
}
