#include "qhhg/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qhhg {

PhotonMoments photon_moments(const ModeStateSet& state) {
  const CMatrix& c = state.amplitudes;
  PhotonMoments m;
  Complex a_int{};
  Complex a2_int{};
  for (Eigen::Index n = 0; n < c.cols(); ++n) {
    const double p = c.col(n).squaredNorm();
    const auto nd = static_cast<double>(n);
    m.norm += p;
    m.n += nd * p;
    m.n2 += nd * nd * p;
    m.factorial2 += nd * (nd - 1.0) * p;
    if (n + 1 < c.cols()) a_int += std::sqrt(nd + 1.0) * c.col(n).dot(c.col(n + 1));
    if (n + 2 < c.cols()) {
      a2_int += std::sqrt((nd + 1.0) * (nd + 2.0)) * c.col(n).dot(c.col(n + 2));
    }
  }
  // a(t) = e^{-iwt} a in the interaction picture.
  const double phase = state.mode.omega * state.time;
  m.a = a_int * std::polar(1.0, -phase);
  m.a2 = a2_int * std::polar(1.0, -2.0 * phase);
  return m;
}

double number_moment(const ModeStateSet& state, int power) {
  if (power < 0) throw ParameterError("moment order must be non-negative");
  double total = 0.0;
  for (Eigen::Index n = 0; n < state.amplitudes.cols(); ++n) {
    total += state.amplitudes.col(n).squaredNorm() * std::pow(static_cast<double>(n), power);
  }
  return total;
}

double quadrature_variance(const ModeStateSet& state, double theta) {
  const PhotonMoments m = photon_moments(state);
  const Complex e = std::polar(1.0, -theta);
  const double mean = (m.a * e).real();
  const double second = 0.25 * (2.0 * (m.a2 * e * e).real() + 2.0 * m.n + m.norm);
  return second - mean * mean;
}

std::optional<double> mandel_q(const PhotonMoments& moments) {
  if (!(moments.n >= 1e-300)) return std::nullopt;
  return moments.factorial2 / moments.n - moments.n;
}

std::optional<double> mandel_q(const ModeStateSet& state) {
  return mandel_q(photon_moments(state));
}

double min_quadrature_variance(const PhotonMoments& m) {
  // Var X(theta) = 1/4 [norm + 2(n - |a|^2) + 2 Re((a2 - a^2) e^{-2i theta})].
  const double spread = m.n - std::norm(m.a);
  return 0.25 * (m.norm + 2.0 * spread - 2.0 * std::abs(m.a2 - m.a * m.a));
}

double squeezing_db(const PhotonMoments& m) {
  const double spread = m.n - std::norm(m.a);
  const double excess = (m.norm - 1.0) + 2.0 * spread - 2.0 * std::abs(m.a2 - m.a * m.a);
  return -10.0 * std::log1p(excess) / std::log(10.0);
}

double squeezing_db(const ModeStateSet& state) { return squeezing_db(photon_moments(state)); }

double squeezing_db_grid(const ModeStateSet& state, int theta_samples) {
  if (theta_samples < 1) throw ParameterError("need at least one theta sample");
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < theta_samples; ++k) {
    best = std::min(best, quadrature_variance(state, kPi * k / theta_samples));
  }
  return -10.0 * std::log10(4.0 * best);
}

std::string to_string(SpectrumKind kind) {
  switch (kind) {
    case SpectrumKind::quantum: return "quantum";
    case SpectrumKind::semiclassical: return "semiclassical";
    case SpectrumKind::analytic_u0: return "analytic_u0";
  }
  return "unknown";
}

double classical_to_quantum_scale() {
  const double c = kSpeedOfLight;
  return 1.0 / (4.0 * kPi * kPi * c * c * c);
}

double quantum_spectrum_value(double omega, double n_mean, double g0) {
  return omega * omega * omega * n_mean / (g0 * g0) * classical_to_quantum_scale();
}

SpectrumSeries quantum_spectrum(std::span<const double> omegas, std::span<const double> n_mean,
                                double g0, double omega_laser, SpectrumKind kind) {
  if (omegas.size() != n_mean.size()) throw ParameterError("spectrum inputs differ in length");
  if (!(g0 > 0.0)) throw ParameterError("coupling g0 must be positive");
  SpectrumSeries s;
  s.kind = kind;
  for (std::size_t i = 0; i < omegas.size(); ++i) {
    s.omegas_over_wl.push_back(omegas[i] / omega_laser);
    s.values.push_back(quantum_spectrum_value(omegas[i], n_mean[i], g0));
  }
  return s;
}

double semiclassical_spectrum_value(std::span<const double> times, std::span<const double> j_diag,
                                    double omega) {
  return omega * omega * std::norm(fourier_integral(times, j_diag, omega));
}

SpectrumSeries semiclassical_spectrum(std::span<const double> times,
                                      std::span<const double> j_diag,
                                      std::span<const double> omegas, double omega_laser) {
  SpectrumSeries s;
  s.kind = SpectrumKind::semiclassical;
  for (double w : omegas) {
    s.omegas_over_wl.push_back(w / omega_laser);
    s.values.push_back(semiclassical_spectrum_value(times, j_diag, w));
  }
  return s;
}

double window_average(std::span<const double> abscissa, std::span<const double> values,
                      double center, double halfwidth, WindowMode mode) {
  if (abscissa.size() != values.size()) throw ParameterError("window inputs differ in length");
  if (!(halfwidth >= 0.0)) throw ParameterError("window halfwidth must be non-negative");
  const double h = mode == WindowMode::relative ? halfwidth * std::abs(center) : halfwidth;
  // Small slack so grid points built by multiplication still land inside.
  const double slack = 1e-9 * std::max(1.0, std::abs(center));
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < abscissa.size(); ++i) {
    if (std::abs(abscissa[i] - center) <= h + slack) {
      sum += values[i];
      ++count;
    }
  }
  if (count == 0) throw ParameterError("empty averaging window around " + std::to_string(center));
  return sum / static_cast<double>(count);
}

std::vector<double> time_resolved_occupation(std::span<const double> times,
                                             std::span<const double> j_diag, double omega) {
  std::vector<Complex> values(j_diag.begin(), j_diag.end());
  const auto running = fourier_running_integral(times, values, omega);
  std::vector<double> out(running.size());
  for (std::size_t k = 0; k < running.size(); ++k) out[k] = omega * omega * std::norm(running[k]);
  return out;
}

}  // namespace qhhg
