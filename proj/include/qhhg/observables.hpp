#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qhhg/common.hpp"
#include "qhhg/photonics.hpp"

namespace qhhg {

/// Photon-number moments and ladder expectations of one mode, summed over
/// channels. `a` and `a2` are Schroedinger-picture values.
struct PhotonMoments {
  double norm = 0.0;
  double n = 0.0;
  double n2 = 0.0;
  double factorial2 = 0.0;  // <n(n-1)>
  Complex a;
  Complex a2;
};

PhotonMoments photon_moments(const ModeStateSet& state);

/// sum_m sum_n |c_n^(m)|^2 n^l.
double number_moment(const ModeStateSet& state, int power);

/// Variance of X(theta) = (a e^{-i theta} + a^dagger e^{i theta}) / 2.
double quadrature_variance(const ModeStateSet& state, double theta);

/// Mandel Q = <n(n-1)>/<n> - <n>; empty when <n> < 1e-300.
std::optional<double> mandel_q(const ModeStateSet& state);
std::optional<double> mandel_q(const PhotonMoments& moments);

/// Smallest quadrature variance over theta, in closed form.
double min_quadrature_variance(const PhotonMoments& moments);

/// eta = -10 log10(4 min_theta Var X(theta)) in dB.
double squeezing_db(const ModeStateSet& state);
double squeezing_db(const PhotonMoments& moments);
/// Same minimum searched on a uniform grid of theta in [0, pi).
double squeezing_db_grid(const ModeStateSet& state, int theta_samples);

enum class SpectrumKind { quantum, semiclassical, analytic_u0 };

std::string to_string(SpectrumKind kind);

struct SpectrumSeries {
  SpectrumKind kind = SpectrumKind::quantum;
  std::vector<double> omegas_over_wl;
  std::vector<double> values;
};

/// S(w) = w^3 <n> / (g0^2 (2 pi)^2 c^3).
double quantum_spectrum_value(double omega, double n_mean, double g0);
SpectrumSeries quantum_spectrum(std::span<const double> omegas, std::span<const double> n_mean,
                                double g0, double omega_laser,
                                SpectrumKind kind = SpectrumKind::quantum);

/// S_cl(w) = w^2 |j~(w)|^2 with j~(w) = int j(t) e^{iwt} dt. Not rescaled.
double semiclassical_spectrum_value(std::span<const double> times, std::span<const double> j_diag,
                                    double omega);
SpectrumSeries semiclassical_spectrum(std::span<const double> times,
                                      std::span<const double> j_diag,
                                      std::span<const double> omegas, double omega_laser);

/// 1 / ((2 pi)^2 c^3), the factor that puts S_cl on the scale of S.
double classical_to_quantum_scale();

enum class WindowMode { absolute, relative };

/// Mean of the samples whose abscissa lies in [center - h, center + h]; with
/// WindowMode::relative the halfwidth is h * center. Throws ParameterError if
/// no sample falls inside.
double window_average(std::span<const double> abscissa, std::span<const double> values,
                      double center, double halfwidth = 0.2,
                      WindowMode mode = WindowMode::absolute);

/// Running w^2 |int_0^t j e^{iwt'} dt'|^2 on the current's grid.
std::vector<double> time_resolved_occupation(std::span<const double> times,
                                             std::span<const double> j_diag, double omega);

}  // namespace qhhg
