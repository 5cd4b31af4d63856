#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "qhhg/common.hpp"
#include "qhhg/current_table.hpp"

namespace qhhg {

/// One quantized field mode polarized along the chain.
struct ModeConfig {
  double omega = 0.0;  // angular frequency, a.u.
  double g0 = 4e-8;
  int fock_cutoff = 100;

  void validate() const;
  /// g0 / sqrt(omega), the prefactor of the light-matter coupling.
  double coupling() const { return g0 / std::sqrt(omega); }
};

/// Modes omega = k * step * omega_L for omega_min <= k*step <= omega_max.
std::vector<ModeConfig> mode_grid(double omega_laser, double omega_min_over_wl,
                                  double omega_max_over_wl, double step_over_wl, double g0,
                                  int fock_cutoff);

/// Photonic amplitudes c_n^{(m)} attached to every electronic channel m,
/// stored in the interaction picture (rows: channels, columns: photon number).
struct ModeStateSet {
  ModeConfig mode;
  double time = 0.0;
  CMatrix amplitudes;
  double max_norm_drift = 0.0;
  /// Highest Fock level that carried amplitude above 1e-30 during the run.
  int highest_level = 0;

  double norm() const { return amplitudes.squaredNorm(); }
  /// Population in Fock levels strictly above n, summed over channels.
  double tail_population(int n) const;
};

/// Vacuum on channel `initial`, nothing elsewhere.
ModeStateSet vacuum_state(const ModeConfig& mode, Eigen::Index channels,
                          Eigen::Index initial = 0);

/// Coherent state |beta> on a single channel, truncated at the cutoff.
ModeStateSet coherent_state(const ModeConfig& mode, Complex beta, double time = 0.0);

struct IntegrationOptions {
  Eigen::Index initial_channel = 0;
  double max_norm_drift = 1e-6;
  /// Fock levels whose amplitude stays below this in every channel are
  /// treated as empty; the active window grows as they fill.
  double negligible_amplitude = 1e-30;
};

/// Fourth-order Runge-Kutta integration of
///   dC/dt = -i (g0/sqrt(w)) J(t) C X(t)^T,  X(t) = e^{-iwt} a + e^{iwt} a^dagger
/// on the table's grid, with J linearly interpolated at the stage midpoint.
/// Throws NumericalError if the norm drifts by more than the threshold.
ModeStateSet integrate_mode(const TransitionCurrentTable& table, const ModeConfig& mode,
                            const IntegrationOptions& options = {});

/// Quadrature of f(t) e^{iwt} over a grid, using the rule that RK4 applies to
/// a linearly interpolated integrand:
///   per interval h: h/6 [f0 e0 + 2 (f0 + f1) e_mid + f1 e1].
/// Returns the running integral at every grid point.
std::vector<Complex> fourier_running_integral(std::span<const double> times,
                                              std::span<const Complex> values, double omega);
Complex fourier_integral(std::span<const double> times, std::span<const Complex> values,
                         double omega);
Complex fourier_integral(std::span<const double> times, std::span<const double> values,
                         double omega);

struct CoherentAmplitude {
  double omega = 0.0;
  Complex beta;
};

/// beta(t) = -i (g0/sqrt(w)) int_0^t e^{iwt'} j(t') dt' at the last grid point
/// not beyond t (t defaults to the end of the grid).
CoherentAmplitude coherent_amplitude(std::span<const double> times, std::span<const double> j_diag,
                                     const ModeConfig& mode);
CoherentAmplitude coherent_amplitude(std::span<const double> times, std::span<const double> j_diag,
                                     const ModeConfig& mode, double t);

/// First-order photon amplitudes: entry (m) of the result for mode k is
/// -i (g0/sqrt(w_k)) int e^{iw_k t} j_{m,i}(t) dt.
std::vector<CVector> perturbative_amplitudes(const TransitionCurrentTable& table,
                                             std::span<const ModeConfig> modes,
                                             Eigen::Index initial_channel = 0);

/// State with vacuum amplitude 1 on the initial channel and the first-order
/// one-photon amplitudes; deliberately not renormalized.
ModeStateSet perturbative_state(const TransitionCurrentTable& table, const ModeConfig& mode,
                                Eigen::Index initial_channel = 0);

/// Integrates every mode independently on `workers` threads (0 = hardware).
std::vector<ModeStateSet> integrate_modes(const TransitionCurrentTable& table,
                                          std::span<const ModeConfig> modes, int workers,
                                          const IntegrationOptions& options = {});

/// Binary record of a mode state: magic "QHHGMODE", u32 version, f64 omega,
/// g0, time, max_norm_drift, i32 fock_cutoff, i32 highest_level, u64
/// channels, u64 stored levels, then the amplitudes row-major (channel-major)
/// as (re, im) f64 pairs. Trailing Fock levels that are exactly zero in every
/// channel are not stored.
void write_mode_record(const std::filesystem::path& path, const ModeStateSet& state);
ModeStateSet read_mode_record(const std::filesystem::path& path);

/// Joint state of a few modes sharing the electronic channels, without the
/// mode-decoupling approximation. Amplitudes are indexed
/// [channel][n_1][n_2]...[n_K] with n_k in 0..cutoff, flattened row-major.
struct CoupledModeState {
  std::vector<ModeConfig> modes;
  int cutoff = 0;
  Eigen::Index channels = 0;
  CVector amplitudes;

  /// Reduced single-mode moment <n_k^l>.
  double number_moment(std::size_t mode, int power) const;
};

/// Reference integrator for at most three modes, same stepping as
/// integrate_mode. Intended for small tables only.
CoupledModeState integrate_coupled_modes(const TransitionCurrentTable& table,
                                         std::span<const ModeConfig> modes, int cutoff,
                                         Eigen::Index initial_channel = 0);

}  // namespace qhhg
