#pragma once

#include <vector>

namespace qhhg {

/// Linearly polarized few-cycle pulse with a sin^2 envelope.
struct PulseParams {
  double A0 = 0.194;       // peak vector potential (a.u.)
  double omega_L = 0.005;  // carrier angular frequency (a.u.)
  int n_cycles = 10;

  double t_start() const { return 0.0; }
  double t_end() const;
  double field_amplitude() const { return A0 * omega_L; }
  void validate() const;
  bool operator==(const PulseParams&) const = default;
};

/// A(t) = A0 sin(w t + N pi) sin^2(w t / 2N) on [0, t_end]; exactly 0 outside.
double vector_potential(double t, const PulseParams& pulse);

/// floor(t_end/dt) + 1 points 0, dt, 2dt, ... with the last one moved to
/// t_end, so the final interval lies between dt and 2 dt.
std::vector<double> time_grid(const PulseParams& pulse, double dt);

/// Same construction for an arbitrary end time.
std::vector<double> time_grid(double t_end, double dt);

}  // namespace qhhg
