#include "qhhg/drive.hpp"

#include <cmath>

#include "qhhg/common.hpp"

namespace qhhg {

double PulseParams::t_end() const { return 2.0 * kPi * n_cycles / omega_L; }

void PulseParams::validate() const {
  if (!(A0 >= 0.0)) throw ParameterError("A0 must be non-negative");
  if (!(omega_L > 0.0)) throw ParameterError("omega_L must be positive");
  if (n_cycles < 1) throw ParameterError("n_cycles must be at least 1");
}

double vector_potential(double t, const PulseParams& pulse) {
  if (t < pulse.t_start() || t > pulse.t_end()) return 0.0;
  const double envelope = std::sin(pulse.omega_L * t / (2.0 * pulse.n_cycles));
  return pulse.A0 * std::sin(pulse.omega_L * t + pulse.n_cycles * kPi) * envelope * envelope;
}

std::vector<double> time_grid(double t_end, double dt) {
  if (!(dt > 0.0)) throw ParameterError("time step must be positive");
  if (!(t_end > 0.0)) throw ParameterError("grid end time must be positive");
  if (dt >= t_end) throw ParameterError("time step must be shorter than the pulse");
  const auto intervals = static_cast<std::size_t>(std::floor(t_end / dt * (1.0 + 1e-14)));
  std::vector<double> grid;
  grid.reserve(intervals + 1);
  for (std::size_t k = 0; k < intervals; ++k) grid.push_back(static_cast<double>(k) * dt);
  grid.push_back(t_end);
  return grid;
}

std::vector<double> time_grid(const PulseParams& pulse, double dt) {
  pulse.validate();
  return time_grid(pulse.t_end(), dt);
}

}  // namespace qhhg
