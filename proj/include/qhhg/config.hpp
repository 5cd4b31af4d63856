#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "qhhg/common.hpp"
#include "qhhg/drive.hpp"
#include "qhhg/operators.hpp"

namespace qhhg {

enum class PathKind { full_eom, analytic_u0, perturbative };

std::string to_string(PathKind kind);
PathKind parse_path_kind(const std::string& text);

struct SectorSelection {
  std::optional<int> momentum = 0;
  std::optional<int> parity = 1;
  bool operator==(const SectorSelection&) const = default;
};

/// Mode frequencies in units of the laser frequency.
struct ModeGridConfig {
  double omega_min = 0.1;
  double omega_max = 40.0;
  double d_omega = 0.1;
  double g0 = 4e-8;
  int fock_cutoff = 100;
  bool operator==(const ModeGridConfig&) const = default;
};

struct NumericsConfig {
  double dt = 0.5;
  int substeps = 32;
  int krylov_dim = 4;
  /// Retained eigenstates; 0 keeps the whole sector.
  int channels = 0;
  /// Worker threads; 0 uses the available hardware parallelism.
  int workers = 0;
  bool operator==(const NumericsConfig&) const = default;
};

struct RunConfig {
  ModelParams model;
  PulseParams pulse;
  SectorSelection sector;
  ModeGridConfig modes;
  NumericsConfig numerics;
  PathKind path = PathKind::full_eom;
  std::string output = "qhhg_run";

  /// Throws ConfigError (line 0) on constraint violations.
  void validate() const;
  /// Sectioned key-value text that parses back to an equal config.
  std::string serialize() const;
  bool operator==(const RunConfig&) const = default;
};

/// Configuration problem; `line` is 0 when not tied to a line.
class ConfigError : public ParameterError {
 public:
  ConfigError(const std::string& message, int line = 0);
  int line() const { return line_; }

 private:
  int line_;
};

/// Parses the sectioned key-value format:
///
///   [model]   L, U_over_t0 (or U in a.u.), t0, a
///   [pulse]   A0, omega_L, n_cycles
///   [sector]  momentum (integer or none), parity (+1, -1 or none)
///   [modes]   omega_min, omega_max, d_omega (units of omega_L), g0, fock_cutoff
///   [numerics] dt, substeps, krylov_dim, channels, workers
///   [run]     path (full_eom | analytic_u0 | perturbative), output
///
/// L, the repulsion and path are required. '#' and ';' start comments.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config(const std::filesystem::path& path);

/// Output directory of a run. A relative `output` is placed under
/// $QHHG_OUTPUT_ROOT when that variable is set.
std::filesystem::path resolve_output_dir(const RunConfig& config);

}  // namespace qhhg
