#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qhhg/config.hpp"
#include "qhhg/current_table.hpp"
#include "qhhg/electron_dynamics.hpp"
#include "qhhg/observables.hpp"

namespace qhhg {

/// Version string recorded in manifests and table fingerprints.
std::string library_version();

/// SHA-256 of a byte string or file, lowercase hex.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Electronic part of a run: the field-free eigenbasis of the selected
/// sector and the transition currents of the retained channels.
struct ElectronStage {
  std::string basis_id;
  EigenSet eigenstates;  // every eigenpair of the sector
  TransitionCurrentTable currents;
  PropagationReport report;
};

/// Number of channels the photonic path needs (1 for analytic_u0).
Eigen::Index retained_channels(const RunConfig& config, Eigen::Index sector_dimension);

/// Hash of every input that determines the current table.
std::uint64_t currents_fingerprint(const RunConfig& config, Eigen::Index channels);

/// Diagonalizes the selected sector. Half filling; an odd L puts the extra
/// electron in the up species.
EigenSet sector_eigenstates(const RunConfig& config, std::string* basis_id = nullptr);

ElectronStage run_electron_stage(const RunConfig& config, int workers);

/// Photon statistics of one mode after the pulse.
struct ModeResult {
  double omega = 0.0;  // a.u.
  PhotonMoments moments;
  std::optional<double> mandel_q;
  std::optional<double> eta_db;
  double s_quantum = 0.0;
  /// Semiclassical spectrum of j_00, scaled onto the quantum spectrum.
  double s_classical = 0.0;
  double norm_drift = 0.0;
  int highest_level = 0;
  /// Population above n = 15, summed over channels.
  double tail_population = 0.0;
};

using ModeStateSink = std::function<void(std::size_t index, const ModeStateSet& state)>;

/// Evaluates every mode of the configured grid with the configured path. The
/// sink, if given, sees each final state in grid order.
std::vector<ModeResult> evaluate_modes(const RunConfig& config,
                                       const TransitionCurrentTable& currents, int workers,
                                       const ModeStateSink& sink = {});

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct FileRecord {
  std::string path;  // relative to the run directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

/// Record of a run, written as manifest.json after every other output.
struct RunManifest {
  std::filesystem::path directory;
  std::string config_hash;
  std::string version;
  std::string status;  // "complete" or "failed"
  std::string failed_stage;
  std::string error;
  bool currents_reused = false;
  double electron_norm_drift = 0.0;
  double photon_norm_drift = 0.0;
  double hermiticity_defect = 0.0;
  std::vector<StageTiming> timings;
  std::vector<FileRecord> files;

  bool complete() const { return status == "complete"; }
  const FileRecord* find(const std::string& relative_path) const;
  std::string to_json_text() const;
  static RunManifest load(const std::filesystem::path& manifest_path);
};

struct PipelineOptions {
  /// Overrides numerics.workers when set.
  std::optional<int> workers;
  /// Overrides the resolved output directory when non-empty.
  std::filesystem::path output_dir;
  std::function<void(const std::string&)> log;
};

/// Raised by run_pipeline after the failure manifest has been written.
class StageError : public std::runtime_error {
 public:
  enum class Cause { parameter, numerical, other };

  StageError(std::string stage, const std::string& message, Cause cause = Cause::other)
      : std::runtime_error(stage + ": " + message), stage_(std::move(stage)), cause_(cause) {}
  const std::string& stage() const { return stage_; }
  Cause cause() const { return cause_; }

 private:
  std::string stage_;
  Cause cause_;
};

/// Runs basis, propagation, photonic integration and observables, writing
///   config.ini, eigenvalues.csv, landmarks.csv, currents.bin,
///   currents_selected.csv, modes/mode_NNNNN.bin, modes/summary.csv,
///   spectrum.csv, manifest.json.
/// An existing currents.bin with a matching fingerprint is reused.
RunManifest run_pipeline(const RunConfig& config, const PipelineOptions& options = {});

/// Writes figures/fig1..fig5 CSVs from a completed run and returns their paths.
/// A missing stage output raises StageError naming the stage.
std::vector<std::filesystem::path> export_figures_data(const std::filesystem::path& manifest_path);

/// Fixed-format number for CSV output.
std::string format_csv_number(double value);

}  // namespace qhhg
