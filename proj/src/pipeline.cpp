#include "qhhg/pipeline.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include "io_util.hpp"
#include "json.hpp"
#include "qhhg/photonics.hpp"

#ifndef QHHG_VERSION
#define QHHG_VERSION "0.0.0"
#endif

namespace qhhg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kTailLevel = 15;
constexpr int kSelectedCurrents = 4;

std::string to_hex(const unsigned char* data, unsigned int size) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * size);
  for (unsigned int i = 0; i < size; ++i) {
    out.push_back(digits[data[i] >> 4]);
    out.push_back(digits[data[i] & 0xF]);
  }
  return out;
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
      throw std::runtime_error("SHA-256 initialization failed");
    }
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(const char* data, std::size_t size) { EVP_DigestUpdate(ctx_, data, size); }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int size = 0;
    EVP_DigestFinal_ex(ctx_, digest.data(), &size);
    return to_hex(digest.data(), size);
  }

 private:
  EVP_MD_CTX* ctx_;
};

std::string exact(double v) {
  std::array<char, 64> buf{};
  const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), r.ptr);
}

int resolve_workers(const RunConfig& config, const PipelineOptions& options) {
  const int requested = options.workers.value_or(config.numerics.workers);
  if (requested > 0) return requested;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::string csv_optional(const std::optional<double>& v) {
  return v ? format_csv_number(*v) : std::string("NA");
}

PropagationOptions propagation_options(const RunConfig& config, int workers) {
  PropagationOptions p;
  p.krylov_dim = config.numerics.krylov_dim;
  p.substeps = config.numerics.substeps;
  p.workers = workers;
  return p;
}

std::string eigenvalues_csv(const EigenSet& eigs, double omega_laser) {
  std::string out = "index,energy_au,energy_over_wL,excitation_over_wL\n";
  const double e0 = eigs.count() ? eigs.energies[0] : 0.0;
  for (Eigen::Index i = 0; i < eigs.count(); ++i) {
    const double e = eigs.energies[i];
    out += std::to_string(i) + "," + format_csv_number(e) + "," +
           format_csv_number(e / omega_laser) + "," + format_csv_number((e - e0) / omega_laser) +
           "\n";
  }
  return out;
}

std::string landmarks_csv(const RunConfig& config, const EigenSet& eigs) {
  const double wl = config.pulse.omega_L;
  std::optional<double> gap;
  if (config.model.sites % 2 == 0 && config.model.sites >= 2) gap = mott_gap(config.model);
  const double bandwidth = 4.0 * config.model.t0;
  const double e0 = eigs.energies[0];
  std::string out = "name,value_au,value_over_wL\n";
  out += "ground_energy," + format_csv_number(e0) + "," + format_csv_number(e0 / wl) + "\n";
  out += "bandwidth_4t0," + format_csv_number(bandwidth) + "," +
         format_csv_number(bandwidth / wl) + "\n";
  out += "mott_gap," + csv_optional(gap) + "," +
         csv_optional(gap ? std::optional<double>(*gap / wl) : std::nullopt) + "\n";
  return out;
}

// j_00 plus the off-diagonal currents j_0m with the largest peak magnitude.
std::vector<Eigen::Index> strongest_channels(const TransitionCurrentTable& table, int count) {
  std::vector<std::pair<double, Eigen::Index>> peaks;
  for (Eigen::Index m = 1; m < table.channels(); ++m) {
    double peak = 0.0;
    for (const Complex& v : table.element_series(0, m)) peak = std::max(peak, std::abs(v));
    peaks.emplace_back(peak, m);
  }
  std::stable_sort(peaks.begin(), peaks.end(),
                   [](const auto& x, const auto& y) { return x.first > y.first; });
  std::vector<Eigen::Index> out;
  for (int i = 0; i < count && i < static_cast<int>(peaks.size()); ++i) out.push_back(peaks[i].second);
  return out;
}

std::string selected_currents_csv(const TransitionCurrentTable& table, const PulseParams& pulse) {
  const auto channels = strongest_channels(table, kSelectedCurrents);
  std::string out = "time_au,vector_potential,j_0_0";
  for (Eigen::Index m : channels) {
    out += ",j_0_" + std::to_string(m) + "_re,j_0_" + std::to_string(m) + "_im";
  }
  out += "\n";
  const auto j00 = table.diagonal_series(0);
  std::vector<std::vector<Complex>> series;
  for (Eigen::Index m : channels) series.push_back(table.element_series(0, m));
  for (std::size_t k = 0; k < table.time_count(); ++k) {
    const double t = table.times()[k];
    out += format_csv_number(t) + "," + format_csv_number(vector_potential(t, pulse)) + "," +
           format_csv_number(j00[k]);
    for (const auto& s : series) {
      out += "," + format_csv_number(s[k].real()) + "," + format_csv_number(s[k].imag());
    }
    out += "\n";
  }
  return out;
}

std::string mode_summary_csv(const std::vector<ModeResult>& results, double omega_laser) {
  std::string out =
      "omega_over_wL,norm,n_mean,n2_mean,factorial2,a_re,a_im,a2_re,a2_im,Q,eta_dB,norm_drift,"
      "highest_level,tail_above_15\n";
  for (const auto& r : results) {
    const auto& m = r.moments;
    out += format_csv_number(r.omega / omega_laser) + "," + format_csv_number(m.norm) + "," +
           format_csv_number(m.n) + "," + format_csv_number(m.n2) + "," +
           format_csv_number(m.factorial2) + "," + format_csv_number(m.a.real()) + "," +
           format_csv_number(m.a.imag()) + "," + format_csv_number(m.a2.real()) + "," +
           format_csv_number(m.a2.imag()) + "," + csv_optional(r.mandel_q) + "," +
           csv_optional(r.eta_db) + "," + format_csv_number(r.norm_drift) + "," +
           std::to_string(r.highest_level) + "," + format_csv_number(r.tail_population) + "\n";
  }
  return out;
}

std::string spectrum_csv(const std::vector<ModeResult>& results, double omega_laser) {
  std::string out = "omega_over_wL,S_quantum,S_classical,Q,eta_dB,n_mean,n2_mean\n";
  for (const auto& r : results) {
    out += format_csv_number(r.omega / omega_laser) + "," + format_csv_number(r.s_quantum) + "," +
           format_csv_number(r.s_classical) + "," + csv_optional(r.mandel_q) + "," +
           csv_optional(r.eta_db) + "," + format_csv_number(r.moments.n) + "," +
           format_csv_number(r.moments.n2) + "\n";
  }
  return out;
}

StageError::Cause classify(const std::exception& e) {
  if (dynamic_cast<const NumericalError*>(&e)) return StageError::Cause::numerical;
  if (dynamic_cast<const ParameterError*>(&e)) return StageError::Cause::parameter;
  return StageError::Cause::other;
}

}  // namespace

std::string library_version() { return QHHG_VERSION; }

std::string format_csv_number(double value) {
  if (!std::isfinite(value)) return "NA";
  if (value == 0.0) value = 0.0;  // no "-0"
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.10e", value);
  return buf.data();
}

std::string sha256_hex(const std::string& bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  Sha256 h;
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

Eigen::Index retained_channels(const RunConfig& config, Eigen::Index sector_dimension) {
  if (config.path == PathKind::analytic_u0) return 1;
  if (config.numerics.channels > 0) {
    return std::min<Eigen::Index>(config.numerics.channels, sector_dimension);
  }
  return sector_dimension;
}

std::uint64_t currents_fingerprint(const RunConfig& config, Eigen::Index channels) {
  const auto& m = config.model;
  const auto& p = config.pulse;
  const auto& n = config.numerics;
  auto opt = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string("none"); };
  std::ostringstream key;
  key << library_version() << "|L=" << m.sites << "|t0=" << exact(m.t0) << "|U=" << exact(m.U)
      << "|a=" << exact(m.a) << "|A0=" << exact(p.A0) << "|wL=" << exact(p.omega_L)
      << "|N=" << p.n_cycles << "|k=" << opt(config.sector.momentum)
      << "|p=" << opt(config.sector.parity) << "|dt=" << exact(n.dt) << "|sub=" << n.substeps
      << "|kry=" << n.krylov_dim << "|M=" << channels;
  // FNV-1a, 64 bit.
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : key.str()) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

EigenSet sector_eigenstates(const RunConfig& config, std::string* basis_id) {
  const int sites = config.model.sites;
  const int n_up = (sites + 1) / 2;
  const int n_down = sites / 2;
  const SymmetrySector symmetry{config.sector.momentum, config.sector.parity};
  const SectorBasis basis = symmetry.projected()
                                ? SectorBasis::sector(sites, n_up, n_down, symmetry)
                                : SectorBasis::full(sites, n_up, n_down);
  if (basis.dimension() == 0) throw ParameterError("selected sector " + basis.id() + " is empty");
  if (basis_id) *basis_id = basis.id();
  return diagonalize_field_free(HubbardOperators(basis, config.model));
}

ElectronStage run_electron_stage(const RunConfig& config, int workers) {
  const int sites = config.model.sites;
  const SymmetrySector symmetry{config.sector.momentum, config.sector.parity};
  const SectorBasis basis = symmetry.projected()
                                ? SectorBasis::sector(sites, (sites + 1) / 2, sites / 2, symmetry)
                                : SectorBasis::full(sites, (sites + 1) / 2, sites / 2);
  if (basis.dimension() == 0) throw ParameterError("selected sector " + basis.id() + " is empty");
  const HubbardOperators ops(basis, config.model);
  ElectronStage stage;
  stage.basis_id = basis.id();
  stage.eigenstates = diagonalize_field_free(ops);
  const Eigen::Index m = retained_channels(config, stage.eigenstates.count());
  const auto grid = time_grid(config.pulse, config.numerics.dt);
  stage.currents =
      compute_transition_currents(stage.eigenstates.lowest(m), ops, config.pulse, grid,
                                  propagation_options(config, workers), &stage.report);
  stage.currents.header = {sites, config.model.U / config.model.t0, config.numerics.dt,
                           config.pulse.t_end(), currents_fingerprint(config, m)};
  return stage;
}

std::vector<ModeResult> evaluate_modes(const RunConfig& config,
                                       const TransitionCurrentTable& currents, int workers,
                                       const ModeStateSink& sink) {
  const auto& g = config.modes;
  const auto modes = mode_grid(config.pulse.omega_L, g.omega_min, g.omega_max, g.d_omega, g.g0,
                               g.fock_cutoff);
  const auto& times = currents.times();
  const auto j00 = currents.diagonal_series(0);
  const double t_end = times.empty() ? 0.0 : times.back();

  std::vector<ModeStateSet> states;
  switch (config.path) {
    case PathKind::full_eom:
      states = integrate_modes(currents, modes, workers);
      break;
    case PathKind::perturbative:
      for (const auto& mode : modes) states.push_back(perturbative_state(currents, mode));
      break;
    case PathKind::analytic_u0:
      for (const auto& mode : modes) {
        const auto beta = coherent_amplitude(times, j00, mode);
        states.push_back(coherent_state(mode, beta.beta, t_end));
      }
      break;
  }

  const double scale = classical_to_quantum_scale();
  std::vector<ModeResult> results;
  results.reserve(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    const ModeStateSet& s = states[i];
    if (sink) sink(i, s);
    ModeResult r;
    r.omega = s.mode.omega;
    r.moments = photon_moments(s);
    r.mandel_q = mandel_q(r.moments);
    const double eta = squeezing_db(r.moments);
    if (std::isfinite(eta)) r.eta_db = eta;
    r.s_quantum = quantum_spectrum_value(r.omega, r.moments.n, s.mode.g0);
    r.s_classical = scale * semiclassical_spectrum_value(times, j00, r.omega);
    r.norm_drift = s.max_norm_drift;
    r.highest_level = s.highest_level;
    r.tail_population = s.tail_population(kTailLevel);
    results.push_back(r);
  }
  return results;
}

const FileRecord* RunManifest::find(const std::string& relative_path) const {
  for (const auto& f : files) {
    if (f.path == relative_path) return &f;
  }
  return nullptr;
}

std::string RunManifest::to_json_text() const {
  json j;
  j["config_hash"] = config_hash;
  j["version"] = version;
  j["status"] = status;
  if (!complete()) j["failure"] = {{"stage", failed_stage}, {"error", error}};
  j["currents_reused"] = currents_reused;
  j["diagnostics"] = {{"electron_norm_drift", electron_norm_drift},
                      {"photon_norm_drift", photon_norm_drift},
                      {"hermiticity_defect", hermiticity_defect}};
  j["timings"] = json::array();
  for (const auto& t : timings) j["timings"].push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  j["files"] = json::array();
  for (const auto& f : files) {
    j["files"].push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  }
  return j.dump(2) + "\n";
}

RunManifest RunManifest::load(const fs::path& manifest_path) {
  json j;
  try {
    j = json::parse(detail::read_text(manifest_path));
  } catch (const json::exception& e) {
    throw ParameterError("manifest " + manifest_path.string() + " is not valid JSON: " + e.what());
  }
  RunManifest m;
  m.directory = manifest_path.parent_path();
  try {
    m.config_hash = j.at("config_hash").get<std::string>();
    m.version = j.at("version").get<std::string>();
    m.status = j.at("status").get<std::string>();
    if (j.contains("failure")) {
      m.failed_stage = j["failure"].at("stage").get<std::string>();
      m.error = j["failure"].at("error").get<std::string>();
    }
    m.currents_reused = j.value("currents_reused", false);
    if (j.contains("diagnostics")) {
      const auto& d = j["diagnostics"];
      m.electron_norm_drift = d.value("electron_norm_drift", 0.0);
      m.photon_norm_drift = d.value("photon_norm_drift", 0.0);
      m.hermiticity_defect = d.value("hermiticity_defect", 0.0);
    }
    for (const auto& t : j.at("timings")) {
      m.timings.push_back({t.at("stage").get<std::string>(), t.at("seconds").get<double>()});
    }
    for (const auto& f : j.at("files")) {
      m.files.push_back({f.at("path").get<std::string>(), f.at("sha256").get<std::string>(),
                         f.at("bytes").get<std::uintmax_t>()});
    }
  } catch (const json::exception& e) {
    throw ParameterError("manifest " + manifest_path.string() + " is malformed: " + e.what());
  }
  return m;
}

RunManifest run_pipeline(const RunConfig& config, const PipelineOptions& options) {
  config.validate();
  const fs::path dir = options.output_dir.empty() ? resolve_output_dir(config) : options.output_dir;
  const int workers = resolve_workers(config, options);
  auto log = [&](const std::string& msg) {
    if (options.log) options.log(msg);
  };
  fs::create_directories(dir / "modes");

  RunManifest manifest;
  manifest.directory = dir;
  manifest.version = library_version();
  const std::string config_text = config.serialize();
  manifest.config_hash = sha256_hex(config_text);
  // A stale manifest must not vouch for outputs that are about to change.
  fs::remove(dir / "manifest.json");

  std::vector<std::string> written;
  auto write = [&](const std::string& rel, const std::string& text) {
    detail::write_text_atomic(dir / rel, text);
    written.push_back(rel);
  };
  auto finish = [&](const std::string& status) {
    manifest.status = status;
    manifest.files.clear();
    for (const auto& rel : written) {
      manifest.files.push_back({rel, sha256_file(dir / rel), fs::file_size(dir / rel)});
    }
    detail::write_text_atomic(dir / "manifest.json", manifest.to_json_text());
  };
  auto stage = [&](const std::string& name, auto&& body) {
    log("stage " + name);
    const auto start = std::chrono::steady_clock::now();
    try {
      body();
    } catch (const std::exception& e) {
      manifest.failed_stage = name;
      manifest.error = e.what();
      try {
        finish("failed");
      } catch (...) {
        // The original error is the one worth reporting.
      }
      throw StageError(name, e.what(), classify(e));
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    manifest.timings.push_back({name, elapsed.count()});
  };

  write("config.ini", config_text);

  const int sites = config.model.sites;
  const SymmetrySector symmetry{config.sector.momentum, config.sector.parity};
  std::optional<SectorBasis> basis;
  std::optional<HubbardOperators> ops;
  EigenSet eigs;
  stage("diagonalize", [&] {
    basis = symmetry.projected() ? SectorBasis::sector(sites, (sites + 1) / 2, sites / 2, symmetry)
                                 : SectorBasis::full(sites, (sites + 1) / 2, sites / 2);
    if (basis->dimension() == 0) throw ParameterError("selected sector " + basis->id() + " is empty");
    ops.emplace(*basis, config.model);
    eigs = diagonalize_field_free(*ops);
    write("eigenvalues.csv", eigenvalues_csv(eigs, config.pulse.omega_L));
    log("sector " + basis->id() + ", dimension " + std::to_string(basis->dimension()));
  });

  stage("landmarks", [&] { write("landmarks.csv", landmarks_csv(config, eigs)); });

  TransitionCurrentTable table;
  stage("currents", [&] {
    const Eigen::Index m = retained_channels(config, eigs.count());
    const std::uint64_t fingerprint = currents_fingerprint(config, m);
    const fs::path table_path = dir / "currents.bin";
    bool reuse = false;
    if (fs::exists(table_path)) {
      try {
        reuse = TransitionCurrentTable::read_header(table_path).fingerprint == fingerprint;
      } catch (const std::exception&) {
        reuse = false;
      }
    }
    if (reuse) {
      log("reusing currents.bin");
      table = TransitionCurrentTable::read_binary(table_path);
      manifest.currents_reused = true;
    }
    if (!reuse) {
      const auto grid = time_grid(config.pulse, config.numerics.dt);
      log("propagating " + std::to_string(m) + " states over " + std::to_string(grid.size()) +
          " grid points");
      PropagationReport report;
      table = compute_transition_currents(eigs.lowest(m), *ops, config.pulse, grid,
                                          propagation_options(config, workers), &report);
      table.header = {sites, config.model.U / config.model.t0, config.numerics.dt,
                      config.pulse.t_end(), fingerprint};
      table.write_binary(table_path);
      manifest.electron_norm_drift = report.max_norm_drift;
      manifest.hermiticity_defect = report.raw_hermiticity_defect;
    } else {
      manifest.hermiticity_defect = table.hermiticity_defect();
    }
    written.push_back("currents.bin");
    write("currents_selected.csv", selected_currents_csv(table, config.pulse));
  });

  std::vector<ModeResult> results;
  stage("modes", [&] {
    // Records from an earlier run with a different grid must not linger.
    for (const auto& entry : fs::directory_iterator(dir / "modes")) {
      if (entry.path().extension() == ".bin") fs::remove(entry.path());
    }
    results = evaluate_modes(config, table, workers, [&](std::size_t i, const ModeStateSet& s) {
      std::array<char, 32> name{};
      std::snprintf(name.data(), name.size(), "modes/mode_%05zu.bin", i);
      write_mode_record(dir / name.data(), s);
      written.emplace_back(name.data());
    });
    for (const auto& r : results) {
      manifest.photon_norm_drift = std::max(manifest.photon_norm_drift, r.norm_drift);
    }
    write("modes/summary.csv", mode_summary_csv(results, config.pulse.omega_L));
    log("integrated " + std::to_string(results.size()) + " modes");
  });

  stage("observables", [&] { write("spectrum.csv", spectrum_csv(results, config.pulse.omega_L)); });

  finish("complete");
  return manifest;
}

}  // namespace qhhg
