#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "io_util.hpp"
#include "qhhg/pipeline.hpp"

using namespace qhhg;
namespace fs = std::filesystem;

namespace {

RunConfig small_config(PathKind path, double u_over_t0) {
  RunConfig c;
  c.model.sites = 4;
  c.model.U = u_over_t0 * c.model.t0;
  c.pulse.n_cycles = 2;
  c.pulse.omega_L = 0.05;
  c.modes.omega_max = 8.0;
  c.modes.d_omega = 0.5;
  c.numerics.dt = 0.5;
  c.numerics.substeps = 8;
  c.path = path;
  return c;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("qhhg_unit_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("sha256 and number formatting") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(format_csv_number(0.0) == format_csv_number(-0.0));
  CHECK(format_csv_number(1.5) == "1.5000000000e+00");
  CHECK(format_csv_number(std::nan("")) == "NA");
}

TEST_CASE("retained channels") {
  auto c = small_config(PathKind::full_eom, 10.0);
  CHECK(retained_channels(c, 12) == 12);
  c.numerics.channels = 5;
  CHECK(retained_channels(c, 12) == 5);
  c.path = PathKind::analytic_u0;
  c.model.U = 0.0;
  CHECK(retained_channels(c, 12) == 1);
}

TEST_CASE("pipeline run is deterministic and resumable") {
  const auto config = small_config(PathKind::full_eom, 10.0);
  PipelineOptions a_opts;
  a_opts.output_dir = fresh_dir("run_a");
  a_opts.workers = 2;
  PipelineOptions b_opts;
  b_opts.output_dir = fresh_dir("run_b");
  b_opts.workers = 1;

  const auto a = run_pipeline(config, a_opts);
  const auto b = run_pipeline(config, b_opts);
  REQUIRE(a.complete());
  CHECK_FALSE(a.currents_reused);
  CHECK(a.files.size() == b.files.size());
  for (const auto& f : a.files) {
    const auto* other = b.find(f.path);
    REQUIRE(other != nullptr);
    CHECK_MESSAGE(f.sha256 == other->sha256, f.path);
  }
  CHECK(a.hermiticity_defect < 1e-10);
  CHECK(a.photon_norm_drift < 1e-8);

  const auto loaded = RunManifest::load(a.directory / "manifest.json");
  CHECK(loaded.config_hash == a.config_hash);
  CHECK(loaded.files.size() == a.files.size());

  // Resume: the current table is reused and downstream outputs are identical.
  const std::string before = a.find("spectrum.csv")->sha256;
  fs::remove_all(a.directory / "modes");
  fs::remove(a.directory / "spectrum.csv");
  const auto again = run_pipeline(config, a_opts);
  CHECK(again.currents_reused);
  CHECK(again.find("spectrum.csv")->sha256 == before);

  // A changed input invalidates the table.
  auto changed = config;
  changed.numerics.substeps = 4;
  CHECK_FALSE(run_pipeline(changed, a_opts).currents_reused);

  fs::remove_all(a.directory);
  fs::remove_all(b.directory);
}

TEST_CASE("spectrum columns and analytic path") {
  PipelineOptions opts;
  opts.output_dir = fresh_dir("analytic");
  const auto m = run_pipeline(small_config(PathKind::analytic_u0, 0.0), opts);
  const auto spectrum = detail::read_csv(m.directory / "spectrum.csv");
  CHECK(spectrum.header == std::vector<std::string>{"omega_over_wL", "S_quantum", "S_classical", "Q",
                                                    "eta_dB", "n_mean", "n2_mean"});
  const auto sq = spectrum.numbers("S_quantum");
  const auto sc = spectrum.numbers("S_classical");
  CHECK(sq.size() == 16);
  for (std::size_t i = 0; i < sq.size(); ++i) CHECK(std::abs(sq[i] - sc[i]) <= 1e-9 * sc[i]);
  const auto landmarks = detail::read_csv(m.directory / "landmarks.csv");
  CHECK(landmarks.text("name") == std::vector<std::string>{"ground_energy", "bandwidth_4t0", "mott_gap"});
  fs::remove_all(m.directory);
}

TEST_CASE("export writes figure tables and reports missing stages") {
  PipelineOptions opts;
  opts.output_dir = fresh_dir("export");
  const auto m = run_pipeline(small_config(PathKind::analytic_u0, 0.0), opts);
  const auto written = export_figures_data(m.directory / "manifest.json");
  CHECK(written.size() == 6);
  for (const auto& p : written) CHECK(fs::file_size(p) > 0);
  const auto fig2 = detail::read_csv(m.directory / "figures" / "fig2_spectrum.csv");
  const auto odd = fig2.numbers("odd_harmonic");
  const auto order = fig2.numbers("omega_over_wL");
  for (std::size_t i = 0; i < odd.size(); ++i) {
    const bool expected = order[i] == std::round(order[i]) && static_cast<long>(order[i]) % 2 == 1;
    CHECK((odd[i] == 1.0) == expected);
  }

  fs::remove(m.directory / "spectrum.csv");
  try {
    export_figures_data(m.directory / "manifest.json");
    FAIL("export should fail");
  } catch (const StageError& e) {
    CHECK(e.stage() == "observables");
  }
  CHECK_THROWS_AS(export_figures_data(m.directory / "missing.json"), StageError);
  fs::remove_all(m.directory);
}

TEST_CASE("failed runs leave a failure manifest") {
  auto c = small_config(PathKind::full_eom, 10.0);
  c.numerics.dt = 5.0;
  c.numerics.substeps = 1;
  c.numerics.krylov_dim = 2;
  PipelineOptions opts;
  opts.output_dir = fresh_dir("failure");
  bool threw = false;
  try {
    run_pipeline(c, opts);
  } catch (const StageError& e) {
    threw = true;
    const auto m = RunManifest::load(opts.output_dir / "manifest.json");
    CHECK_FALSE(m.complete());
    CHECK(m.failed_stage == e.stage());
  }
  // Coarse stepping may still stay within the drift limit; only check consistency.
  if (!threw) CHECK(RunManifest::load(opts.output_dir / "manifest.json").complete());
  fs::remove_all(opts.output_dir);
}
