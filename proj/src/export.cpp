#include <algorithm>
#include <cmath>

#include "io_util.hpp"
#include "qhhg/photonics.hpp"
#include "qhhg/pipeline.hpp"

namespace qhhg {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kMaxTimeRows = 4000;
constexpr double kWindowHalfwidth = 0.2;

fs::path require(const RunManifest& manifest, const std::string& rel, const std::string& stage) {
  const fs::path path = manifest.directory / rel;
  if (!manifest.find(rel) || !fs::exists(path)) {
    throw StageError(stage, "missing output " + rel + " in " + manifest.directory.string(),
                     StageError::Cause::other);
  }
  return path;
}

bool is_odd_harmonic(double order) {
  const double nearest = std::round(order);
  return std::abs(order - nearest) < 1e-6 && std::fmod(std::abs(nearest), 2.0) == 1.0;
}

std::string cell(const std::optional<double>& v) {
  return v ? format_csv_number(*v) : std::string("NA");
}

// Window mean over the defined samples; empty when none fall inside.
std::optional<double> defined_window(const std::vector<double>& x,
                                     const std::vector<std::optional<double>>& y, double center) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i]) {
      xs.push_back(x[i]);
      ys.push_back(*y[i]);
    }
  }
  try {
    return window_average(xs, ys, center, kWindowHalfwidth, WindowMode::absolute);
  } catch (const ParameterError&) {
    return std::nullopt;
  }
}

}  // namespace

std::vector<fs::path> export_figures_data(const fs::path& manifest_path) {
  if (!fs::exists(manifest_path)) {
    throw StageError("manifest", "no manifest at " + manifest_path.string() +
                                     " (the run did not finish)",
                     StageError::Cause::other);
  }
  const RunManifest manifest = RunManifest::load(manifest_path);
  if (!manifest.complete()) {
    throw StageError(manifest.failed_stage.empty() ? "manifest" : manifest.failed_stage,
                     "run did not complete: " + manifest.error, StageError::Cause::other);
  }
  const RunConfig config = parse_config(require(manifest, "config.ini", "config"));
  const double wl = config.pulse.omega_L;
  const auto eigen_csv = detail::read_csv(require(manifest, "eigenvalues.csv", "diagonalize"));
  const auto landmarks = detail::read_csv(require(manifest, "landmarks.csv", "landmarks"));
  const auto table =
      TransitionCurrentTable::read_binary(require(manifest, "currents.bin", "currents"));
  const auto spectrum = detail::read_csv(require(manifest, "spectrum.csv", "observables"));

  const fs::path out_dir = manifest.directory / "figures";
  std::vector<fs::path> written;
  auto emit = [&](const std::string& name, const std::string& text) {
    detail::write_text_atomic(out_dir / name, text);
    written.push_back(out_dir / name);
  };

  const auto orders = spectrum.numbers("omega_over_wL");
  const auto s_quantum = spectrum.numbers("S_quantum");
  const auto s_classical = spectrum.numbers("S_classical");
  const auto q = spectrum.values("Q");
  const auto eta = spectrum.values("eta_dB");
  const auto& times = table.times();

  {
    // w^2 |j~_{0m}(w)| for j_00 and the strongest off-diagonal channels.
    std::vector<std::pair<double, Eigen::Index>> peaks;
    for (Eigen::Index m = 1; m < table.channels(); ++m) {
      double peak = 0.0;
      for (const Complex& v : table.element_series(0, m)) peak = std::max(peak, std::abs(v));
      peaks.emplace_back(peak, m);
    }
    std::stable_sort(peaks.begin(), peaks.end(),
                     [](const auto& x, const auto& y) { return x.first > y.first; });
    std::vector<Eigen::Index> channels{0};
    for (std::size_t i = 0; i < peaks.size() && i < 4; ++i) channels.push_back(peaks[i].second);

    std::string text = "omega_over_wL";
    std::vector<std::vector<Complex>> series;
    for (Eigen::Index m : channels) {
      text += ",j_0_" + std::to_string(m);
      series.push_back(table.element_series(0, m));
    }
    text += "\n";
    for (double order : orders) {
      const double w = order * wl;
      text += format_csv_number(order);
      for (const auto& s : series) {
        text += "," + format_csv_number(w * w * std::abs(fourier_integral(times, s, w)));
      }
      text += "\n";
    }
    emit("fig1_transition_currents.csv", text);
  }

  {
    std::string text = "omega_over_wL,S_quantum,S_classical,odd_harmonic\n";
    for (std::size_t i = 0; i < orders.size(); ++i) {
      text += format_csv_number(orders[i]) + "," + format_csv_number(s_quantum[i]) + "," +
              format_csv_number(s_classical[i]) + "," + (is_odd_harmonic(orders[i]) ? "1" : "0") +
              "\n";
    }
    emit("fig2_spectrum.csv", text);
  }

  {
    const auto index = eigen_csv.numbers("index");
    const auto energy = eigen_csv.numbers("energy_over_wL");
    const auto excitation = eigen_csv.numbers("excitation_over_wL");
    std::string text = "index,energy_over_wL,excitation_over_wL\n";
    for (std::size_t i = 0; i < index.size(); ++i) {
      text += std::to_string(static_cast<long>(index[i])) + "," + format_csv_number(energy[i]) +
              "," + format_csv_number(excitation[i]) + "\n";
    }
    emit("fig3_eigenvalues.csv", text);

    const auto names = landmarks.text("name");
    const auto values = landmarks.values("value_over_wL");
    std::string annotations = "name,value_over_wL\n";
    for (std::size_t i = 0; i < names.size(); ++i) {
      annotations += names[i] + "," + cell(values[i]) + "\n";
    }
    emit("fig3_annotations.csv", annotations);
  }

  {
    std::string text = "omega_over_wL,S_quantum,S_classical,Q,eta_dB,Q_window,eta_window\n";
    for (std::size_t i = 0; i < orders.size(); ++i) {
      text += format_csv_number(orders[i]) + "," + format_csv_number(s_quantum[i]) + "," +
              format_csv_number(s_classical[i]) + "," + cell(q[i]) + "," + cell(eta[i]) + "," +
              cell(defined_window(orders, q, orders[i])) + "," +
              cell(defined_window(orders, eta, orders[i])) + "\n";
    }
    emit("fig4_statistics.csv", text);
  }

  {
    const auto j00 = table.diagonal_series(0);
    const std::vector<int> harmonics{2, 4, 6, 5};
    std::vector<std::vector<double>> occupations;
    for (int h : harmonics) occupations.push_back(time_resolved_occupation(times, j00, h * wl));
    const double period = 2.0 * kPi / wl;
    const std::size_t stride = std::max<std::size_t>(1, (times.size() + kMaxTimeRows - 1) / kMaxTimeRows);
    std::string text = "time_au,t_over_period";
    for (int h : harmonics) text += ",harmonic_" + std::to_string(h);
    text += "\n";
    for (std::size_t k = 0; k < times.size(); ++k) {
      if (k % stride != 0 && k + 1 != times.size()) continue;
      text += format_csv_number(times[k]) + "," + format_csv_number(times[k] / period);
      for (const auto& occ : occupations) text += "," + format_csv_number(occ[k]);
      text += "\n";
    }
    emit("fig5_time_resolved.csv", text);
  }
  return written;
}

}  // namespace qhhg
