#include "qhhg/photonics.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace qhhg {

namespace {

void check_grid(std::span<const double> times, std::size_t values) {
  if (times.size() != values) throw ParameterError("time and value series differ in length");
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1])) throw ParameterError("time grid must be strictly increasing");
  }
}

// Highest Fock level with an amplitude above the threshold in any channel.
int top_level(const CMatrix& c, Eigen::Index width, double threshold) {
  for (Eigen::Index n = width - 1; n > 0; --n) {
    if (c.col(n).cwiseAbs().maxCoeff() > threshold) return static_cast<int>(n);
  }
  return 0;
}

// out = in X^T restricted to the first `width` levels, with
// X = e^{-iwt} a + e^{iwt} a^dagger.
void apply_field(const CMatrix& in, Eigen::Index width, Complex lower, Complex raise,
                 const std::vector<double>& sqrt_n, CMatrix& out) {
  for (Eigen::Index n = 0; n < width; ++n) {
    auto col = out.col(n);
    if (n + 1 < width) {
      col = (lower * sqrt_n[static_cast<std::size_t>(n + 1)]) * in.col(n + 1);
    } else {
      col.setZero();
    }
    if (n > 0) col += (raise * sqrt_n[static_cast<std::size_t>(n)]) * in.col(n - 1);
  }
}

std::vector<double> sqrt_table(int cutoff) {
  std::vector<double> s(static_cast<std::size_t>(cutoff) + 2);
  for (std::size_t n = 0; n < s.size(); ++n) s[n] = std::sqrt(static_cast<double>(n));
  return s;
}

template <class Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  const int n = std::max(1, std::min<int>(workers > 0 ? workers
                                                      : static_cast<int>(std::max(
                                                            1u, std::thread::hardware_concurrency())),
                                          static_cast<int>(count)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&]() {
    for (;;) {
      const std::size_t i = next++;
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
        return;
      }
    }
  };
  if (n == 1) {
    run();
  } else {
    std::vector<std::jthread> threads;
    for (int w = 1; w < n; ++w) threads.emplace_back(run);
    run();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

void ModeConfig::validate() const {
  if (!(omega > 0.0)) throw ParameterError("mode frequency must be positive");
  if (!(g0 > 0.0)) throw ParameterError("coupling g0 must be positive");
  if (fock_cutoff < 1) throw ParameterError("Fock cutoff must be at least 1");
}

std::vector<ModeConfig> mode_grid(double omega_laser, double omega_min_over_wl,
                                  double omega_max_over_wl, double step_over_wl, double g0,
                                  int fock_cutoff) {
  if (!(omega_laser > 0.0) || !(step_over_wl > 0.0) || !(omega_min_over_wl > 0.0) ||
      omega_max_over_wl < omega_min_over_wl) {
    throw ParameterError("invalid mode grid");
  }
  // Index the grid by integers so repeated additions do not drift.
  const auto first = static_cast<long>(std::ceil(omega_min_over_wl / step_over_wl - 1e-9));
  const auto last = static_cast<long>(std::floor(omega_max_over_wl / step_over_wl + 1e-9));
  std::vector<ModeConfig> modes;
  for (long k = first; k <= last; ++k) {
    ModeConfig m{static_cast<double>(k) * step_over_wl * omega_laser, g0, fock_cutoff};
    m.validate();
    modes.push_back(m);
  }
  return modes;
}

double ModeStateSet::tail_population(int n) const {
  if (n + 1 >= amplitudes.cols()) return 0.0;
  return amplitudes.rightCols(amplitudes.cols() - n - 1).squaredNorm();
}

ModeStateSet vacuum_state(const ModeConfig& mode, Eigen::Index channels, Eigen::Index initial) {
  mode.validate();
  if (initial < 0 || initial >= channels) throw ParameterError("initial channel out of range");
  ModeStateSet s;
  s.mode = mode;
  s.amplitudes = CMatrix::Zero(channels, mode.fock_cutoff + 1);
  s.amplitudes(initial, 0) = 1.0;
  return s;
}

ModeStateSet coherent_state(const ModeConfig& mode, Complex beta, double time) {
  mode.validate();
  ModeStateSet s;
  s.mode = mode;
  s.time = time;
  s.amplitudes = CMatrix::Zero(1, mode.fock_cutoff + 1);
  Complex c = std::exp(-0.5 * std::norm(beta));
  for (int n = 0; n <= mode.fock_cutoff; ++n) {
    if (n > 0) c *= beta / std::sqrt(static_cast<double>(n));
    s.amplitudes(0, n) = c;
    if (std::abs(c) > 1e-30) s.highest_level = n;
  }
  return s;
}

ModeStateSet integrate_mode(const TransitionCurrentTable& table, const ModeConfig& mode,
                            const IntegrationOptions& options) {
  mode.validate();
  const auto& times = table.times();
  const Eigen::Index channels = table.channels();
  ModeStateSet state = vacuum_state(mode, channels, options.initial_channel);
  if (times.empty()) return state;
  state.time = times.front();

  const Eigen::Index initial = options.initial_channel;
  const double kappa = mode.coupling();
  const Eigen::Index levels = mode.fock_cutoff + 1;
  const auto sqrt_n = sqrt_table(mode.fock_cutoff);
  // The integrator works on d = C - |initial, vacuum>. The vacuum part enters
  // as an exact source term, so the small deviations keep full relative
  // precision instead of being rounded against an O(1) entry.
  CMatrix d = CMatrix::Zero(channels, levels);
  CMatrix stage(channels, levels), field(channels, levels);
  CMatrix k1(channels, levels), k2(channels, levels), k3(channels, levels), k4(channels, levels);
  CMatrix j_mid(channels, channels);
  CMatrix carry = CMatrix::Zero(channels, levels);

  // k = -i kappa J ((vacuum + in) X^T) over the active window.
  auto derivative = [&](double t, const auto& j, const CMatrix& in, Eigen::Index width,
                        CMatrix& out) {
    const Complex lower = std::polar(1.0, -mode.omega * t);
    apply_field(in, width, lower, std::conj(lower), sqrt_n, field);
    if (width > 1) field(initial, 1) += std::conj(lower);
    out.leftCols(width).noalias() = (Complex{0.0, -kappa} * j) * field.leftCols(width);
  };

  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    const double t0 = times[k];
    const double t1 = times[k + 1];
    const double h = t1 - t0;
    const double tm = t0 + 0.5 * h;
    const int top = top_level(d, levels, options.negligible_amplitude);
    state.highest_level = std::max(state.highest_level, top);
    const Eigen::Index w = std::min<Eigen::Index>(levels, std::max(top, 1) + 5);

    const auto j0 = table.slice(k);
    const auto j1 = table.slice(k + 1);
    j_mid = 0.5 * (j0 + j1);

    derivative(t0, j0, d, w, k1);
    stage.leftCols(w) = d.leftCols(w) + (0.5 * h) * k1.leftCols(w);
    derivative(tm, j_mid, stage, w, k2);
    stage.leftCols(w) = d.leftCols(w) + (0.5 * h) * k2.leftCols(w);
    derivative(tm, j_mid, stage, w, k3);
    stage.leftCols(w) = d.leftCols(w) + h * k3.leftCols(w);
    derivative(t1, j1, stage, w, k4);
    // Compensated update: the amplitudes are long running sums whose final
    // value can be many orders below their size mid-pulse.
    stage.leftCols(w) = (h / 6.0) * (k1.leftCols(w) + 2.0 * k2.leftCols(w) +
                                     2.0 * k3.leftCols(w) + k4.leftCols(w)) -
                        carry.leftCols(w);
    k1.leftCols(w) = d.leftCols(w) + stage.leftCols(w);
    carry.leftCols(w) = (k1.leftCols(w) - d.leftCols(w)) - stage.leftCols(w);
    d.leftCols(w) = k1.leftCols(w);

    // |vacuum + d|^2 - 1 without forming the O(1) sum.
    const double drift = std::abs(2.0 * d(initial, 0).real() + d.leftCols(w).squaredNorm());
    state.max_norm_drift = std::max(state.max_norm_drift, drift);
    if (drift > options.max_norm_drift) {
      std::ostringstream msg;
      msg << "photonic norm drift " << drift << " at t=" << t1 << " for mode omega=" << mode.omega;
      throw NumericalError(msg.str());
    }
  }
  state.amplitudes += d;
  state.time = times.back();
  state.highest_level =
      std::max(state.highest_level, top_level(d, levels, options.negligible_amplitude));
  return state;
}

std::vector<Complex> fourier_running_integral(std::span<const double> times,
                                              std::span<const Complex> values, double omega) {
  check_grid(times, values.size());
  std::vector<Complex> running(times.size(), Complex{});
  Complex acc{};
  Complex carry{};  // Kahan compensation
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    const double h = times[k + 1] - times[k];
    const Complex e0 = std::polar(1.0, omega * times[k]);
    const Complex em = std::polar(1.0, omega * (times[k] + 0.5 * h));
    const Complex e1 = std::polar(1.0, omega * times[k + 1]);
    const Complex term = (h / 6.0) * (values[k] * e0 + 2.0 * (values[k] + values[k + 1]) * em +
                                      values[k + 1] * e1) -
                         carry;
    const Complex next = acc + term;
    carry = (next - acc) - term;
    acc = next;
    running[k + 1] = acc;
  }
  return running;
}

Complex fourier_integral(std::span<const double> times, std::span<const Complex> values,
                         double omega) {
  const auto running = fourier_running_integral(times, values, omega);
  return running.empty() ? Complex{} : running.back();
}

Complex fourier_integral(std::span<const double> times, std::span<const double> values,
                         double omega) {
  std::vector<Complex> complex_values(values.begin(), values.end());
  return fourier_integral(times, complex_values, omega);
}

CoherentAmplitude coherent_amplitude(std::span<const double> times, std::span<const double> j_diag,
                                     const ModeConfig& mode) {
  mode.validate();
  return {mode.omega, Complex{0.0, -mode.coupling()} * fourier_integral(times, j_diag, mode.omega)};
}

CoherentAmplitude coherent_amplitude(std::span<const double> times, std::span<const double> j_diag,
                                     const ModeConfig& mode, double t) {
  check_grid(times, j_diag.size());
  const auto end = std::upper_bound(times.begin(), times.end(), t);
  const auto count = static_cast<std::size_t>(end - times.begin());
  if (count == 0) return {mode.omega, Complex{}};
  return coherent_amplitude(times.first(count), j_diag.first(count), mode);
}

std::vector<CVector> perturbative_amplitudes(const TransitionCurrentTable& table,
                                             std::span<const ModeConfig> modes,
                                             Eigen::Index initial_channel) {
  const Eigen::Index channels = table.channels();
  if (initial_channel < 0 || initial_channel >= channels) {
    throw ParameterError("initial channel out of range");
  }
  std::vector<std::vector<Complex>> series(static_cast<std::size_t>(channels));
  for (Eigen::Index m = 0; m < channels; ++m) {
    series[static_cast<std::size_t>(m)] = table.element_series(m, initial_channel);
  }
  std::vector<CVector> result;
  result.reserve(modes.size());
  for (const auto& mode : modes) {
    mode.validate();
    CVector amp(channels);
    for (Eigen::Index m = 0; m < channels; ++m) {
      amp[m] = Complex{0.0, -mode.coupling()} *
               fourier_integral(table.times(), series[static_cast<std::size_t>(m)], mode.omega);
    }
    result.push_back(std::move(amp));
  }
  return result;
}

ModeStateSet perturbative_state(const TransitionCurrentTable& table, const ModeConfig& mode,
                                Eigen::Index initial_channel) {
  const auto amps = perturbative_amplitudes(table, std::span(&mode, 1), initial_channel);
  ModeStateSet s = vacuum_state(mode, table.channels(), initial_channel);
  s.amplitudes.col(1) = amps.front();
  s.highest_level = 1;
  s.time = table.times().empty() ? 0.0 : table.times().back();
  return s;
}

std::vector<ModeStateSet> integrate_modes(const TransitionCurrentTable& table,
                                          std::span<const ModeConfig> modes, int workers,
                                          const IntegrationOptions& options) {
  std::vector<ModeStateSet> out(modes.size());
  parallel_for(modes.size(), workers,
               [&](std::size_t i) { out[i] = integrate_mode(table, modes[i], options); });
  return out;
}

namespace {

constexpr std::array<char, 8> kModeMagic{'Q', 'H', 'H', 'G', 'M', 'O', 'D', 'E'};
constexpr std::uint32_t kModeVersion = 1;

template <class T>
void put(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& in, const std::filesystem::path& path) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw NumericalError("truncated mode record " + path.string());
  return value;
}

}  // namespace

void write_mode_record(const std::filesystem::path& path, const ModeStateSet& state) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  const Eigen::Index channels = state.amplitudes.rows();
  Eigen::Index levels = std::min<Eigen::Index>(1, state.amplitudes.cols());
  for (Eigen::Index n = state.amplitudes.cols() - 1; n >= levels; --n) {
    if (!state.amplitudes.col(n).isZero(0.0)) {
      levels = n + 1;
      break;
    }
  }
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw NumericalError("cannot open " + tmp.string() + " for writing");
    out.write(kModeMagic.data(), kModeMagic.size());
    put(out, kModeVersion);
    put(out, state.mode.omega);
    put(out, state.mode.g0);
    put(out, state.time);
    put(out, state.max_norm_drift);
    put(out, static_cast<std::int32_t>(state.mode.fock_cutoff));
    put(out, static_cast<std::int32_t>(state.highest_level));
    put(out, static_cast<std::uint64_t>(channels));
    put(out, static_cast<std::uint64_t>(levels));
    for (Eigen::Index m = 0; m < channels; ++m) {
      for (Eigen::Index n = 0; n < levels; ++n) put(out, state.amplitudes(m, n));
    }
    if (!out) throw NumericalError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

ModeStateSet read_mode_record(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NumericalError("cannot open " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kModeMagic) throw NumericalError("not a mode record: " + path.string());
  if (get<std::uint32_t>(in, path) != kModeVersion) {
    throw NumericalError("unsupported mode record version in " + path.string());
  }
  ModeStateSet s;
  s.mode.omega = get<double>(in, path);
  s.mode.g0 = get<double>(in, path);
  s.time = get<double>(in, path);
  s.max_norm_drift = get<double>(in, path);
  s.mode.fock_cutoff = get<std::int32_t>(in, path);
  s.highest_level = get<std::int32_t>(in, path);
  const auto channels = static_cast<Eigen::Index>(get<std::uint64_t>(in, path));
  const auto levels = static_cast<Eigen::Index>(get<std::uint64_t>(in, path));
  s.mode.validate();
  if (levels > s.mode.fock_cutoff + 1) throw NumericalError("corrupt mode record " + path.string());
  s.amplitudes = CMatrix::Zero(channels, s.mode.fock_cutoff + 1);
  for (Eigen::Index m = 0; m < channels; ++m) {
    for (Eigen::Index n = 0; n < levels; ++n) s.amplitudes(m, n) = get<Complex>(in, path);
  }
  return s;
}

double CoupledModeState::number_moment(std::size_t mode, int power) const {
  const auto k = modes.size();
  if (mode >= k) throw ParameterError("mode index out of range");
  const Eigen::Index levels = cutoff + 1;
  Eigen::Index stride = 1;
  for (std::size_t i = mode + 1; i < k; ++i) stride *= levels;
  double total = 0.0;
  for (Eigen::Index idx = 0; idx < amplitudes.size(); ++idx) {
    const auto n = static_cast<double>((idx / stride) % levels);
    total += std::norm(amplitudes[idx]) * std::pow(n, power);
  }
  return total;
}

CoupledModeState integrate_coupled_modes(const TransitionCurrentTable& table,
                                         std::span<const ModeConfig> modes, int cutoff,
                                         Eigen::Index initial_channel) {
  if (modes.empty() || modes.size() > 3) throw ParameterError("coupled reference takes 1 to 3 modes");
  if (cutoff < 1) throw ParameterError("Fock cutoff must be at least 1");
  for (const auto& m : modes) m.validate();
  const Eigen::Index channels = table.channels();
  if (initial_channel < 0 || initial_channel >= channels) {
    throw ParameterError("initial channel out of range");
  }
  const Eigen::Index levels = cutoff + 1;
  Eigen::Index photon_dim = 1;
  for (std::size_t i = 0; i < modes.size(); ++i) photon_dim *= levels;
  std::vector<Eigen::Index> strides(modes.size());
  {
    Eigen::Index s = 1;
    for (std::size_t i = modes.size(); i-- > 0;) {
      strides[i] = s;
      s *= levels;
    }
  }
  const auto sqrt_n = sqrt_table(cutoff);

  CoupledModeState state;
  state.modes.assign(modes.begin(), modes.end());
  state.cutoff = cutoff;
  state.channels = channels;
  // Channels are rows, the joint photon index runs along columns.
  CMatrix c = CMatrix::Zero(channels, photon_dim);
  c(initial_channel, 0) = 1.0;

  CMatrix field(channels, photon_dim);
  auto derivative = [&](double t, const auto& j, const CMatrix& in, CMatrix& out) {
    field.setZero();
    for (std::size_t k = 0; k < modes.size(); ++k) {
      const Complex lower = modes[k].coupling() * std::polar(1.0, -modes[k].omega * t);
      const Complex raise = modes[k].coupling() * std::polar(1.0, modes[k].omega * t);
      for (Eigen::Index idx = 0; idx < photon_dim; ++idx) {
        const Eigen::Index n = (idx / strides[k]) % levels;
        if (n + 1 < levels) {
          field.col(idx) += (lower * sqrt_n[static_cast<std::size_t>(n + 1)]) * in.col(idx + strides[k]);
        }
        if (n > 0) field.col(idx) += (raise * sqrt_n[static_cast<std::size_t>(n)]) * in.col(idx - strides[k]);
      }
    }
    out.noalias() = Complex{0.0, -1.0} * (j * field);
  };

  const auto& times = table.times();
  CMatrix k1(channels, photon_dim), k2(channels, photon_dim), k3(channels, photon_dim),
      k4(channels, photon_dim);
  CMatrix j_mid(channels, channels);
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    const double h = times[k + 1] - times[k];
    const double tm = times[k] + 0.5 * h;
    const auto j0 = table.slice(k);
    const auto j1 = table.slice(k + 1);
    j_mid = 0.5 * (j0 + j1);
    derivative(times[k], j0, c, k1);
    derivative(tm, j_mid, CMatrix(c + 0.5 * h * k1), k2);
    derivative(tm, j_mid, CMatrix(c + 0.5 * h * k2), k3);
    derivative(times[k + 1], j1, CMatrix(c + h * k3), k4);
    c += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  const CMatrix flat = c.transpose();
  state.amplitudes = Eigen::Map<const CVector>(flat.data(), flat.size());
  return state;
}

}  // namespace qhhg
