#include "qhhg/current_table.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>

namespace qhhg {

namespace {

constexpr std::array<char, 8> kMagic{'Q', 'H', 'H', 'G', 'J', 'T', 'A', 'B'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw NumericalError("truncated current table file");
  return value;
}

struct RawHeader {
  CurrentTableHeader header;
  std::uint64_t time_count = 0;
  std::uint64_t channels = 0;
};

RawHeader read_raw_header(std::istream& in, const std::filesystem::path& path) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) {
    throw NumericalError("not a current table file: " + path.string());
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) {
    throw NumericalError("unsupported current table version " + std::to_string(version));
  }
  RawHeader raw;
  raw.header.sites = get<std::int32_t>(in);
  raw.header.u_over_t0 = get<double>(in);
  raw.header.dt = get<double>(in);
  raw.header.t_end = get<double>(in);
  raw.header.fingerprint = get<std::uint64_t>(in);
  raw.time_count = get<std::uint64_t>(in);
  raw.channels = get<std::uint64_t>(in);
  return raw;
}

}  // namespace

TransitionCurrentTable::TransitionCurrentTable(std::vector<double> times, Eigen::Index channels)
    : times_(std::move(times)), channels_(channels) {
  if (channels < 0) throw ParameterError("negative channel count");
  data_.assign(times_.size() * static_cast<std::size_t>(channels * channels), Complex{});
}

Eigen::Map<CMatrix> TransitionCurrentTable::slice(std::size_t k) {
  return Eigen::Map<CMatrix>(data_.data() + k * static_cast<std::size_t>(channels_ * channels_),
                             channels_, channels_);
}

Eigen::Map<const CMatrix> TransitionCurrentTable::slice(std::size_t k) const {
  return Eigen::Map<const CMatrix>(
      data_.data() + k * static_cast<std::size_t>(channels_ * channels_), channels_, channels_);
}

Complex TransitionCurrentTable::at(std::size_t k, Eigen::Index m, Eigen::Index n) const {
  return data_[k * static_cast<std::size_t>(channels_ * channels_) +
               static_cast<std::size_t>(n * channels_ + m)];
}

std::vector<Complex> TransitionCurrentTable::element_series(Eigen::Index m, Eigen::Index n) const {
  if (m < 0 || n < 0 || m >= channels_ || n >= channels_) {
    throw ParameterError("channel index out of range");
  }
  std::vector<Complex> series(times_.size());
  for (std::size_t k = 0; k < times_.size(); ++k) series[k] = at(k, m, n);
  return series;
}

std::vector<double> TransitionCurrentTable::diagonal_series(Eigen::Index m) const {
  const auto series = element_series(m, m);
  std::vector<double> out(series.size());
  std::transform(series.begin(), series.end(), out.begin(), [](Complex z) { return z.real(); });
  return out;
}

double TransitionCurrentTable::hermiticity_defect() const {
  double worst = 0.0;
  for (std::size_t k = 0; k < times_.size(); ++k) {
    const auto s = slice(k);
    worst = std::max(worst, (s - s.adjoint()).cwiseAbs().maxCoeff());
  }
  return worst;
}

double TransitionCurrentTable::max_off_diagonal() const {
  double worst = 0.0;
  for (std::size_t k = 0; k < times_.size(); ++k) {
    CMatrix s = slice(k);
    s.diagonal().setZero();
    if (s.size() > 0) worst = std::max(worst, s.cwiseAbs().maxCoeff());
  }
  return worst;
}

TransitionCurrentTable TransitionCurrentTable::truncated(Eigen::Index m) const {
  if (m <= 0 || m > channels_) throw ParameterError("channel truncation out of range");
  TransitionCurrentTable out(times_, m);
  out.header = header;
  for (std::size_t k = 0; k < times_.size(); ++k) out.slice(k) = slice(k).topLeftCorner(m, m);
  return out;
}

void TransitionCurrentTable::write_binary(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw NumericalError("cannot open " + tmp.string() + " for writing");
    out.write(kMagic.data(), kMagic.size());
    put(out, kVersion);
    put(out, static_cast<std::int32_t>(header.sites));
    put(out, header.u_over_t0);
    put(out, header.dt);
    put(out, header.t_end);
    put(out, header.fingerprint);
    put(out, static_cast<std::uint64_t>(times_.size()));
    put(out, static_cast<std::uint64_t>(channels_));
    out.write(reinterpret_cast<const char*>(times_.data()),
              static_cast<std::streamsize>(times_.size() * sizeof(double)));
    std::vector<Complex> row_major(static_cast<std::size_t>(channels_ * channels_));
    for (std::size_t k = 0; k < times_.size(); ++k) {
      const auto s = slice(k);
      for (Eigen::Index m = 0; m < channels_; ++m) {
        for (Eigen::Index n = 0; n < channels_; ++n) {
          row_major[static_cast<std::size_t>(m * channels_ + n)] = s(m, n);
        }
      }
      out.write(reinterpret_cast<const char*>(row_major.data()),
                static_cast<std::streamsize>(row_major.size() * sizeof(Complex)));
    }
    if (!out) throw NumericalError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CurrentTableHeader TransitionCurrentTable::read_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NumericalError("cannot open " + path.string());
  return read_raw_header(in, path).header;
}

TransitionCurrentTable TransitionCurrentTable::read_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NumericalError("cannot open " + path.string());
  const RawHeader raw = read_raw_header(in, path);
  std::vector<double> times(raw.time_count);
  in.read(reinterpret_cast<char*>(times.data()),
          static_cast<std::streamsize>(times.size() * sizeof(double)));
  if (!in) throw NumericalError("truncated current table file");
  const auto m = static_cast<Eigen::Index>(raw.channels);
  TransitionCurrentTable table(std::move(times), m);
  table.header = raw.header;
  std::vector<Complex> row_major(static_cast<std::size_t>(m * m));
  for (std::size_t k = 0; k < table.time_count(); ++k) {
    in.read(reinterpret_cast<char*>(row_major.data()),
            static_cast<std::streamsize>(row_major.size() * sizeof(Complex)));
    if (!in) throw NumericalError("truncated current table file");
    auto s = table.slice(k);
    for (Eigen::Index r = 0; r < m; ++r) {
      for (Eigen::Index c = 0; c < m; ++c) s(r, c) = row_major[static_cast<std::size_t>(r * m + c)];
    }
  }
  return table;
}

}  // namespace qhhg
