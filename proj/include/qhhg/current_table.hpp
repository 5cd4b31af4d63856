#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qhhg/common.hpp"

namespace qhhg {

/// Metadata carried in the binary header of a current table.
struct CurrentTableHeader {
  int sites = 0;
  double u_over_t0 = 0.0;
  double dt = 0.0;
  double t_end = 0.0;
  std::uint64_t fingerprint = 0;  // hash of the inputs that produced the table
};

/// Transition currents j_{m,n}(t_k) on a time grid. Each slice is an M x M
/// Hermitian matrix stored column-major in memory.
class TransitionCurrentTable {
 public:
  TransitionCurrentTable() = default;
  TransitionCurrentTable(std::vector<double> times, Eigen::Index channels);

  const std::vector<double>& times() const { return times_; }
  std::size_t time_count() const { return times_.size(); }
  Eigen::Index channels() const { return channels_; }

  Eigen::Map<CMatrix> slice(std::size_t k);
  Eigen::Map<const CMatrix> slice(std::size_t k) const;
  Complex at(std::size_t k, Eigen::Index m, Eigen::Index n) const;

  /// j_{m,n}(t) over the full grid.
  std::vector<Complex> element_series(Eigen::Index m, Eigen::Index n) const;
  /// Real diagonal current j_{m,m}(t).
  std::vector<double> diagonal_series(Eigen::Index m) const;

  /// Largest |j_{m,n} - conj(j_{n,m})| over all slices.
  double hermiticity_defect() const;
  /// Largest off-diagonal |j_{m,n}|, m != n.
  double max_off_diagonal() const;

  /// Keeps only the first m channels.
  TransitionCurrentTable truncated(Eigen::Index m) const;

  CurrentTableHeader header;

  /// Binary format: magic "QHHGJTAB", u32 version, header fields, u64 time
  /// count, u64 channels, f64 times, then per time the M x M slice row-major
  /// as (re, im) f64 pairs. Little-endian host layout.
  void write_binary(const std::filesystem::path& path) const;
  static TransitionCurrentTable read_binary(const std::filesystem::path& path);
  static CurrentTableHeader read_header(const std::filesystem::path& path);

 private:
  std::vector<double> times_;
  Eigen::Index channels_ = 0;
  std::vector<Complex> data_;
};

}  // namespace qhhg
