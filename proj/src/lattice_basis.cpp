#include "qhhg/lattice_basis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

namespace qhhg {

namespace {

constexpr double kNormTolerance = 1e-10;

std::uint32_t rotate_mask(std::uint32_t mask, int sites) {
  const std::uint32_t top = 1u << (sites - 1);
  const std::uint32_t full = (sites == 32) ? ~0u : ((1u << sites) - 1u);
  return ((mask << 1) & full) | ((mask & top) ? 1u : 0u);
}

// Moving the electron on the last site to the front of its block passes every
// other electron of the same spin.
int rotation_sign(std::uint32_t mask, int sites) {
  const std::uint32_t top = 1u << (sites - 1);
  if (!(mask & top)) return 1;
  return ((std::popcount(mask) - 1) % 2 == 0) ? 1 : -1;
}

void check_counts(int sites, int n_up, int n_down) {
  if (sites < 1 || sites > 16) {
    throw ParameterError("site count must be in 1..16, got " + std::to_string(sites));
  }
  if (n_up < 0 || n_up > sites || n_down < 0 || n_down > sites) {
    throw ParameterError("electron counts must lie in 0..L (L=" + std::to_string(sites) +
                         ", n_up=" + std::to_string(n_up) +
                         ", n_down=" + std::to_string(n_down) + ")");
  }
}

}  // namespace

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::uint64_t result = 1;
  for (int i = 1; i <= k; ++i) {
    result = result * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  }
  return result;
}

std::vector<std::uint32_t> masks_with_popcount(int width, int count) {
  std::vector<std::uint32_t> masks;
  if (count < 0 || count > width) return masks;
  masks.reserve(binomial(width, count));
  if (count == 0) {
    masks.push_back(0);
    return masks;
  }
  // Gosper's hack: next larger integer with the same popcount.
  std::uint64_t v = (std::uint64_t{1} << count) - 1;
  const std::uint64_t limit = std::uint64_t{1} << width;
  while (v < limit) {
    masks.push_back(static_cast<std::uint32_t>(v));
    const std::uint64_t c = v & (~v + 1);
    const std::uint64_t r = v + c;
    v = (((r ^ v) >> 2) / c) | r;
  }
  return masks;
}

OccupationState translate(OccupationState state, int sites) {
  return {rotate_mask(state.up, sites), rotate_mask(state.down, sites)};
}

OccupationState spin_flip(OccupationState state) { return {state.down, state.up}; }

SignedState translate_signed(OccupationState state, int sites) {
  const int sign = rotation_sign(state.up, sites) * rotation_sign(state.down, sites);
  return {translate(state, sites), sign};
}

SignedState spin_flip_signed(OccupationState state) {
  const int n_up = std::popcount(state.up);
  const int n_down = std::popcount(state.down);
  // Block exchange gives (-1)^(n_up*n_down); the extra (-1)^n_up makes the
  // on-site singlet c+_{j,up} c+_{j,down}|0> even.
  const int exponent = n_up * n_down + n_up;
  return {spin_flip(state), (exponent % 2 == 0) ? 1 : -1};
}

std::string to_string(const SymmetrySector& sector) {
  std::ostringstream out;
  out << "k=";
  if (sector.momentum) out << *sector.momentum; else out << "none";
  out << ",parity=";
  if (sector.parity) out << (*sector.parity > 0 ? "+1" : "-1"); else out << "none";
  return out.str();
}

std::vector<SectorBasis::GroupImage> SectorBasis::orbit(OccupationState state) const {
  std::vector<GroupImage> images;
  const int flips = sector_.parity ? 2 : 1;
  const int shifts = sector_.momentum ? sites_ : 1;
  images.reserve(static_cast<std::size_t>(flips * shifts));
  for (int p = 0; p < flips; ++p) {
    SignedState current{state, 1};
    Complex parity_char{1.0, 0.0};
    if (p == 1) {
      current = spin_flip_signed(state);
      parity_char = static_cast<double>(*sector_.parity);
    }
    for (int j = 0; j < shifts; ++j) {
      Complex character = parity_char;
      if (sector_.momentum) {
        const double phase = 2.0 * kPi * (*sector_.momentum) * j / sites_;
        character *= std::polar(1.0, phase);
      }
      images.push_back({current.state, current.sign, character});
      const SignedState next = translate_signed(current.state, sites_);
      current = {next.state, current.sign * next.sign};
    }
  }
  return images;
}

SectorBasis SectorBasis::full(int sites, int n_up, int n_down) {
  check_counts(sites, n_up, n_down);
  SectorBasis basis;
  basis.sites_ = sites;
  basis.n_up_ = n_up;
  basis.n_down_ = n_down;
  const auto ups = masks_with_popcount(sites, n_up);
  const auto downs = masks_with_popcount(sites, n_down);
  basis.states_.reserve(ups.size() * downs.size());
  for (auto d : downs) {
    for (auto u : ups) basis.states_.push_back({u, d});
  }
  // Down bits are the high half of the key, so this loop order is already
  // ascending in packed key.
  basis.keys_.reserve(basis.states_.size());
  for (const auto& s : basis.states_) basis.keys_.push_back(packed_key(s, sites));
  basis.norms_.assign(basis.states_.size(), 1.0);
  return basis;
}

SectorBasis SectorBasis::sector(int sites, int n_up, int n_down, SymmetrySector sector) {
  check_counts(sites, n_up, n_down);
  if (sector.momentum && (*sector.momentum < 0 || *sector.momentum >= sites)) {
    throw ParameterError("momentum index must lie in 0..L-1");
  }
  if (sector.parity) {
    if (*sector.parity != 1 && *sector.parity != -1) {
      throw ParameterError("spin-flip parity must be +1 or -1");
    }
    if (n_up != n_down) {
      throw ParameterError("spin-flip parity sectors require n_up == n_down");
    }
  }
  if (!sector.projected()) return full(sites, n_up, n_down);

  SectorBasis basis;
  basis.sites_ = sites;
  basis.n_up_ = n_up;
  basis.n_down_ = n_down;
  basis.sector_ = sector;

  const SectorBasis all = full(sites, n_up, n_down);
  for (const auto& s : all.states()) {
    const auto images = basis.orbit(s);
    const std::uint64_t key = packed_key(s, sites);
    bool is_rep = true;
    Complex stabilizer_sum{0.0, 0.0};
    for (const auto& img : images) {
      const std::uint64_t k = packed_key(img.state, sites);
      if (k < key) {
        is_rep = false;
        break;
      }
      if (k == key) stabilizer_sum += std::conj(img.character) * static_cast<double>(img.sign);
    }
    if (!is_rep) continue;
    const double norm = stabilizer_sum.real() / static_cast<double>(images.size());
    if (norm < kNormTolerance) continue;
    basis.states_.push_back(s);
    basis.keys_.push_back(key);
    basis.norms_.push_back(norm);
  }
  return basis;
}

std::optional<std::size_t> SectorBasis::index_of(OccupationState state) const {
  const std::uint64_t key = packed_key(state, sites_);
  const auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
  if (it == keys_.end() || *it != key) return std::nullopt;
  return static_cast<std::size_t>(it - keys_.begin());
}

std::optional<SectorBasis::Projection> SectorBasis::project(OccupationState state) const {
  if (!sector_.projected()) {
    const auto idx = index_of(state);
    if (!idx) return std::nullopt;
    return Projection{*idx, Complex{1.0, 0.0}};
  }
  // Find g with U_g|rep> = sign |state>; then P|state> = sign * chi(g) * P|rep>.
  const auto images = orbit(state);
  std::uint64_t best = packed_key(state, sites_);
  std::size_t best_image = 0;
  for (std::size_t i = 1; i < images.size(); ++i) {
    const std::uint64_t k = packed_key(images[i].state, sites_);
    if (k < best) {
      best = k;
      best_image = i;
    }
  }
  const auto idx = index_of(images[best_image].state);
  if (!idx) return std::nullopt;
  // images[best_image] = U_h|state> with sign s_h, i.e. |state> = s_h U_h^{-1}|rep>
  // and chi(h^{-1}) = conj(chi(h)).
  const Complex factor = static_cast<double>(images[best_image].sign) *
                         std::conj(images[best_image].character) * std::sqrt(norms_[*idx]);
  return Projection{*idx, factor};
}

CMatrix SectorBasis::embedding(const SectorBasis& full_basis) const {
  if (full_basis.sector_.projected() || full_basis.sites_ != sites_ ||
      full_basis.n_up_ != n_up_ || full_basis.n_down_ != n_down_) {
    throw ParameterError("embedding requires the matching unprojected basis");
  }
  CMatrix v = CMatrix::Zero(static_cast<Eigen::Index>(full_basis.dimension()),
                            static_cast<Eigen::Index>(dimension()));
  for (std::size_t c = 0; c < dimension(); ++c) {
    if (!sector_.projected()) {
      v(static_cast<Eigen::Index>(*full_basis.index_of(states_[c])),
        static_cast<Eigen::Index>(c)) = 1.0;
      continue;
    }
    // P|r> / sqrt(n_r), P = (1/|G|) sum_g conj(chi(g)) U_g
    const auto images = orbit(states_[c]);
    const double scale = 1.0 / (static_cast<double>(images.size()) * std::sqrt(norms_[c]));
    for (const auto& img : images) {
      const auto row = full_basis.index_of(img.state);
      v(static_cast<Eigen::Index>(*row), static_cast<Eigen::Index>(c)) +=
          scale * std::conj(img.character) * static_cast<double>(img.sign);
    }
  }
  return v;
}

std::string SectorBasis::id() const {
  std::ostringstream out;
  out << "L" << sites_ << "_u" << n_up_ << "_d" << n_down_;
  if (sector_.momentum) out << "_k" << *sector_.momentum;
  if (sector_.parity) out << "_p" << (*sector_.parity > 0 ? "+1" : "-1");
  return out.str();
}

SectorBasis build_full_basis(int sites, int n_up, int n_down) {
  return SectorBasis::full(sites, n_up, n_down);
}

SectorBasis build_sector_basis(int sites, int n_up, int n_down, int momentum_index,
                               int spin_flip_parity) {
  return SectorBasis::sector(sites, n_up, n_down,
                             SymmetrySector{momentum_index, spin_flip_parity});
}

}  // namespace qhhg
