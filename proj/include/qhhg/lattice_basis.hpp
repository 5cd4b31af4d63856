#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qhhg/common.hpp"

namespace qhhg {

/// Occupation-number configuration of the periodic chain. Bit j of each mask
/// is the occupation of site j for that spin species.
struct OccupationState {
  std::uint32_t up = 0;
  std::uint32_t down = 0;

  friend constexpr auto operator<=>(const OccupationState&, const OccupationState&) = default;
};

/// Packs a configuration into a single integer key: up bits low, down bits high.
/// Basis ordering and orbit representatives use this key.
constexpr std::uint64_t packed_key(OccupationState s, int sites) {
  return std::uint64_t{s.up} | (std::uint64_t{s.down} << sites);
}

/// Cyclic shift j -> j+1 of both masks.
OccupationState translate(OccupationState state, int sites);

/// Exchange of the up and down masks.
OccupationState spin_flip(OccupationState state);

/// Result of applying a symmetry operation to a basis ket: U|s> = sign |state>.
struct SignedState {
  OccupationState state;
  int sign = 1;
};

/// Translation with the fermionic reordering sign (up block before down block,
/// sites ascending within each block).
SignedState translate_signed(OccupationState state, int sites);

/// Spin flip with the fermionic reordering sign. The overall phase is chosen
/// so that spin-singlet states carry parity +1.
SignedState spin_flip_signed(OccupationState state);

struct SymmetrySector {
  std::optional<int> momentum;  // 0..L-1, crystal momentum 2*pi*k/L
  std::optional<int> parity;    // +1 or -1 under spin flip

  bool projected() const { return momentum.has_value() || parity.has_value(); }
  friend bool operator==(const SymmetrySector&, const SymmetrySector&) = default;
};

std::string to_string(const SymmetrySector& sector);

/// Many-electron basis of the chain at fixed (n_up, n_down), optionally
/// reduced to one (momentum, spin-flip parity) sector. In a projected basis each
/// entry of states() is the orbit representative with the smallest packed key,
/// standing for the normalized symmetric combination of its orbit.
class SectorBasis {
 public:
  /// Coefficient that expresses the projection of an arbitrary configuration
  /// onto the sector: P|s> = amplitude * |basis vector index>.
  struct Projection {
    std::size_t index = 0;
    Complex amplitude{0.0, 0.0};
  };

  static SectorBasis full(int sites, int n_up, int n_down);
  static SectorBasis sector(int sites, int n_up, int n_down, SymmetrySector sector);

  int sites() const { return sites_; }
  int n_up() const { return n_up_; }
  int n_down() const { return n_down_; }
  const SymmetrySector& symmetry() const { return sector_; }
  std::size_t dimension() const { return states_.size(); }
  const std::vector<OccupationState>& states() const { return states_; }

  /// Squared norm of P|r> for each representative (1 for an unprojected basis).
  std::span<const double> norms() const { return norms_; }

  /// Index of a stored state, if present.
  std::optional<std::size_t> index_of(OccupationState state) const;

  /// Projection of an arbitrary configuration with the right particle numbers;
  /// empty when the configuration's orbit is annihilated by the projector.
  std::optional<Projection> project(OccupationState state) const;

  /// Coefficients of the basis vectors of this sector in the full configuration
  /// basis. Intended for tests and small systems.
  CMatrix embedding(const SectorBasis& full_basis) const;

  /// Short identifier, e.g. "L6_u3_d3_k0_p+1".
  std::string id() const;

 private:
  SectorBasis() = default;

  struct GroupImage {
    OccupationState state;
    int sign;
    Complex character;
  };
  std::vector<GroupImage> orbit(OccupationState state) const;

  int sites_ = 0;
  int n_up_ = 0;
  int n_down_ = 0;
  SymmetrySector sector_;
  std::vector<OccupationState> states_;
  std::vector<std::uint64_t> keys_;
  std::vector<double> norms_;
};

/// Number of k-element subsets of an n-element set.
std::uint64_t binomial(int n, int k);

/// All masks of the given width with exactly `count` bits set, ascending.
std::vector<std::uint32_t> masks_with_popcount(int width, int count);

SectorBasis build_full_basis(int sites, int n_up, int n_down);
SectorBasis build_sector_basis(int sites, int n_up, int n_down, int momentum_index,
                               int spin_flip_parity);

}  // namespace qhhg
