#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace tbrelay {

using Complex = std::complex<double>;

inline constexpr int kDefaultMaxBins = 4;
inline constexpr int kDefaultMaxPhotons = 4;
inline constexpr int kMaxPhotonsLimit = 6;
inline constexpr double kPruneThreshold = 1e-15;

/// One optical mode: a spatial channel, a time bin, and a wavepacket label.
/// Internal label 0 is the reference wavepacket; 1 its orthogonal complement.
struct ModeKey {
  std::string spatial;
  int time_bin = 0;
  int internal = 0;

  auto operator<=>(const ModeKey&) const = default;
};

std::string to_string(const ModeKey& key);

/// Append-only registry mapping ModeKey to a dense index. Indices never move,
/// so a state built against an older snapshot stays valid after new modes
/// are appended.
class ModeRegistry {
 public:
  explicit ModeRegistry(int max_bins = kDefaultMaxBins);

  std::size_t add(const ModeKey& key);
  std::size_t ensure(const ModeKey& key);
  std::optional<std::size_t> find(const ModeKey& key) const;
  std::size_t index(const ModeKey& key) const;
  const ModeKey& key(std::size_t index) const;

  /// Registers a single fresh loss mode "loss-<n>" at bin 0.
  std::size_t add_loss_mode();
  /// Reserves a fresh spatial label "loss-<n>" without registering modes.
  std::string new_loss_channel();

  /// Indices of every registered mode of a spatial channel, in index order.
  std::vector<std::size_t> channel(std::string_view spatial) const;

  std::size_t size() const noexcept { return keys_.size(); }
  int max_bins() const noexcept { return max_bins_; }
  /// True when `other` holds this registry's keys as a prefix.
  bool is_prefix_of(const ModeRegistry& other) const;

 private:
  int max_bins_;
  std::vector<ModeKey> keys_;
  std::map<ModeKey, std::size_t> lookup_;
  int loss_channels_ = 0;
};

using Occupation = std::vector<std::uint8_t>;

struct Term {
  Occupation occupation;
  Complex amplitude;
};

int photon_count(const Occupation& occupation);

/// Sparse truncated Fock-space state. Immutable: every operation returns a
/// new value. Terms are kept sorted by occupation and pruned below 1e-15.
class FockState {
 public:
  static FockState vacuum(std::shared_ptr<const ModeRegistry> registry,
                          int max_photons = kDefaultMaxPhotons);
  static FockState from_terms(std::shared_ptr<const ModeRegistry> registry, int max_photons,
                              std::vector<Term> terms);

  const std::vector<Term>& terms() const noexcept { return terms_; }
  const ModeRegistry& registry() const noexcept { return *registry_; }
  const std::shared_ptr<const ModeRegistry>& registry_ptr() const noexcept { return registry_; }
  int max_photons() const noexcept { return max_photons_; }
  bool empty() const noexcept { return terms_.empty(); }

  double norm_squared() const;
  double norm() const;
  FockState normalized() const;
  FockState scaled(Complex factor) const;
  /// Keeps the terms whose occupation satisfies `keep`; not renormalized.
  FockState filtered(const std::function<bool(const Occupation&)>& keep) const;
  /// Re-homes the state on a registry extending the current one.
  FockState with_registry(std::shared_ptr<const ModeRegistry> registry) const;

  /// Amplitude of a basis occupation (zero if absent).
  Complex amplitude(const Occupation& occupation) const;

  FockState operator+(const FockState& other) const;

 private:
  FockState(std::shared_ptr<const ModeRegistry> registry, int max_photons, std::vector<Term> terms);

  std::shared_ptr<const ModeRegistry> registry_;
  int max_photons_ = kDefaultMaxPhotons;
  std::vector<Term> terms_;
};

/// Applies a creation operator; each term gains a factor sqrt(n+1).
/// Throws TruncationOverflow if any term would exceed max_photons.
FockState apply_creation(const FockState& state, std::size_t mode);

/// Substitutes a^dagger_j -> sum_k U(k, j) a^dagger_k over the listed modes and
/// re-expands. Column j of `matrix` is the image of mode_indices[j], so
/// transform(U2, transform(U1, s)) == transform(U2 * U1, s).
FockState mode_transform(const FockState& state, std::span<const std::size_t> mode_indices,
                         const Eigen::MatrixXcd& matrix);

/// |amplitude|^2 per occupation. Throws UnnormalizedState unless the norm is
/// one within 1e-9.
std::map<Occupation, double> occupation_distribution(const FockState& state);

/// <a|b>. Throws RegistryMismatch unless both states share a registry lineage.
Complex inner(const FockState& a, const FockState& b);

/// Product state of two states on disjoint occupied modes of one registry.
FockState tensor(const FockState& a, const FockState& b);

/// Marginal probability that `mode_indices` hold exactly `counts` photons in total.
double photon_number_probability(const FockState& state, std::span<const std::size_t> mode_indices,
                                 int counts);

}  // namespace tbrelay
