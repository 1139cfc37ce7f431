#include "tbrelay/fock.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "tbrelay/errors.hpp"

namespace tbrelay {

namespace {

struct OccupationHash {
  std::size_t operator()(const Occupation& occ) const noexcept {
    // FNV-1a
    std::size_t h = 1469598103934665603ull;
    for (auto v : occ) {
      h ^= v;
      h *= 1099511628211ull;
    }
    return h;
  }
};

using TermMap = std::unordered_map<Occupation, Complex, OccupationHash>;

std::vector<Term> to_sorted_terms(TermMap&& map) {
  std::vector<Term> terms;
  terms.reserve(map.size());
  for (auto& [occ, amp] : map) {
    if (std::abs(amp) >= kPruneThreshold) terms.push_back({occ, amp});
  }
  std::sort(terms.begin(), terms.end(),
            [](const Term& a, const Term& b) { return a.occupation < b.occupation; });
  return terms;
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

Occupation padded(const Occupation& occ, std::size_t size) {
  Occupation out = occ;
  out.resize(size, 0);
  return out;
}

void check_same_lineage(const FockState& a, const FockState& b) {
  if (a.registry_ptr() == b.registry_ptr()) return;
  if (a.registry().is_prefix_of(b.registry()) || b.registry().is_prefix_of(a.registry())) return;
  throw RegistryMismatch("states live on unrelated mode registries");
}

}  // namespace

std::string to_string(const ModeKey& key) {
  return key.spatial + "[" + std::to_string(key.time_bin) + "," + std::to_string(key.internal) + "]";
}

// ---------------------------------------------------------------------------
// ModeRegistry

ModeRegistry::ModeRegistry(int max_bins) : max_bins_(max_bins) {
  if (max_bins < 1) throw ConfigError("max_bins must be positive");
}

std::size_t ModeRegistry::add(const ModeKey& key) {
  if (key.time_bin < 0 || key.time_bin >= max_bins_) {
    throw BinOverflow("time bin " + std::to_string(key.time_bin) + " outside 0.." +
                      std::to_string(max_bins_ - 1) + " for " + to_string(key));
  }
  if (key.internal < 0 || key.internal > 1) {
    throw ConfigError("internal label must be 0 or 1: " + to_string(key));
  }
  if (lookup_.contains(key)) throw ConfigError("mode registered twice: " + to_string(key));
  keys_.push_back(key);
  lookup_.emplace(key, keys_.size() - 1);
  return keys_.size() - 1;
}

std::size_t ModeRegistry::ensure(const ModeKey& key) {
  if (auto found = find(key)) return *found;
  return add(key);
}

std::optional<std::size_t> ModeRegistry::find(const ModeKey& key) const {
  auto it = lookup_.find(key);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::size_t ModeRegistry::index(const ModeKey& key) const {
  if (auto found = find(key)) return *found;
  throw UnregisteredMode("unregistered mode " + to_string(key));
}

const ModeKey& ModeRegistry::key(std::size_t index) const {
  if (index >= keys_.size()) throw UnregisteredMode("mode index out of range");
  return keys_[index];
}

std::string ModeRegistry::new_loss_channel() {
  return "loss-" + std::to_string(loss_channels_++);
}

std::size_t ModeRegistry::add_loss_mode() { return add({new_loss_channel(), 0, 0}); }

std::vector<std::size_t> ModeRegistry::channel(std::string_view spatial) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    if (keys_[i].spatial == spatial) out.push_back(i);
  }
  return out;
}

bool ModeRegistry::is_prefix_of(const ModeRegistry& other) const {
  if (other.keys_.size() < keys_.size()) return false;
  return std::equal(keys_.begin(), keys_.end(), other.keys_.begin());
}

// ---------------------------------------------------------------------------
// FockState

int photon_count(const Occupation& occupation) {
  return std::accumulate(occupation.begin(), occupation.end(), 0);
}

FockState::FockState(std::shared_ptr<const ModeRegistry> registry, int max_photons,
                     std::vector<Term> terms)
    : registry_(std::move(registry)), max_photons_(max_photons), terms_(std::move(terms)) {}

FockState FockState::vacuum(std::shared_ptr<const ModeRegistry> registry, int max_photons) {
  if (!registry || registry->size() == 0) throw ConfigError("vacuum needs a non-empty registry");
  if (max_photons < 0 || max_photons > kMaxPhotonsLimit) {
    throw ConfigError("max_photons must lie in 0.." + std::to_string(kMaxPhotonsLimit));
  }
  Occupation zero(registry->size(), 0);
  return FockState(std::move(registry), max_photons, {{std::move(zero), Complex{1.0, 0.0}}});
}

FockState FockState::from_terms(std::shared_ptr<const ModeRegistry> registry, int max_photons,
                                std::vector<Term> terms) {
  TermMap map;
  for (auto& t : terms) {
    if (t.occupation.size() > registry->size()) throw DimensionMismatch("occupation longer than registry");
    if (photon_count(t.occupation) > max_photons) {
      throw TruncationOverflow("term exceeds max_photons=" + std::to_string(max_photons));
    }
    map[padded(t.occupation, registry->size())] += t.amplitude;
  }
  return FockState(std::move(registry), max_photons, to_sorted_terms(std::move(map)));
}

double FockState::norm_squared() const {
  double s = 0.0;
  for (const auto& t : terms_) s += std::norm(t.amplitude);
  return s;
}

double FockState::norm() const { return std::sqrt(norm_squared()); }

FockState FockState::normalized() const {
  const double n = norm();
  if (n == 0.0) throw UnnormalizedState("cannot normalize the zero state");
  return scaled(1.0 / n);
}

FockState FockState::scaled(Complex factor) const {
  std::vector<Term> out;
  out.reserve(terms_.size());
  for (const auto& t : terms_) {
    const Complex a = t.amplitude * factor;
    if (std::abs(a) >= kPruneThreshold) out.push_back({t.occupation, a});
  }
  return FockState(registry_, max_photons_, std::move(out));
}

FockState FockState::filtered(const std::function<bool(const Occupation&)>& keep) const {
  std::vector<Term> out;
  for (const auto& t : terms_) {
    if (keep(t.occupation)) out.push_back(t);
  }
  return FockState(registry_, max_photons_, std::move(out));
}

FockState FockState::with_registry(std::shared_ptr<const ModeRegistry> registry) const {
  if (!registry_->is_prefix_of(*registry)) {
    throw RegistryMismatch("target registry does not extend the state's registry");
  }
  std::vector<Term> out;
  out.reserve(terms_.size());
  for (const auto& t : terms_) out.push_back({padded(t.occupation, registry->size()), t.amplitude});
  return FockState(std::move(registry), max_photons_, std::move(out));
}

Complex FockState::amplitude(const Occupation& occupation) const {
  const Occupation key = padded(occupation, registry_->size());
  auto it = std::lower_bound(terms_.begin(), terms_.end(), key,
                             [](const Term& t, const Occupation& o) { return t.occupation < o; });
  if (it != terms_.end() && it->occupation == key) return it->amplitude;
  return {0.0, 0.0};
}

FockState FockState::operator+(const FockState& other) const {
  check_same_lineage(*this, other);
  const auto& reg = registry_->size() >= other.registry_->size() ? registry_ : other.registry_;
  TermMap map;
  for (const auto& t : terms_) map[padded(t.occupation, reg->size())] += t.amplitude;
  for (const auto& t : other.terms_) map[padded(t.occupation, reg->size())] += t.amplitude;
  return FockState(reg, std::max(max_photons_, other.max_photons_), to_sorted_terms(std::move(map)));
}

// ---------------------------------------------------------------------------
// Operations

FockState apply_creation(const FockState& state, std::size_t mode) {
  const auto& reg = state.registry_ptr();
  if (mode >= reg->size()) throw UnregisteredMode("creation on unregistered mode index");
  std::vector<Term> out;
  out.reserve(state.terms().size());
  for (const auto& t : state.terms()) {
    Occupation occ = padded(t.occupation, reg->size());
    if (photon_count(occ) + 1 > state.max_photons()) {
      throw TruncationOverflow("creation on " + to_string(reg->key(mode)) + " exceeds max_photons=" +
                               std::to_string(state.max_photons()));
    }
    const double factor = std::sqrt(static_cast<double>(occ[mode]) + 1.0);
    ++occ[mode];
    out.push_back({std::move(occ), t.amplitude * factor});
  }
  return FockState::from_terms(reg, state.max_photons(), std::move(out));
}

FockState mode_transform(const FockState& state, std::span<const std::size_t> mode_indices,
                         const Eigen::MatrixXcd& matrix) {
  const auto& reg = state.registry_ptr();
  const auto d = static_cast<Eigen::Index>(mode_indices.size());
  if (matrix.rows() != d || matrix.cols() != d) {
    throw DimensionMismatch("transform matrix is " + std::to_string(matrix.rows()) + "x" +
                            std::to_string(matrix.cols()) + " for " + std::to_string(d) + " modes");
  }
  for (auto m : mode_indices) {
    if (m >= reg->size()) throw UnregisteredMode("transform on unregistered mode index");
  }
  {
    std::vector<std::size_t> sorted(mode_indices.begin(), mode_indices.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw DimensionMismatch("transform lists a mode twice");
    }
  }

  // Expansion of the local creation polynomial depends only on the local
  // occupation, so it is memoized across terms.
  using LocalMap = std::unordered_map<Occupation, Complex, OccupationHash>;
  std::unordered_map<Occupation, std::vector<std::pair<Occupation, Complex>>, OccupationHash> cache;

  auto expand = [&](const Occupation& local_in) -> const std::vector<std::pair<Occupation, Complex>>& {
    auto it = cache.find(local_in);
    if (it != cache.end()) return it->second;
    LocalMap monomials;
    monomials.emplace(Occupation(static_cast<std::size_t>(d), 0), Complex{1.0, 0.0});
    double in_norm = 1.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      in_norm *= factorial(local_in[static_cast<std::size_t>(j)]);
      for (int p = 0; p < local_in[static_cast<std::size_t>(j)]; ++p) {
        LocalMap next;
        for (const auto& [mono, coef] : monomials) {
          for (Eigen::Index k = 0; k < d; ++k) {
            const Complex u = matrix(k, j);
            if (u == Complex{0.0, 0.0}) continue;
            Occupation m = mono;
            ++m[static_cast<std::size_t>(k)];
            next[m] += coef * u;
          }
        }
        monomials = std::move(next);
      }
    }
    std::vector<std::pair<Occupation, Complex>> result;
    result.reserve(monomials.size());
    const double inv_in = 1.0 / std::sqrt(in_norm);
    for (auto& [mono, coef] : monomials) {
      double out_norm = 1.0;
      for (auto c : mono) out_norm *= factorial(c);
      const Complex a = coef * inv_in * std::sqrt(out_norm);
      if (std::abs(a) >= kPruneThreshold) result.emplace_back(mono, a);
    }
    std::sort(result.begin(), result.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });
    return cache.emplace(local_in, std::move(result)).first->second;
  };

  TermMap out;
  Occupation local(static_cast<std::size_t>(d));
  for (const auto& t : state.terms()) {
    Occupation base = padded(t.occupation, reg->size());
    for (Eigen::Index j = 0; j < d; ++j) {
      local[static_cast<std::size_t>(j)] = base[mode_indices[static_cast<std::size_t>(j)]];
      base[mode_indices[static_cast<std::size_t>(j)]] = 0;
    }
    for (const auto& [mono, coef] : expand(local)) {
      Occupation occ = base;
      for (Eigen::Index k = 0; k < d; ++k) {
        occ[mode_indices[static_cast<std::size_t>(k)]] = mono[static_cast<std::size_t>(k)];
      }
      out[std::move(occ)] += t.amplitude * coef;
    }
  }
  return FockState::from_terms(reg, state.max_photons(), to_sorted_terms(std::move(out)));
}

std::map<Occupation, double> occupation_distribution(const FockState& state) {
  const double n2 = state.norm_squared();
  if (std::abs(n2 - 1.0) > 1e-9) {
    throw UnnormalizedState("state norm^2 is " + std::to_string(n2) + ", expected 1");
  }
  std::map<Occupation, double> out;
  for (const auto& t : state.terms()) out[t.occupation] += std::norm(t.amplitude);
  return out;
}

Complex inner(const FockState& a, const FockState& b) {
  check_same_lineage(a, b);
  const std::size_t size = std::max(a.registry().size(), b.registry().size());
  Complex sum{0.0, 0.0};
  // Both term lists are sorted; pad and merge.
  std::map<Occupation, Complex> bmap;
  for (const auto& t : b.terms()) bmap.emplace(padded(t.occupation, size), t.amplitude);
  for (const auto& t : a.terms()) {
    auto it = bmap.find(padded(t.occupation, size));
    if (it != bmap.end()) sum += std::conj(t.amplitude) * it->second;
  }
  return sum;
}

FockState tensor(const FockState& a, const FockState& b) {
  check_same_lineage(a, b);
  const auto& reg = a.registry().size() >= b.registry().size() ? a.registry_ptr() : b.registry_ptr();
  const int max_photons = std::max(a.max_photons(), b.max_photons());
  TermMap out;
  for (const auto& ta : a.terms()) {
    const Occupation oa = padded(ta.occupation, reg->size());
    for (const auto& tb : b.terms()) {
      const Occupation ob = padded(tb.occupation, reg->size());
      Occupation occ(reg->size());
      for (std::size_t i = 0; i < occ.size(); ++i) {
        if (oa[i] != 0 && ob[i] != 0) throw ConfigError("tensor factors overlap on " + to_string(reg->key(i)));
        occ[i] = static_cast<std::uint8_t>(oa[i] + ob[i]);
      }
      if (photon_count(occ) > max_photons) {
        throw TruncationOverflow("tensor product exceeds max_photons=" + std::to_string(max_photons));
      }
      out[std::move(occ)] += ta.amplitude * tb.amplitude;
    }
  }
  return FockState::from_terms(reg, max_photons, to_sorted_terms(std::move(out)));
}

double photon_number_probability(const FockState& state, std::span<const std::size_t> mode_indices,
                                 int counts) {
  double p = 0.0;
  for (const auto& t : state.terms()) {
    int n = 0;
    for (auto m : mode_indices) {
      if (m < t.occupation.size()) n += t.occupation[m];
    }
    if (n == counts) p += std::norm(t.amplitude);
  }
  return p;
}

}  // namespace tbrelay
