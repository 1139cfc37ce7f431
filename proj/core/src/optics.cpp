#include "tbrelay/optics.hpp"

#include <cmath>
#include <numbers>
#include <set>

#include "tbrelay/errors.hpp"

namespace tbrelay {

namespace {

void require_mode(const ModeRegistry& registry, std::size_t mode) {
  if (mode >= registry.size()) {
    throw UnregisteredMode("element references unregistered mode index " + std::to_string(mode));
  }
}

FockState apply_bin_delay(const FockState& state, const BinDelay& delay) {
  const auto& reg = state.registry();
  const auto modes = reg.channel(delay.spatial);
  // source index -> destination index, or npos when the shifted bin does not exist
  constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::vector<std::pair<std::size_t, std::size_t>> moves;
  for (auto m : modes) {
    const ModeKey& k = reg.key(m);
    auto dest = reg.find({k.spatial, k.time_bin + delay.bins, k.internal});
    moves.emplace_back(m, dest ? *dest : npos);
  }
  std::vector<Term> out;
  out.reserve(state.terms().size());
  for (const auto& t : state.terms()) {
    Occupation occ = t.occupation;
    occ.resize(reg.size(), 0);
    Occupation shifted = occ;
    for (auto [src, dst] : moves) shifted[src] = 0;
    for (auto [src, dst] : moves) {
      if (occ[src] == 0) continue;
      if (dst == npos) {
        throw BinOverflow("delaying " + to_string(reg.key(src)) + " by " + std::to_string(delay.bins) +
                          " leaves the registered bins (max_bins=" + std::to_string(reg.max_bins()) + ")");
      }
      shifted[dst] = static_cast<std::uint8_t>(shifted[dst] + occ[src]);
    }
    out.push_back({std::move(shifted), t.amplitude});
  }
  return FockState::from_terms(state.registry_ptr(), state.max_photons(), std::move(out));
}

}  // namespace

Eigen::Matrix2cd beam_splitter_matrix(double transmittance, double phase) {
  const double r = std::sqrt(1.0 - transmittance);
  const double t = std::sqrt(transmittance);
  const Complex i{0.0, 1.0};
  Eigen::Matrix2cd m;
  m << t, i * r, i * r, t;
  m.row(1) *= std::polar(1.0, phase);
  return m;
}

Circuit::Circuit(std::shared_ptr<ModeRegistry> registry) : registry_(std::move(registry)) {
  if (!registry_) throw ConfigError("circuit needs a registry");
}

Circuit& Circuit::add(Element element) {
  std::visit(
      [&](auto& e) {
        using E = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<E, BeamSplitter>) {
          require_mode(*registry_, e.mode_a);
          require_mode(*registry_, e.mode_b);
          if (e.mode_a == e.mode_b) throw ConfigError("beam splitter needs two distinct modes");
          if (!(e.transmittance >= 0.0 && e.transmittance <= 1.0)) {
            throw ConfigError("beam splitter transmittance outside [0,1]");
          }
        } else if constexpr (std::is_same_v<E, PhaseShift>) {
          require_mode(*registry_, e.mode);
        } else if constexpr (std::is_same_v<E, BinDelay>) {
          if (registry_->channel(e.spatial).empty()) {
            throw UnregisteredMode("bin delay on unregistered channel '" + e.spatial + "'");
          }
        } else {
          require_mode(*registry_, e.mode);
          if (!(e.transmission >= 0.0 && e.transmission <= 1.0)) {
            throw ConfigError("loss transmission outside [0,1]");
          }
          e.loss_mode = registry_->add_loss_mode();
        }
      },
      element);
  elements_.push_back(std::move(element));
  return *this;
}

Circuit& Circuit::append(const Circuit& other) {
  if (other.registry_ != registry_) throw RegistryMismatch("appending a circuit built on another registry");
  elements_.insert(elements_.end(), other.elements_.begin(), other.elements_.end());
  return *this;
}

FockState apply(const Circuit& circuit, const FockState& state) {
  if (!state.registry().is_prefix_of(*circuit.registry())) {
    throw RegistryMismatch("state is not on the circuit's registry");
  }
  FockState current = state.with_registry(circuit.registry());
  for (const auto& element : circuit.elements()) {
    current = std::visit(
        [&](const auto& e) -> FockState {
          using E = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<E, BeamSplitter>) {
            const std::size_t modes[] = {e.mode_a, e.mode_b};
            return mode_transform(current, modes, beam_splitter_matrix(e.transmittance, e.phase));
          } else if constexpr (std::is_same_v<E, PhaseShift>) {
            const std::size_t modes[] = {e.mode};
            Eigen::MatrixXcd m(1, 1);
            m(0, 0) = std::polar(1.0, e.phase);
            return mode_transform(current, modes, m);
          } else if constexpr (std::is_same_v<E, BinDelay>) {
            return apply_bin_delay(current, e);
          } else {
            if (e.transmission == 1.0) return current;
            const std::size_t modes[] = {e.mode, e.loss_mode};
            return mode_transform(current, modes, beam_splitter_matrix(e.transmission));
          }
        },
        element);
  }
  return current;
}

Circuit build_michelson(std::shared_ptr<ModeRegistry> registry, const std::string& spatial, double phase,
                        std::span<const int> input_bins, std::span<const int> internal_labels) {
  Circuit circuit(registry);
  const std::string arm = registry->new_loss_channel();
  std::set<int> bins(input_bins.begin(), input_bins.end());
  std::set<int> out_bins = bins;
  for (int b : bins) {
    if (b + 1 >= registry->max_bins()) {
      throw BinOverflow("interferometer on " + spatial + " would delay bin " + std::to_string(b) +
                        " past max_bins=" + std::to_string(registry->max_bins()));
    }
    out_bins.insert(b + 1);
  }
  for (int label : internal_labels) {
    for (int b : out_bins) {
      registry->ensure({spatial, b, label});
      registry->ensure({arm, b, label});
    }
  }
  // Split: short arm stays on `spatial`, long arm on `arm`.
  for (int label : internal_labels) {
    for (int b : bins) {
      circuit.add(BeamSplitter{registry->index({spatial, b, label}), registry->index({arm, b, label}), 0.5});
    }
  }
  // The recombining coupler contributes -1 on the delayed path; pi restores
  // the +e^{i phase} convention on the output port.
  for (int label : internal_labels) {
    for (int b : bins) {
      circuit.add(PhaseShift{registry->index({arm, b, label}), phase + std::numbers::pi});
    }
  }
  circuit.add(BinDelay{arm, 1});
  for (int label : internal_labels) {
    for (int b : out_bins) {
      circuit.add(BeamSplitter{registry->index({spatial, b, label}), registry->index({arm, b, label}), 0.5});
    }
  }
  return circuit;
}

double transmission_from_db(double db) {
  if (!(db >= 0.0)) throw ConfigError("loss in dB must be non-negative");
  return std::pow(10.0, -db / 10.0);
}

Loss loss_from_db(std::size_t mode, double db) { return Loss{mode, transmission_from_db(db), 0}; }

}  // namespace tbrelay
