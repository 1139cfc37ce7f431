#pragma once

#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "tbrelay/fock.hpp"

namespace tbrelay {

/// Coupler between two modes. Acting on creation operators with
/// [[sqrt(t), i sqrt(1-t)], [i sqrt(1-t), sqrt(t)]], then e^{i phase} on mode_b.
struct BeamSplitter {
  std::size_t mode_a = 0;
  std::size_t mode_b = 0;
  double transmittance = 0.5;
  double phase = 0.0;
};

struct PhaseShift {
  std::size_t mode = 0;
  double phase = 0.0;
};

/// Relabels every mode of a spatial channel from bin t to bin t + bins.
struct BinDelay {
  std::string spatial;
  int bins = 1;
};

/// Attenuation; lowered to a BeamSplitter against `loss_mode`, which the
/// circuit registers when the element is added.
struct Loss {
  std::size_t mode = 0;
  double transmission = 1.0;
  std::size_t loss_mode = 0;
};

using Element = std::variant<BeamSplitter, PhaseShift, BinDelay, Loss>;

Eigen::Matrix2cd beam_splitter_matrix(double transmittance, double phase = 0.0);

class Circuit {
 public:
  explicit Circuit(std::shared_ptr<ModeRegistry> registry);

  /// Validates modes against the registry. A Loss gets a fresh loss mode.
  Circuit& add(Element element);
  Circuit& append(const Circuit& other);

  const std::vector<Element>& elements() const noexcept { return elements_; }
  const std::shared_ptr<ModeRegistry>& registry() const noexcept { return registry_; }
  bool empty() const noexcept { return elements_.empty(); }

 private:
  std::shared_ptr<ModeRegistry> registry_;
  std::vector<Element> elements_;
};

/// Applies the elements in order. Throws UnregisteredMode / BinOverflow.
FockState apply(const Circuit& circuit, const FockState& state);

/// Unbalanced Michelson on `spatial`: a_t -> 1/2 a_t + 1/2 e^{i phase} a_{t+1}
/// on the output port, remainder into a fresh time-binned loss channel (the
/// non-interfering port). Built from BeamSplitter/PhaseShift/BinDelay only,
/// so it stays unitary for inputs spread over several bins.
Circuit build_michelson(std::shared_ptr<ModeRegistry> registry, const std::string& spatial, double phase,
                        std::span<const int> input_bins, std::span<const int> internal_labels);

/// Loss element with T = 10^(-dB/10). Throws ConfigError for negative dB.
Loss loss_from_db(std::size_t mode, double db);
double transmission_from_db(double db);

}  // namespace tbrelay
