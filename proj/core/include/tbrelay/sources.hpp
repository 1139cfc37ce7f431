#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tbrelay/fock.hpp"

namespace tbrelay {

enum class PairStatistics { thermal, poissonian };

/// Spontaneous parametric down-conversion source.
///
/// `mean_pairs` is the mean pair number one undivided pump pulse produces in
/// the crystal. A source pumped through an unbalanced interferometer sees
/// two pump pulses carrying `pump_bin_fraction` of that power each.
struct SpdcSource {
  double mean_pairs = 0.0;
  PairStatistics statistics = PairStatistics::thermal;
  std::string signal_channel;
  std::string idler_channel;
  double pump_phase = 0.0;
  int internal_label = 0;
  double pump_bin_fraction = 0.25;
};

/// Wavepacket overlap between the two photons meeting at the Bell analyzer.
struct OverlapModel {
  double dip_fwhm = 144e-6;          // m
  double coherence_length = 150e-6;  // m

  /// Gaussian length scale of the amplitude overlap.
  double overlap_length() const;
};

inline constexpr double kDefaultMaxTailMass = 1e-4;

/// Single-mode pair-number probabilities P(0..n_cut), renormalized over the
/// kept range. Throws TailMassTooLarge if the dropped mass exceeds max_tail.
std::vector<double> pair_count_distribution(const SpdcSource& source, int n_cut,
                                            double max_tail = kDefaultMaxTailMass);

/// Untruncated single-mode probability of exactly n pairs at mean `mean`.
double pair_probability(PairStatistics statistics, double mean, int n);

/// Total pair-number distribution of a source pumped by two interferometer
/// pulses, each an independent single-mode emitter of mean
/// mean_pairs * pump_bin_fraction. Not renormalized; index n_cut+1 holds the
/// dropped tail.
std::vector<double> two_pulse_pair_distribution(const SpdcSource& source, int n_cut);

/// Converts a quoted "pair probability per pulse" P(n >= 1) into a mean.
double mean_from_pair_probability(PairStatistics statistics, double probability);

/// Normalized (c0 b0 + e^{i phi_p} c1 b1)^n |vac> on the source's channels
/// (signal = c, idler = b, subscripts are time bins).
FockState emit_entangled(std::shared_ptr<ModeRegistry> registry, const SpdcSource& source, int n_pairs,
                         int max_photons = kDefaultMaxPhotons);

/// Normalized (A^dagger h^dagger)^n |vac> in bin 0, where the signal creation
/// operator is overlap * a(internal 0) + sqrt(1 - overlap^2) * a(internal 1).
FockState emit_alice(std::shared_ptr<ModeRegistry> registry, const SpdcSource& source, int n_pairs,
                     double overlap, int max_photons = kDefaultMaxPhotons);

/// xi(dx) = exp(-(dx / l)^2), l chosen so that the coincidence dip (which
/// follows xi^2) has the model's FWHM.
double overlap_from_mismatch(double delta_x, const OverlapModel& model = {});

}  // namespace tbrelay
