#pragma once

// Quantum link budget: photon collection from a qubit through the optical
// chain, insertion-loss bookkeeping, and Poisson readout error.

#include <cstddef>
#include <string>
#include <vector>

namespace ocm::qlink {

struct Stage {
  std::string name;
  double efficiency = 1.0;
};

struct LinkBudget {
  std::vector<Stage> stages;
  double scattering_rate_per_s = 0.0;
  double readout_window_us = 100.0;
  double dark_rate_per_s = 0.0;

  /// Product of stage efficiencies.
  [[nodiscard]] double total_efficiency() const;
  void validate() const;

  /// Collection (NA 0.5 in vacuum), chip propagation, fiber-array coupling
  /// at 2.5 dB, and detector. Rates are placeholders.
  static LinkBudget defaults();
};

/// Solid-angle fraction (1 - cos theta)/2 collected by an objective of the
/// given NA from an isotropic emitter in a medium of index n.
double collection_fraction(double numerical_aperture, double medium_index = 1.0);

double db_to_fraction(double loss_db);
double fraction_to_db(double fraction);

/// P(N < t) for N ~ Poisson(mu).
double poisson_below(std::size_t threshold, double mu);
/// P(N >= t) for N ~ Poisson(mu).
double poisson_at_least(std::size_t threshold, double mu);

struct ThresholdPoint {
  std::size_t threshold = 0;
  double p_miss_bright = 0.0;
  double p_false_dark = 0.0;
};

struct ReadoutResult {
  double mean_bright = 0.0;
  double mean_dark = 0.0;
  double p_miss_bright = 0.0;
  double p_false_dark = 0.0;
  std::size_t recommended_threshold = 0;
  bool indistinguishable = false;
  std::vector<ThresholdPoint> scan;
};

/// Bright counts ~ Poisson(rate * eta * T + dark * T), dark counts ~
/// Poisson(dark * T). A state is called bright when counts >= threshold;
/// the threshold minimizes max(p_miss, p_false) over
/// [0, ceil(mu_b + 6 sqrt(mu_b))], or over [0, scan_limit] when given.
ReadoutResult readout_error(const LinkBudget& budget);
ReadoutResult readout_error(const LinkBudget& budget, std::size_t scan_limit);

}  // namespace ocm::qlink
