#pragma once

// Coupled-mode propagation through routed waveguide bundles and the
// crosstalk statistics derived from the resulting power transfer matrix.

#include <cstddef>
#include <utility>
#include <vector>

#include "ocm/core_optics.hpp"
#include "ocm/router.hpp"

namespace ocm::xtalk {

/// power(i, j): fraction of unit power launched into input channel i that
/// leaves through output channel j.
struct CrosstalkMatrix {
  std::size_t n_channels = 0;
  std::vector<double> power;
  double wavelength_nm = 0.0;
  bool lossy = false;

  CrosstalkMatrix() = default;
  CrosstalkMatrix(std::size_t n, double wavelength, bool with_loss)
      : n_channels(n), power(n * n, 0.0), wavelength_nm(wavelength), lossy(with_loss) {}

  double& operator()(std::size_t i, std::size_t j) { return power[i * n_channels + j]; }
  double operator()(std::size_t i, std::size_t j) const { return power[i * n_channels + j]; }
  [[nodiscard]] double row_sum(std::size_t i) const;

  static CrosstalkMatrix identity(std::size_t n, double wavelength_nm = 0.0);
  /// Entries in [0,1]; lossless rows sum to 1 within `tol`, lossy rows to <= 1.
  void validate(double tol = 1e-9) const;
};

struct CrosstalkMetrics {
  double max_offdiag = 0.0;
  double avg_nearest_input = 0.0;
  double avg_nearest_output = 0.0;
  double avg_non_nearest = 0.0;
};

/// X = k^2/(k^2+(db/2)^2) sin^2(sqrt(k^2+(db/2)^2) L). kappa and detuning
/// per mm, length in mm.
double two_guide_crosstalk(double kappa_per_mm, double length_mm, double detuning_per_mm = 0.0);

struct PropagateOptions {
  double rtol = 1e-10;
  double atol = 1e-14;
  /// Optional per-channel propagation-constant offsets (per mm).
  std::vector<double> detuning_per_mm;
  /// Coupling rates below this (per mm) are treated as zero.
  double kappa_floor_per_mm = 1e-12;
  /// Largest separation change of a coupled pair across one interval, as a
  /// fraction of d0, before the interval is subdivided.
  double max_separation_step = 0.2;
};

/// Integrates dA/dz = -i C(z) A over the plan with C from the exponential
/// coupling law. Optional loss multiplies output channel j by its path
/// transmission.
CrosstalkMatrix propagate(const route::RoutePlan& plan, const optics::CouplingModel& model,
                          const optics::WaveguideSpec& spec, double wavelength_nm, bool apply_loss,
                          const PropagateOptions& options = {});

/// Ordered channel pairs (a, b), a != b, whose ports sit at the minimal
/// pairwise distance on a facet.
std::vector<std::pair<std::size_t, std::size_t>> nearest_pairs(const std::vector<route::Port>& ports);

CrosstalkMetrics matrix_metrics(const CrosstalkMatrix& x, const route::FacetLayout& input,
                                const route::FacetLayout& output, const route::Assignment& assignment);

}  // namespace ocm::xtalk
