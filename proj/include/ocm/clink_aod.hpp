#pragma once

// Classical control link: multi-tone RF drive of an acousto-optic
// deflector, the beam positions it produces on the input facet, third-order
// intermodulation, simulated per-site intensities through the chip, and
// amplitude calibration for uniform spot arrays.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ocm/coupled_mode.hpp"
#include "ocm/router.hpp"

namespace ocm::aod {

struct EfficiencyPoint {
  double frequency_mhz = 0.0;
  double efficiency = 0.0;
};

/// Deflector constants. All values are tool defaults, not measured data.
struct Deflector {
  double acoustic_velocity_m_s = 650.0;
  double center_frequency_mhz = 100.0;
  double bandwidth_mhz = 50.0;
  double focal_length_mm = 200.0;
  double wavelength_nm = 420.0;
  double total_power_budget = 1.0;
  double beam_diameter_mm = 1.0;
  /// Piecewise-linear diffraction efficiency over frequency; flat 1.0 if empty.
  std::vector<EfficiencyPoint> efficiency_curve;

  [[nodiscard]] double min_frequency_mhz() const { return center_frequency_mhz - 0.5 * bandwidth_mhz; }
  [[nodiscard]] double max_frequency_mhz() const { return center_frequency_mhz + 0.5 * bandwidth_mhz; }
  [[nodiscard]] double efficiency(double frequency_mhz) const;
  /// Deflection angle (rad) for a drive frequency: lambda * f / v.
  [[nodiscard]] double angle_rad(double frequency_mhz) const;
  /// Beam position (um) in the focal plane: F * theta.
  [[nodiscard]] double position_um(double frequency_mhz) const;
  /// Frequency step (MHz) that moves the beam by `pitch_um`.
  [[nodiscard]] double spacing_for_pitch(double pitch_um) const;
  /// Acoustic transit time across the beam (us), the switching latency.
  [[nodiscard]] double switching_latency_us() const;

  void validate() const;
};

/// Linear efficiency ramp across [lo, hi] with relative deviation +-tilt
/// about its mean; the peak efficiency is 1.
std::vector<EfficiencyPoint> tilted_efficiency_curve(double lo_mhz, double hi_mhz, double tilt);

struct Tone {
  std::size_t channel = 0;
  double frequency_mhz = 0.0;
  double amplitude = 0.0;
  double phase_rad = 0.0;
};

struct TonePlan {
  std::vector<Tone> tones;
  Deflector deflector;
  double spacing_mhz = 0.0;
  double base_frequency_mhz = 0.0;

  /// Sum of squared amplitudes.
  [[nodiscard]] double drive_power() const;
  void validate() const;
};

struct PlanReport {
  TonePlan plan;
  /// Beam position (um) of each tone in the focal plane.
  std::vector<double> positions_um;
  double achieved_pitch_um = 0.0;
  double required_spacing_mhz = 0.0;
  bool pitch_matched = true;  // within 5% of the facet pitch
};

/// Channel k gets base + k * spacing; amplitudes share the power budget
/// equally.
PlanReport plan_tones(const std::vector<std::size_t>& selected_channels, double base_frequency_mhz,
                      double spacing_mhz, const Deflector& deflector, double facet_pitch_um);

struct IntermodProduct {
  double frequency_mhz = 0.0;
  double amplitude = 0.0;
  std::vector<std::size_t> sources;  // tone indices: (i, j) for 2fi-fj, (i, j, k) for fi+fj-fk
  bool in_band = false;
  std::optional<std::size_t> colliding_channel;
};

/// Third-order products 2fi - fj and fi + fj - fk. Products within half a
/// spacing of the plan's frequency span are in band; those within half a
/// spacing of a planned tone collide with its channel.
std::vector<IntermodProduct> intermod_spectrum(const TonePlan& plan, double third_order_coeff);

struct IntensityReadout {
  std::vector<std::size_t> site_ids;
  /// Input channel routed to each site.
  std::vector<std::size_t> channel_of_site;
  std::vector<double> intensities;

  [[nodiscard]] double mean() const;
  [[nodiscard]] double rsd() const;
  [[nodiscard]] double uniformity() const { return 1.0 - rsd(); }
  [[nodiscard]] double intensity_of_channel(std::size_t channel) const;
};

struct SystemModel {
  const route::RoutePlan* route = nullptr;
  const xtalk::CrosstalkMatrix* xmatrix = nullptr;
  std::vector<double> channel_transmissions;
  std::vector<double> launch_efficiencies;
  double third_order_coeff = 0.0;
};

/// Per-input power eta(f_k) a_k^2 plus the intermod power whose frequency addresses that port, then
/// launch efficiency, crosstalk, and channel transmission to each site.
IntensityReadout simulate_intensities(const TonePlan& plan, const SystemModel& system);

struct CalibrationResult {
  std::size_t iterations = 0;
  std::vector<std::vector<double>> amplitude_history;
  std::vector<double> rsd_history;  // accepted steps only, starting with the initial plan
  IntensityReadout final_readout;
  TonePlan final_plan;
  bool converged = false;
  std::vector<std::size_t> dead_channels;
};

using SystemFn = std::function<IntensityReadout(const TonePlan&)>;

/// Multiplicative amplitude feedback toward the median site intensity with
/// power-budget renormalization and step rejection on RSD increase.
CalibrationResult calibrate_uniformity(const TonePlan& initial, const SystemFn& system, double target_uniformity,
                                       std::size_t max_iter);

struct Mask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<bool> on;  // row-major

  [[nodiscard]] bool at(std::size_t r, std::size_t c) const { return on[r * cols + c]; }
  static Mask parse(const std::string& text);
  static Mask filled(std::size_t rows, std::size_t cols, bool value);
  [[nodiscard]] std::string render() const;
};

struct PatternSelection {
  std::vector<std::size_t> channels;  // ascending
  std::string rendering;
};

/// Input channels whose routed sites are exactly the lit mask cells.
PatternSelection render_pattern(const Mask& mask, const route::RoutePlan& route);

}  // namespace ocm::aod
