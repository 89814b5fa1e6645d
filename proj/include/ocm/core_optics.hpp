#pragma once

// Step-index waveguide mode physics in the scalar weak-guidance
// approximation. Units: transverse lengths in um, longitudinal in mm or cm
// as named, wavelengths in nm, coupling rates per mm.

#include <cstddef>
#include <span>
#include <vector>

namespace ocm::optics {

struct LossPoint {
  double wavelength_nm = 0.0;
  double db_per_cm = 0.0;
};

struct WaveguideSpec {
  double core_radius_um = 3.0;
  double delta_n = 3e-3;
  double cladding_index = 1.45;
  std::vector<LossPoint> loss_table;

  [[nodiscard]] double core_index() const { return cladding_index + delta_n; }
  [[nodiscard]] double numerical_aperture() const;

  /// Throws Validation if any invariant is broken.
  void validate() const;

  /// Femtosecond-written glass defaults. Only the 700 nm loss point is a
  /// measured figure; the rest of the table is placeholder data.
  static WaveguideSpec defaults();
};

/// Square sample grid centred on the guide axis. Samples are node-aligned:
/// coordinate(i) = -extent/2 + i * extent/(resolution-1), row-major (y, x).
struct FieldGrid {
  double extent_um = 0.0;
  std::size_t resolution = 0;
  std::vector<double> samples;

  [[nodiscard]] double spacing() const {
    return extent_um / static_cast<double>(resolution - 1);
  }
  [[nodiscard]] double coordinate(std::size_t i) const {
    return -0.5 * extent_um + static_cast<double>(i) * spacing();
  }
  [[nodiscard]] double at(std::size_t ix, std::size_t iy) const {
    return samples[iy * resolution + ix];
  }
  /// Bilinear interpolation; zero outside the window.
  [[nodiscard]] double sample(double x_um, double y_um) const;
  /// Trapezoidal integral of |field|^2 over the window.
  [[nodiscard]] double power() const;
};

struct ModeProfile {
  double wavelength_nm = 0.0;
  double v_number = 0.0;
  double u = 0.0;  // core transverse parameter
  double w = 0.0;  // cladding decay parameter
  double mfd_um = 0.0;
  double core_radius_um = 0.0;
  /// Unit-power normalized amplitude samples.
  FieldGrid field;
};

/// Exponential coupling law kappa(d) = kappa0 * exp(-d / d0).
struct CouplingModel {
  double wavelength_nm = 0.0;
  double kappa0_per_mm = 0.0;
  double d0_um = 0.0;
  double fit_r2 = 0.0;
  double d_min_um = 0.0;
  double d_max_um = 0.0;

  [[nodiscard]] double predict(double separation_um) const;
};

struct KappaSample {
  double separation_um = 0.0;
  double kappa_per_mm = 0.0;
};

/// Solution of the LP01 characteristic equation for a given V.
struct Lp01 {
  double v = 0.0;
  double u = 0.0;
  double w = 0.0;

  /// Field at radius rho = r/a, scaled to 1 at the core boundary.
  [[nodiscard]] double field(double rho) const;
  /// Integral of field^2 over the core disk, in units of a^2.
  [[nodiscard]] double core_power() const;
  /// Integral of field^2 over rho > rho0 (rho0 >= 1), in units of a^2.
  [[nodiscard]] double cladding_power_beyond(double rho0) const;
  [[nodiscard]] double total_power() const { return core_power() + cladding_power_beyond(1.0); }
  [[nodiscard]] double core_fraction() const { return core_power() / total_power(); }
};

inline constexpr double kMarcuseMinV = 0.8;
inline constexpr double kSingleModeCutoff = 2.404825557695773;
inline constexpr double kMaxTruncatedPower = 1e-4;

[[nodiscard]] double v_number(const WaveguideSpec& spec, double wavelength_nm);

/// MFD / (2a) from the Marcuse polynomial.
[[nodiscard]] double marcuse_ratio(double v);

[[nodiscard]] double mode_field_diameter(const WaveguideSpec& spec, double wavelength_nm);

/// Bracketed root of U J1(U)/J0(U) = W K1(W)/K0(W), U^2 + W^2 = V^2.
[[nodiscard]] Lp01 solve_lp01(double v);

inline constexpr double kDefaultWindowMfds = 6.0;
inline constexpr std::size_t kDefaultResolution = 256;

[[nodiscard]] ModeProfile solve_mode(const WaveguideSpec& spec, double wavelength_nm,
                                     double window_um, std::size_t resolution);
[[nodiscard]] ModeProfile solve_mode(const WaveguideSpec& spec, double wavelength_nm);

/// Gaussian beam exp(-r^2/w^2), w = mfd/2, sampled and normalized on a grid.
[[nodiscard]] FieldGrid gaussian_field(double mfd_um, double window_um, std::size_t resolution);

/// |<a|b>|^2 / (<a|a><b|b>). b is resampled onto a's grid when they differ.
[[nodiscard]] double overlap_efficiency(const FieldGrid& a, const FieldGrid& b);

[[nodiscard]] double gaussian_coupling_efficiency(const ModeProfile& profile, double gaussian_mfd_um);

/// Coupling rate between two identical parallel guides from the overlap
/// integral of the index perturbation over the neighbouring core.
[[nodiscard]] double coupling_constant(const WaveguideSpec& spec, double wavelength_nm,
                                       double separation_um);

/// Log-space linear regression of kappa against separation.
[[nodiscard]] CouplingModel fit_exponential(std::span<const KappaSample> samples,
                                            double wavelength_nm);

[[nodiscard]] double attenuation_db_per_cm(const WaveguideSpec& spec, double wavelength_nm);

[[nodiscard]] double propagation_transmission(const WaveguideSpec& spec, double wavelength_nm,
                                              double path_length_cm);

}  // namespace ocm::optics
