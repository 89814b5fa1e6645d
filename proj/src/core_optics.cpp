#include "ocm/core_optics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include "ocm/errors.hpp"

namespace ocm::optics {

namespace {

constexpr double kPi = std::numbers::pi;

double bessel_j(double nu, double x) { return std::cyl_bessel_j(nu, x); }
double bessel_k(double nu, double x) { return std::cyl_bessel_k(nu, x); }

void require_wavelength(double wavelength_nm) {
  if (!(wavelength_nm > 0.0) || !std::isfinite(wavelength_nm)) {
    fail(ErrorKind::Domain, fmt::format("wavelength must be positive, got {} nm", wavelength_nm));
  }
}

}  // namespace

double WaveguideSpec::numerical_aperture() const {
  const double n1 = core_index();
  return std::sqrt(n1 * n1 - cladding_index * cladding_index);
}

void WaveguideSpec::validate() const {
  if (!(core_radius_um > 0.0)) fail(ErrorKind::Validation, "waveguide: core_radius must be > 0");
  if (!(delta_n > 0.0)) fail(ErrorKind::Validation, "waveguide: delta_n must be > 0");
  if (!(cladding_index > 1.0)) fail(ErrorKind::Validation, "waveguide: cladding_index must be > 1");
  for (std::size_t i = 0; i < loss_table.size(); ++i) {
    if (!(loss_table[i].db_per_cm >= 0.0)) {
      fail(ErrorKind::Validation, "waveguide: loss_table attenuations must be >= 0");
    }
    if (i > 0 && !(loss_table[i].wavelength_nm > loss_table[i - 1].wavelength_nm)) {
      fail(ErrorKind::Validation, "waveguide: loss_table wavelengths must be strictly increasing");
    }
  }
}

WaveguideSpec WaveguideSpec::defaults() {
  WaveguideSpec spec;
  spec.core_radius_um = 3.0;
  spec.delta_n = 3e-3;
  spec.cladding_index = 1.45;
  spec.loss_table = {{420.0, 0.12}, {700.0, 0.055}, {780.0, 0.05}, {1013.0, 0.04}, {1550.0, 0.03}};
  return spec;
}

double FieldGrid::sample(double x_um, double y_um) const {
  const double h = spacing();
  const double fx = (x_um + 0.5 * extent_um) / h;
  const double fy = (y_um + 0.5 * extent_um) / h;
  const double last = static_cast<double>(resolution - 1);
  if (fx < 0.0 || fy < 0.0 || fx > last || fy > last) return 0.0;
  const auto ix = std::min(static_cast<std::size_t>(fx), resolution - 2);
  const auto iy = std::min(static_cast<std::size_t>(fy), resolution - 2);
  const double tx = fx - static_cast<double>(ix);
  const double ty = fy - static_cast<double>(iy);
  return (1 - tx) * (1 - ty) * at(ix, iy) + tx * (1 - ty) * at(ix + 1, iy) +
         (1 - tx) * ty * at(ix, iy + 1) + tx * ty * at(ix + 1, iy + 1);
}

namespace {

// Trapezoid weights on a node-aligned grid.
double trapezoid_weight(std::size_t i, std::size_t n) { return (i == 0 || i + 1 == n) ? 0.5 : 1.0; }

double grid_inner(const FieldGrid& a, const std::vector<double>& b) {
  const std::size_t n = a.resolution;
  double sum = 0.0;
  for (std::size_t iy = 0; iy < n; ++iy) {
    const double wy = trapezoid_weight(iy, n);
    for (std::size_t ix = 0; ix < n; ++ix) {
      sum += wy * trapezoid_weight(ix, n) * a.samples[iy * n + ix] * b[iy * n + ix];
    }
  }
  const double h = a.spacing();
  return sum * h * h;
}

}  // namespace

double FieldGrid::power() const { return grid_inner(*this, samples); }

double CouplingModel::predict(double separation_um) const {
  return kappa0_per_mm * std::exp(-separation_um / d0_um);
}

double Lp01::field(double rho) const {
  if (rho <= 1.0) return bessel_j(0, u * rho) / bessel_j(0, u);
  return bessel_k(0, w * rho) / bessel_k(0, w);
}

double Lp01::core_power() const {
  const double j0 = bessel_j(0, u);
  const double j1 = bessel_j(1, u);
  return kPi * (1.0 + (j1 * j1) / (j0 * j0));
}

double Lp01::cladding_power_beyond(double rho0) const {
  // int_x0^inf x K0(x)^2 dx = x0^2 (K1(x0)^2 - K0(x0)^2) / 2
  const double x0 = w * rho0;
  const double k0 = bessel_k(0, x0);
  const double k1 = bessel_k(1, x0);
  const double kw = bessel_k(0, w);
  return kPi / (w * w) * x0 * x0 * (k1 * k1 - k0 * k0) / (kw * kw);
}

double v_number(const WaveguideSpec& spec, double wavelength_nm) {
  require_wavelength(wavelength_nm);
  const double lambda_um = wavelength_nm * 1e-3;
  return 2.0 * kPi * spec.core_radius_um / lambda_um * spec.numerical_aperture();
}

double marcuse_ratio(double v) {
  return 0.65 + 1.619 / std::pow(v, 1.5) + 2.879 / std::pow(v, 6.0);
}

double mode_field_diameter(const WaveguideSpec& spec, double wavelength_nm) {
  const double v = v_number(spec, wavelength_nm);
  if (!(v > kMarcuseMinV)) {
    fail(ErrorKind::Domain,
         fmt::format("weakly-guided out-of-model: V = {:.4f} <= {} at {} nm", v, kMarcuseMinV,
                     wavelength_nm));
  }
  return 2.0 * spec.core_radius_um * marcuse_ratio(v);
}

Lp01 solve_lp01(double v) {
  if (!(v > kMarcuseMinV) || !(v < 3.0 * kSingleModeCutoff)) {
    fail(ErrorKind::Domain, fmt::format("mode solve needs V in ({}, {}), got {:.6f}", kMarcuseMinV,
                                        3.0 * kSingleModeCutoff, v));
  }
  const auto mismatch = [v](double u) {
    const double w = std::sqrt(std::max(v * v - u * u, 0.0));
    return u * bessel_j(1, u) / bessel_j(0, u) - w * bessel_k(1, w) / bessel_k(0, w);
  };
  const double upper = std::min(v, kSingleModeCutoff);
  const double lo = 1e-9 * upper;
  const double hi = upper * (1.0 - 1e-12);
  const double f_lo = mismatch(lo);
  const double f_hi = mismatch(hi);
  if (!(f_lo < 0.0 && f_hi > 0.0)) {
    fail(ErrorKind::Numeric, fmt::format("mode-solve failed: no sign change in bracket at V = {}", v));
  }
  std::uintmax_t max_iter = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(
      mismatch, lo, hi, f_lo, f_hi, boost::math::tools::eps_tolerance<double>(52), max_iter);
  if (max_iter >= 200) fail(ErrorKind::Numeric, "mode-solve failed: root finder did not converge");
  Lp01 sol;
  sol.v = v;
  sol.u = 0.5 * (a + b);
  sol.w = std::sqrt(v * v - sol.u * sol.u);
  return sol;
}

ModeProfile solve_mode(const WaveguideSpec& spec, double wavelength_nm, double window_um,
                       std::size_t resolution) {
  spec.validate();
  const double v = v_number(spec, wavelength_nm);
  const Lp01 sol = solve_lp01(v);
  const double mfd = mode_field_diameter(spec, wavelength_nm);
  if (resolution < 3) fail(ErrorKind::Domain, "mode grid needs at least 3 samples per axis");
  if (window_um < 4.0 * mfd) {
    fail(ErrorKind::Domain,
         fmt::format("window truncation: window {:.3f} um is below 4 x MFD ({:.3f} um)", window_um,
                     4.0 * mfd));
  }
  // Power outside the inscribed circle bounds the power outside the square.
  const double a = spec.core_radius_um;
  const double outside = sol.cladding_power_beyond(0.5 * window_um / a) / sol.total_power();
  if (outside > kMaxTruncatedPower) {
    fail(ErrorKind::Domain, fmt::format("window truncation: {:.3e} of mode power outside {:.3f} um window",
                                        outside, window_um));
  }

  ModeProfile profile;
  profile.wavelength_nm = wavelength_nm;
  profile.v_number = v;
  profile.u = sol.u;
  profile.w = sol.w;
  profile.mfd_um = mfd;
  profile.core_radius_um = a;
  profile.field.extent_um = window_um;
  profile.field.resolution = resolution;
  profile.field.samples.resize(resolution * resolution);
  for (std::size_t iy = 0; iy < resolution; ++iy) {
    const double y = profile.field.coordinate(iy);
    for (std::size_t ix = 0; ix < resolution; ++ix) {
      const double x = profile.field.coordinate(ix);
      profile.field.samples[iy * resolution + ix] = sol.field(std::hypot(x, y) / a);
    }
  }
  const double norm = std::sqrt(profile.field.power());
  for (double& s : profile.field.samples) s /= norm;
  return profile;
}

ModeProfile solve_mode(const WaveguideSpec& spec, double wavelength_nm) {
  const double mfd = mode_field_diameter(spec, wavelength_nm);
  return solve_mode(spec, wavelength_nm, kDefaultWindowMfds * mfd, kDefaultResolution);
}

FieldGrid gaussian_field(double mfd_um, double window_um, std::size_t resolution) {
  if (!(mfd_um > 0.0)) fail(ErrorKind::Domain, "gaussian MFD must be positive");
  if (resolution < 3) fail(ErrorKind::Domain, "gaussian grid needs at least 3 samples per axis");
  const double w = 0.5 * mfd_um;
  const double radius = 0.5 * window_um;
  if (std::exp(-2.0 * radius * radius / (w * w)) > kMaxTruncatedPower) {
    fail(ErrorKind::Domain, fmt::format("window truncation: gaussian of MFD {:.3f} um exceeds {:.3f} um window",
                                        mfd_um, window_um));
  }
  FieldGrid grid;
  grid.extent_um = window_um;
  grid.resolution = resolution;
  grid.samples.resize(resolution * resolution);
  for (std::size_t iy = 0; iy < resolution; ++iy) {
    const double y = grid.coordinate(iy);
    for (std::size_t ix = 0; ix < resolution; ++ix) {
      const double x = grid.coordinate(ix);
      grid.samples[iy * resolution + ix] = std::exp(-(x * x + y * y) / (w * w));
    }
  }
  const double norm = std::sqrt(grid.power());
  for (double& s : grid.samples) s /= norm;
  return grid;
}

double overlap_efficiency(const FieldGrid& a, const FieldGrid& b) {
  std::vector<double> other;
  const bool same_grid = a.resolution == b.resolution && std::abs(a.extent_um - b.extent_um) <= 1e-12 * a.extent_um;
  if (same_grid) {
    other = b.samples;
  } else {
    other.resize(a.samples.size());
    for (std::size_t iy = 0; iy < a.resolution; ++iy) {
      for (std::size_t ix = 0; ix < a.resolution; ++ix) {
        other[iy * a.resolution + ix] = b.sample(a.coordinate(ix), a.coordinate(iy));
      }
    }
  }
  const double ab = grid_inner(a, other);
  const double aa = a.power();
  const double bb = FieldGrid{a.extent_um, a.resolution, std::move(other)}.power();
  if (!(aa > 0.0) || !(bb > 0.0)) fail(ErrorKind::Numeric, "overlap of a zero field");
  return std::clamp(ab * ab / (aa * bb), 0.0, 1.0);
}

double gaussian_coupling_efficiency(const ModeProfile& profile, double gaussian_mfd_um) {
  const FieldGrid gauss = gaussian_field(gaussian_mfd_um, profile.field.extent_um, profile.field.resolution);
  return overlap_efficiency(profile.field, gauss);
}

double coupling_constant(const WaveguideSpec& spec, double wavelength_nm, double separation_um) {
  spec.validate();
  const double a = spec.core_radius_um;
  if (!(separation_um > 2.0 * a)) {
    fail(ErrorKind::Domain, fmt::format("separation {:.3f} um overlaps cores (needs > {:.3f} um)",
                                        separation_um, 2.0 * a));
  }
  const Lp01 sol = solve_lp01(v_number(spec, wavelength_nm));
  const double lambda_um = wavelength_nm * 1e-3;
  const double k0 = 2.0 * kPi / lambda_um;
  const double n1 = spec.core_index();
  const double n2 = spec.cladding_index;
  const double beta = std::sqrt(k0 * k0 * n1 * n1 - (sol.u / a) * (sol.u / a));

  // Overlap of guide 1's evanescent tail with guide 2's core field, in
  // polar coordinates about guide 2 (units of a). Trapezoid in angle is
  // spectrally accurate for the periodic integrand.
  const double rho_d = separation_um / a;
  constexpr int kAngles = 128;
  const auto ring = [&](double rho) {
    double sum = 0.0;
    for (int k = 0; k < kAngles; ++k) {
      const double phi = kPi * (static_cast<double>(k) + 0.5) / kAngles;
      const double rho1 = std::sqrt(rho_d * rho_d + rho * rho + 2.0 * rho_d * rho * std::cos(phi));
      sum += sol.field(rho1);
    }
    return 2.0 * kPi * sum / kAngles * rho * sol.field(rho);
  };
  const double overlap = boost::math::quadrature::gauss<double, 40>::integrate(ring, 0.0, 1.0);
  const double kappa_per_um = k0 * k0 * (n1 * n1 - n2 * n2) / (2.0 * beta) * overlap / sol.total_power();
  return kappa_per_um * 1e3;
}

CouplingModel fit_exponential(std::span<const KappaSample> samples, double wavelength_nm) {
  if (samples.size() < 3) fail(ErrorKind::Numeric, "fit error: need at least 3 samples");
  double sx = 0, sy = 0;
  for (const auto& s : samples) {
    if (!(s.kappa_per_mm > 0.0)) fail(ErrorKind::Numeric, "fit error: kappa samples must be positive");
    sx += s.separation_um;
    sy += std::log(s.kappa_per_mm);
  }
  const double n = static_cast<double>(samples.size());
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& s : samples) {
    const double dx = s.separation_um - mx;
    const double dy = std::log(s.kappa_per_mm) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      if (samples[i].separation_um == samples[j].separation_um) {
        fail(ErrorKind::Numeric, "fit error: separations must be distinct");
      }
    }
  }
  const double slope = sxy / sxx;
  if (!(slope < 0.0)) fail(ErrorKind::Numeric, "fit error: kappa does not decay with separation");
  CouplingModel model;
  model.wavelength_nm = wavelength_nm;
  model.d0_um = -1.0 / slope;
  model.kappa0_per_mm = std::exp(my - slope * mx);
  model.fit_r2 = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end(), [](const auto& l, const auto& r) {
    return l.separation_um < r.separation_um;
  });
  model.d_min_um = lo->separation_um;
  model.d_max_um = hi->separation_um;
  return model;
}

double attenuation_db_per_cm(const WaveguideSpec& spec, double wavelength_nm) {
  require_wavelength(wavelength_nm);
  const auto& table = spec.loss_table;
  if (table.empty()) fail(ErrorKind::Range, "loss table is empty");
  if (wavelength_nm < table.front().wavelength_nm || wavelength_nm > table.back().wavelength_nm) {
    fail(ErrorKind::Range, fmt::format("wavelength {} nm outside loss table [{}, {}] nm", wavelength_nm,
                                       table.front().wavelength_nm, table.back().wavelength_nm));
  }
  if (table.size() == 1) return table.front().db_per_cm;
  const auto hi = std::upper_bound(table.begin(), table.end(), wavelength_nm,
                                   [](double w, const LossPoint& p) { return w < p.wavelength_nm; });
  if (hi == table.end()) return table.back().db_per_cm;
  const auto lo = std::prev(hi);
  const double t = (wavelength_nm - lo->wavelength_nm) / (hi->wavelength_nm - lo->wavelength_nm);
  return lo->db_per_cm + t * (hi->db_per_cm - lo->db_per_cm);
}

double propagation_transmission(const WaveguideSpec& spec, double wavelength_nm, double path_length_cm) {
  if (!(path_length_cm >= 0.0)) fail(ErrorKind::Domain, "path length must be >= 0");
  const double alpha = attenuation_db_per_cm(spec, wavelength_nm);
  return std::pow(10.0, -alpha * path_length_cm / 10.0);
}

}  // namespace ocm::optics
