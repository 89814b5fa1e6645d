#include "ocm/qlink_budget.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/gamma.hpp>
#include <fmt/format.h>

#include "ocm/errors.hpp"

namespace ocm::qlink {

double LinkBudget::total_efficiency() const {
  double eta = 1.0;
  for (const Stage& s : stages) eta *= s.efficiency;
  return eta;
}

void LinkBudget::validate() const {
  for (const Stage& s : stages) {
    if (!(s.efficiency > 0.0 && s.efficiency <= 1.0)) {
      fail(ErrorKind::Validation, fmt::format("stage '{}' efficiency {} outside (0, 1]", s.name, s.efficiency));
    }
  }
  if (!(scattering_rate_per_s >= 0.0) || !(dark_rate_per_s >= 0.0)) {
    fail(ErrorKind::Validation, "photon rates must be >= 0");
  }
  if (!(readout_window_us >= 0.0)) fail(ErrorKind::Validation, "readout window must be >= 0");
}

LinkBudget LinkBudget::defaults() {
  LinkBudget b;
  b.stages = {{"collection", collection_fraction(0.5, 1.0)},
              {"chip", db_to_fraction(0.055)},
              {"fiber+chip coupling", db_to_fraction(2.5)},
              {"detector", 0.7}};
  b.scattering_rate_per_s = 1.5e7;
  b.readout_window_us = 100.0;
  b.dark_rate_per_s = 100.0;
  return b;
}

double collection_fraction(double numerical_aperture, double medium_index) {
  if (!(numerical_aperture >= 0.0) || !(numerical_aperture < medium_index)) {
    fail(ErrorKind::Domain, fmt::format("numerical aperture {} must lie in [0, {})", numerical_aperture, medium_index));
  }
  const double s = numerical_aperture / medium_index;
  // 1 - cos(theta) = s^2 / (1 + cos(theta)), stable for small NA.
  const double c = std::sqrt(1.0 - s * s);
  return 0.5 * s * s / (1.0 + c);
}

double db_to_fraction(double loss_db) {
  if (!(loss_db >= 0.0)) fail(ErrorKind::Domain, "loss in dB must be >= 0");
  return std::pow(10.0, -loss_db / 10.0);
}

double fraction_to_db(double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) fail(ErrorKind::Domain, "transmission fraction must lie in (0, 1]");
  return -10.0 * std::log10(fraction);
}

double poisson_below(std::size_t threshold, double mu) {
  if (threshold == 0) return 0.0;
  if (mu == 0.0) return 1.0;
  return boost::math::gamma_q(static_cast<double>(threshold), mu);
}

double poisson_at_least(std::size_t threshold, double mu) {
  if (threshold == 0) return 1.0;
  if (mu == 0.0) return 0.0;
  return boost::math::gamma_p(static_cast<double>(threshold), mu);
}

ReadoutResult readout_error(const LinkBudget& budget) {
  budget.validate();
  const double window_s = budget.readout_window_us * 1e-6;
  const double mu_b = budget.scattering_rate_per_s * budget.total_efficiency() * window_s + budget.dark_rate_per_s * window_s;
  return readout_error(budget, static_cast<std::size_t>(std::ceil(mu_b + 6.0 * std::sqrt(mu_b))));
}

ReadoutResult readout_error(const LinkBudget& budget, std::size_t scan_limit) {
  budget.validate();
  ReadoutResult r;
  const double window_s = budget.readout_window_us * 1e-6;
  r.mean_dark = budget.dark_rate_per_s * window_s;
  r.mean_bright = budget.scattering_rate_per_s * budget.total_efficiency() * window_s + r.mean_dark;
  r.indistinguishable = !(r.mean_bright > r.mean_dark);

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t <= scan_limit; ++t) {
    ThresholdPoint p{t, poisson_below(t, r.mean_bright), poisson_at_least(t, r.mean_dark)};
    r.scan.push_back(p);
    const double worst = std::max(p.p_miss_bright, p.p_false_dark);
    if (worst < best) {
      best = worst;
      r.recommended_threshold = t;
      r.p_miss_bright = p.p_miss_bright;
      r.p_false_dark = p.p_false_dark;
    }
  }
  return r;
}

}  // namespace ocm::qlink
