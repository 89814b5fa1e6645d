#include "ocm/clink_aod.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "ocm/errors.hpp"

namespace ocm::aod {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double rsd_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  if (!(mean > 0.0)) return std::numeric_limits<double>::infinity();
  double var = 0.0;
  for (const double x : v) var += (x - mean) * (x - mean);
  return std::sqrt(var / n) / mean;
}

}  // namespace

double Deflector::efficiency(double frequency_mhz) const {
  const auto& c = efficiency_curve;
  if (c.empty()) return 1.0;
  if (frequency_mhz <= c.front().frequency_mhz) return c.front().efficiency;
  if (frequency_mhz >= c.back().frequency_mhz) return c.back().efficiency;
  const auto hi = std::upper_bound(c.begin(), c.end(), frequency_mhz,
                                   [](double f, const EfficiencyPoint& p) { return f < p.frequency_mhz; });
  const auto lo = std::prev(hi);
  const double t = (frequency_mhz - lo->frequency_mhz) / (hi->frequency_mhz - lo->frequency_mhz);
  return lo->efficiency + t * (hi->efficiency - lo->efficiency);
}

double Deflector::angle_rad(double frequency_mhz) const {
  return wavelength_nm * 1e-9 * frequency_mhz * 1e6 / acoustic_velocity_m_s;
}

double Deflector::position_um(double frequency_mhz) const { return focal_length_mm * 1e3 * angle_rad(frequency_mhz); }

double Deflector::spacing_for_pitch(double pitch_um) const {
  return pitch_um / (focal_length_mm * 1e3 * wavelength_nm * 1e-3 / acoustic_velocity_m_s);
}

double Deflector::switching_latency_us() const { return beam_diameter_mm * 1e-3 / acoustic_velocity_m_s * 1e6; }

std::vector<EfficiencyPoint> tilted_efficiency_curve(double lo_mhz, double hi_mhz, double tilt) {
  if (!(hi_mhz > lo_mhz)) fail(ErrorKind::Domain, "tilted curve needs hi > lo");
  if (!(tilt >= 0.0 && tilt < 1.0)) fail(ErrorKind::Domain, "tilt must lie in [0, 1)");
  const double mean = 1.0 / (1.0 + tilt);
  return {{lo_mhz, mean * (1.0 - tilt)}, {hi_mhz, 1.0}};
}

void Deflector::validate() const {
  if (!(acoustic_velocity_m_s > 0 && center_frequency_mhz > 0 && bandwidth_mhz > 0 && focal_length_mm > 0 &&
        wavelength_nm > 0 && total_power_budget > 0 && beam_diameter_mm > 0)) {
    fail(ErrorKind::Validation, "deflector constants must be positive");
  }
  if (bandwidth_mhz >= 2.0 * center_frequency_mhz) fail(ErrorKind::Validation, "deflector band reaches 0 MHz");
  for (std::size_t i = 0; i < efficiency_curve.size(); ++i) {
    const auto& p = efficiency_curve[i];
    if (!(p.efficiency >= 0.0 && p.efficiency <= 1.0)) {
      fail(ErrorKind::Validation, "diffraction efficiency must lie in [0, 1]");
    }
    if (i > 0 && !(p.frequency_mhz > efficiency_curve[i - 1].frequency_mhz)) {
      fail(ErrorKind::Validation, "efficiency curve frequencies must be strictly increasing");
    }
  }
}

double TonePlan::drive_power() const {
  double p = 0.0;
  for (const Tone& t : tones) p += t.amplitude * t.amplitude;
  return p;
}

void TonePlan::validate() const {
  for (std::size_t i = 0; i < tones.size(); ++i) {
    const Tone& t = tones[i];
    if (i > 0 && !(t.frequency_mhz > tones[i - 1].frequency_mhz)) {
      fail(ErrorKind::Validation, "tone frequencies must be strictly increasing");
    }
    if (t.frequency_mhz < deflector.min_frequency_mhz() || t.frequency_mhz > deflector.max_frequency_mhz()) {
      fail(ErrorKind::Validation, fmt::format("tone for channel {} at {:.6f} MHz is outside the deflector band",
                                              t.channel, t.frequency_mhz));
    }
    if (!(t.amplitude >= 0.0 && t.amplitude <= 1.0)) fail(ErrorKind::Validation, "tone amplitude outside [0, 1]");
  }
  if (drive_power() > deflector.total_power_budget * (1.0 + 1e-12)) {
    fail(ErrorKind::Validation, "tone plan exceeds the deflector power budget");
  }
}

PlanReport plan_tones(const std::vector<std::size_t>& selected_channels, double base_frequency_mhz,
                      double spacing_mhz, const Deflector& deflector, double facet_pitch_um) {
  deflector.validate();
  if (!(spacing_mhz > 0.0)) fail(ErrorKind::Domain, "tone spacing must be positive");
  std::vector<std::size_t> channels = selected_channels;
  std::sort(channels.begin(), channels.end());
  if (std::adjacent_find(channels.begin(), channels.end()) != channels.end()) {
    fail(ErrorKind::Validation, "selected channels contain duplicates");
  }

  PlanReport report;
  report.plan.deflector = deflector;
  report.plan.spacing_mhz = spacing_mhz;
  report.plan.base_frequency_mhz = base_frequency_mhz;
  const double per_step_um = deflector.position_um(base_frequency_mhz + spacing_mhz) - deflector.position_um(base_frequency_mhz);
  report.achieved_pitch_um = per_step_um;
  report.required_spacing_mhz = deflector.spacing_for_pitch(facet_pitch_um);
  report.pitch_matched = std::abs(per_step_um - facet_pitch_um) <= 0.05 * facet_pitch_um;
  if (channels.empty()) return report;

  const double amplitude = std::sqrt(deflector.total_power_budget / static_cast<double>(channels.size()));
  const double count = static_cast<double>(channels.size());
  for (std::size_t m = 0; m < channels.size(); ++m) {
    const std::size_t k = channels[m];
    const double f = base_frequency_mhz + static_cast<double>(k) * spacing_mhz;
    if (f < deflector.min_frequency_mhz() || f > deflector.max_frequency_mhz()) {
      fail(ErrorKind::Validation, fmt::format("bandwidth exceeded: channel {} needs {:.6f} MHz, band is [{:.6f}, {:.6f}] MHz",
                                              k, f, deflector.min_frequency_mhz(), deflector.max_frequency_mhz()));
    }
    const double md = static_cast<double>(m);
    const double phase = std::fmod(std::numbers::pi * md * md / count, 2.0 * std::numbers::pi);
    report.plan.tones.push_back({k, f, std::min(amplitude, 1.0), phase});
    report.positions_um.push_back(deflector.position_um(f));
  }
  return report;
}

std::vector<IntermodProduct> intermod_spectrum(const TonePlan& plan, double third_order_coeff) {
  if (!(third_order_coeff >= 0.0)) fail(ErrorKind::Domain, "third-order coefficient must be >= 0");
  const auto& t = plan.tones;
  const std::size_t n = t.size();
  std::vector<IntermodProduct> out;
  if (n < 2) return out;
  const double half = 0.5 * plan.spacing_mhz;
  const double lo = t.front().frequency_mhz - half;
  const double hi = t.back().frequency_mhz + half;

  const auto classify = [&](IntermodProduct& p) {
    p.in_band = p.frequency_mhz >= lo && p.frequency_mhz <= hi;
    double best = std::numeric_limits<double>::infinity();
    for (const Tone& tone : t) {
      const double d = std::abs(tone.frequency_mhz - p.frequency_mhz);
      if (d < half && d < best) {
        best = d;
        p.colliding_channel = tone.channel;
      }
    }
  };

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      IntermodProduct p;
      p.frequency_mhz = 2.0 * t[i].frequency_mhz - t[j].frequency_mhz;
      p.amplitude = third_order_coeff * t[i].amplitude * t[i].amplitude * t[j].amplitude;
      p.sources = {i, j};
      classify(p);
      out.push_back(std::move(p));
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i || k == j) continue;
        IntermodProduct p;
        p.frequency_mhz = t[i].frequency_mhz + t[j].frequency_mhz - t[k].frequency_mhz;
        p.amplitude = third_order_coeff * t[i].amplitude * t[j].amplitude * t[k].amplitude;
        p.sources = {i, j, k};
        classify(p);
        out.push_back(std::move(p));
      }
    }
  }
  return out;
}

double IntensityReadout::mean() const {
  if (intensities.empty()) return 0.0;
  return std::accumulate(intensities.begin(), intensities.end(), 0.0) / static_cast<double>(intensities.size());
}

double IntensityReadout::rsd() const { return rsd_of(intensities); }

double IntensityReadout::intensity_of_channel(std::size_t channel) const {
  for (std::size_t s = 0; s < channel_of_site.size(); ++s) {
    if (channel_of_site[s] == channel) return intensities[s];
  }
  fail(ErrorKind::Validation, fmt::format("channel {} is not routed to any site", channel));
}

IntensityReadout simulate_intensities(const TonePlan& plan, const SystemModel& system) {
  if (!system.route || !system.xmatrix) fail(ErrorKind::Validation, "system model needs a route and a crosstalk matrix");
  const route::RoutePlan& route = *system.route;
  const xtalk::CrosstalkMatrix& x = *system.xmatrix;
  const std::size_t n = route.assignment.size();
  const auto check = [n](std::size_t size, const char* what) {
    if (size != 0 && size != n) fail(ErrorKind::Validation, fmt::format("dimension mismatch: {} has {} entries, route has {}", what, size, n));
  };
  if (x.n_channels != n) fail(ErrorKind::Validation, fmt::format("dimension mismatch: crosstalk matrix is {} x {}, route has {} channels", x.n_channels, x.n_channels, n));
  check(system.channel_transmissions.size(), "channel transmissions");
  check(system.launch_efficiencies.size(), "launch efficiencies");

  std::vector<double> launched(n, 0.0);
  for (const Tone& tone : plan.tones) {
    if (tone.channel >= n) fail(ErrorKind::Validation, fmt::format("tone addresses channel {} beyond {} routed channels", tone.channel, n));
    launched[tone.channel] += plan.deflector.efficiency(tone.frequency_mhz) * tone.amplitude * tone.amplitude;
  }
  if (system.third_order_coeff > 0.0) {
    // Products land on whichever input port their frequency addresses,
    // selected or not.
    const double s = plan.spacing_mhz;
    for (const IntermodProduct& p : intermod_spectrum(plan, system.third_order_coeff)) {
      std::optional<std::size_t> target = p.colliding_channel;
      if (s > 0.0) {
        const double k = std::round((p.frequency_mhz - plan.base_frequency_mhz) / s);
        target.reset();
        if (k >= 0.0 && k < static_cast<double>(n) &&
            std::abs(p.frequency_mhz - (plan.base_frequency_mhz + k * s)) < 0.5 * s) {
          target = static_cast<std::size_t>(k);
        }
      }
      if (target && *target < n) {
        launched[*target] += plan.deflector.efficiency(p.frequency_mhz) * p.amplitude * p.amplitude;
      }
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!system.launch_efficiencies.empty()) launched[k] *= system.launch_efficiencies[k];
  }

  IntensityReadout readout;
  readout.site_ids.resize(n);
  readout.channel_of_site.resize(n);
  readout.intensities.assign(n, 0.0);
  std::iota(readout.site_ids.begin(), readout.site_ids.end(), 0);
  for (std::size_t j = 0; j < n; ++j) {
    double out = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (launched[i] != 0.0) out += launched[i] * x(i, j);
    }
    if (!system.channel_transmissions.empty()) out *= system.channel_transmissions[j];
    const std::size_t site = route.assignment[j];
    readout.intensities[site] = out;
    readout.channel_of_site[site] = j;
  }
  return readout;
}

namespace {

// Intensities of the sites lit by the plan's tones, in tone order.
std::vector<double> lit_intensities(const TonePlan& plan, const IntensityReadout& r) {
  std::vector<double> v;
  v.reserve(plan.tones.size());
  for (const Tone& t : plan.tones) v.push_back(r.intensity_of_channel(t.channel));
  return v;
}

}  // namespace

CalibrationResult calibrate_uniformity(const TonePlan& initial, const SystemFn& system, double target_uniformity,
                                       std::size_t max_iter) {
  if (!(target_uniformity <= 1.0)) fail(ErrorKind::Domain, "target uniformity must be <= 1");
  CalibrationResult result;
  TonePlan plan = initial;
  IntensityReadout readout = system(plan);
  std::vector<double> lit = lit_intensities(plan, readout);
  double rsd = rsd_of(lit);

  const auto amplitudes = [](const TonePlan& p) {
    std::vector<double> a;
    for (const Tone& t : p.tones) a.push_back(t.amplitude);
    return a;
  };
  result.amplitude_history.push_back(amplitudes(plan));
  result.rsd_history.push_back(rsd);

  const double peak = lit.empty() ? 0.0 : *std::max_element(lit.begin(), lit.end());
  for (std::size_t m = 0; m < lit.size(); ++m) {
    if (!(lit[m] > 1e-12 * peak)) result.dead_channels.push_back(plan.tones[m].channel);
  }

  double alpha = 1.0;
  const double budget = plan.deflector.total_power_budget;
  while (1.0 - rsd < target_uniformity && result.iterations < max_iter && alpha > 1e-6) {
    ++result.iterations;
    const double target = median(lit);
    TonePlan trial = plan;
    for (std::size_t m = 0; m < trial.tones.size(); ++m) {
      if (!(lit[m] > 1e-12 * peak)) continue;
      trial.tones[m].amplitude *= std::pow(target / lit[m], 0.5 * alpha);
    }
    const double power = trial.drive_power();
    if (power > 0.0) {
      const double scale = std::sqrt(budget / power);
      for (Tone& t : trial.tones) t.amplitude *= scale;
    }
    IntensityReadout trial_readout = system(trial);
    std::vector<double> trial_lit = lit_intensities(trial, trial_readout);
    const double trial_rsd = rsd_of(trial_lit);
    if (trial_rsd <= rsd) {
      plan = std::move(trial);
      readout = std::move(trial_readout);
      lit = std::move(trial_lit);
      rsd = trial_rsd;
      result.amplitude_history.push_back(amplitudes(plan));
      result.rsd_history.push_back(rsd);
    } else {
      alpha *= 0.5;
    }
  }
  result.converged = 1.0 - rsd >= target_uniformity;
  result.final_readout = std::move(readout);
  result.final_plan = std::move(plan);
  return result;
}

Mask Mask::parse(const std::string& text) {
  Mask mask;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
    if (line.empty()) continue;
    if (mask.cols == 0) mask.cols = line.size();
    if (line.size() != mask.cols) {
      fail(ErrorKind::Io, fmt::format("mask row {} has {} cells, expected {}", mask.rows, line.size(), mask.cols));
    }
    for (const char c : line) {
      if (c != '#' && c != '.') fail(ErrorKind::Io, fmt::format("mask contains '{}'; only '#' and '.' are allowed", c));
      mask.on.push_back(c == '#');
    }
    ++mask.rows;
  }
  if (mask.rows == 0) fail(ErrorKind::Io, "mask is empty");
  return mask;
}

Mask Mask::filled(std::size_t rows, std::size_t cols, bool value) { return Mask{rows, cols, std::vector<bool>(rows * cols, value)}; }

std::string Mask::render() const {
  std::string out;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out += at(r, c) ? '#' : '.';
    out += '\n';
  }
  return out;
}

PatternSelection render_pattern(const Mask& mask, const route::RoutePlan& route) {
  const auto& out = route.output;
  if (out.pattern != route::FacetPattern::Grid || out.rows != mask.rows || out.cols != mask.cols) {
    fail(ErrorKind::Validation, fmt::format("mask is {}x{} but the output facet grid is {}x{}", mask.rows, mask.cols,
                                            out.rows, out.cols));
  }
  const std::size_t n = route.assignment.size();
  std::vector<std::size_t> channel_of_site(n, n);
  for (std::size_t k = 0; k < n; ++k) channel_of_site[route.assignment[k]] = k;

  PatternSelection sel;
  for (std::size_t r = 0; r < mask.rows; ++r) {
    for (std::size_t c = 0; c < mask.cols; ++c) {
      if (!mask.at(r, c)) continue;
      const std::size_t site = r * mask.cols + c;
      if (site >= n) fail(ErrorKind::Validation, fmt::format("mask site ({}, {}) has no routed channel", r, c));
      sel.channels.push_back(channel_of_site[site]);
    }
  }
  std::sort(sel.channels.begin(), sel.channels.end());

  // Forward-map the selection back onto the lattice for the printed check.
  Mask lit = Mask::filled(mask.rows, mask.cols, false);
  for (const std::size_t k : sel.channels) lit.on[route.assignment[k]] = true;
  sel.rendering = lit.render();
  return sel;
}

}  // namespace ocm::aod
