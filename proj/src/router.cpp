#include "ocm/router.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "ocm/errors.hpp"

namespace ocm::route {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEndpointTolUm = 1e-3;

// Samples are stored at nm resolution so exported plans re-import exactly.
double quantize_um(double v) { return std::round(v * 1e3) * 1e-3; }
double quantize_mm(double v) { return std::round(v * 1e6) * 1e-6; }

double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return 0.5 * (1.0 - std::cos(kPi * t));
}

double distance(const PathPoint& a, const PathPoint& b) { return std::hypot(a.x_um - b.x_um, a.y_um - b.y_um); }

PathPoint interpolate(const ChannelPath& path, double z_mm) {
  const auto& pts = path.points;
  if (z_mm <= pts.front().z_mm) return pts.front();
  if (z_mm >= pts.back().z_mm) return pts.back();
  const auto hi = std::upper_bound(pts.begin(), pts.end(), z_mm,
                                   [](double z, const PathPoint& p) { return z < p.z_mm; });
  const auto lo = std::prev(hi);
  const double t = (z_mm - lo->z_mm) / (hi->z_mm - lo->z_mm);
  return {lo->x_um + t * (hi->x_um - lo->x_um), lo->y_um + t * (hi->y_um - lo->y_um), z_mm};
}

bool same_sampling(const ChannelPath& a, const ChannelPath& b) {
  if (a.points.size() != b.points.size()) return false;
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    if (a.points[i].z_mm != b.points[i].z_mm) return false;
  }
  return true;
}

double path_length_mm(const std::vector<PathPoint>& pts) {
  double total = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double dx = (pts[i].x_um - pts[i - 1].x_um) * 1e-3;
    const double dy = (pts[i].y_um - pts[i - 1].y_um) * 1e-3;
    total += std::sqrt(dx * dx + dy * dy + (pts[i].z_mm - pts[i - 1].z_mm) * (pts[i].z_mm - pts[i - 1].z_mm));
  }
  return total;
}

double max_discrete_curvature(const ChannelPath& path, std::size_t* at = nullptr) {
  double best = 0.0;
  for (std::size_t i = 1; i + 1 < path.points.size(); ++i) {
    const double k = discrete_curvature(path.points[i - 1], path.points[i], path.points[i + 1]);
    if (k > best) {
      best = k;
      if (at) *at = i;
    }
  }
  return best;
}

bool windows_overlap(const PathSchedule& s) {
  return std::max(s.y_begin, s.x_begin) < std::min(s.y_end, s.x_end);
}

ChannelPath build_path(const Port& from, const Port& to, double chip_length_mm, const PathSchedule& schedule) {
  const auto intervals =
      static_cast<std::size_t>(std::ceil(chip_length_mm * 1e3 / schedule.max_dz_um - 1e-9));
  const std::size_t n = std::max<std::size_t>(intervals, 1);
  ChannelPath path;
  path.points.resize(n + 1);
  const double y0 = schedule.y_begin * chip_length_mm;
  const double ly = (schedule.y_end - schedule.y_begin) * chip_length_mm;
  const double x0 = schedule.x_begin * chip_length_mm;
  const double lx = (schedule.x_end - schedule.x_begin) * chip_length_mm;
  for (std::size_t i = 0; i <= n; ++i) {
    const double z = chip_length_mm * static_cast<double>(i) / static_cast<double>(n);
    const double sy = smooth_step((z - y0) / ly);
    const double sx = smooth_step((z - x0) / lx);
    path.points[i] = {quantize_um(from.x_um + (to.x_um - from.x_um) * sx),
                      quantize_um(from.y_um + (to.y_um - from.y_um) * sy), quantize_mm(z)};
  }
  path.points.front() = {from.x_um, from.y_um, 0.0};
  path.points.back() = {to.x_um, to.y_um, chip_length_mm};
  path.length_mm = path_length_mm(path.points);
  return path;
}

double analytic_curvature(const Port& from, const Port& to, double chip_length_mm, const PathSchedule& s) {
  const double ky = raised_cosine_max_curvature(std::abs(to.y_um - from.y_um), (s.y_end - s.y_begin) * chip_length_mm);
  const double kx = raised_cosine_max_curvature(std::abs(to.x_um - from.x_um), (s.x_end - s.x_begin) * chip_length_mm);
  // Disjoint windows: the peaks never coincide. Otherwise bound by the norm
  // of the two peak second derivatives.
  return windows_overlap(s) ? std::hypot(kx, ky) : std::max(kx, ky);
}

}  // namespace

void FacetLayout::validate() const {
  for (std::size_t i = 0; i < ports.size(); ++i) {
    for (std::size_t j = i + 1; j < ports.size(); ++j) {
      if (ports[i].x_um == ports[j].x_um && ports[i].y_um == ports[j].y_um) {
        fail(ErrorKind::Validation, fmt::format("facet ports {} and {} coincide", i, j));
      }
    }
  }
  if (pattern == FacetPattern::Linear && ports.size() >= 2) {
    const double dx = ports[1].x_um - ports[0].x_um;
    const double dy = ports[1].y_um - ports[0].y_um;
    for (std::size_t i = 1; i < ports.size(); ++i) {
      const double ex = ports[i].x_um - ports[i - 1].x_um;
      const double ey = ports[i].y_um - ports[i - 1].y_um;
      if (std::abs(ex - dx) > 1e-6 || std::abs(ey - dy) > 1e-6) {
        fail(ErrorKind::Validation, fmt::format("linear facet is not equally spaced at port {}", i));
      }
    }
  }
  if (pattern == FacetPattern::Grid && rows * cols < ports.size()) {
    fail(ErrorKind::Validation, "grid facet has more ports than sites");
  }
}

void RouteConstraints::validate() const {
  if (!(d_min_um > 0 && r_min_mm > 0 && chip_length_mm > 0 && max_depth_mm > 0)) {
    fail(ErrorKind::Validation, "route constraints must all be positive");
  }
}

void PathSchedule::validate() const {
  const auto ok = [](double b, double e) { return 0.0 <= b && b < e && e <= 1.0; };
  if (!ok(y_begin, y_end) || !ok(x_begin, x_end)) {
    fail(ErrorKind::Validation, "path schedule windows must satisfy 0 <= begin < end <= 1");
  }
  if (!(max_dz_um > 0.0) || max_dz_um > 50.0) {
    fail(ErrorKind::Validation, "path sample spacing must be in (0, 50] um");
  }
}

std::pair<FacetLayout, FacetLayout> make_facets(std::size_t n, double input_pitch_um, std::size_t grid_rows,
                                                std::size_t grid_cols, double output_pitch_um) {
  if (grid_rows * grid_cols < n) {
    fail(ErrorKind::Validation,
         fmt::format("grid {}x{} has {} sites, fewer than {} channels", grid_rows, grid_cols, grid_rows * grid_cols, n));
  }
  if (!(input_pitch_um > 0.0) || !(output_pitch_um > 0.0)) fail(ErrorKind::Validation, "facet pitches must be positive");

  FacetLayout input;
  input.facet = FacetId::Input;
  input.pattern = FacetPattern::Linear;
  input.pitch_um = input_pitch_um;
  const double mid = 0.5 * static_cast<double>(n == 0 ? 0 : n - 1);
  for (std::size_t k = 0; k < n; ++k) input.ports.push_back({(static_cast<double>(k) - mid) * input_pitch_um, 0.0});

  FacetLayout output;
  output.facet = FacetId::Output;
  output.pattern = FacetPattern::Grid;
  output.pitch_um = output_pitch_um;
  output.rows = grid_rows;
  output.cols = grid_cols;
  // Centre the occupied block of sites on the axis.
  const std::size_t used_cols = std::min(n, grid_cols);
  const std::size_t used_rows = grid_cols == 0 ? 0 : (n + grid_cols - 1) / grid_cols;
  const double col_mid = 0.5 * static_cast<double>(used_cols == 0 ? 0 : used_cols - 1);
  const double row_mid = 0.5 * static_cast<double>(used_rows == 0 ? 0 : used_rows - 1);
  for (std::size_t s = 0; s < n; ++s) {
    const auto r = static_cast<double>(s / grid_cols);
    const auto c = static_cast<double>(s % grid_cols);
    output.ports.push_back({(c - col_mid) * output_pitch_um, (row_mid - r) * output_pitch_um});
  }
  return {input, output};
}

CostMatrix displacement_cost(const FacetLayout& input, const FacetLayout& output) {
  if (input.size() != output.size()) {
    fail(ErrorKind::Validation, fmt::format("port count mismatch: {} inputs, {} outputs", input.size(), output.size()));
  }
  const std::size_t n = input.size();
  CostMatrix cost(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double dx = input.ports[i].x_um - output.ports[j].x_um;
      const double dy = input.ports[i].y_um - output.ports[j].y_um;
      cost(i, j) = dx * dx + dy * dy;
    }
  }
  return cost;
}

namespace {

// Pairwise terms of the local-search objective over trial paths.
class TrialGeometry {
 public:
  TrialGeometry(const FacetLayout& input, const FacetLayout& output, const AssignOptions& options)
      : input_(input), output_(output), options_(options) {}

  void set_channel(std::size_t k, std::size_t site) {
    if (paths_.size() <= k) paths_.resize(k + 1);
    paths_[k] = build_path(input_.ports[k], output_.ports[site], options_.repair->chip_length_mm, options_.schedule);
  }

  [[nodiscard]] double pair_term(std::size_t a, std::size_t b) const {
    const auto& pa = paths_[a].points;
    const auto& pb = paths_[b].points;
    double term = 0.0;
    double min_sep = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pa.size(); ++i) {
      const double d = distance(pa[i], pb[i]);
      min_sep = std::min(min_sep, d);
      if (options_.mode == CostMode::CrosstalkWeighted && i > 0) {
        const double dz = pa[i].z_mm - pa[i - 1].z_mm;
        term += options_.crosstalk_weight * dz * std::exp(-d / options_.d0_um);
      }
    }
    if (min_sep < options_.repair->d_min_um) term += conflict_penalty_;
    return term;
  }

  void set_penalty(double p) { conflict_penalty_ = p; }

 private:
  const FacetLayout& input_;
  const FacetLayout& output_;
  const AssignOptions& options_;
  std::vector<ChannelPath> paths_;
  double conflict_penalty_ = 0.0;
};

}  // namespace

Assignment assign(const FacetLayout& input, const FacetLayout& output, const AssignOptions& options) {
  const CostMatrix cost = displacement_cost(input, output);
  Assignment best = solve_assignment(cost);
  const bool search = options.repair.has_value() || options.mode == CostMode::CrosstalkWeighted;
  if (!search || best.size() < 2) return best;

  AssignOptions opts = options;
  if (!opts.repair) opts.repair = RouteConstraints{};
  opts.repair->validate();
  opts.schedule.validate();

  const std::size_t n = best.size();
  double max_cost = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) max_cost = std::max(max_cost, cost(i, j));
  }
  TrialGeometry geometry(input, output, opts);
  geometry.set_penalty(options.repair ? 1e3 * (max_cost + 1.0) * static_cast<double>(n) : 0.0);
  for (std::size_t k = 0; k < n; ++k) geometry.set_channel(k, best[k]);

  // Best-improvement 2-swap; ties keep the lowest (i, j).
  for (int pass = 0; pass < opts.max_passes; ++pass) {
    double best_delta = 0.0;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double before = cost(i, best[i]) + cost(j, best[j]) + geometry.pair_term(i, j);
        for (std::size_t m = 0; m < n; ++m) {
          if (m != i && m != j) before += geometry.pair_term(i, m) + geometry.pair_term(j, m);
        }
        geometry.set_channel(i, best[j]);
        geometry.set_channel(j, best[i]);
        double after = cost(i, best[j]) + cost(j, best[i]) + geometry.pair_term(i, j);
        for (std::size_t m = 0; m < n; ++m) {
          if (m != i && m != j) after += geometry.pair_term(i, m) + geometry.pair_term(j, m);
        }
        geometry.set_channel(i, best[i]);
        geometry.set_channel(j, best[j]);
        const double delta = after - before;
        if (delta < best_delta - 1e-12 * std::max(1.0, std::abs(before))) {
          best_delta = delta;
          bi = i;
          bj = j;
        }
      }
    }
    if (best_delta >= 0.0) break;
    std::swap(best[bi], best[bj]);
    geometry.set_channel(bi, best[bi]);
    geometry.set_channel(bj, best[bj]);
  }
  return best;
}

double raised_cosine_max_curvature(double displacement_um, double window_mm) {
  if (displacement_um == 0.0) return 0.0;
  if (!(window_mm > 0.0)) return std::numeric_limits<double>::infinity();
  return displacement_um * 1e-3 * kPi * kPi / (2.0 * window_mm * window_mm);
}

double discrete_curvature(const PathPoint& p0, const PathPoint& p1, const PathPoint& p2) {
  // Work in mm. kappa = 4 * area / (|a| |b| |c|) = 2 |AB x AC| / (|AB||AC||BC|).
  const double ax = (p1.x_um - p0.x_um) * 1e-3, ay = (p1.y_um - p0.y_um) * 1e-3, az = p1.z_mm - p0.z_mm;
  const double bx = (p2.x_um - p0.x_um) * 1e-3, by = (p2.y_um - p0.y_um) * 1e-3, bz = p2.z_mm - p0.z_mm;
  const double cx = ay * bz - az * by;
  const double cy = az * bx - ax * bz;
  const double cz = ax * by - ay * bx;
  const double cross = std::sqrt(cx * cx + cy * cy + cz * cz);
  const double la = std::sqrt(ax * ax + ay * ay + az * az);
  const double lb = std::sqrt(bx * bx + by * by + bz * bz);
  const double lc = std::sqrt((bx - ax) * (bx - ax) + (by - ay) * (by - ay) + (bz - az) * (bz - az));
  if (la == 0.0 || lb == 0.0 || lc == 0.0) return 0.0;
  return 2.0 * cross / (la * lb * lc);
}

PairClearance pair_clearance(const ChannelPath& a, const ChannelPath& b) {
  PairClearance out;
  if (same_sampling(a, b)) {
    for (std::size_t i = 0; i < a.points.size(); ++i) {
      const double d = distance(a.points[i], b.points[i]);
      if (d < out.min_um) out = {d, a.points[i].z_mm};
    }
    return out;
  }
  for (const auto& p : a.points) {
    const double d = distance(p, interpolate(b, p.z_mm));
    if (d < out.min_um) out = {d, p.z_mm};
  }
  for (const auto& p : b.points) {
    const double d = distance(p, interpolate(a, p.z_mm));
    if (d < out.min_um) out = {d, p.z_mm};
  }
  return out;
}

RoutePlan generate_paths(const FacetLayout& input, const FacetLayout& output, const Assignment& assignment,
                         const RouteConstraints& constraints, const PathSchedule& schedule) {
  constraints.validate();
  schedule.validate();
  input.validate();
  output.validate();
  const std::size_t n = input.size();
  if (output.size() != n || assignment.size() != n) {
    fail(ErrorKind::Validation, "route: facet sizes and assignment length must agree");
  }
  {
    std::vector<bool> seen(n, false);
    for (const std::size_t s : assignment) {
      if (s >= n || seen[s]) fail(ErrorKind::Validation, "route: assignment is not a permutation");
      seen[s] = true;
    }
  }
  for (const FacetLayout* facet : {&input, &output}) {
    if (facet->ports.empty()) continue;
    const auto [lo, hi] = std::minmax_element(facet->ports.begin(), facet->ports.end(),
                                              [](const Port& a, const Port& b) { return a.y_um < b.y_um; });
    if ((hi->y_um - lo->y_um) * 1e-3 > constraints.max_depth_mm) {
      fail(ErrorKind::Validation, fmt::format("route: facet depth extent {:.3f} mm exceeds writing depth {:.3f} mm",
                                              (hi->y_um - lo->y_um) * 1e-3, constraints.max_depth_mm));
    }
  }

  const double k_allowed = 1.0 / constraints.r_min_mm;
  std::vector<std::size_t> unreachable;
  double k_max = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double kk = analytic_curvature(input.ports[k], output.ports[assignment[k]], constraints.chip_length_mm, schedule);
    if (kk > k_allowed * (1.0 + 1e-12)) unreachable.push_back(k);
    k_max = std::max(k_max, kk);
  }
  if (!unreachable.empty()) {
    std::string ids;
    for (const std::size_t k : unreachable) ids += (ids.empty() ? "" : ",") + std::to_string(k);
    fail(ErrorKind::Validation,
         fmt::format("route: transition needs curvature above 1/r_min = {:.6f} /mm for channels [{}]", k_allowed, ids));
  }

  RoutePlan plan;
  plan.input = input;
  plan.output = output;
  plan.assignment = assignment;
  plan.chip_length_mm = constraints.chip_length_mm;
  plan.paths.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    plan.paths.push_back(build_path(input.ports[k], output.ports[assignment[k]], constraints.chip_length_mm, schedule));
  }

  double discrete_max = 0.0;
  std::vector<std::size_t> too_sharp;
  for (std::size_t k = 0; k < n; ++k) {
    const double kk = max_discrete_curvature(plan.paths[k]);
    if (kk > k_allowed * (1.0 + 1e-9)) too_sharp.push_back(k);
    discrete_max = std::max(discrete_max, kk);
  }
  if (!too_sharp.empty()) {
    std::string ids;
    for (const std::size_t k : too_sharp) ids += (ids.empty() ? "" : ",") + std::to_string(k);
    fail(ErrorKind::Validation, fmt::format("route: sampled curvature exceeds 1/r_min for channels [{}]", ids));
  }
  const double k_bound = std::max(k_max, discrete_max);
  plan.min_bend_radius_mm = k_bound > 0.0 ? 1.0 / k_bound : std::numeric_limits<double>::infinity();

  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const PairClearance c = pair_clearance(plan.paths[a], plan.paths[b]);
      if (c.min_um < constraints.d_min_um) {
        fail(ErrorKind::Validation, fmt::format("route: channels {} and {} are {:.3f} um apart at z = {:.3f} mm "
                                                "(d_min {:.3f} um)",
                                                a, b, c.min_um, c.z_mm, constraints.d_min_um));
      }
      plan.min_clearance_um = std::min(plan.min_clearance_um, c.min_um);
    }
  }
  return plan;
}

RoutePlan straight_plan(const FacetLayout& layout, double chip_length_mm, double max_dz_um) {
  RoutePlan plan;
  plan.input = layout;
  plan.input.facet = FacetId::Input;
  plan.output = layout;
  plan.output.facet = FacetId::Output;
  plan.chip_length_mm = chip_length_mm;
  PathSchedule schedule;
  schedule.max_dz_um = max_dz_um;
  for (std::size_t k = 0; k < layout.size(); ++k) {
    plan.assignment.push_back(k);
    plan.paths.push_back(build_path(layout.ports[k], layout.ports[k], chip_length_mm, schedule));
  }
  for (std::size_t a = 0; a < layout.size(); ++a) {
    for (std::size_t b = a + 1; b < layout.size(); ++b) {
      plan.min_clearance_um = std::min(plan.min_clearance_um, pair_clearance(plan.paths[a], plan.paths[b]).min_um);
    }
  }
  return plan;
}

std::size_t capacity(double chip_length_um, double spacing_um, double depth_um) {
  if (!(chip_length_um > 0 && spacing_um > 0 && depth_um > 0)) {
    fail(ErrorKind::Domain, "capacity arguments must be positive");
  }
  // Guard the floor against ratios like 199.99999999997 from unit scaling.
  const auto whole = [](double ratio) { return static_cast<std::size_t>(std::floor(ratio * (1.0 + 1e-12))); };
  return whole(chip_length_um / spacing_um) * whole(depth_um / spacing_um);
}

ValidationReport validate(const RoutePlan& plan, const RouteConstraints& constraints) {
  ValidationReport report;
  const std::size_t n = plan.paths.size();
  const auto add = [&](Violation v) { report.violations.push_back(std::move(v)); };

  if (plan.assignment.size() != n || plan.input.size() != n || plan.output.size() != n) {
    add({"structure", 0, 0, 0.0, static_cast<double>(n), "plan sizes disagree"});
    return report;
  }

  for (std::size_t k = 0; k < n; ++k) {
    const auto& pts = plan.paths[k].points;
    if (pts.size() < 2) {
      add({"structure", k, k, 0.0, static_cast<double>(pts.size()), "path has fewer than two samples"});
      continue;
    }
    for (std::size_t i = 1; i < pts.size(); ++i) {
      if (!(pts[i].z_mm > pts[i - 1].z_mm)) {
        add({"monotonic-z", k, k, pts[i].z_mm, pts[i].z_mm - pts[i - 1].z_mm, "z is not strictly increasing"});
        break;
      }
    }
    const Port& in = plan.input.ports[k];
    const std::size_t site = plan.assignment[k];
    if (site >= n) {
      add({"endpoint", k, k, 0.0, static_cast<double>(site), "assignment index out of range"});
      continue;
    }
    const Port& out = plan.output.ports[site];
    const double e0 = std::hypot(pts.front().x_um - in.x_um, pts.front().y_um - in.y_um);
    const double e1 = std::hypot(pts.back().x_um - out.x_um, pts.back().y_um - out.y_um);
    if (e0 > kEndpointTolUm || pts.front().z_mm != 0.0) {
      add({"endpoint", k, k, pts.front().z_mm, e0, "path does not start at its input port"});
    }
    if (e1 > kEndpointTolUm || std::abs(pts.back().z_mm - plan.chip_length_mm) > 1e-9) {
      add({"endpoint", k, k, pts.back().z_mm, e1, "path does not end at its assigned output port"});
    }
    std::size_t at = 0;
    const double kmax = max_discrete_curvature(plan.paths[k], &at);
    if (kmax > 0.0) report.measured_min_bend_radius_mm = std::min(report.measured_min_bend_radius_mm, 1.0 / kmax);
    if (kmax > (1.0 + 1e-9) / constraints.r_min_mm) {
      add({"curvature", k, k, pts[at].z_mm, 1.0 / kmax,
           fmt::format("bend radius {:.4f} mm below r_min {:.4f} mm", 1.0 / kmax, constraints.r_min_mm)});
    }
  }

  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const PairClearance c = pair_clearance(plan.paths[a], plan.paths[b]);
      report.measured_min_clearance_um = std::min(report.measured_min_clearance_um, c.min_um);
      if (c.min_um < constraints.d_min_um) {
        add({"clearance", a, b, c.z_mm, c.min_um,
             fmt::format("separation {:.4f} um below d_min {:.4f} um", c.min_um, constraints.d_min_um)});
      }
    }
  }

  const auto mismatch = [](double stored, double measured) {
    if (std::isinf(stored) && std::isinf(measured)) return false;
    return std::abs(stored - measured) > 1e-6 * std::max(1.0, std::abs(measured));
  };
  if (n >= 2 && mismatch(plan.min_clearance_um, report.measured_min_clearance_um)) {
    add({"stored-statistic", 0, 0, 0.0, report.measured_min_clearance_um,
         fmt::format("stored min clearance {:.6f} um differs from measured {:.6f} um", plan.min_clearance_um,
                     report.measured_min_clearance_um)});
  }
  // The stored bend radius is a bound: it must not exceed what the samples show.
  if (report.measured_min_bend_radius_mm < plan.min_bend_radius_mm * (1.0 - 1e-9)) {
    add({"stored-statistic", 0, 0, 0.0, report.measured_min_bend_radius_mm,
         fmt::format("stored min bend radius {:.6f} mm exceeds measured {:.6f} mm", plan.min_bend_radius_mm,
                     report.measured_min_bend_radius_mm)});
  }
  return report;
}

}  // namespace ocm::route
