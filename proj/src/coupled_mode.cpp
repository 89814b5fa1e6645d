#include "ocm/coupled_mode.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "ocm/errors.hpp"

namespace ocm::xtalk {

using cplx = std::complex<double>;

double CrosstalkMatrix::row_sum(std::size_t i) const {
  double s = 0.0;
  for (std::size_t j = 0; j < n_channels; ++j) s += (*this)(i, j);
  return s;
}

CrosstalkMatrix CrosstalkMatrix::identity(std::size_t n, double wavelength_nm) {
  CrosstalkMatrix x(n, wavelength_nm, false);
  for (std::size_t i = 0; i < n; ++i) x(i, i) = 1.0;
  return x;
}

void CrosstalkMatrix::validate(double tol) const {
  if (power.size() != n_channels * n_channels) fail(ErrorKind::Validation, "crosstalk matrix is not N x N");
  for (std::size_t i = 0; i < n_channels; ++i) {
    for (std::size_t j = 0; j < n_channels; ++j) {
      const double v = (*this)(i, j);
      if (!(v >= 0.0 && v <= 1.0 + tol)) {
        fail(ErrorKind::Validation, fmt::format("crosstalk entry ({}, {}) = {} outside [0, 1]", i, j, v));
      }
    }
    const double s = row_sum(i);
    if (!lossy && std::abs(s - 1.0) > tol) {
      fail(ErrorKind::Validation, fmt::format("lossless row {} sums to {:.15f}", i, s));
    }
    if (lossy && s > 1.0 + tol) fail(ErrorKind::Validation, fmt::format("lossy row {} sums above 1", i));
  }
}

double two_guide_crosstalk(double kappa_per_mm, double length_mm, double detuning_per_mm) {
  if (!(kappa_per_mm >= 0.0) || !(length_mm >= 0.0)) {
    fail(ErrorKind::Domain, "two-guide crosstalk needs kappa >= 0 and length >= 0");
  }
  const double half = 0.5 * detuning_per_mm;
  const double g2 = kappa_per_mm * kappa_per_mm + half * half;
  if (g2 == 0.0) return 0.0;
  const double s = std::sin(std::sqrt(g2) * length_mm);
  return kappa_per_mm * kappa_per_mm / g2 * s * s;
}

namespace {

struct Pair {
  std::size_t a = 0;
  std::size_t b = 0;
  double d_start = 0.0;
  double d_end = 0.0;
};

// Piecewise-smooth coupling operator on one z interval: separations vary
// linearly between the interval ends.
class IntervalOperator {
 public:
  IntervalOperator(std::vector<Pair> pairs, const std::vector<double>& detuning, const optics::CouplingModel& model,
                   double z0, double z1, double floor)
      : pairs_(std::move(pairs)), detuning_(detuning), model_(model), z0_(z0), z1_(z1), floor_(floor) {}

  // out = -i C(z) in, for an n x n state stored row-major (row = guide).
  void apply(double z, const std::vector<cplx>& in, std::vector<cplx>& out, std::size_t n) const {
    std::fill(out.begin(), out.end(), cplx{});
    const double t = (z1_ > z0_) ? (z - z0_) / (z1_ - z0_) : 0.0;
    for (const Pair& p : pairs_) {
      const double d = p.d_start + t * (p.d_end - p.d_start);
      const double k = model_.predict(d);
      if (k < floor_) continue;
      const cplx* ra = &in[p.a * n];
      const cplx* rb = &in[p.b * n];
      cplx* oa = &out[p.a * n];
      cplx* ob = &out[p.b * n];
      for (std::size_t c = 0; c < n; ++c) {
        oa[c] += k * rb[c];
        ob[c] += k * ra[c];
      }
    }
    if (!detuning_.empty()) {
      for (std::size_t r = 0; r < n; ++r) {
        if (detuning_[r] == 0.0) continue;
        for (std::size_t c = 0; c < n; ++c) out[r * n + c] += detuning_[r] * in[r * n + c];
      }
    }
    const cplx minus_i(0.0, -1.0);
    for (cplx& v : out) v *= minus_i;
  }

  [[nodiscard]] double norm_bound(std::size_t n) const {
    std::vector<double> row(n, 0.0);
    for (const Pair& p : pairs_) {
      const double k = model_.predict(std::min(p.d_start, p.d_end));
      row[p.a] += k;
      row[p.b] += k;
    }
    for (std::size_t r = 0; r < n && !detuning_.empty(); ++r) row[r] += std::abs(detuning_[r]);
    return *std::max_element(row.begin(), row.end());
  }

 private:
  std::vector<Pair> pairs_;
  const std::vector<double>& detuning_;
  const optics::CouplingModel& model_;
  double z0_, z1_, floor_;
};

// Dormand-Prince 5(4) with embedded error estimate, integrating one interval.
void integrate_interval(const IntervalOperator& op, std::vector<cplx>& state, std::size_t n, double z0, double z1,
                        const PropagateOptions& opt) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  const std::size_t m = state.size();
  std::vector<cplx> k1(m), k2(m), k3(m), k4(m), k5(m), k6(m), k7(m), tmp(m), next(m);
  const double span = z1 - z0;
  const double bound = op.norm_bound(n);
  double h = bound > 0.0 ? std::min(span, 0.1 / bound) : span;
  double z = z0;
  op.apply(z, state, k1, n);
  int steps = 0;
  while (z < z1) {
    if (++steps > 10'000'000) fail(ErrorKind::Numeric, "coupled-mode integrator exceeded step budget");
    if (z + h > z1) h = z1 - z;
    for (std::size_t i = 0; i < m; ++i) tmp[i] = state[i] + h * a21 * k1[i];
    op.apply(z + c2 * h, tmp, k2, n);
    for (std::size_t i = 0; i < m; ++i) tmp[i] = state[i] + h * (a31 * k1[i] + a32 * k2[i]);
    op.apply(z + c3 * h, tmp, k3, n);
    for (std::size_t i = 0; i < m; ++i) tmp[i] = state[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    op.apply(z + c4 * h, tmp, k4, n);
    for (std::size_t i = 0; i < m; ++i)
      tmp[i] = state[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    op.apply(z + c5 * h, tmp, k5, n);
    for (std::size_t i = 0; i < m; ++i)
      tmp[i] = state[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    op.apply(z + h, tmp, k6, n);
    for (std::size_t i = 0; i < m; ++i)
      next[i] = state[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    op.apply(z + h, next, k7, n);

    double err = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const cplx e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double scale = opt.atol + opt.rtol * std::max(std::abs(state[i]), std::abs(next[i]));
      err = std::max(err, std::abs(e) / scale);
    }
    if (err <= 1.0) {
      z += h;
      state.swap(next);
      k1.swap(k7);
    }
    const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
    h *= factor;
    if (h < 1e-15 * std::max(1.0, std::abs(z1))) fail(ErrorKind::Numeric, "coupled-mode integrator step underflow");
  }
}

}  // namespace

CrosstalkMatrix propagate(const route::RoutePlan& plan, const optics::CouplingModel& model,
                          const optics::WaveguideSpec& spec, double wavelength_nm, bool apply_loss,
                          const PropagateOptions& options) {
  const std::size_t n = plan.paths.size();
  if (n == 0) return CrosstalkMatrix(0, wavelength_nm, apply_loss);
  if (!(model.kappa0_per_mm > 0.0) || !(model.d0_um > 0.0)) {
    fail(ErrorKind::Validation, "coupling model needs kappa0 > 0 and d0 > 0");
  }
  if (!options.detuning_per_mm.empty() && options.detuning_per_mm.size() != n) {
    fail(ErrorKind::Validation, "detuning vector length must equal channel count");
  }

  // Common z grid across all channels.
  std::set<double> zs;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& pts = plan.paths[k].points;
    if (pts.size() < 2) fail(ErrorKind::Validation, fmt::format("channel {} path has fewer than 2 samples", k));
    for (std::size_t i = 1; i < pts.size(); ++i) {
      if (!(pts[i].z_mm > pts[i - 1].z_mm)) {
        fail(ErrorKind::Validation, fmt::format("channel {} path has non-monotone z at sample {}", k, i));
      }
    }
    for (const auto& p : pts) zs.insert(p.z_mm);
  }
  const std::vector<double> grid(zs.begin(), zs.end());

  // Positions of every channel on the common grid.
  std::vector<std::vector<route::PathPoint>> pos(n, std::vector<route::PathPoint>(grid.size()));
  for (std::size_t k = 0; k < n; ++k) {
    const auto& pts = plan.paths[k].points;
    std::size_t j = 0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
      const double z = grid[g];
      while (j + 2 < pts.size() && pts[j + 1].z_mm < z) ++j;
      const auto& lo = pts[j];
      const auto& hi = pts[std::min(j + 1, pts.size() - 1)];
      double t = (hi.z_mm > lo.z_mm) ? (z - lo.z_mm) / (hi.z_mm - lo.z_mm) : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      pos[k][g] = {lo.x_um + t * (hi.x_um - lo.x_um), lo.y_um + t * (hi.y_um - lo.y_um), z};
    }
  }

  const auto sep = [&](std::size_t a, std::size_t b, std::size_t g, double t, std::size_t g1) {
    const double xa = pos[a][g].x_um + t * (pos[a][g1].x_um - pos[a][g].x_um);
    const double ya = pos[a][g].y_um + t * (pos[a][g1].y_um - pos[a][g].y_um);
    const double xb = pos[b][g].x_um + t * (pos[b][g1].x_um - pos[b][g].x_um);
    const double yb = pos[b][g].y_um + t * (pos[b][g1].y_um - pos[b][g].y_um);
    return std::hypot(xa - xb, ya - yb);
  };

  // Unit launch into each input: state column c starts as e_c.
  std::vector<cplx> state(n * n, cplx{});
  for (std::size_t i = 0; i < n; ++i) state[i * n + i] = 1.0;

  const double floor = options.kappa_floor_per_mm;
  const double max_step = options.max_separation_step * model.d0_um;
  const std::vector<double>& detuning = options.detuning_per_mm;
  const bool detuned = std::any_of(detuning.begin(), detuning.end(), [](double d) { return d != 0.0; });

  for (std::size_t g = 0; g + 1 < grid.size(); ++g) {
    const double z0 = grid[g];
    const double z1 = grid[g + 1];
    // Coupled pairs on this interval and the subdivision they need.
    std::vector<std::pair<std::size_t, std::size_t>> active;
    std::size_t pieces = 1;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) {
        const double d0 = sep(a, b, g, 0.0, g + 1);
        const double d1 = sep(a, b, g, 1.0, g + 1);
        const double dmin = std::min(d0, d1);
        if (model.predict(dmin) < floor) continue;
        if (dmin < model.d_min_um * (1.0 - 1e-9)) {
          fail(ErrorKind::Domain, fmt::format("channels {} and {} reach {:.3f} um, below the coupling model range "
                                              "starting at {:.3f} um",
                                              a, b, dmin, model.d_min_um));
        }
        active.emplace_back(a, b);
        pieces = std::max(pieces, static_cast<std::size_t>(std::ceil(std::abs(d1 - d0) / max_step)));
      }
    }
    if (pieces > 4096) {
      fail(ErrorKind::Validation,
           fmt::format("path sampling too coarse near z = {:.4f} mm: separation change needs {} subdivisions", z0, pieces));
    }
    if (active.empty()) {
      if (detuned) {
        for (std::size_t r = 0; r < n; ++r) {
          const cplx phase = std::exp(cplx(0.0, -detuning[r] * (z1 - z0)));
          for (std::size_t c = 0; c < n; ++c) state[r * n + c] *= phase;
        }
      }
      continue;
    }
    for (std::size_t p = 0; p < pieces; ++p) {
      const double t0 = static_cast<double>(p) / static_cast<double>(pieces);
      const double t1 = static_cast<double>(p + 1) / static_cast<double>(pieces);
      std::vector<Pair> pairs;
      pairs.reserve(active.size());
      for (const auto& [a, b] : active) pairs.push_back({a, b, sep(a, b, g, t0, g + 1), sep(a, b, g, t1, g + 1)});
      const double za = z0 + t0 * (z1 - z0);
      const double zb = z0 + t1 * (z1 - z0);
      const IntervalOperator op(std::move(pairs), detuning, model, za, zb, floor);
      integrate_interval(op, state, n, za, zb, options);
    }
  }

  std::vector<double> transmission(n, 1.0);
  if (apply_loss) {
    for (std::size_t j = 0; j < n; ++j) {
      transmission[j] = optics::propagation_transmission(spec, wavelength_nm, plan.paths[j].length_mm * 0.1);
    }
  }
  CrosstalkMatrix x(n, wavelength_nm, apply_loss);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) x(i, j) = std::norm(state[j * n + i]) * transmission[j];
  }
  return x;
}

std::vector<std::pair<std::size_t, std::size_t>> nearest_pairs(const std::vector<route::Port>& ports) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < ports.size(); ++a) {
    for (std::size_t b = a + 1; b < ports.size(); ++b) {
      best = std::min(best, std::hypot(ports[a].x_um - ports[b].x_um, ports[a].y_um - ports[b].y_um));
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t a = 0; a < ports.size(); ++a) {
    for (std::size_t b = 0; b < ports.size(); ++b) {
      if (a == b) continue;
      const double d = std::hypot(ports[a].x_um - ports[b].x_um, ports[a].y_um - ports[b].y_um);
      if (d <= best * (1.0 + 1e-9)) out.emplace_back(a, b);
    }
  }
  return out;
}

CrosstalkMetrics matrix_metrics(const CrosstalkMatrix& x, const route::FacetLayout& input,
                                const route::FacetLayout& output, const route::Assignment& assignment) {
  const std::size_t n = x.n_channels;
  if (x.power.size() != n * n || input.size() != n || output.size() != n || assignment.size() != n) {
    fail(ErrorKind::Validation, fmt::format("metrics: dimension mismatch (matrix {}, input {}, output {}, assignment {})",
                                            n, input.size(), output.size(), assignment.size()));
  }
  for (const std::size_t s : assignment) {
    if (s >= n) fail(ErrorKind::Validation, "metrics: assignment index out of range");
  }
  // Channel k sits at output site assignment[k]; neighbours on the output
  // facet are judged by those sites.
  std::vector<route::Port> assigned_sites(n);
  for (std::size_t k = 0; k < n; ++k) assigned_sites[k] = output.ports[assignment[k]];

  std::vector<char> in_set(n * n, 0), out_set(n * n, 0);
  for (const auto& [a, b] : nearest_pairs(input.ports)) in_set[a * n + b] = 1;
  for (const auto& [a, b] : nearest_pairs(assigned_sites)) out_set[a * n + b] = 1;

  CrosstalkMetrics m;
  double sum_in = 0, sum_out = 0, sum_rest = 0;
  std::size_t cnt_in = 0, cnt_out = 0, cnt_rest = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double v = x(i, j);
      m.max_offdiag = std::max(m.max_offdiag, v);
      const bool ni = in_set[i * n + j] != 0;
      const bool no = out_set[i * n + j] != 0;
      if (ni) {
        sum_in += v;
        ++cnt_in;
      }
      if (no) {
        sum_out += v;
        ++cnt_out;
      }
      if (!ni && !no) {
        sum_rest += v;
        ++cnt_rest;
      }
    }
  }
  m.avg_nearest_input = cnt_in ? sum_in / static_cast<double>(cnt_in) : 0.0;
  m.avg_nearest_output = cnt_out ? sum_out / static_cast<double>(cnt_out) : 0.0;
  m.avg_non_nearest = cnt_rest ? sum_rest / static_cast<double>(cnt_rest) : 0.0;
  return m;
}

}  // namespace ocm::xtalk
