#include "ocm/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ocm/config.hpp"
#include "ocm/errors.hpp"
#include "ocm/formats.hpp"
#include "ocm/units.hpp"

namespace ocm::cli {

namespace {

namespace fs = std::filesystem;
using io::format_number;
using io::Json;

std::vector<double> parse_list(const std::string& text, double (*parse)(std::string_view)) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(parse(item));
  }
  if (out.empty()) fail(ErrorKind::Usage, fmt::format("empty list '{}'", text));
  return out;
}

double length_um(std::string_view t) { return units::parse_length_um(t); }
double length_mm(std::string_view t) { return units::parse_length_um(t, "mm") * 1e-3; }
double wavelength_nm(std::string_view t) { return units::parse_wavelength_nm(t); }

/// Inclusive arithmetic range with a rounding guard on the last point.
std::vector<double> range(double from, double to, double step) {
  if (!(step > 0.0) || !(to >= from)) fail(ErrorKind::Usage, "sweep needs step > 0 and to >= from");
  std::vector<double> v;
  const auto n = static_cast<std::size_t>(std::floor((to - from) / step * (1.0 + 1e-12) + 1e-9));
  for (std::size_t i = 0; i <= n; ++i) v.push_back(from + static_cast<double>(i) * step);
  return v;
}

optics::CouplingModel coupling_model(const ProjectConfig& cfg, double wl_nm) {
  std::vector<optics::KappaSample> samples;
  for (const double d : cfg.coupling.fit_separations_um) {
    samples.push_back({d, optics::coupling_constant(cfg.waveguide, wl_nm, d)});
  }
  return optics::fit_exponential(samples, wl_nm);
}

route::RoutePlan load_plan(const std::string& path) {
  const std::string text = io::read_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    fail(ErrorKind::Io, fmt::format("{}: not valid JSON: {}", path, e.what()));
  }
  return io::route_from_json(j);
}

route::RoutePlan design_plan(const ProjectConfig& cfg, route::CostMode mode, bool repair) {
  auto [input, output] = route::make_facets(cfg.facets.n_channels, cfg.facets.input_pitch_um, cfg.facets.grid_rows,
                                            cfg.facets.grid_cols, cfg.facets.output_pitch_um);
  route::AssignOptions opts;
  opts.mode = mode;
  opts.schedule = cfg.schedule;
  if (repair) opts.repair = cfg.constraints;
  if (mode == route::CostMode::CrosstalkWeighted) {
    opts.d0_um = coupling_model(cfg, cfg.deflector.deflector.wavelength_nm).d0_um;
  }
  const route::Assignment a = route::assign(input, output, opts);
  return route::generate_paths(input, output, a, cfg.constraints, cfg.schedule);
}

struct Context {
  ProjectConfig cfg;
  fs::path out_dir;
  std::string config_hash;
  std::ostream* out = nullptr;
};

class Command {
 public:
  Command(Context& ctx, std::string name) : ctx_(ctx), manifest_(std::move(name), ctx.config_hash, ctx.cfg.seed) {}

  void emit(const std::string& name, std::string_view content) { manifest_.write(ctx_.out_dir, name, content); }
  void finish() {
    manifest_.finish(ctx_.out_dir);
    for (const auto& [name, hash] : manifest_.files()) {
      (void)hash;
      *ctx_.out << "wrote " << (ctx_.out_dir / name).string() << '\n';
    }
  }

 private:
  Context& ctx_;
  io::Manifest manifest_;
};

void run_mode(Context& ctx, const std::string& from, const std::string& to, const std::string& step,
              const std::string& profile_wl) {
  Command cmd(ctx, "mode");
  std::string csv = "wavelength_nm,v_number,mfd_um,core_fraction,gaussian_efficiency\n";
  for (const double wl : range(wavelength_nm(from), wavelength_nm(to), wavelength_nm(step))) {
    const optics::ModeProfile p = optics::solve_mode(ctx.cfg.waveguide, wl);
    const optics::Lp01 sol{p.v_number, p.u, p.w};
    csv += fmt::format("{},{},{},{},{}\n", format_number(wl), format_number(p.v_number), format_number(p.mfd_um),
                       format_number(sol.core_fraction()),
                       format_number(optics::gaussian_coupling_efficiency(p, p.mfd_um)));
  }
  cmd.emit("mode_sweep.csv", csv);
  if (!profile_wl.empty()) {
    const optics::ModeProfile p = optics::solve_mode(ctx.cfg.waveguide, wavelength_nm(profile_wl));
    cmd.emit("mode_profile.csv", io::mode_profile_csv(p));
  }
  cmd.finish();
}

void run_kappa(Context& ctx, const std::string& wls, const std::string& from, const std::string& to,
               const std::string& step) {
  Command cmd(ctx, "kappa");
  std::string sweep = "wavelength_nm,separation_um,kappa_per_mm\n";
  std::string fit = "wavelength_nm,kappa0_per_mm,d0_um,r2,d_min_um,d_max_um\n";
  for (const double wl : parse_list(wls, wavelength_nm)) {
    std::vector<optics::KappaSample> samples;
    for (const double d : range(length_um(from), length_um(to), length_um(step))) {
      const double k = optics::coupling_constant(ctx.cfg.waveguide, wl, d);
      samples.push_back({d, k});
      sweep += fmt::format("{},{},{}\n", format_number(wl), format_number(d), format_number(k));
    }
    const optics::CouplingModel m = optics::fit_exponential(samples, wl);
    fit += fmt::format("{},{},{},{},{},{}\n", format_number(wl), format_number(m.kappa0_per_mm), format_number(m.d0_um),
                       format_number(m.fit_r2), format_number(m.d_min_um), format_number(m.d_max_um));
    *ctx.out << fmt::format("{:7.1f} nm  kappa0 = {:.6g} /mm  d0 = {:.6g} um  R^2 = {:.6f}\n", wl, m.kappa0_per_mm,
                            m.d0_um, m.fit_r2);
  }
  cmd.emit("kappa_sweep.csv", sweep);
  cmd.emit("kappa_fit.csv", fit);
  cmd.finish();
}

void run_xtalk_pair(Context& ctx, const std::string& wls, const std::string& from, const std::string& to,
                    const std::string& step, const std::string& length) {
  Command cmd(ctx, "xtalk-pair");
  const double l_mm = length.empty() ? ctx.cfg.coupling.coupling_length_mm : length_mm(length);
  std::string csv = "wavelength_nm,separation_um,kappa_per_mm,length_mm,crosstalk\n";
  for (const double wl : parse_list(wls, wavelength_nm)) {
    for (const double d : range(length_um(from), length_um(to), length_um(step))) {
      const double k = optics::coupling_constant(ctx.cfg.waveguide, wl, d);
      csv += fmt::format("{},{},{},{},{}\n", format_number(wl), format_number(d), format_number(k),
                         format_number(l_mm), format_number(xtalk::two_guide_crosstalk(k, l_mm)));
    }
  }
  cmd.emit("xtalk_pair.csv", csv);
  cmd.finish();
}

int run_route(Context& ctx, bool crosstalk_mode, bool repair) {
  Command cmd(ctx, "route");
  const route::RoutePlan plan =
      design_plan(ctx.cfg, crosstalk_mode ? route::CostMode::CrosstalkWeighted : route::CostMode::PathLength, repair);
  const route::ValidationReport report = route::validate(plan, ctx.cfg.constraints);
  cmd.emit("route_plan.json", io::route_to_json(plan).dump(2) + "\n");
  cmd.emit("route_validation.json", io::validation_to_json(report).dump(2) + "\n");
  *ctx.out << fmt::format("channels: {}\nstored min clearance (um): {}\nstored min bend radius (mm): {}\n",
                          plan.assignment.size(), format_number(plan.min_clearance_um),
                          format_number(plan.min_bend_radius_mm));
  *ctx.out << io::validation_text(report);
  cmd.finish();
  return report.ok() ? 0 : 2;
}

void print_metrics(std::ostream& out, const xtalk::CrosstalkMetrics& m) {
  out << fmt::format(
      "max off-diagonal:       {}\navg nearest (input):    {}\navg nearest (output):   {}\navg non-nearest:        {}\n",
      format_number(m.max_offdiag), format_number(m.avg_nearest_input), format_number(m.avg_nearest_output),
      format_number(m.avg_non_nearest));
}

void run_xtalk_matrix(Context& ctx, const std::string& plan_path, const std::string& wl_text, bool loss,
                      const std::string& name) {
  Command cmd(ctx, "xtalk-matrix");
  const route::RoutePlan plan = plan_path.empty() ? design_plan(ctx.cfg, route::CostMode::PathLength, false)
                                                  : load_plan(plan_path);
  const double wl = wavelength_nm(wl_text);
  const optics::CouplingModel model = coupling_model(ctx.cfg, wl);
  const xtalk::CrosstalkMatrix x = xtalk::propagate(plan, model, ctx.cfg.waveguide, wl, loss);
  x.validate(1e-9);

  io::MatrixMetadata meta;
  meta.wavelength_nm = wl;
  meta.lossy = loss;
  meta.input = plan.input;
  meta.output = plan.output;
  meta.assignment = plan.assignment;
  meta.metrics = xtalk::matrix_metrics(x, plan.input, plan.output, plan.assignment);
  meta.layout_hash = io::layout_hash(plan.input, plan.output, plan.assignment);
  meta.note = fmt::format("coupled-mode propagation, kappa0={} /mm, d0={} um", format_number(model.kappa0_per_mm),
                          format_number(model.d0_um));
  cmd.emit(name + ".csv", io::crosstalk_csv(x));
  cmd.emit(name + ".meta.json", io::matrix_metadata_to_json(meta).dump(2) + "\n");
  print_metrics(*ctx.out, meta.metrics);
  cmd.finish();
}

int run_metrics(Context& ctx, const std::string& matrix_path, const std::string& meta_path, double tol) {
  Command cmd(ctx, "metrics");
  Json j;
  try {
    j = Json::parse(io::read_file(meta_path));
  } catch (const Json::exception& e) {
    fail(ErrorKind::Io, fmt::format("{}: not valid JSON: {}", meta_path, e.what()));
  }
  const io::MatrixMetadata meta = io::matrix_metadata_from_json(j);
  const xtalk::CrosstalkMatrix x = io::parse_crosstalk_csv(io::read_file(matrix_path), meta.wavelength_nm, meta.lossy);
  if (io::layout_hash(meta.input, meta.output, meta.assignment) != meta.layout_hash) {
    fail(ErrorKind::Validation, "metadata layout hash does not match its facets and assignment");
  }
  const xtalk::CrosstalkMetrics m = xtalk::matrix_metrics(x, meta.input, meta.output, meta.assignment);
  print_metrics(*ctx.out, m);
  const auto close = [tol](double a, double b) { return std::abs(a - b) <= tol; };
  const bool match = close(m.max_offdiag, meta.metrics.max_offdiag) &&
                     close(m.avg_nearest_input, meta.metrics.avg_nearest_input) &&
                     close(m.avg_nearest_output, meta.metrics.avg_nearest_output) &&
                     close(m.avg_non_nearest, meta.metrics.avg_non_nearest);
  Json report = {{"metrics", io::metrics_to_json(m)}, {"expected", io::metrics_to_json(meta.metrics)},
                 {"tolerance", tol}, {"match", match}};
  cmd.emit("metrics.json", report.dump(2) + "\n");
  *ctx.out << (match ? "metadata: match\n" : "metadata: MISMATCH\n");
  cmd.finish();
  return match ? 0 : 2;
}

struct Bench {
  route::RoutePlan plan;
  xtalk::CrosstalkMatrix x;
  std::vector<double> transmissions;
};

Bench load_bench(const ProjectConfig& cfg, const std::string& plan_path, const std::string& matrix_path) {
  Bench b;
  b.plan = plan_path.empty() ? design_plan(cfg, route::CostMode::PathLength, false) : load_plan(plan_path);
  const double wl = cfg.deflector.deflector.wavelength_nm;
  if (!matrix_path.empty()) {
    b.x = io::parse_crosstalk_csv(io::read_file(matrix_path), wl, false);
  } else {
    b.x = xtalk::propagate(b.plan, coupling_model(cfg, wl), cfg.waveguide, wl, false);
  }
  for (const auto& path : b.plan.paths) {
    b.transmissions.push_back(optics::propagation_transmission(cfg.waveguide, wl, path.length_mm * 0.1));
  }
  return b;
}

void run_address(Context& ctx, const std::string& mask_path, const std::string& plan_path,
                 const std::string& matrix_path) {
  Command cmd(ctx, "address");
  const aod::Mask mask = aod::Mask::parse(io::read_file(mask_path));
  const Bench bench = load_bench(ctx.cfg, plan_path, matrix_path);
  const aod::PatternSelection sel = aod::render_pattern(mask, bench.plan);
  const aod::PlanReport rep = aod::plan_tones(sel.channels, ctx.cfg.base_frequency_mhz(), ctx.cfg.tone_spacing_mhz(),
                                              ctx.cfg.deflector.deflector, ctx.cfg.facets.input_pitch_um);
  aod::SystemModel sys{&bench.plan, &bench.x, bench.transmissions, {}, ctx.cfg.deflector.third_order_coeff};
  const aod::IntensityReadout r = aod::simulate_intensities(rep.plan, sys);

  double on_min = std::numeric_limits<double>::infinity();
  double off_max = 0.0;
  for (std::size_t s = 0; s < r.intensities.size(); ++s) {
    const bool lit = s < mask.on.size() && mask.on[s];
    if (lit) on_min = std::min(on_min, r.intensities[s]);
    else off_max = std::max(off_max, r.intensities[s]);
  }
  cmd.emit("tone_plan.csv", io::tone_plan_csv(rep.plan));
  cmd.emit("pattern.txt", sel.rendering);
  cmd.emit("site_intensities.csv", io::intensity_csv(r));
  *ctx.out << sel.rendering;
  *ctx.out << fmt::format("tones: {}  spacing: {} MHz  pitch match: {}\n", rep.plan.tones.size(),
                          format_number(rep.plan.spacing_mhz), rep.pitch_matched ? "yes" : "no");
  if (!sel.channels.empty()) {
    *ctx.out << fmt::format("min on-target / max off-target: {}\n",
                            off_max > 0.0 ? format_number(on_min / off_max) : std::string("inf"));
  }
  cmd.finish();
}

void run_calibrate(Context& ctx, double tilt, double target, std::size_t max_iter,
                   const std::vector<std::size_t>& dead, const std::string& plan_path,
                   const std::string& matrix_path) {
  Command cmd(ctx, "calibrate");
  const Bench bench = load_bench(ctx.cfg, plan_path, matrix_path);
  const std::size_t n = bench.plan.assignment.size();
  std::vector<std::size_t> channels(n);
  for (std::size_t k = 0; k < n; ++k) channels[k] = k;

  aod::Deflector def = ctx.cfg.deflector.deflector;
  const double lo = ctx.cfg.base_frequency_mhz();
  const double hi = lo + static_cast<double>(n == 0 ? 0 : n - 1) * ctx.cfg.tone_spacing_mhz();
  if (tilt > 0.0 && hi > lo) def.efficiency_curve = aod::tilted_efficiency_curve(lo, hi, tilt);
  const aod::PlanReport rep = aod::plan_tones(channels, lo, ctx.cfg.tone_spacing_mhz(), def,
                                              ctx.cfg.facets.input_pitch_um);

  std::vector<double> transmissions = bench.transmissions;
  for (const std::size_t k : dead) {
    if (k >= n) fail(ErrorKind::Usage, fmt::format("dead channel {} out of range (0..{})", k, n - 1));
    transmissions[k] = 0.0;
  }
  const aod::SystemModel sys{&bench.plan, &bench.x, transmissions, {}, ctx.cfg.deflector.third_order_coeff};
  const aod::CalibrationResult res = aod::calibrate_uniformity(
      rep.plan, [&sys](const aod::TonePlan& p) { return aod::simulate_intensities(p, sys); }, target, max_iter);

  std::string hist = "step,rsd,uniformity\n";
  for (std::size_t i = 0; i < res.rsd_history.size(); ++i) {
    hist += fmt::format("{},{},{}\n", i, format_number(res.rsd_history[i]), format_number(1.0 - res.rsd_history[i]));
  }
  cmd.emit("calibration_history.csv", hist);
  cmd.emit("tone_plan.csv", io::tone_plan_csv(res.final_plan));
  cmd.emit("site_intensities.csv", io::intensity_csv(res.final_readout));
  *ctx.out << fmt::format("iterations: {}\ninitial uniformity: {}\nfinal uniformity: {}\nconverged: {}\n",
                          res.iterations, format_number(1.0 - res.rsd_history.front()),
                          format_number(1.0 - res.rsd_history.back()), res.converged ? "yes" : "no");
  for (const std::size_t k : res.dead_channels) *ctx.out << "dead channel: " << k << '\n';
  cmd.finish();
}

void run_budget(Context& ctx) {
  Command cmd(ctx, "budget");
  const qlink::LinkBudget& b = ctx.cfg.budget;
  const qlink::ReadoutResult r = qlink::readout_error(b);
  std::ostringstream rep;
  rep << fmt::format("{:<24}{:>14}{:>12}\n", "stage", "efficiency", "loss (dB)");
  for (const auto& s : b.stages) {
    rep << fmt::format("{:<24}{:>14.6g}{:>12.4f}\n", s.name, s.efficiency, qlink::fraction_to_db(s.efficiency));
  }
  rep << fmt::format("{:<24}{:>14.6g}{:>12.4f}\n", "total", b.total_efficiency(),
                     qlink::fraction_to_db(b.total_efficiency()));
  rep << fmt::format("mean bright counts: {}\nmean dark counts: {}\nthreshold: {}\np(miss bright): {}\np(false dark): {}\n",
                     format_number(r.mean_bright), format_number(r.mean_dark), r.recommended_threshold,
                     format_number(r.p_miss_bright), format_number(r.p_false_dark));
  if (r.indistinguishable) rep << "warning: bright and dark states are indistinguishable\n";
  *ctx.out << rep.str();
  cmd.emit("budget_report.txt", rep.str());
  cmd.emit("threshold_scan.csv", io::threshold_scan_csv(r));
  cmd.finish();
}

void run_capacity(Context& ctx, const std::string& length, const std::string& spacing, const std::string& depth) {
  Command cmd(ctx, "capacity");
  const std::size_t n = route::capacity(length_um(length), length_um(spacing), length_um(depth));
  *ctx.out << n << '\n';
  cmd.emit("capacity.txt", fmt::format("{}\n", n));
  cmd.finish();
}

void run_config_dump(Context& ctx) {
  Command cmd(ctx, "config");
  const std::string text = annotated_config(ctx.cfg).dump(2) + "\n";
  *ctx.out << text;
  cmd.emit("config_resolved.json", text);
  cmd.finish();
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Optical channel mapping design and simulation"};
  app.name("ocm");
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "Project config (JSON); defaults to $OCM_CONFIG");
  app.add_option("--out", out_dir, "Output directory (overrides the config)");
  app.add_option("--seed", seed, "Random seed recorded in the manifest");

  std::string from = "300nm", to = "1550nm", step = "10nm", profile;
  auto* mode = app.add_subcommand("mode", "MFD and Gaussian-coupling sweep over wavelength");
  mode->add_option("--from", from);
  mode->add_option("--to", to);
  mode->add_option("--step", step);
  mode->add_option("--profile", profile, "Also write the mode profile at this wavelength");

  std::string wls = "420nm,780nm,1013nm", d_from = "15um", d_to = "50um", d_step = "5um";
  auto* kappa = app.add_subcommand("kappa", "Coupling constant sweep and exponential fit");
  kappa->add_option("--wavelengths", wls);
  kappa->add_option("--from", d_from);
  kappa->add_option("--to", d_to);
  kappa->add_option("--step", d_step);

  std::string p_wls = "420nm,780nm,1013nm", p_from = "15um", p_to = "60um", p_step = "1um", p_len;
  auto* pair = app.add_subcommand("xtalk-pair", "Two-guide crosstalk over separation and wavelength");
  pair->add_option("--wavelengths", p_wls);
  pair->add_option("--from", p_from);
  pair->add_option("--to", p_to);
  pair->add_option("--step", p_step);
  pair->add_option("--length", p_len, "Coupling length (default from config)");

  bool xt_mode = false, repair = false;
  auto* rt = app.add_subcommand("route", "Facets, assignment and paths with validation");
  rt->add_flag("--crosstalk-weighted", xt_mode, "Add the accumulated coupling term to the assignment cost");
  rt->add_flag("--repair", repair, "2-swap search that removes clearance conflicts");

  std::string plan_path, wl = "780nm", name = "crosstalk_matrix";
  bool loss = false;
  auto* xm = app.add_subcommand("xtalk-matrix", "Propagate a route plan into a crosstalk matrix");
  xm->add_option("--plan", plan_path, "Route plan JSON (designed from config when omitted)");
  xm->add_option("--wavelength", wl);
  xm->add_flag("--loss", loss, "Include propagation loss");
  xm->add_option("--name", name, "Output file stem");

  std::string matrix_path, meta_path;
  double tol = 1e-6;
  auto* met = app.add_subcommand("metrics", "Recompute metrics and compare with matrix metadata");
  met->add_option("--matrix", matrix_path)->required();
  met->add_option("--meta", meta_path)->required();
  met->add_option("--tol", tol);

  std::string mask_path, a_plan, a_matrix;
  auto* addr = app.add_subcommand("address", "Tone plan for a site mask");
  addr->add_option("--mask", mask_path)->required();
  addr->add_option("--plan", a_plan);
  addr->add_option("--matrix", a_matrix, "Crosstalk matrix CSV (simulated when omitted)");

  double tilt = 0.1, target = 0.955;
  std::size_t max_iter = 50;
  std::vector<std::size_t> dead;
  std::string c_plan, c_matrix;
  auto* cal = app.add_subcommand("calibrate", "Amplitude calibration on the simulated system");
  cal->add_option("--tilt", tilt, "Relative efficiency tilt across the band");
  cal->add_option("--target", target);
  cal->add_option("--max-iter", max_iter);
  cal->add_option("--dead-channel", dead);
  cal->add_option("--plan", c_plan);
  cal->add_option("--matrix", c_matrix);

  auto* bud = app.add_subcommand("budget", "Q-link budget and readout error");

  std::string chip_length, spacing, depth;
  auto* cap = app.add_subcommand("capacity", "Channel count for a chip volume");
  cap->add_option("--chip-length", chip_length)->required();
  cap->add_option("--spacing", spacing)->required();
  cap->add_option("--depth", depth)->required();

  bool dump = false;
  auto* cfgc = app.add_subcommand("config", "Show the resolved config");
  cfgc->add_flag("--dump", dump)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return exit_code_for(ErrorKind::Usage);
  }

  try {
    Context ctx;
    if (config_path.empty()) {
      if (const char* env = std::getenv("OCM_CONFIG")) config_path = env;
    }
    ctx.cfg = config_path.empty() ? ProjectConfig{} : load_config(config_path);
    if (seed) ctx.cfg.seed = *seed;
    ctx.cfg.validate();
    ctx.out_dir = out_dir.empty() ? fs::path(ctx.cfg.output_dir) : fs::path(out_dir);
    ctx.config_hash = io::hash_hex(config_to_json(ctx.cfg).dump());
    ctx.out = &out;

    if (mode->parsed()) run_mode(ctx, from, to, step, profile);
    else if (kappa->parsed()) run_kappa(ctx, wls, d_from, d_to, d_step);
    else if (pair->parsed()) run_xtalk_pair(ctx, p_wls, p_from, p_to, p_step, p_len);
    else if (rt->parsed()) return run_route(ctx, xt_mode, repair);
    else if (xm->parsed()) run_xtalk_matrix(ctx, plan_path, wl, loss, name);
    else if (met->parsed()) return run_metrics(ctx, matrix_path, meta_path, tol);
    else if (addr->parsed()) run_address(ctx, mask_path, a_plan, a_matrix);
    else if (cal->parsed()) run_calibrate(ctx, tilt, target, max_iter, dead, c_plan, c_matrix);
    else if (bud->parsed()) run_budget(ctx);
    else if (cap->parsed()) run_capacity(ctx, chip_length, spacing, depth);
    else if (cfgc->parsed()) run_config_dump(ctx);
    return 0;
  } catch (const Error& e) {
    err << to_string(e.kind()) << ": " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "io error: " << e.what() << '\n';
    return exit_code_for(ErrorKind::Io);
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace ocm::cli
