#include "ocm/formats.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "ocm/errors.hpp"

namespace ocm::io {

namespace {

// JSON has no infinity; unbounded statistics are written as null.
Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
double number_or_inf(const Json& j) { return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>(); }

const char* pattern_name(route::FacetPattern p) {
  switch (p) {
    case route::FacetPattern::Linear: return "linear";
    case route::FacetPattern::Grid: return "grid";
    case route::FacetPattern::Custom: return "custom";
  }
  return "custom";
}

route::FacetPattern pattern_from(const std::string& s) {
  if (s == "linear") return route::FacetPattern::Linear;
  if (s == "grid") return route::FacetPattern::Grid;
  if (s == "custom") return route::FacetPattern::Custom;
  fail(ErrorKind::Io, fmt::format("unknown facet pattern '{}'", s));
}

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    fail(ErrorKind::Io, fmt::format("malformed {}: {}", what, e.what()));
  }
}

}  // namespace

std::string format_number(double v) { return fmt::format("{:.12g}", v); }

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::string_view data) { return fmt::format("{:016x}", fnv1a64(data)); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, fmt::format("cannot write '{}'", path.string()));
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

std::string crosstalk_csv(const xtalk::CrosstalkMatrix& x) {
  std::string out;
  for (std::size_t i = 0; i < x.n_channels; ++i) {
    for (std::size_t j = 0; j < x.n_channels; ++j) {
      if (j) out += ',';
      out += format_number(x(i, j));
    }
    out += '\n';
  }
  return out;
}

xtalk::CrosstalkMatrix parse_crosstalk_csv(std::string_view text, double wavelength_nm, bool lossy) {
  std::vector<std::vector<double>> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        fail(ErrorKind::Io, fmt::format("crosstalk CSV: bad number '{}' on row {}", cell, rows.size()));
      }
    }
    rows.push_back(std::move(row));
  }
  const std::size_t n = rows.size();
  xtalk::CrosstalkMatrix x(n, wavelength_nm, lossy);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != n) fail(ErrorKind::Io, fmt::format("crosstalk CSV row {} has {} entries, expected {}", i, rows[i].size(), n));
    for (std::size_t j = 0; j < n; ++j) x(i, j) = rows[i][j];
  }
  return x;
}

Json facet_to_json(const route::FacetLayout& f) {
  Json j;
  j["facet"] = f.facet == route::FacetId::Input ? "input" : "output";
  j["pattern"] = pattern_name(f.pattern);
  j["pitch_um"] = f.pitch_um;
  j["rows"] = f.rows;
  j["cols"] = f.cols;
  Json ports = Json::array();
  for (const auto& p : f.ports) ports.push_back({p.x_um, p.y_um});
  j["ports"] = std::move(ports);
  return j;
}

route::FacetLayout facet_from_json(const Json& j) {
  return guarded("facet layout", [&] {
    route::FacetLayout f;
    const std::string facet = j.at("facet").get<std::string>();
    if (facet != "input" && facet != "output") fail(ErrorKind::Io, "facet must be 'input' or 'output'");
    f.facet = facet == "input" ? route::FacetId::Input : route::FacetId::Output;
    f.pattern = pattern_from(j.at("pattern").get<std::string>());
    f.pitch_um = j.at("pitch_um").get<double>();
    f.rows = j.at("rows").get<std::size_t>();
    f.cols = j.at("cols").get<std::size_t>();
    for (const auto& p : j.at("ports")) f.ports.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    return f;
  });
}

std::string layout_hash(const route::FacetLayout& input, const route::FacetLayout& output,
                        const route::Assignment& assignment) {
  Json j;
  j["input"] = facet_to_json(input);
  j["output"] = facet_to_json(output);
  j["assignment"] = assignment;
  return hash_hex(j.dump());
}

Json metrics_to_json(const xtalk::CrosstalkMetrics& m) {
  Json j;
  j["max_offdiag"] = m.max_offdiag;
  j["avg_nearest_input"] = m.avg_nearest_input;
  j["avg_nearest_output"] = m.avg_nearest_output;
  j["avg_non_nearest"] = m.avg_non_nearest;
  return j;
}

xtalk::CrosstalkMetrics metrics_from_json(const Json& j) {
  return guarded("metrics", [&] {
    xtalk::CrosstalkMetrics m;
    m.max_offdiag = j.at("max_offdiag").get<double>();
    m.avg_nearest_input = j.at("avg_nearest_input").get<double>();
    m.avg_nearest_output = j.at("avg_nearest_output").get<double>();
    m.avg_non_nearest = j.at("avg_non_nearest").get<double>();
    return m;
  });
}

Json matrix_metadata_to_json(const MatrixMetadata& meta) {
  Json j;
  j["schema"] = kCrosstalkSchema;
  j["n_channels"] = meta.assignment.size();
  j["wavelength_nm"] = meta.wavelength_nm;
  j["lossy"] = meta.lossy;
  j["layout_hash"] = meta.layout_hash.empty() ? layout_hash(meta.input, meta.output, meta.assignment) : meta.layout_hash;
  j["metrics"] = metrics_to_json(meta.metrics);
  j["input"] = facet_to_json(meta.input);
  j["output"] = facet_to_json(meta.output);
  j["assignment"] = meta.assignment;
  if (!meta.note.empty()) j["note"] = meta.note;
  return j;
}

MatrixMetadata matrix_metadata_from_json(const Json& j) {
  return guarded("crosstalk metadata", [&] {
    if (j.at("schema").get<std::string>() != kCrosstalkSchema) fail(ErrorKind::Io, "crosstalk metadata: unknown schema");
    MatrixMetadata m;
    m.wavelength_nm = j.at("wavelength_nm").get<double>();
    m.lossy = j.at("lossy").get<bool>();
    m.layout_hash = j.at("layout_hash").get<std::string>();
    m.metrics = metrics_from_json(j.at("metrics"));
    m.input = facet_from_json(j.at("input"));
    m.output = facet_from_json(j.at("output"));
    m.assignment = j.at("assignment").get<route::Assignment>();
    if (j.contains("note")) m.note = j.at("note").get<std::string>();
    return m;
  });
}

Json route_to_json(const route::RoutePlan& plan) {
  Json j;
  j["schema"] = kRouteSchema;
  j["chip_length_mm"] = plan.chip_length_mm;
  j["min_clearance_um"] = finite_or_null(plan.min_clearance_um);
  j["min_bend_radius_mm"] = finite_or_null(plan.min_bend_radius_mm);
  j["input"] = facet_to_json(plan.input);
  j["output"] = facet_to_json(plan.output);
  j["assignment"] = plan.assignment;
  Json paths = Json::array();
  for (const auto& p : plan.paths) {
    Json pj;
    pj["length_mm"] = p.length_mm;
    Json pts = Json::array();
    for (const auto& q : p.points) pts.push_back({q.x_um, q.y_um, q.z_mm});
    pj["points"] = std::move(pts);
    paths.push_back(std::move(pj));
  }
  j["paths"] = std::move(paths);
  return j;
}

route::RoutePlan route_from_json(const Json& j) {
  return guarded("route plan", [&] {
    if (j.at("schema").get<std::string>() != kRouteSchema) {
      fail(ErrorKind::Io, fmt::format("route plan: unsupported schema '{}'", j.at("schema").get<std::string>()));
    }
    route::RoutePlan plan;
    plan.chip_length_mm = j.at("chip_length_mm").get<double>();
    plan.min_clearance_um = number_or_inf(j.at("min_clearance_um"));
    plan.min_bend_radius_mm = number_or_inf(j.at("min_bend_radius_mm"));
    plan.input = facet_from_json(j.at("input"));
    plan.output = facet_from_json(j.at("output"));
    plan.assignment = j.at("assignment").get<route::Assignment>();
    for (const auto& pj : j.at("paths")) {
      route::ChannelPath path;
      path.length_mm = pj.at("length_mm").get<double>();
      for (const auto& q : pj.at("points")) {
        path.points.push_back({q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>()});
      }
      plan.paths.push_back(std::move(path));
    }
    return plan;
  });
}

Json validation_to_json(const route::ValidationReport& report) {
  Json j;
  j["ok"] = report.ok();
  j["measured_min_clearance_um"] = finite_or_null(report.measured_min_clearance_um);
  j["measured_min_bend_radius_mm"] = finite_or_null(report.measured_min_bend_radius_mm);
  Json list = Json::array();
  for (const auto& v : report.violations) {
    Json vj;
    vj["kind"] = v.kind;
    vj["channel_a"] = v.channel_a;
    vj["channel_b"] = v.channel_b;
    vj["z_mm"] = v.z_mm;
    vj["measured"] = v.measured;
    vj["message"] = v.message;
    list.push_back(std::move(vj));
  }
  j["violations"] = std::move(list);
  return j;
}

std::string validation_text(const route::ValidationReport& report) {
  std::string out = fmt::format("violations: {}\nmeasured min clearance (um): {}\nmeasured min bend radius (mm): {}\n",
                                report.violations.size(), format_number(report.measured_min_clearance_um),
                                format_number(report.measured_min_bend_radius_mm));
  for (const auto& v : report.violations) {
    out += fmt::format("  [{}] channels {}-{} at z={} mm: {}\n", v.kind, v.channel_a, v.channel_b, format_number(v.z_mm),
                       v.message);
  }
  return out;
}

std::string tone_plan_csv(const aod::TonePlan& plan) {
  std::string out = "frequency_mhz,amplitude,phase_rad,channel\n";
  for (const auto& t : plan.tones) {
    out += fmt::format("{},{},{},{}\n", format_number(t.frequency_mhz), format_number(t.amplitude),
                       format_number(t.phase_rad), t.channel);
  }
  return out;
}

std::string intensity_csv(const aod::IntensityReadout& readout) {
  std::string out = "site,channel,intensity\n";
  for (std::size_t s = 0; s < readout.intensities.size(); ++s) {
    out += fmt::format("{},{},{}\n", readout.site_ids[s], readout.channel_of_site[s], format_number(readout.intensities[s]));
  }
  return out;
}

std::string mode_profile_csv(const optics::ModeProfile& profile) {
  const auto& g = profile.field;
  std::string out = "x_um,y_um,amplitude\n";
  for (std::size_t iy = 0; iy < g.resolution; ++iy) {
    for (std::size_t ix = 0; ix < g.resolution; ++ix) {
      out += fmt::format("{},{},{}\n", format_number(g.coordinate(ix)), format_number(g.coordinate(iy)),
                         format_number(g.at(ix, iy)));
    }
  }
  return out;
}

std::string threshold_scan_csv(const qlink::ReadoutResult& result) {
  std::string out = "threshold,p_miss_bright,p_false_dark\n";
  for (const auto& p : result.scan) {
    out += fmt::format("{},{},{}\n", p.threshold, format_number(p.p_miss_bright), format_number(p.p_false_dark));
  }
  return out;
}

Manifest::Manifest(std::string command, std::string config_hash, std::uint64_t seed)
    : command_(std::move(command)), config_hash_(std::move(config_hash)), seed_(seed) {}

void Manifest::write(const std::filesystem::path& dir, const std::string& name, std::string_view content) {
  write_file(dir / name, content);
  files_.emplace_back(name, hash_hex(content));
}

void Manifest::finish(const std::filesystem::path& dir) const {
  Json j;
  j["tool"] = "ocm";
  j["version"] = kToolVersion;
  j["command"] = command_;
  j["config_hash"] = config_hash_;
  j["seed"] = seed_;
  Json files = Json::array();
  for (const auto& [name, hash] : files_) files.push_back({{"path", name}, {"fnv1a64", hash}});
  j["files"] = std::move(files);
  write_file(dir / "manifest.json", j.dump(2) + "\n");
}

}  // namespace ocm::io
