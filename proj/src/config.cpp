#include "ocm/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "ocm/errors.hpp"

namespace ocm {

namespace {

using io::Json;

void reject_unknown(const Json& obj, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(ErrorKind::Validation, fmt::format("config: '{}' must be an object", section));
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    if (!known) {
      fail(ErrorKind::Validation,
           fmt::format("config: unknown key '{}'", section.empty() ? key : section + "." + key));
    }
  }
}

class Reader {
 public:
  explicit Reader(std::vector<std::string>& keys) : keys_(keys) {}

  template <typename T>
  void get(const Json& obj, const std::string& section, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
      out = obj.at(key).get<T>();
    } catch (const Json::exception& e) {
      fail(ErrorKind::Validation, fmt::format("config: '{}.{}' has the wrong type: {}", section, key, e.what()));
    }
    keys_.push_back(section.empty() ? key : section + "." + key);
  }

  void mark(const std::string& key) { keys_.push_back(key); }

 private:
  std::vector<std::string>& keys_;
};

void flatten(const Json& j, const std::string& prefix, std::vector<std::string>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
  } else {
    out.push_back(prefix);
  }
}

}  // namespace

void ProjectConfig::validate() const {
  waveguide.validate();
  constraints.validate();
  schedule.validate();
  deflector.deflector.validate();
  budget.validate();
  if (!(coupling.coupling_length_mm >= 0.0)) fail(ErrorKind::Validation, "config: coupling_length_mm must be >= 0");
  if (coupling.fit_separations_um.size() < 3) fail(ErrorKind::Validation, "config: need at least 3 fit separations");
  if (facets.grid_rows * facets.grid_cols < facets.n_channels) {
    fail(ErrorKind::Validation, "config: output grid smaller than the channel count");
  }
  if (!(facets.input_pitch_um > 0.0 && facets.output_pitch_um > 0.0)) {
    fail(ErrorKind::Validation, "config: facet pitches must be positive");
  }
  if (!(deflector.third_order_coeff >= 0.0)) fail(ErrorKind::Validation, "config: third_order_coeff must be >= 0");
}

double ProjectConfig::tone_spacing_mhz() const { return deflector.deflector.spacing_for_pitch(facets.input_pitch_um); }

double ProjectConfig::base_frequency_mhz() const {
  if (deflector.base_frequency_mhz) return *deflector.base_frequency_mhz;
  const double half_span = 0.5 * static_cast<double>(facets.n_channels == 0 ? 0 : facets.n_channels - 1);
  return deflector.deflector.center_frequency_mhz - half_span * tone_spacing_mhz();
}

ProjectConfig parse_config(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::exception& e) {
    fail(ErrorKind::Validation, fmt::format("config: not valid JSON: {}", e.what()));
  }
  ProjectConfig cfg;
  Reader r(cfg.user_keys);
  reject_unknown(root, "", {"waveguide", "route", "facets", "deflector", "budget", "output_dir", "seed"});

  if (root.contains("waveguide")) {
    const Json& w = root["waveguide"];
    reject_unknown(w, "waveguide", {"core_radius_um", "delta_n", "cladding_index", "loss_table", "coupling_length_mm",
                                    "fit_separations_um"});
    r.get(w, "waveguide", "core_radius_um", cfg.waveguide.core_radius_um);
    r.get(w, "waveguide", "delta_n", cfg.waveguide.delta_n);
    r.get(w, "waveguide", "cladding_index", cfg.waveguide.cladding_index);
    if (w.contains("loss_table")) {
      std::vector<std::array<double, 2>> table;
      r.get(w, "waveguide", "loss_table", table);
      cfg.waveguide.loss_table.clear();
      for (const auto& [nm, db] : table) cfg.waveguide.loss_table.push_back({nm, db});
    }
    r.get(w, "waveguide", "coupling_length_mm", cfg.coupling.coupling_length_mm);
    r.get(w, "waveguide", "fit_separations_um", cfg.coupling.fit_separations_um);
  }
  if (root.contains("route")) {
    const Json& rt = root["route"];
    reject_unknown(rt, "route", {"d_min_um", "r_min_mm", "chip_length_mm", "max_depth_mm", "schedule"});
    r.get(rt, "route", "d_min_um", cfg.constraints.d_min_um);
    r.get(rt, "route", "r_min_mm", cfg.constraints.r_min_mm);
    r.get(rt, "route", "chip_length_mm", cfg.constraints.chip_length_mm);
    r.get(rt, "route", "max_depth_mm", cfg.constraints.max_depth_mm);
    if (rt.contains("schedule")) {
      const Json& s = rt["schedule"];
      reject_unknown(s, "route.schedule", {"y_begin", "y_end", "x_begin", "x_end", "max_dz_um"});
      r.get(s, "route.schedule", "y_begin", cfg.schedule.y_begin);
      r.get(s, "route.schedule", "y_end", cfg.schedule.y_end);
      r.get(s, "route.schedule", "x_begin", cfg.schedule.x_begin);
      r.get(s, "route.schedule", "x_end", cfg.schedule.x_end);
      r.get(s, "route.schedule", "max_dz_um", cfg.schedule.max_dz_um);
    }
  }
  if (root.contains("facets")) {
    const Json& f = root["facets"];
    reject_unknown(f, "facets", {"n_channels", "input_pitch_um", "grid_rows", "grid_cols", "output_pitch_um"});
    r.get(f, "facets", "n_channels", cfg.facets.n_channels);
    r.get(f, "facets", "input_pitch_um", cfg.facets.input_pitch_um);
    r.get(f, "facets", "grid_rows", cfg.facets.grid_rows);
    r.get(f, "facets", "grid_cols", cfg.facets.grid_cols);
    r.get(f, "facets", "output_pitch_um", cfg.facets.output_pitch_um);
  }
  if (root.contains("deflector")) {
    const Json& d = root["deflector"];
    reject_unknown(d, "deflector", {"acoustic_velocity_m_s", "center_frequency_mhz", "bandwidth_mhz", "focal_length_mm",
                                    "wavelength_nm", "total_power_budget", "beam_diameter_mm", "efficiency_curve",
                                    "base_frequency_mhz", "third_order_coeff"});
    auto& def = cfg.deflector.deflector;
    r.get(d, "deflector", "acoustic_velocity_m_s", def.acoustic_velocity_m_s);
    r.get(d, "deflector", "center_frequency_mhz", def.center_frequency_mhz);
    r.get(d, "deflector", "bandwidth_mhz", def.bandwidth_mhz);
    r.get(d, "deflector", "focal_length_mm", def.focal_length_mm);
    r.get(d, "deflector", "wavelength_nm", def.wavelength_nm);
    r.get(d, "deflector", "total_power_budget", def.total_power_budget);
    r.get(d, "deflector", "beam_diameter_mm", def.beam_diameter_mm);
    if (d.contains("efficiency_curve")) {
      std::vector<std::array<double, 2>> curve;
      r.get(d, "deflector", "efficiency_curve", curve);
      def.efficiency_curve.clear();
      for (const auto& [f, e] : curve) def.efficiency_curve.push_back({f, e});
    }
    if (d.contains("base_frequency_mhz") && !d["base_frequency_mhz"].is_null()) {
      double base = 0.0;
      r.get(d, "deflector", "base_frequency_mhz", base);
      cfg.deflector.base_frequency_mhz = base;
    }
    r.get(d, "deflector", "third_order_coeff", cfg.deflector.third_order_coeff);
  }
  if (root.contains("budget")) {
    const Json& b = root["budget"];
    reject_unknown(b, "budget", {"stages", "scattering_rate_per_s", "readout_window_us", "dark_rate_per_s"});
    if (b.contains("stages")) {
      cfg.budget.stages.clear();
      if (!b["stages"].is_array()) fail(ErrorKind::Validation, "config: budget.stages must be an array");
      for (const auto& s : b["stages"]) {
        reject_unknown(s, "budget.stages[]", {"name", "efficiency", "loss_db"});
        qlink::Stage stage;
        try {
          stage.name = s.at("name").get<std::string>();
          if (s.contains("efficiency") == s.contains("loss_db")) {
            fail(ErrorKind::Validation, fmt::format("config: stage '{}' needs exactly one of efficiency/loss_db", stage.name));
          }
          stage.efficiency = s.contains("efficiency") ? s.at("efficiency").get<double>()
                                                      : qlink::db_to_fraction(s.at("loss_db").get<double>());
        } catch (const Json::exception& e) {
          fail(ErrorKind::Validation, fmt::format("config: malformed budget stage: {}", e.what()));
        }
        cfg.budget.stages.push_back(stage);
      }
      r.mark("budget.stages");
    }
    r.get(b, "budget", "scattering_rate_per_s", cfg.budget.scattering_rate_per_s);
    r.get(b, "budget", "readout_window_us", cfg.budget.readout_window_us);
    r.get(b, "budget", "dark_rate_per_s", cfg.budget.dark_rate_per_s);
  }
  r.get(root, "", "output_dir", cfg.output_dir);
  r.get(root, "", "seed", cfg.seed);
  cfg.validate();
  return cfg;
}

ProjectConfig load_config(const std::filesystem::path& path) { return parse_config(io::read_file(path)); }

io::Json config_to_json(const ProjectConfig& cfg) {
  Json j;
  Json loss = Json::array();
  for (const auto& p : cfg.waveguide.loss_table) loss.push_back({p.wavelength_nm, p.db_per_cm});
  j["waveguide"] = {{"core_radius_um", cfg.waveguide.core_radius_um},
                    {"delta_n", cfg.waveguide.delta_n},
                    {"cladding_index", cfg.waveguide.cladding_index},
                    {"loss_table", loss},
                    {"coupling_length_mm", cfg.coupling.coupling_length_mm},
                    {"fit_separations_um", cfg.coupling.fit_separations_um}};
  j["route"] = {{"d_min_um", cfg.constraints.d_min_um},
                {"r_min_mm", cfg.constraints.r_min_mm},
                {"chip_length_mm", cfg.constraints.chip_length_mm},
                {"max_depth_mm", cfg.constraints.max_depth_mm},
                {"schedule",
                 {{"y_begin", cfg.schedule.y_begin},
                  {"y_end", cfg.schedule.y_end},
                  {"x_begin", cfg.schedule.x_begin},
                  {"x_end", cfg.schedule.x_end},
                  {"max_dz_um", cfg.schedule.max_dz_um}}}};
  j["facets"] = {{"n_channels", cfg.facets.n_channels},
                 {"input_pitch_um", cfg.facets.input_pitch_um},
                 {"grid_rows", cfg.facets.grid_rows},
                 {"grid_cols", cfg.facets.grid_cols},
                 {"output_pitch_um", cfg.facets.output_pitch_um}};
  const auto& d = cfg.deflector.deflector;
  Json curve = Json::array();
  for (const auto& p : d.efficiency_curve) curve.push_back({p.frequency_mhz, p.efficiency});
  j["deflector"] = {{"acoustic_velocity_m_s", d.acoustic_velocity_m_s},
                    {"center_frequency_mhz", d.center_frequency_mhz},
                    {"bandwidth_mhz", d.bandwidth_mhz},
                    {"focal_length_mm", d.focal_length_mm},
                    {"wavelength_nm", d.wavelength_nm},
                    {"total_power_budget", d.total_power_budget},
                    {"beam_diameter_mm", d.beam_diameter_mm},
                    {"efficiency_curve", curve},
                    {"base_frequency_mhz", cfg.base_frequency_mhz()},
                    {"third_order_coeff", cfg.deflector.third_order_coeff}};
  Json stages = Json::array();
  for (const auto& s : cfg.budget.stages) stages.push_back({{"name", s.name}, {"efficiency", s.efficiency}});
  j["budget"] = {{"stages", stages},
                 {"scattering_rate_per_s", cfg.budget.scattering_rate_per_s},
                 {"readout_window_us", cfg.budget.readout_window_us},
                 {"dark_rate_per_s", cfg.budget.dark_rate_per_s}};
  j["output_dir"] = cfg.output_dir;
  j["seed"] = cfg.seed;
  return j;
}

std::string default_provenance(const std::string& key) {
  if (key == "waveguide.coupling_length_mm") return "published value (effective coupling length 5 mm)";
  if (key == "facets.n_channels") return "published value (49-channel demonstration)";
  if (key == "route.d_min_um") return "derived from published value (crosstalk below 1e-3 at 30 um)";
  if (key == "route.max_depth_mm") return "published value (1 mm writing depth)";
  if (key == "waveguide.loss_table") return "placeholder except the published 700 nm / 0.055 dB/cm point";
  if (key == "budget.stages") {
    return "placeholder except the published 2.5 dB fiber+chip coupling";
  }
  if (key == "budget.readout_window_us") return "published readout time (100 us)";
  return "placeholder";
}

io::Json annotated_config(const ProjectConfig& cfg) {
  Json j = config_to_json(cfg);
  std::vector<std::string> leaves;
  flatten(j, "", leaves);
  const std::set<std::string> user(cfg.user_keys.begin(), cfg.user_keys.end());
  Json prov = Json::object();
  for (const auto& key : leaves) {
    bool set_by_user = user.count(key) > 0;
    // Whole-array keys (stages, loss_table) are recorded at their own level.
    for (const auto& u : user) {
      if (key.rfind(u + ".", 0) == 0) set_by_user = true;
    }
    prov[key] = set_by_user ? "user" : default_provenance(key);
  }
  j["provenance"] = std::move(prov);
  return j;
}

}  // namespace ocm
