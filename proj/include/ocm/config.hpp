#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ocm/clink_aod.hpp"
#include "ocm/core_optics.hpp"
#include "ocm/formats.hpp"
#include "ocm/qlink_budget.hpp"
#include "ocm/router.hpp"

namespace ocm {

struct FacetGeometry {
  std::size_t n_channels = 49;
  double input_pitch_um = 50.0;
  std::size_t grid_rows = 7;
  std::size_t grid_cols = 7;
  double output_pitch_um = 40.0;
};

struct CouplingSettings {
  double coupling_length_mm = 5.0;
  std::vector<double> fit_separations_um = {15, 20, 25, 30, 35, 40, 45, 50};
};

struct DeflectorSettings {
  aod::Deflector deflector;
  /// Frequency of channel 0; centred on the deflector band when unset.
  std::optional<double> base_frequency_mhz;
  double third_order_coeff = 1e-3;
};

struct ProjectConfig {
  optics::WaveguideSpec waveguide = optics::WaveguideSpec::defaults();
  CouplingSettings coupling;
  route::RouteConstraints constraints;
  route::PathSchedule schedule;
  FacetGeometry facets;
  DeflectorSettings deflector;
  qlink::LinkBudget budget = qlink::LinkBudget::defaults();
  std::string output_dir = "ocm_out";
  std::uint64_t seed = 20250101;

  /// Dotted keys the user set explicitly.
  std::vector<std::string> user_keys;

  void validate() const;
  /// Tone spacing that maps one channel step onto one input pitch.
  [[nodiscard]] double tone_spacing_mhz() const;
  [[nodiscard]] double base_frequency_mhz() const;
};

/// Parses and schema-checks a config document; unknown keys are rejected.
ProjectConfig parse_config(const std::string& text);
ProjectConfig load_config(const std::filesystem::path& path);

io::Json config_to_json(const ProjectConfig& cfg);
/// Config plus a "provenance" object labelling every leaf value.
io::Json annotated_config(const ProjectConfig& cfg);

/// Provenance label for a dotted key when not set by the user.
std::string default_provenance(const std::string& key);

}  // namespace ocm
