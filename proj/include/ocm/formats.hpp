#pragma once

// Interchange formats. Numeric CSV uses 12 significant digits; plans and
// metadata are JSON documents with a schema tag.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ocm/clink_aod.hpp"
#include "ocm/core_optics.hpp"
#include "ocm/coupled_mode.hpp"
#include "ocm/qlink_budget.hpp"
#include "ocm/router.hpp"

namespace ocm::io {

using Json = nlohmann::ordered_json;

inline constexpr const char* kRouteSchema = "ocm.route/1";
inline constexpr const char* kCrosstalkSchema = "ocm.crosstalk/1";

/// %.12g
std::string format_number(double v);

std::uint64_t fnv1a64(std::string_view data);
std::string hash_hex(std::string_view data);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// Crosstalk matrix: one CSV row per input channel, no header.
std::string crosstalk_csv(const xtalk::CrosstalkMatrix& x);
xtalk::CrosstalkMatrix parse_crosstalk_csv(std::string_view text, double wavelength_nm = 0.0, bool lossy = false);

Json facet_to_json(const route::FacetLayout& f);
route::FacetLayout facet_from_json(const Json& j);

/// Hash of both facets and the assignment, used to tie a matrix to its layout.
std::string layout_hash(const route::FacetLayout& input, const route::FacetLayout& output,
                        const route::Assignment& assignment);

Json metrics_to_json(const xtalk::CrosstalkMetrics& m);
xtalk::CrosstalkMetrics metrics_from_json(const Json& j);

struct MatrixMetadata {
  double wavelength_nm = 0.0;
  bool lossy = false;
  route::FacetLayout input;
  route::FacetLayout output;
  route::Assignment assignment;
  xtalk::CrosstalkMetrics metrics;
  std::string layout_hash;
  std::string note;
};

Json matrix_metadata_to_json(const MatrixMetadata& meta);
MatrixMetadata matrix_metadata_from_json(const Json& j);

Json route_to_json(const route::RoutePlan& plan);
route::RoutePlan route_from_json(const Json& j);

Json validation_to_json(const route::ValidationReport& report);
std::string validation_text(const route::ValidationReport& report);

/// frequency_mhz,amplitude,phase_rad (+ channel) for waveform generators.
std::string tone_plan_csv(const aod::TonePlan& plan);
std::string intensity_csv(const aod::IntensityReadout& readout);
/// x_um,y_um,amplitude rows over the profile grid.
std::string mode_profile_csv(const optics::ModeProfile& profile);
std::string threshold_scan_csv(const qlink::ReadoutResult& result);

/// Run manifest: every output file with its content hash.
class Manifest {
 public:
  Manifest(std::string command, std::string config_hash, std::uint64_t seed);

  /// Writes `content` under `dir` and records it.
  void write(const std::filesystem::path& dir, const std::string& name, std::string_view content);
  /// Writes manifest.json into `dir`.
  void finish(const std::filesystem::path& dir) const;

  [[nodiscard]] const std::vector<std::pair<std::string, std::string>>& files() const { return files_; }

 private:
  std::string command_;
  std::string config_hash_;
  std::uint64_t seed_;
  std::vector<std::pair<std::string, std::string>> files_;
};

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace ocm::io
