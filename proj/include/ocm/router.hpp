#pragma once

// 1D -> 2D channel routing: facet layouts, channel assignment, smooth 3D
// centerlines, and route validation. Transverse coordinates in um,
// longitudinal coordinate z in mm.

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ocm/assignment.hpp"

namespace ocm::route {

enum class FacetId { Input, Output };
enum class FacetPattern { Linear, Grid, Custom };

struct Port {
  double x_um = 0.0;
  double y_um = 0.0;
};

struct FacetLayout {
  FacetId facet = FacetId::Input;
  FacetPattern pattern = FacetPattern::Linear;
  std::vector<Port> ports;
  double pitch_um = 0.0;
  std::size_t rows = 0;  // grid pattern only
  std::size_t cols = 0;

  [[nodiscard]] std::size_t size() const { return ports.size(); }
  void validate() const;
};

/// assignment[input_index] = output_index.
using Assignment = std::vector<std::size_t>;

struct PathPoint {
  double x_um = 0.0;
  double y_um = 0.0;
  double z_mm = 0.0;
};

struct ChannelPath {
  std::vector<PathPoint> points;
  double length_mm = 0.0;
};

struct RouteConstraints {
  double d_min_um = 30.0;
  double r_min_mm = 15.0;
  double chip_length_mm = 15.0;
  double max_depth_mm = 1.0;

  void validate() const;
};

/// Transition windows as fractions of the chip length. The vertical (y)
/// transition runs first, the lateral (x) one second; each is a raised
/// cosine and the path is straight outside its windows.
struct PathSchedule {
  double y_begin = 0.03;
  double y_end = 0.30;
  double x_begin = 0.30;
  double x_end = 0.97;
  double max_dz_um = 50.0;

  void validate() const;
};

struct RoutePlan {
  FacetLayout input;
  FacetLayout output;
  Assignment assignment;
  std::vector<ChannelPath> paths;
  double chip_length_mm = 0.0;
  double min_clearance_um = std::numeric_limits<double>::infinity();
  double min_bend_radius_mm = std::numeric_limits<double>::infinity();
};

/// Centered linear input array and centered row-major grid output.
std::pair<FacetLayout, FacetLayout> make_facets(std::size_t n, double input_pitch_um, std::size_t grid_rows,
                                                std::size_t grid_cols, double output_pitch_um);

enum class CostMode { PathLength, CrosstalkWeighted };

struct AssignOptions {
  CostMode mode = CostMode::PathLength;
  /// When set, a 2-swap local search penalizes clearance conflicts found by
  /// trial path generation under these constraints.
  std::optional<RouteConstraints> repair;
  PathSchedule schedule;
  /// Decay length for the crosstalk-weighted term exp(-d/d0).
  double d0_um = 2.0;
  /// Objective weight (um^2 per mm) of the accumulated crosstalk term.
  double crosstalk_weight = 1e6;
  int max_passes = 8;
};

/// Squared transverse displacement between every input and output port.
CostMatrix displacement_cost(const FacetLayout& input, const FacetLayout& output);

Assignment assign(const FacetLayout& input, const FacetLayout& output, const AssignOptions& options = {});

/// Peak curvature (1/mm) of a raised-cosine offset of `displacement_um`
/// spread over `window_mm`: D * pi^2 / (2 L^2), attained at the window ends.
double raised_cosine_max_curvature(double displacement_um, double window_mm);

RoutePlan generate_paths(const FacetLayout& input, const FacetLayout& output, const Assignment& assignment,
                         const RouteConstraints& constraints, const PathSchedule& schedule = {});

/// Straight plan: every channel runs parallel from its input port to the
/// transversely coincident output port (used for validator fixtures and
/// analytic checks).
RoutePlan straight_plan(const FacetLayout& layout, double chip_length_mm, double max_dz_um = 50.0);

/// Channel count for a chip: floor(length/spacing) columns times
/// floor(depth/spacing) layers. All arguments in um.
std::size_t capacity(double chip_length_um, double spacing_um, double depth_um);

struct Violation {
  std::string kind;  // "clearance", "curvature", "endpoint", "monotonic-z", "stored-statistic", "depth"
  std::size_t channel_a = 0;
  std::size_t channel_b = 0;
  double z_mm = 0.0;
  double measured = 0.0;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  double measured_min_clearance_um = std::numeric_limits<double>::infinity();
  double measured_min_bend_radius_mm = std::numeric_limits<double>::infinity();

  [[nodiscard]] bool ok() const { return violations.empty(); }
};

/// Recomputes clearance and curvature from the samples, independent of the
/// statistics stored in the plan.
ValidationReport validate(const RoutePlan& plan, const RouteConstraints& constraints);

/// Minimum pairwise separation over common z samples, and where it occurs.
struct PairClearance {
  double min_um = std::numeric_limits<double>::infinity();
  double z_mm = 0.0;
};
PairClearance pair_clearance(const ChannelPath& a, const ChannelPath& b);

/// Curvature (1/mm) through three consecutive samples (circumscribed circle).
double discrete_curvature(const PathPoint& p0, const PathPoint& p1, const PathPoint& p2);

}  // namespace ocm::route
