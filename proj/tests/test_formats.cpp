#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>

#include "ocm/config.hpp"
#include "ocm/errors.hpp"
#include "ocm/formats.hpp"

using namespace ocm;
namespace fs = std::filesystem;

namespace {

const fs::path kData = OCM_TEST_DATA_DIR;

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ocm_formats_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::Usage;
}

}  // namespace

TEST_CASE("fnv-1a reference vectors") {
  CHECK(io::fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(io::fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(io::fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(io::hash_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("crosstalk csv round trip") {
  SUBCASE("twelve-digit values are exact") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<long long> digits(0, 999999999999LL);
    xtalk::CrosstalkMatrix x = xtalk::CrosstalkMatrix::identity(6);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j) x(i, j) = std::stod("0.000" + std::to_string(digits(rng)));
    const std::string text = io::crosstalk_csv(x);
    const auto back = io::parse_crosstalk_csv(text);
    REQUIRE(back.n_channels == 6);
    for (std::size_t i = 0; i < 36; ++i) CHECK(back.power[i] == x.power[i]);
    CHECK(io::crosstalk_csv(back) == text);
  }

  SUBCASE("arbitrary doubles reach a fixed point after one pass") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    xtalk::CrosstalkMatrix x = xtalk::CrosstalkMatrix::identity(5);
    for (double& v : x.power) v = u(rng) * std::pow(10.0, -u(rng) * 12.0);
    const std::string once = io::crosstalk_csv(io::parse_crosstalk_csv(io::crosstalk_csv(x)));
    CHECK(once == io::crosstalk_csv(x));
    const auto back = io::parse_crosstalk_csv(once);
    for (std::size_t i = 0; i < 25; ++i) CHECK(back.power[i] == doctest::Approx(x.power[i]).epsilon(1e-11));
  }

  SUBCASE("golden matrix file") {
    const std::string text = io::read_file(kData / "golden_matrix.csv");
    CHECK(io::crosstalk_csv(io::parse_crosstalk_csv(text)) == text);
  }

  CHECK(kind_of([] { (void)io::parse_crosstalk_csv("1,0\n0\n"); }) == ErrorKind::Io);
  CHECK(kind_of([] { (void)io::parse_crosstalk_csv("1,x\n0,1\n"); }) == ErrorKind::Io);
}

TEST_CASE("route plan json round trip") {
  const io::Json original = io::Json::parse(io::read_file(kData / "golden_plan.json"));
  CHECK(original.at("schema") == io::kRouteSchema);
  const route::RoutePlan plan = io::route_from_json(original);
  CHECK(plan.assignment.size() == 49);
  CHECK(plan.paths.size() == 49);
  const io::Json again = io::route_to_json(plan);
  CHECK(again == original);
  CHECK(io::route_to_json(io::route_from_json(again)).dump() == again.dump());

  io::Json broken = original;
  broken.erase("assignment");
  CHECK(kind_of([&] { (void)io::route_from_json(broken); }) == ErrorKind::Io);
}

TEST_CASE("matrix metadata round trip") {
  const io::Json j = io::Json::parse(io::read_file(kData / "golden_matrix.meta.json"));
  const io::MatrixMetadata meta = io::matrix_metadata_from_json(j);
  CHECK(meta.metrics.max_offdiag == doctest::Approx(0.01198));
  CHECK(meta.layout_hash == io::layout_hash(meta.input, meta.output, meta.assignment));
  const io::MatrixMetadata back = io::matrix_metadata_from_json(io::matrix_metadata_to_json(meta));
  CHECK(back.wavelength_nm == meta.wavelength_nm);
  CHECK(back.lossy == meta.lossy);
  CHECK(back.assignment == meta.assignment);
  CHECK(back.layout_hash == meta.layout_hash);
  CHECK(back.metrics.avg_nearest_input == meta.metrics.avg_nearest_input);
  CHECK(back.metrics.avg_nearest_output == meta.metrics.avg_nearest_output);
  CHECK(back.metrics.avg_non_nearest == meta.metrics.avg_non_nearest);
  CHECK(io::matrix_metadata_to_json(back) == io::matrix_metadata_to_json(meta));

  // the hash tracks the assignment
  route::Assignment swapped = meta.assignment;
  std::swap(swapped[0], swapped[1]);
  CHECK(io::layout_hash(meta.input, meta.output, swapped) != meta.layout_hash);
}

TEST_CASE("config documents") {
  SUBCASE("empty document gives defaults") {
    const ProjectConfig cfg = parse_config("{}");
    CHECK(cfg.facets.n_channels == 49);
    CHECK(cfg.waveguide.core_radius_um == 3.0);
    CHECK(cfg.seed == 20250101);
    CHECK(cfg.user_keys.empty());
    CHECK(cfg.base_frequency_mhz() ==
          doctest::Approx(cfg.deflector.deflector.center_frequency_mhz - 24.0 * cfg.tone_spacing_mhz()));
  }

  SUBCASE("unknown keys are rejected") {
    CHECK(kind_of([] { (void)parse_config(R"({"waveguide": {"core_radius": 3}})"); }) == ErrorKind::Validation);
    CHECK(kind_of([] { (void)parse_config(R"({"colour": "blue"})"); }) == ErrorKind::Validation);
    CHECK(kind_of([] { (void)parse_config(R"({"route": {"schedule": {"z_begin": 0.1}}})"); }) == ErrorKind::Validation);
    CHECK(kind_of([] { (void)parse_config(R"({"seed": "x"})"); }) == ErrorKind::Validation);
    CHECK(kind_of([] { (void)parse_config("{not json"); }) == ErrorKind::Validation);
    CHECK(kind_of([] { (void)parse_config(R"({"budget": {"stages": [{"name": "a"}]}})"); }) == ErrorKind::Validation);
  }

  SUBCASE("user values and provenance") {
    const ProjectConfig cfg = parse_config(R"({
      "waveguide": {"delta_n": 0.004},
      "budget": {"stages": [{"name": "coupling", "loss_db": 3.0103}, {"name": "detector", "efficiency": 0.8}]},
      "seed": 7})");
    CHECK(cfg.waveguide.delta_n == 0.004);
    CHECK(cfg.seed == 7);
    REQUIRE(cfg.budget.stages.size() == 2);
    CHECK(cfg.budget.stages[0].efficiency == doctest::Approx(0.5).epsilon(1e-4));
    const io::Json annotated = annotated_config(cfg);
    const io::Json& prov = annotated.at("provenance");
    CHECK(prov.at("waveguide.delta_n") == "user");
    CHECK(prov.at("seed") == "user");
    CHECK(prov.at("waveguide.core_radius_um") == "placeholder");
    CHECK(prov.at("route.r_min_mm") == "placeholder");
    CHECK(prov.at("waveguide.coupling_length_mm").get<std::string>().find("published") != std::string::npos);
    for (const auto& [key, label] : prov.items()) CHECK_FALSE(label.get<std::string>().empty());
    CHECK(prov.size() >= 20);
  }

  SUBCASE("resolved document re-parses to the same values") {
    const ProjectConfig cfg = parse_config(R"({"facets": {"input_pitch_um": 60}, "deflector": {"bandwidth_mhz": 60}})");
    const io::Json resolved = config_to_json(cfg);
    const ProjectConfig again = parse_config(resolved.dump());
    CHECK(config_to_json(again) == resolved);
  }
}

TEST_CASE("manifest records every written file") {
  const fs::path dir = scratch_dir("manifest");
  io::Manifest m("unit", io::hash_hex("{}"), 42);
  m.write(dir, "a.csv", "1,2\n");
  m.write(dir, "b.txt", "hello\n");
  m.finish(dir);
  CHECK(io::read_file(dir / "a.csv") == "1,2\n");
  const io::Json j = io::Json::parse(io::read_file(dir / "manifest.json"));
  CHECK(j.at("command") == "unit");
  CHECK(j.at("seed") == 42);
  REQUIRE(j.at("files").size() == 2);
  for (const auto& f : j.at("files")) {
    const std::string content = io::read_file(dir / f.at("path").get<std::string>());
    CHECK(f.at("fnv1a64") == io::hash_hex(content));
  }
  fs::remove_all(dir);
}

TEST_CASE("serializers are deterministic") {
  const route::RoutePlan plan = io::route_from_json(io::Json::parse(io::read_file(kData / "golden_plan.json")));
  CHECK(io::route_to_json(plan).dump() == io::route_to_json(plan).dump());
  CHECK(io::format_number(0.1) == "0.1");
  CHECK(io::format_number(1.0 / 3.0) == "0.333333333333");
  CHECK(io::format_number(2.5e-10) == "2.5e-10");
  CHECK(kind_of([] { (void)io::read_file("/nonexistent/ocm/file"); }) == ErrorKind::Io);
}
