#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hevrl/drivecycle.hpp"

using namespace hevrl;

namespace {

std::filesystem::path write_temp_cycle(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << body;
  return path;
}

const std::filesystem::path kNedcPath =
    std::filesystem::path(HEVRL_SOURCE_DIR) / "data" / "nedc.csv";

}  // namespace

TEST_CASE("load_cycle interpolates to the uniform grid") {
  const auto path = write_temp_cycle("cycle_interp.csv",
                                     "time_s,speed_mps\n"
                                     "0,0\n"
                                     "2,10\n");
  const DriveCycle cycle = load_cycle(path, 1.0);
  REQUIRE(cycle.speeds_mps.size() == 3);
  CHECK(cycle.speeds_mps[0] == doctest::Approx(0.0));
  CHECK(cycle.speeds_mps[1] == doctest::Approx(5.0));
  CHECK(cycle.speeds_mps[2] == doctest::Approx(10.0));
}

TEST_CASE("load_cycle converts km/h to m/s") {
  const auto path = write_temp_cycle("cycle_kmh.csv",
                                     "# comment line\n"
                                     "time_s,speed_kmh\n"
                                     "0,36\n"
                                     "1,72\n");
  const DriveCycle cycle = load_cycle(path, 1.0);
  CHECK(cycle.speeds_mps[0] == doctest::Approx(10.0));
  CHECK(cycle.speeds_mps[1] == doctest::Approx(20.0));
}

TEST_CASE("load_cycle rejects bad traces") {
  SUBCASE("negative speed") {
    const auto path = write_temp_cycle("cycle_neg.csv", "time_s,speed_mps\n0,0\n1,-3\n");
    CHECK_THROWS_WITH_AS(load_cycle(path), doctest::Contains("negative speed"),
                         std::runtime_error);
  }
  SUBCASE("non-monotone time") {
    const auto path = write_temp_cycle("cycle_mono.csv", "time_s,speed_mps\n0,0\n2,1\n1,2\n");
    CHECK_THROWS_WITH_AS(load_cycle(path), doctest::Contains("non-monotone"), std::runtime_error);
  }
  SUBCASE("empty trace") {
    const auto path = write_temp_cycle("cycle_empty.csv", "");
    CHECK_THROWS_AS(load_cycle(path), std::runtime_error);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_WITH_AS(load_cycle("/nonexistent/nope.csv"),
                         doctest::Contains("cannot open"), std::runtime_error);
  }
  SUBCASE("single row") {
    const auto path = write_temp_cycle("cycle_one.csv", "time_s,speed_mps\n0,0\n");
    CHECK_THROWS_AS(load_cycle(path), std::runtime_error);
  }
}

TEST_CASE("cycle_distance basics") {
  DriveCycle cycle;
  cycle.timestep_s = 1.0;
  cycle.name = "const";
  cycle.speeds_mps.assign(101, 10.0);
  CHECK(cycle_distance(cycle) == doctest::Approx(1000.0));

  cycle.speeds_mps.assign(101, 0.0);
  CHECK(cycle_distance(cycle) == doctest::Approx(0.0));
}

TEST_CASE("bundled NEDC trace has the reference distance") {
  REQUIRE(std::filesystem::exists(kNedcPath));
  const DriveCycle nedc = load_cycle(kNedcPath);
  CHECK(nedc.num_steps() == 1180);
  const double d = cycle_distance(nedc);
  // reference total distance 10.93 km
  CHECK(std::abs(d - 10930.0) / 10930.0 < 0.02);
}

TEST_CASE("resampling is idempotent at the same timestep") {
  const DriveCycle nedc = load_cycle(kNedcPath);
  const DriveCycle again = resample(nedc, nedc.timestep_s);
  REQUIRE(again.speeds_mps.size() == nedc.speeds_mps.size());
  for (std::size_t i = 0; i < nedc.speeds_mps.size(); ++i) {
    CHECK(again.speeds_mps[i] == nedc.speeds_mps[i]);
  }
}

TEST_CASE("distance is invariant under refinement") {
  const DriveCycle nedc = load_cycle(kNedcPath);
  const double d1 = cycle_distance(nedc);
  const double d2 = cycle_distance(resample(nedc, 0.25));
  CHECK(std::abs(d1 - d2) / d1 < 1e-3);
}

TEST_CASE("truncated keeps the prefix") {
  const DriveCycle nedc = load_cycle(kNedcPath);
  const DriveCycle head = truncated(nedc, 200);
  CHECK(head.num_steps() == 200);
  CHECK(head.speeds_mps[200] == nedc.speeds_mps[200]);
  CHECK_THROWS_AS(truncated(nedc, 0), std::invalid_argument);
  CHECK_THROWS_AS(truncated(nedc, 100000), std::invalid_argument);
}
