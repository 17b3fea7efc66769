#include "drillsim/config_io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace drillsim;
using controller::ConfigError;

namespace {

std::string field_of(const std::string& text) {
    try {
        config::parse_config(text);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "";
}

}  // namespace

TEST_CASE("empty object gives the defaults") {
    const auto c = config::parse_config("{}");
    const controller::TrialConfig d;
    CHECK(c.v0 == d.v0);
    CHECK(c.points == 30);
    CHECK(c.radius == 8e-3);
    CHECK(c.frequency == 30.0);
    CHECK(c.stop.completion_threshold == 0.85);
}

TEST_CASE("round trip through JSON") {
    controller::TrialConfig c;
    c.v0 = 5e-6;
    c.points = 24;
    c.seed = 99;
    c.quasi_static = true;
    c.specimen.tilt_deg = 2.5;
    c.specimen.cap_radius = 40e-3;
    c.perception.noise.sigma = 0.19;
    c.perception.noise.regions.push_back({45.0, 10.0, -0.2});
    c.randomize.enabled = true;
    c.randomize.tilt_max_deg = 4.0;

    const auto text = config::to_json(c).dump();
    const auto back = config::parse_config(text);
    CHECK(config::to_json(back) == config::to_json(c));
    REQUIRE(back.perception.noise.regions.size() == 1);
    CHECK(back.perception.noise.regions[0].bias == -0.2);
    CHECK(back.seed == 99);
}

TEST_CASE("diagnostics name the offending field") {
    CHECK(field_of(R"({"points": 2})") == "points");
    CHECK(field_of(R"({"bogus": 1})") == "bogus");
    CHECK(field_of(R"({"perception": {"noise": {"sigmaa": 0.1}}})") == "perception.noise.sigmaa");
    CHECK(field_of(R"({"perception": {"noise": {"sigma": -0.1}}})") == "perception.noise.sigma");
    CHECK(field_of(R"({"v0": "fast"})") == "v0");
    CHECK(field_of(R"({"points": -3})") == "points");
    CHECK(field_of(R"({"quasi_static": 1})") == "quasi_static");
    CHECK(field_of(R"({"perception": {"noise": {"regions": [{"bias": 0.1, "x": 1}]}}})") ==
          "perception.noise.regions[0].x");
    CHECK(field_of(R"({"specimen": {"tilt_deg": 95}})") == "specimen");
    CHECK(field_of(R"([1, 2])") == "<root>");
}

TEST_CASE("syntax errors report line and column") {
    CHECK(field_of("{\n  \"v0\": ,\n}") == "line 2, column 9");
}

TEST_CASE("loading from a file") {
    const auto path = std::filesystem::temp_directory_path() / "drillsim_config_test.json";
    {
        std::ofstream out(path);
        out << R"({"seed": 7, "specimen": {"base_thickness": 280e-6}})";
    }
    const auto c = config::load_config(path);
    CHECK(c.seed == 7);
    CHECK(c.specimen.base_thickness == 280e-6);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(config::load_config(path), ConfigError);
}
