#include "drillsim/specimen.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace drillsim::specimen;
using drillsim::spline::Vec3;

namespace {

SpecimenConfig uniform(double h = 300e-6) {
    SpecimenConfig c;
    c.base_thickness = h;
    c.variation_amplitude = 0.0;
    c.grid_resolution = 128;
    return c;
}

DrillTool tool_at(double x, double y, double z) {
    DrillTool t;
    t.tip = Vec3(x, y, z);
    return t;
}

}  // namespace

TEST_CASE("degenerate configuration gives a uniform flat shell") {
    const ShellSpecimen s(uniform());
    for (std::size_t row = 0; row < s.resolution(); row += 7) {
        for (std::size_t col = 0; col < s.resolution(); col += 5) {
            CHECK(s.thickness(row, col) == doctest::Approx(300e-6).epsilon(1e-15));
            CHECK(s.outer_height(row, col) == 0.0);
            CHECK(s.removal(row, col) == 0.0);
        }
    }
    CHECK(s.completion_at(0.0, 0.0) == 0.0);
    CHECK_FALSE(s.membrane_ruptured());
}

TEST_CASE("fields are reproducible from the seed") {
    SpecimenConfig c;
    c.grid_resolution = 64;
    const ShellSpecimen a(c);
    const ShellSpecimen b(c);
    CHECK(std::equal(a.thickness_field().begin(), a.thickness_field().end(), b.thickness_field().begin()));
    CHECK(std::equal(a.outer_field().begin(), a.outer_field().end(), b.outer_field().begin()));
    c.seed = 2;
    const ShellSpecimen d(c);
    CHECK_FALSE(std::equal(a.thickness_field().begin(), a.thickness_field().end(), d.thickness_field().begin()));
}

TEST_CASE("thickness variation stays within the amplitude band") {
    SpecimenConfig c;
    c.variation_amplitude = 0.2;
    const ShellSpecimen s(c);
    const auto h = s.thickness_field();
    const auto [lo, hi] = std::minmax_element(h.begin(), h.end());
    CHECK(*lo >= 0.8 * 300e-6 - 1e-18);
    CHECK(*hi <= 1.2 * 300e-6 + 1e-18);
    CHECK(*hi - *lo > 0.1 * 300e-6);
}

TEST_CASE("tilted outer surface") {
    auto c = uniform();
    c.tilt_deg = 5.0;
    c.tilt_axis_deg = 0.0;
    const ShellSpecimen s(c);
    const double R = 8e-3;
    // the surface rises along the direction perpendicular to the tilt axis
    const double rise = s.surface_height(0.0, R) - s.surface_height(0.0, -R);
    CHECK(rise == doctest::Approx(2.0 * R * std::sin(5.0 * M_PI / 180.0)).epsilon(0.01));
    CHECK(rise == doctest::Approx(1.39e-3).epsilon(0.01));
    CHECK(s.surface_height(R, 0.0) == doctest::Approx(0.0));

    SUBCASE("max over the circle minus min over the circle") {
        double lo = 1, hi = -1;
        for (int k = 0; k < 360; ++k) {
            const double a = k * M_PI / 180.0;
            const double z = s.surface_height(R * std::cos(a), R * std::sin(a));
            lo = std::min(lo, z);
            hi = std::max(hi, z);
        }
        CHECK(hi - lo == doctest::Approx(rise).epsilon(1e-9));
    }
}

TEST_CASE("spherical cap") {
    auto c = uniform();
    c.cap_radius = 25e-3;
    c.center = Vec3(0, 0, 2e-3);
    const ShellSpecimen s(c);
    CHECK(s.surface_height(0.0, 0.0) == doctest::Approx(2e-3).epsilon(1e-15));
    const double d = 8e-3;
    const double expect = 2e-3 - 25e-3 + std::sqrt(25e-3 * 25e-3 - d * d);
    CHECK(s.surface_height(d, 0.0) == doctest::Approx(expect).epsilon(1e-12));

    c.cap_radius = 5e-3;
    CHECK_THROWS_AS(ShellSpecimen{c}, InvalidSpecimenError);
}

TEST_CASE("material removal") {
    SUBCASE("tip above the surface removes nothing") {
        ShellSpecimen s(uniform());
        s.apply_drill(tool_at(0, 0, 1e-6));
        CHECK(std::all_of(s.removal_field().begin(), s.removal_field().end(), [](double r) { return r == 0.0; }));
    }
    SUBCASE("full penetration gives completion one") {
        ShellSpecimen s(uniform());
        s.apply_drill(tool_at(0, 0, -300e-6));
        CHECK(s.completion_at(0, 0) == 1.0);
        CHECK_FALSE(s.membrane_ruptured());
    }
    SUBCASE("half depth gives completion one half") {
        ShellSpecimen s(uniform());
        s.apply_drill(tool_at(0, 0, -150e-6));
        CHECK(s.completion_at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("cutting into the tolerance clamps completion and keeps the membrane") {
        ShellSpecimen s(uniform());
        s.apply_drill(tool_at(0, 0, -(300e-6 + 10e-6)));
        CHECK(s.completion_at(0, 0) == 1.0);
        CHECK_FALSE(s.membrane_ruptured());
    }
    SUBCASE("removal never shrinks") {
        ShellSpecimen s(uniform());
        s.apply_drill(tool_at(0, 0, -200e-6));
        const std::vector<double> before(s.removal_field().begin(), s.removal_field().end());
        s.apply_drill(tool_at(0, 0, -100e-6));
        CHECK(std::equal(before.begin(), before.end(), s.removal_field().begin()));
    }
    SUBCASE("only cells under the burr are cut") {
        ShellSpecimen s(uniform());
        s.apply_drill(tool_at(0, 0, -100e-6));
        CHECK(s.completion_at(0.0, 0.0) > 0.0);
        CHECK(s.completion_at(1.0e-3, 0.0) == 0.0);
    }
    SUBCASE("inactive tool does nothing") {
        ShellSpecimen s(uniform());
        auto t = tool_at(0, 0, -100e-6);
        t.active = false;
        s.apply_drill(t);
        CHECK(s.completion_at(0, 0) == 0.0);
    }
}

TEST_CASE("membrane rupture") {
    SUBCASE("tip exactly at the inner surface does not rupture") {
        auto c = uniform();
        c.membrane_tolerance = 0.0;
        ShellSpecimen s(c);
        s.apply_drill(tool_at(0, 0, -300e-6));
        CHECK_FALSE(s.membrane_ruptured());
    }
    SUBCASE("50 um below with 20 um tolerance ruptures and latches") {
        ShellSpecimen s(uniform());
        s.apply_drill(tool_at(1e-3, -2e-3, -(300e-6 + 50e-6)));
        REQUIRE(s.membrane_ruptured());
        const auto ev = *s.rupture();
        CHECK(std::hypot(ev.x - 1e-3, ev.y + 2e-3) <= 0.7e-3);
        CHECK(ev.overshoot == doctest::Approx(50e-6).epsilon(1e-9));
        // removal is clamped at h + tolerance
        for (double r : s.removal_field()) {
            CHECK(r <= 320e-6 + 1e-15);
        }
        s.apply_drill(tool_at(5e-3, 5e-3, -1e-3));
        CHECK(s.rupture()->x == ev.x);
        CHECK(s.rupture()->y == ev.y);
    }
}

TEST_CASE("completion lookups outside the grid throw") {
    const ShellSpecimen s(uniform());
    CHECK_THROWS_AS(s.completion_at(20e-3, 0.0), OutOfRegionError);
    CHECK_FALSE(s.contains(0.0, -11e-3));
}

TEST_CASE("invalid specimen parameters") {
    auto c = uniform();
    c.base_thickness = 0.0;
    CHECK_THROWS_AS(ShellSpecimen{c}, InvalidSpecimenError);
    c = uniform();
    c.variation_amplitude = 1.0;
    CHECK_THROWS_AS(ShellSpecimen{c}, InvalidSpecimenError);
    c = uniform();
    c.grid_resolution = 32;
    CHECK_THROWS_AS(ShellSpecimen{c}, InvalidSpecimenError);
    c = uniform();
    c.tilt_deg = 90.0;
    CHECK_THROWS_AS(ShellSpecimen{c}, InvalidSpecimenError);
}

TEST_CASE("patch detachability") {
    const DetachCriteria crit;  // cut at 0.99, 80 % coverage
    std::vector<double> c(30, 1.0);
    CHECK(patch_detachable(c, crit));

    SUBCASE("three adjacent half-cut points form a bridge") {
        c[10] = c[11] = c[12] = 0.5;
        CHECK_FALSE(patch_detachable(c, crit));
    }
    SUBCASE("alternating nearly-cut points are fine") {
        for (std::size_t i = 0; i < 30; i += 2) {
            c[i] = 0.995;
        }
        CHECK(patch_detachable(c, crit));
    }
    SUBCASE("a two-point gap across the seam is a bridge") {
        c[0] = c[29] = 0.2;
        CHECK_FALSE(patch_detachable(c, crit));
    }
    SUBCASE("isolated uncut points below the coverage limit fail") {
        for (std::size_t i = 0; i < 30; i += 4) {
            c[i] = 0.0;  // 8 isolated points, 22/30 cut
        }
        CHECK_FALSE(patch_detachable(c, crit));
    }
    SUBCASE("isolated uncut points within the coverage limit pass") {
        for (std::size_t i = 0; i < 30; i += 5) {
            c[i] = 0.0;  // 6 isolated points, 24/30 cut
        }
        CHECK(patch_detachable(c, crit));
    }
    SUBCASE("specimen overload reads completions at the path points") {
        ShellSpecimen s(uniform());
        std::vector<Vec3> pts;
        for (int k = 0; k < 12; ++k) {
            const double a = 2.0 * M_PI * k / 12.0;
            pts.emplace_back(8e-3 * std::cos(a), 8e-3 * std::sin(a), 0.0);
        }
        CHECK_FALSE(patch_detachable(s, pts, crit));
        for (const auto& p : pts) {
            s.apply_drill(tool_at(p.x(), p.y(), -300e-6));
        }
        CHECK(patch_detachable(s, pts, crit));
    }
}

TEST_CASE("matrix dump") {
    SpecimenConfig c = uniform();
    c.grid_resolution = 64;
    const ShellSpecimen s(c);
    std::ostringstream os;
    ShellSpecimen::write_matrix(os, s.thickness_field(), s.resolution());
    std::istringstream in(os.str());
    std::string line;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        CHECK(std::count(line.begin(), line.end(), ',') == 63);
    }
    CHECK(rows == 64);
}
