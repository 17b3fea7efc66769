#include "drillsim/spline.hpp"
#include "drillsim/trajectory.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <string>

using namespace drillsim::spline;

namespace {

std::vector<Vec3> random_closed_knots(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> jitter(-0.3, 0.3);
    std::uniform_real_distribution<double> z(-1.0, 1.0);
    std::vector<Vec3> knots;
    for (std::size_t k = 0; k < n; ++k) {
        const double a = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n);
        knots.emplace_back(std::cos(a) + 0.1 * jitter(rng), std::sin(a) + 0.1 * jitter(rng), z(rng));
    }
    return knots;
}

double rel_err(const Vec3& a, const Vec3& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

}  // namespace

TEST_CASE("harmonic-mean knot derivatives") {
    SUBCASE("collinear equally spaced knots give the chord vector") {
        const std::vector<Vec3> k = {{0, 0, 0}, {1, 2, 3}, {2, 4, 6}};
        const auto d = compute_knot_derivatives(k, false);
        CHECK((d[1] - Vec3(1, 2, 3)).norm() < 1e-15);
    }
    SUBCASE("slope sign change clamps to zero") {
        const std::vector<Vec3> k = {{0, 0, 0}, {1, 0, 1}, {2, 0, 0}};
        CHECK(compute_knot_derivatives(k, false)[1].z() == 0.0);
    }
    SUBCASE("z = 0, 1, 3 gives 4/3 at the middle knot") {
        const std::vector<Vec3> k = {{0, 0, 0}, {1, 0, 1}, {2, 0, 3}};
        CHECK(compute_knot_derivatives(k, false)[1].z() == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
    }
    SUBCASE("zero chord slope on one side gives zero") {
        const std::vector<Vec3> k = {{0, 0, 0}, {1, 0, 0}, {2, 0, 5}};
        CHECK(compute_knot_derivatives(k, false)[1].z() == 0.0);
    }
    SUBCASE("closed path wraps around the seam") {
        const std::vector<Vec3> k = {{0, 0, 1}, {1, 0, 2}, {1, 1, 4}, {0, 1, 2}};
        // knot 0: incoming chord z = 1 - 2 = -1, outgoing z = 1 -> sign change
        CHECK(compute_knot_derivatives(k, true)[0].z() == 0.0);
        // knot 1: incoming +1, outgoing +2 -> 2 / (1 + 1/2)
        CHECK(compute_knot_derivatives(k, true)[1].z() == doctest::Approx(4.0 / 3.0));
    }
    SUBCASE("fewer than three knots and coincident knots are rejected") {
        const std::vector<Vec3> two = {{0, 0, 0}, {1, 0, 0}};
        CHECK_THROWS_AS(compute_knot_derivatives(two, true), InvalidKnotsError);
        const std::vector<Vec3> dup = {{0, 0, 0}, {0, 0, 0}, {1, 0, 0}};
        CHECK_THROWS_AS(compute_knot_derivatives(dup, false), DegenerateSegmentError);
    }
}

TEST_CASE("constrained segment coefficients") {
    SUBCASE("rest segment is constant") {
        const std::vector<Vec3> k = {{1, 2, 3}, {1, 2, 3}};
        KnotDerivatives d{{Vec3::Zero(), Vec3::Zero()}};
        const auto path = fit_constrained(k, d, false);
        const auto& s = path.segment(0);
        CHECK(s.a == Vec3(1, 2, 3));
        CHECK(s.b.isZero(0.0));
        CHECK(s.c.isZero(0.0));
        CHECK(s.d.isZero(0.0));
    }
    SUBCASE("chord derivatives give a straight segment") {
        const Vec3 p0(0.5, -1, 2), p1(1.5, 3, -2);
        const std::vector<Vec3> k = {p0, p1};
        KnotDerivatives d{{p1 - p0, p1 - p0}};
        const auto path = fit_constrained(k, d, false);
        const auto& s = path.segment(0);
        CHECK(s.c.norm() < 1e-15);
        CHECK(s.d.norm() < 1e-15);
    }
    SUBCASE("hand-substituted example") {
        const std::vector<Vec3> k = {{0, 0, 0}, {1, 0, 1}};
        KnotDerivatives d{{Vec3(1, 0, 0), Vec3(1, 0, 2)}};
        const auto path = fit_constrained(k, d, false);
        const auto& s = path.segment(0);
        // c = 3 (p1 - p0) - (p1' + 2 p0') = (3,0,3) - (3,0,2)
        // d = 2 (p0 - p1) + p1' + p0'     = (-2,0,-2) + (2,0,2)
        CHECK((s.c - Vec3(0, 0, 1)).norm() < 1e-15);
        CHECK(s.d.norm() < 1e-15);
    }
    SUBCASE("derivative count mismatch is rejected") {
        const std::vector<Vec3> k = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
        KnotDerivatives d{{Vec3::Zero()}};
        CHECK_THROWS_AS(fit_constrained(k, d, false), InvalidKnotsError);
    }
}

TEST_CASE("both fits interpolate and are C1 on random closed paths") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto knots = random_closed_knots(rng, 12);
        for (const auto& path : {fit_constrained(knots, true), fit_natural(knots, true)}) {
            REQUIRE(path.size() == knots.size());
            CHECK(path.closed());
            for (std::size_t i = 0; i < path.size(); ++i) {
                const std::size_t j = (i + 1) % path.size();
                CHECK(rel_err(path.evaluate(i, 0.0), knots[i]) < 1e-12);
                CHECK(rel_err(path.evaluate(i, 1.0), knots[j]) < 1e-12);
                CHECK((path.evaluate_d1(i, 1.0) - path.evaluate_d1(j, 0.0)).norm() < 1e-9);
            }
        }
    }
}

TEST_CASE("natural spline") {
    SUBCASE("second derivative is continuous at every knot of a random closed path") {
        std::mt19937_64 rng(3);
        const auto knots = random_closed_knots(rng, 10);
        const auto path = fit_natural(knots, true);
        for (std::size_t i = 0; i < 10; ++i) {
            const std::size_t j = (i + 1) % 10;
            CHECK((path.evaluate_d2(i, 1.0) - path.evaluate_d2(j, 0.0)).norm() < 1e-9);
        }
    }
    SUBCASE("collinear knots give straight segments") {
        std::vector<Vec3> knots;
        for (int i = 0; i < 6; ++i) {
            knots.emplace_back(i, 2.0 * i, -0.5 * i);
        }
        const auto path = fit_natural(knots, false);
        for (std::size_t i = 0; i < path.size(); ++i) {
            for (double u : {0.0, 0.3, 1.0}) {
                CHECK(path.evaluate_d2(i, u).norm() < 1e-12);
            }
        }
    }
    SUBCASE("open path has zero end curvature") {
        const std::vector<Vec3> knots = {{0, 0, 0}, {1, 0, 2}, {2, 0, -1}, {3, 0, 1}};
        const auto path = fit_natural(knots, false);
        CHECK(path.evaluate_d2(0, 0.0).norm() < 1e-12);
        CHECK(path.evaluate_d2(2, 1.0).norm() < 1e-12);
    }
}

TEST_CASE("derivatives agree with finite differences") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(0.01, 0.99);
    const auto knots = random_closed_knots(rng, 10);
    const double h = 1e-6;
    for (const auto& path : {fit_constrained(knots, true), fit_natural(knots, true)}) {
        for (int k = 0; k < 100; ++k) {
            const std::size_t i = static_cast<std::size_t>(k) % path.size();
            const double u = unit(rng);
            const Vec3 fd1 = (path.evaluate(i, u + h) - path.evaluate(i, u - h)) / (2 * h);
            const Vec3 fd2 = (path.evaluate_d1(i, u + h) - path.evaluate_d1(i, u - h)) / (2 * h);
            CHECK((fd1 - path.evaluate_d1(i, u)).norm() < 1e-6);
            CHECK((fd2 - path.evaluate_d2(i, u)).norm() < 1e-6);
        }
    }
}

TEST_CASE("evaluation rejects bad arguments") {
    const std::vector<Vec3> knots = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    const auto path = fit_constrained(knots, true);
    CHECK_THROWS_AS(path.evaluate(3, 0.5), std::out_of_range);
    CHECK_THROWS_AS(path.evaluate(0, 1.5), std::out_of_range);
    CHECK_THROWS_AS(path.evaluate_d1(0, -0.1), std::out_of_range);
}

TEST_CASE("envelope check on the step profile") {
    const auto knots = drillsim::trajectory::step_profile(Vec3::Zero(), 8e-3, 30, 1e-3);
    const auto constrained = fit_constrained(knots, true);
    const auto natural = fit_natural(knots, true);
    CHECK(check_envelope(constrained, Axis::Z).max_violation() <= 1e-9);
    CHECK(check_envelope(natural, Axis::Z).max_violation() > 0.01 * 1e-3);

    SUBCASE("flat circle has no violation") {
        const auto flat = drillsim::trajectory::step_profile(Vec3::Zero(), 8e-3, 30, 0.0);
        CHECK(check_envelope(fit_constrained(flat, true), Axis::Z).max_violation() == 0.0);
        CHECK(check_envelope(fit_natural(flat, true), Axis::Z).max_violation() == 0.0);
    }
    SUBCASE("violation sign follows the excursion direction") {
        const auto report = check_envelope(natural, Axis::Z);
        bool below = false;
        for (const auto& s : report.segments) {
            below = below || s.violation < 0.0;
        }
        // a single raised knot rings below the flat floor next to it
        CHECK(below);
    }
}

TEST_CASE("comparison CSV layout") {
    const auto knots = drillsim::trajectory::step_profile(Vec3::Zero(), 8e-3, 5, 1e-3);
    std::ostringstream os;
    write_comparison_csv(os, fit_constrained(knots, true), fit_natural(knots, true), 10);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "segment,u,x,y,z_constrained,z_natural");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++rows;
    }
    CHECK(rows == 50);
}
