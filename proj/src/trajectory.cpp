#include "drillsim/trajectory.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

namespace drillsim::trajectory {

std::vector<TrajectoryPoint> discretize_circle(const Vec3& center, double radius, std::size_t n) {
    if (n < 3) {
        throw InvalidDiscretizationError("circle needs at least 3 points, got " + std::to_string(n));
    }
    if (!(radius > 0.0)) {
        throw InvalidDiscretizationError("circle radius must be positive");
    }
    std::vector<TrajectoryPoint> points(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        points[k].index = k + 1;
        points[k].x = center.x() + radius * std::cos(angle);
        points[k].y = center.y() + radius * std::sin(angle);
        points[k].z = center.z();
    }
    return points;
}

std::vector<Vec3> step_profile(const Vec3& center, double radius, std::size_t n, double step_height,
                               std::size_t raised) {
    if (raised > n) {
        throw InvalidDiscretizationError("cannot raise more knots than the circle has");
    }
    std::vector<Vec3> knots;
    knots.reserve(n);
    for (const auto& p : discretize_circle(center, radius, n)) {
        knots.push_back(p.position());
    }
    for (std::size_t k = 0; k < raised; ++k) {
        knots[k].z() += step_height;
    }
    return knots;
}

double lowering_velocity(double completion, double v0) {
    if (completion < 0.0 || completion > 1.0 || std::isnan(completion)) {
        spdlog::debug("completion {} outside [0, 1], clamping", completion);
        completion = std::isnan(completion) ? 0.0 : std::clamp(completion, 0.0, 1.0);
    }
    return (1.0 - completion) * v0;
}

PathState::PathState(std::vector<TrajectoryPoint> points, double v0, double period)
    : points_(std::move(points)), descent_(points_.size(), 0.0), v0_(v0), period_(period) {
    if (points_.size() < 3) {
        throw InvalidDiscretizationError("path needs at least 3 points");
    }
    if (!(v0_ >= 0.0)) {
        throw std::invalid_argument("initial lowering speed must be non-negative");
    }
    if (!(period_ > 0.0)) {
        throw std::invalid_argument("sampling period must be positive");
    }
    start_z_ = points_.front().z;
    for (const auto& p : points_) {
        if (p.z != start_z_) {
            throw std::invalid_argument("all path points must start at the same height");
        }
    }
}

std::vector<Vec3> PathState::knots() const {
    std::vector<Vec3> out;
    out.reserve(points_.size());
    for (const auto& p : points_) {
        out.push_back(p.position());
    }
    return out;
}

std::vector<double> PathState::integrate(std::span<const double> completions) {
    if (completions.size() != points_.size()) {
        throw std::invalid_argument("expected " + std::to_string(points_.size()) + " completions, got " +
                                    std::to_string(completions.size()));
    }
    std::vector<double> velocities(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i) {
        velocities[i] = lowering_velocity(completions[i], v0_);
        descent_[i] += velocities[i] * period_;
        points_[i].z = start_z_ - descent_[i];
        points_[i].completion = std::clamp(completions[i], 0.0, 1.0);
    }
    elapsed_ += period_;
    return velocities;
}

PathState integrate_depths(PathState state, std::span<const double> completions) {
    state.integrate(completions);
    return state;
}

spline::SplinePath rebuild_path(const PathState& state) {
    const auto knots = state.knots();
    return spline::fit_constrained(knots, true);
}

PathLocation locate(const spline::SplinePath& path, double phase) {
    const auto n = static_cast<double>(path.size());
    double wrapped = phase - std::floor(phase);
    double scaled = wrapped * n;
    // k / n lands exactly on knot k despite rounding in the product
    if (const double nearest = std::round(scaled); std::abs(scaled - nearest) < 1e-12 * n) {
        scaled = nearest;
    }
    auto segment = static_cast<std::size_t>(std::floor(scaled));
    double u = scaled - static_cast<double>(segment);
    if (segment >= path.size()) {
        // wrapped rounds up to 1.0 for phases just below an integer
        segment = 0;
        u = 0.0;
    }
    return {segment, u};
}

Vec3 setpoint_at(const spline::SplinePath& path, double phase) {
    const auto loc = locate(path, phase);
    return path.evaluate(loc.segment, loc.u);
}

void write_tick_trace(std::ostream& os, double t, const PathState& state, std::span<const double> velocities) {
    for (std::size_t i = 0; i < state.size(); ++i) {
        const auto& p = state.point(i);
        os << t << ',' << p.index << ',' << p.z << ',' << p.completion << ',' << velocities[i] << '\n';
    }
}

}  // namespace drillsim::trajectory
