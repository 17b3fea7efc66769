/**
 * @file trajectory.hpp
 * @brief Circular drilling path with completion-modulated lowering.
 *
 * The circle is split into n points with fixed x/y. Every point starts at
 * the same z and sinks at (1 - c_i) v0, integrated with the control period
 * T. The drill follows a closed constrained spline through the points.
 */

#pragma once

#include "drillsim/spline.hpp"

#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

namespace drillsim::trajectory {

using spline::Vec3;

class InvalidDiscretizationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct TrajectoryPoint {
    std::size_t index = 0;  ///< 1-based
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double completion = 0.0;

    Vec3 position() const { return {x, y, z}; }
};

/// Points at angles 2 pi k / n counter-clockwise from +x, all at center z.
std::vector<TrajectoryPoint> discretize_circle(const Vec3& center, double radius, std::size_t n);

/// Circle knots at center z, with the first `raised` knots lifted by step_height.
std::vector<Vec3> step_profile(const Vec3& center, double radius, std::size_t n, double step_height,
                               std::size_t raised = 1);

/// (1 - c) v0 with c clamped into [0, 1].
double lowering_velocity(double completion, double v0);

/**
 * Mutable state of the planner. x/y of the points are fixed at
 * construction; z is only ever lowered by integrate().
 *
 * Depths are stored as accumulated descent below the common start height so
 * repeated ticks do not lose precision against a large absolute z.
 */
class PathState {
public:
    PathState(std::vector<TrajectoryPoint> points, double v0, double period);

    std::size_t size() const { return points_.size(); }
    std::span<const TrajectoryPoint> points() const { return points_; }
    const TrajectoryPoint& point(std::size_t i) const { return points_.at(i); }
    double v0() const { return v0_; }
    double period() const { return period_; }
    double elapsed() const { return elapsed_; }
    double start_z() const { return start_z_; }
    double descent(std::size_t i) const { return descent_.at(i); }

    std::vector<Vec3> knots() const;

    /// One control period: z_i -= (1 - c_i) v0 T, elapsed += T.
    /// Returns the per-point velocities that were applied.
    std::vector<double> integrate(std::span<const double> completions);

private:
    std::vector<TrajectoryPoint> points_;
    std::vector<double> descent_;
    double v0_;
    double period_;
    double start_z_;
    double elapsed_ = 0.0;
};

/// Value-semantics wrapper around PathState::integrate().
PathState integrate_depths(PathState state, std::span<const double> completions);

/// Closed constrained spline through the current points.
spline::SplinePath rebuild_path(const PathState& state);

/// Segment/u lookup for a lap fraction; phase is wrapped into [0, 1).
struct PathLocation {
    std::size_t segment = 0;
    double u = 0.0;
};
PathLocation locate(const spline::SplinePath& path, double phase);

/// Drill setpoint at a lap fraction.
Vec3 setpoint_at(const spline::SplinePath& path, double phase);

/// Appends "t,i,p_z,c,v" rows for one tick (i is 1-based).
void write_tick_trace(std::ostream& os, double t, const PathState& state, std::span<const double> velocities);

}  // namespace drillsim::trajectory
