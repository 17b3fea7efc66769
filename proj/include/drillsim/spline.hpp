/**
 * @file spline.hpp
 * @brief Closed/open parametric cubic splines in 3-D.
 *
 * Two flavors share one representation. Each segment is a cubic in a free
 * parameter u in [0, 1]:
 *
 *     s(u) = a + b u + c u^2 + d u^3
 *
 * - Natural (traditional) fit: C2 continuous, may overshoot between knots.
 * - Constrained fit: first derivatives are prescribed at the knots and the
 *   second-derivative continuity requirement is dropped. With the knot
 *   derivative rule of compute_knot_derivatives() each coordinate is
 *   monotone between consecutive knots, so no segment leaves the interval
 *   spanned by its two end knots.
 */

#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

namespace drillsim::spline {

using Vec3 = Eigen::Vector3d;

/// Thrown when two consecutive knots coincide and no chord slope exists.
class DegenerateSegmentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown by the fitting routines when the knot set cannot define a path.
class InvalidKnotsError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown by the natural fit if its linear system turns out to be singular.
class SingularSystemError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SplineSegment {
    Vec3 a = Vec3::Zero();
    Vec3 b = Vec3::Zero();
    Vec3 c = Vec3::Zero();
    Vec3 d = Vec3::Zero();

    Vec3 value(double u) const { return a + u * (b + u * (c + u * d)); }
    Vec3 first_derivative(double u) const { return b + u * (2.0 * c + 3.0 * u * d); }
    Vec3 second_derivative(double u) const { return 2.0 * c + 6.0 * u * d; }
};

/// One first-derivative vector (per unit u) for every knot.
struct KnotDerivatives {
    std::vector<Vec3> values;

    std::size_t size() const { return values.size(); }
    const Vec3& operator[](std::size_t i) const { return values[i]; }
};

class SplinePath {
public:
    SplinePath() = default;
    SplinePath(std::vector<SplineSegment> segments, bool closed)
        : segments_(std::move(segments)), closed_(closed) {}

    std::size_t size() const { return segments_.size(); }
    bool closed() const { return closed_; }
    std::span<const SplineSegment> segments() const { return segments_; }
    const SplineSegment& segment(std::size_t i) const;

    /// Throws std::out_of_range for a bad index or u outside [0, 1].
    Vec3 evaluate(std::size_t i, double u) const;
    Vec3 evaluate_d1(std::size_t i, double u) const;
    Vec3 evaluate_d2(std::size_t i, double u) const;

private:
    void check(std::size_t i, double u) const;

    std::vector<SplineSegment> segments_;
    bool closed_ = false;
};

/**
 * Anti-overshoot knot derivatives, computed independently per coordinate
 * with unit parameter spacing per segment.
 *
 * With neighbouring chord slopes s0 and s1 the derivative is the harmonic
 * mean 2 / (1/s0 + 1/s1) when both share a sign and 0 otherwise (including
 * when either slope is 0). Open paths use the one-sided chord slope at both
 * ends; closed paths wrap around.
 *
 * Requires at least 3 knots; throws DegenerateSegmentError if two
 * consecutive knots (including last/first when closed) coincide.
 */
KnotDerivatives compute_knot_derivatives(std::span<const Vec3> knots, bool closed);

/// Cubic Hermite segments from knots and prescribed knot derivatives.
SplinePath fit_constrained(std::span<const Vec3> knots, const KnotDerivatives& derivs, bool closed);

/// Convenience: compute_knot_derivatives() followed by fit_constrained().
SplinePath fit_constrained(std::span<const Vec3> knots, bool closed);

/// C2 interpolating spline; periodic end conditions when closed, zero end
/// curvature when open.
SplinePath fit_natural(std::span<const Vec3> knots, bool closed);

/// Envelope check along one coordinate axis.
struct SegmentViolation {
    double lower = 0.0;  ///< knot-interval lower bound
    double upper = 0.0;  ///< knot-interval upper bound
    /// Signed worst excursion: > 0 above upper, < 0 below lower, 0 inside.
    double violation = 0.0;
};

struct EnvelopeReport {
    std::vector<SegmentViolation> segments;

    /// Largest |violation| over all segments.
    double max_violation() const;
};

enum class Axis { X = 0, Y = 1, Z = 2 };

/// Samples each segment at u = j / (samples - 1), j = 0..samples-1.
EnvelopeReport check_envelope(const SplinePath& path, Axis axis, std::size_t samples_per_segment = 1000);

/**
 * Writes "segment,u,x,y,z_constrained,z_natural" rows, u = j / samples for
 * j = 0..samples-1 on every segment. x and y come from the constrained
 * path. Both paths must have the same number of segments.
 */
void write_comparison_csv(std::ostream& os, const SplinePath& constrained, const SplinePath& natural,
                          std::size_t samples_per_segment = 1000);

}  // namespace drillsim::spline
