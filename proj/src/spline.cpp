#include "drillsim/spline.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

namespace drillsim::spline {

const SplineSegment& SplinePath::segment(std::size_t i) const {
    if (i >= segments_.size()) {
        throw std::out_of_range("spline segment index " + std::to_string(i) + " out of range");
    }
    return segments_[i];
}

void SplinePath::check(std::size_t i, double u) const {
    if (i >= segments_.size()) {
        throw std::out_of_range("spline segment index " + std::to_string(i) + " out of range");
    }
    if (!(u >= 0.0 && u <= 1.0)) {
        throw std::out_of_range("spline parameter u = " + std::to_string(u) + " outside [0, 1]");
    }
}

Vec3 SplinePath::evaluate(std::size_t i, double u) const {
    check(i, u);
    return segments_[i].value(u);
}

Vec3 SplinePath::evaluate_d1(std::size_t i, double u) const {
    check(i, u);
    return segments_[i].first_derivative(u);
}

Vec3 SplinePath::evaluate_d2(std::size_t i, double u) const {
    check(i, u);
    return segments_[i].second_derivative(u);
}

namespace {

void require_knot_count(std::size_t n) {
    if (n < 3) {
        throw InvalidKnotsError("spline needs at least 3 knots, got " + std::to_string(n));
    }
}

// Harmonic mean of two chord slopes, clamped to 0 on a sign change.
double harmonic_slope(double s0, double s1) {
    if (s0 == 0.0 || s1 == 0.0 || std::signbit(s0) != std::signbit(s1)) {
        return 0.0;
    }
    return 2.0 / (1.0 / s0 + 1.0 / s1);
}

}  // namespace

KnotDerivatives compute_knot_derivatives(std::span<const Vec3> knots, bool closed) {
    const std::size_t n = knots.size();
    require_knot_count(n);

    // chords[i] = knots[i+1] - knots[i]; a closed path has n chords.
    const std::size_t chord_count = closed ? n : n - 1;
    std::vector<Vec3> chords(chord_count);
    for (std::size_t i = 0; i < chord_count; ++i) {
        chords[i] = knots[(i + 1) % n] - knots[i];
        if (chords[i].isZero(0.0)) {
            throw DegenerateSegmentError("knots " + std::to_string(i) + " and " + std::to_string((i + 1) % n) +
                                         " coincide");
        }
    }

    KnotDerivatives out;
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!closed && i == 0) {
            out.values[i] = chords.front();
            continue;
        }
        if (!closed && i == n - 1) {
            out.values[i] = chords.back();
            continue;
        }
        const Vec3& before = chords[(i + chord_count - 1) % chord_count];
        const Vec3& after = chords[i % chord_count];
        for (int k = 0; k < 3; ++k) {
            out.values[i][k] = harmonic_slope(before[k], after[k]);
        }
    }
    return out;
}

SplinePath fit_constrained(std::span<const Vec3> knots, const KnotDerivatives& derivs, bool closed) {
    const std::size_t n = knots.size();
    if (n < 2) {
        throw InvalidKnotsError("constrained fit needs at least 2 knots");
    }
    if (derivs.size() != n) {
        throw InvalidKnotsError("expected " + std::to_string(n) + " knot derivatives, got " +
                                std::to_string(derivs.size()));
    }

    const std::size_t count = closed ? n : n - 1;
    std::vector<SplineSegment> segments(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = (i + 1) % n;
        const Vec3& p0 = knots[i];
        const Vec3& p1 = knots[j];
        const Vec3& m0 = derivs[i];
        const Vec3& m1 = derivs[j];
        SplineSegment& s = segments[i];
        s.a = p0;
        s.b = m0;
        s.c = 3.0 * (p1 - p0) - (m1 + 2.0 * m0);
        s.d = 2.0 * (p0 - p1) + m1 + m0;
    }
    return SplinePath(std::move(segments), closed);
}

SplinePath fit_constrained(std::span<const Vec3> knots, bool closed) {
    return fit_constrained(knots, compute_knot_derivatives(knots, closed), closed);
}

SplinePath fit_natural(std::span<const Vec3> knots, bool closed) {
    const std::size_t n = knots.size();
    require_knot_count(n);
    const auto N = static_cast<Eigen::Index>(n);

    // Second derivatives M at the knots (unit spacing):
    //   M[i-1] + 4 M[i] + M[i+1] = 6 (p[i+1] - 2 p[i] + p[i-1])
    // wrapping when closed; M[0] = M[n-1] = 0 when open.
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(N, 3);
    for (Eigen::Index i = 0; i < N; ++i) {
        if (!closed && (i == 0 || i == N - 1)) {
            A(i, i) = 1.0;
            continue;
        }
        const Eigen::Index prev = (i + N - 1) % N;
        const Eigen::Index next = (i + 1) % N;
        A(i, prev) += 1.0;
        A(i, i) += 4.0;
        A(i, next) += 1.0;
        rhs.row(i) = 6.0 * (knots[next] - 2.0 * knots[i] + knots[prev]).transpose();
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible()) {
        throw SingularSystemError("natural spline system is singular");
    }
    const Eigen::MatrixXd M = lu.solve(rhs);

    const std::size_t count = closed ? n : n - 1;
    std::vector<SplineSegment> segments(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = (i + 1) % n;
        const Vec3 m0 = M.row(static_cast<Eigen::Index>(i)).transpose();
        const Vec3 m1 = M.row(static_cast<Eigen::Index>(j)).transpose();
        SplineSegment& s = segments[i];
        s.a = knots[i];
        s.b = (knots[j] - knots[i]) - (2.0 * m0 + m1) / 6.0;
        s.c = m0 / 2.0;
        s.d = (m1 - m0) / 6.0;
    }
    return SplinePath(std::move(segments), closed);
}

double EnvelopeReport::max_violation() const {
    double worst = 0.0;
    for (const auto& s : segments) {
        worst = std::max(worst, std::abs(s.violation));
    }
    return worst;
}

EnvelopeReport check_envelope(const SplinePath& path, Axis axis, std::size_t samples_per_segment) {
    const int k = static_cast<int>(axis);
    const std::size_t samples = std::max<std::size_t>(samples_per_segment, 2);

    EnvelopeReport report;
    report.segments.reserve(path.size());
    for (const auto& seg : path.segments()) {
        const double start = seg.value(0.0)[k];
        const double end = seg.value(1.0)[k];
        SegmentViolation v;
        v.lower = std::min(start, end);
        v.upper = std::max(start, end);
        double above = 0.0;
        double below = 0.0;
        for (std::size_t j = 0; j < samples; ++j) {
            const double u = static_cast<double>(j) / static_cast<double>(samples - 1);
            const double value = seg.value(u)[k];
            above = std::max(above, value - v.upper);
            below = std::max(below, v.lower - value);
        }
        if (above >= below) {
            v.violation = above;
        } else {
            v.violation = -below;
        }
        report.segments.push_back(v);
    }
    return report;
}

void write_comparison_csv(std::ostream& os, const SplinePath& constrained, const SplinePath& natural,
                          std::size_t samples_per_segment) {
    if (constrained.size() != natural.size()) {
        throw std::invalid_argument("comparison paths differ in segment count");
    }
    os << "segment,u,x,y,z_constrained,z_natural\n";
    const auto old_precision = os.precision(17);
    for (std::size_t i = 0; i < constrained.size(); ++i) {
        for (std::size_t j = 0; j < samples_per_segment; ++j) {
            const double u = static_cast<double>(j) / static_cast<double>(samples_per_segment);
            const Vec3 pc = constrained.segment(i).value(u);
            const Vec3 pn = natural.segment(i).value(u);
            os << i << ',' << u << ',' << pc.x() << ',' << pc.y() << ',' << pc.z() << ',' << pn.z() << '\n';
        }
    }
    os.precision(old_precision);
}

}  // namespace drillsim::spline
