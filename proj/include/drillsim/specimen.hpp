/**
 * @file specimen.hpp
 * @brief Virtual eggshell: outer surface, thickness, removal and membrane.
 *
 * Fields live on a uniform cell-centred grid over a square region around the
 * drilling centre. Removal r is the depth cut below the outer surface; the
 * local completion is min(1, r / h). Cutting is geometric: a flat-bottomed
 * cylindrical burr removes everything above the tip plane inside its radius.
 */

#pragma once

#include "drillsim/spline.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace drillsim::specimen {

using spline::Vec3;

class InvalidSpecimenError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class OutOfRegionError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

struct SpecimenConfig {
    double base_thickness = 300e-6;       ///< m
    double variation_amplitude = 0.2;     ///< fraction of base thickness, in [0, 1)
    double variation_wavelength = 5e-3;   ///< m
    double cap_radius = 0.0;              ///< m; 0 = flat outer surface
    double tilt_deg = 0.0;
    double tilt_axis_deg = 0.0;           ///< direction of the tilt axis in the x-y plane
    double membrane_tolerance = 20e-6;    ///< m
    std::size_t grid_resolution = 256;    ///< cells per side, >= 64
    double half_extent = 10e-3;           ///< m; grid covers centre +- half_extent
    Vec3 center = Vec3::Zero();           ///< drilling centre; z is the outer surface height there
    std::uint64_t seed = 1;
};

struct DrillTool {
    Vec3 tip = Vec3::Zero();
    double burr_radius = 0.7e-3;
    bool active = true;
};

struct RuptureEvent {
    double x = 0.0;
    double y = 0.0;
    double overshoot = 0.0;  ///< how far below the inner surface the tip went, m
};

class ShellSpecimen {
public:
    explicit ShellSpecimen(const SpecimenConfig& config);

    const SpecimenConfig& config() const { return config_; }
    std::size_t resolution() const { return res_; }
    double cell_size() const { return cell_; }

    double cell_x(std::size_t col) const { return x0_ + (static_cast<double>(col) + 0.5) * cell_; }
    double cell_y(std::size_t row) const { return y0_ + (static_cast<double>(row) + 0.5) * cell_; }

    double outer_height(std::size_t row, std::size_t col) const { return z_out_[row * res_ + col]; }
    double thickness(std::size_t row, std::size_t col) const { return h_[row * res_ + col]; }
    double removal(std::size_t row, std::size_t col) const { return r_[row * res_ + col]; }
    double cell_completion(std::size_t row, std::size_t col) const;

    std::span<const double> outer_field() const { return z_out_; }
    std::span<const double> thickness_field() const { return h_; }
    std::span<const double> removal_field() const { return r_; }

    /// Analytic outer surface height anywhere (not just at cell centres).
    double surface_height(double x, double y) const;
    /// Smooth thickness field anywhere.
    double thickness_at(double x, double y) const;

    bool contains(double x, double y) const;

    /// Bilinear completion; throws OutOfRegionError outside the grid region.
    double completion_at(double x, double y) const;

    /// Geometric cut under the tool. dt is accepted for interface symmetry
    /// and does not change the result.
    void apply_drill(const DrillTool& tool, double dt = 0.0);

    bool membrane_ruptured() const { return rupture_.has_value(); }
    const std::optional<RuptureEvent>& rupture() const { return rupture_; }

    /// Writes a comma-separated matrix, one grid row per line.
    static void write_matrix(std::ostream& os, std::span<const double> field, std::size_t resolution);

private:
    SpecimenConfig config_;
    std::size_t res_;
    double cell_;
    double x0_;
    double y0_;

    // tilt normal direction in the plane and sphere-apex offset
    double nx_ = 0.0;
    double ny_ = 0.0;
    double tilt_ = 0.0;

    struct Wave {
        double kx;
        double ky;
        double phase;
    };
    std::vector<Wave> waves_;

    std::vector<double> z_out_;
    std::vector<double> h_;
    std::vector<double> r_;
    std::optional<RuptureEvent> rupture_;
};

ShellSpecimen make_specimen(const SpecimenConfig& config);

/// Per-point completion requirement for lifting the resected patch out.
struct DetachCriteria {
    double completion = 0.99;  ///< a point counts as cut at or above this
    double coverage = 0.8;     ///< minimum fraction of cut points
};

/**
 * True iff at least coverage * n points are cut and the closed ring has no
 * run of two or more consecutive uncut points.
 */
bool patch_detachable(std::span<const double> completions, const DetachCriteria& criteria);

bool patch_detachable(const ShellSpecimen& specimen, std::span<const Vec3> path_points,
                      const DetachCriteria& criteria);

}  // namespace drillsim::specimen
