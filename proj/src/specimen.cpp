#include "drillsim/specimen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <string>

namespace drillsim::specimen {

namespace {

constexpr std::size_t kThicknessWaves = 4;

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

void validate(const SpecimenConfig& c) {
    if (!(c.base_thickness > 0.0)) {
        throw InvalidSpecimenError("base_thickness must be positive");
    }
    if (!(c.variation_amplitude >= 0.0 && c.variation_amplitude < 1.0)) {
        throw InvalidSpecimenError("variation_amplitude must lie in [0, 1)");
    }
    if (!(c.variation_wavelength > 0.0)) {
        throw InvalidSpecimenError("variation_wavelength must be positive");
    }
    if (!(c.cap_radius >= 0.0)) {
        throw InvalidSpecimenError("cap_radius must be non-negative (0 = flat)");
    }
    if (!(std::abs(c.tilt_deg) < 90.0)) {
        throw InvalidSpecimenError("tilt_deg must lie in (-90, 90)");
    }
    if (!(c.membrane_tolerance >= 0.0)) {
        throw InvalidSpecimenError("membrane_tolerance must be non-negative");
    }
    if (c.grid_resolution < 64) {
        throw InvalidSpecimenError("grid_resolution must be at least 64");
    }
    if (!(c.half_extent > 0.0)) {
        throw InvalidSpecimenError("half_extent must be positive");
    }
}

}  // namespace

ShellSpecimen::ShellSpecimen(const SpecimenConfig& config)
    : config_(config),
      res_(config.grid_resolution),
      cell_(0.0),
      x0_(0.0),
      y0_(0.0) {
    validate(config_);
    cell_ = 2.0 * config_.half_extent / static_cast<double>(res_);
    x0_ = config_.center.x() - config_.half_extent;
    y0_ = config_.center.y() - config_.half_extent;

    const double axis = deg_to_rad(config_.tilt_axis_deg);
    nx_ = -std::sin(axis);
    ny_ = std::cos(axis);
    tilt_ = deg_to_rad(config_.tilt_deg);

    if (config_.cap_radius > 0.0) {
        const double shift = config_.cap_radius * std::abs(std::sin(tilt_));
        const double reach = std::sqrt(2.0) * config_.half_extent + shift;
        if (reach >= config_.cap_radius) {
            throw InvalidSpecimenError("cap_radius too small for the grid region");
        }
    }

    std::mt19937_64 rng(config_.seed);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    const double k = 2.0 * std::numbers::pi / config_.variation_wavelength;
    waves_.reserve(kThicknessWaves);
    for (std::size_t w = 0; w < kThicknessWaves; ++w) {
        const double dir = angle(rng);
        const double phase = angle(rng);
        waves_.push_back({k * std::cos(dir), k * std::sin(dir), phase});
    }

    const std::size_t cells = res_ * res_;
    z_out_.resize(cells);
    h_.resize(cells);
    r_.assign(cells, 0.0);
    for (std::size_t row = 0; row < res_; ++row) {
        for (std::size_t col = 0; col < res_; ++col) {
            const double x = cell_x(col);
            const double y = cell_y(row);
            z_out_[row * res_ + col] = surface_height(x, y);
            h_[row * res_ + col] = thickness_at(x, y);
        }
    }
}

double ShellSpecimen::surface_height(double x, double y) const {
    const double dx = x - config_.center.x();
    const double dy = y - config_.center.y();
    const double cz = config_.center.z();
    if (config_.cap_radius <= 0.0) {
        return cz + std::tan(tilt_) * (dx * nx_ + dy * ny_);
    }
    // Sphere rotated about its own centre: the apex slides by Rc sin(tilt).
    const double rc = config_.cap_radius;
    const double ax = rc * std::sin(tilt_) * nx_;
    const double ay = rc * std::sin(tilt_) * ny_;
    const double q2 = (dx - ax) * (dx - ax) + (dy - ay) * (dy - ay);
    return cz - rc + std::sqrt(std::max(0.0, rc * rc - q2));
}

double ShellSpecimen::thickness_at(double x, double y) const {
    const double dx = x - config_.center.x();
    const double dy = y - config_.center.y();
    double field = 0.0;
    for (const auto& w : waves_) {
        field += std::cos(w.kx * dx + w.ky * dy + w.phase);
    }
    field /= static_cast<double>(waves_.size());
    return config_.base_thickness * (1.0 + config_.variation_amplitude * field);
}

double ShellSpecimen::cell_completion(std::size_t row, std::size_t col) const {
    const std::size_t idx = row * res_ + col;
    return std::min(1.0, r_[idx] / h_[idx]);
}

bool ShellSpecimen::contains(double x, double y) const {
    const double span = cell_ * static_cast<double>(res_);
    return x >= x0_ && x <= x0_ + span && y >= y0_ && y <= y0_ + span;
}

double ShellSpecimen::completion_at(double x, double y) const {
    if (!contains(x, y)) {
        throw OutOfRegionError("point (" + std::to_string(x) + ", " + std::to_string(y) +
                               ") outside the specimen grid");
    }
    const double last = static_cast<double>(res_ - 1);
    const double fx = std::clamp((x - x0_) / cell_ - 0.5, 0.0, last);
    const double fy = std::clamp((y - y0_) / cell_ - 0.5, 0.0, last);
    const auto c0 = std::min(static_cast<std::size_t>(fx), res_ - 2);
    const auto r0 = std::min(static_cast<std::size_t>(fy), res_ - 2);
    const double tx = fx - static_cast<double>(c0);
    const double ty = fy - static_cast<double>(r0);
    const double v00 = cell_completion(r0, c0);
    const double v01 = cell_completion(r0, c0 + 1);
    const double v10 = cell_completion(r0 + 1, c0);
    const double v11 = cell_completion(r0 + 1, c0 + 1);
    return (1.0 - ty) * ((1.0 - tx) * v00 + tx * v01) + ty * ((1.0 - tx) * v10 + tx * v11);
}

void ShellSpecimen::apply_drill(const DrillTool& tool, double /*dt*/) {
    if (!tool.active) {
        return;
    }
    if (!(tool.burr_radius > 0.0)) {
        throw std::invalid_argument("burr radius must be positive");
    }
    const double rad = tool.burr_radius;
    const double rad2 = rad * rad;
    const auto to_index = [&](double v, double origin) {
        return static_cast<long>(std::floor((v - origin) / cell_ - 0.5));
    };
    const long last = static_cast<long>(res_) - 1;
    const long c_lo = std::max(0L, to_index(tool.tip.x() - rad, x0_));
    const long c_hi = std::min(last, to_index(tool.tip.x() + rad, x0_) + 1);
    const long r_lo = std::max(0L, to_index(tool.tip.y() - rad, y0_));
    const long r_hi = std::min(last, to_index(tool.tip.y() + rad, y0_) + 1);
    const double tol = config_.membrane_tolerance;

    for (long row = r_lo; row <= r_hi; ++row) {
        const double dy = cell_y(static_cast<std::size_t>(row)) - tool.tip.y();
        for (long col = c_lo; col <= c_hi; ++col) {
            const double dx = cell_x(static_cast<std::size_t>(col)) - tool.tip.x();
            if (dx * dx + dy * dy > rad2) {
                continue;
            }
            const std::size_t idx = static_cast<std::size_t>(row) * res_ + static_cast<std::size_t>(col);
            double cut = z_out_[idx] - tool.tip.z();
            const double limit = h_[idx] + tol;
            if (cut > limit) {
                if (!rupture_) {
                    rupture_ = RuptureEvent{cell_x(static_cast<std::size_t>(col)),
                                            cell_y(static_cast<std::size_t>(row)), cut - h_[idx]};
                }
                cut = limit;
            }
            if (cut > r_[idx]) {
                r_[idx] = cut;
            }
        }
    }
}

void ShellSpecimen::write_matrix(std::ostream& os, std::span<const double> field, std::size_t resolution) {
    const auto old_precision = os.precision(10);
    for (std::size_t row = 0; row < resolution; ++row) {
        for (std::size_t col = 0; col < resolution; ++col) {
            if (col) {
                os << ',';
            }
            os << field[row * resolution + col];
        }
        os << '\n';
    }
    os.precision(old_precision);
}

ShellSpecimen make_specimen(const SpecimenConfig& config) { return ShellSpecimen(config); }

bool patch_detachable(std::span<const double> completions, const DetachCriteria& criteria) {
    const std::size_t n = completions.size();
    if (n == 0) {
        return false;
    }
    std::size_t cut = 0;
    for (double c : completions) {
        if (c >= criteria.completion) {
            ++cut;
        }
    }
    if (static_cast<double>(cut) < criteria.coverage * static_cast<double>(n) - 1e-9) {
        return false;
    }
    if (cut == n) {
        return true;
    }
    // Longest run of uncut points on the closed ring; start just after a cut point.
    std::size_t start = 0;
    while (completions[start] < criteria.completion) {
        ++start;
    }
    std::size_t run = 0;
    for (std::size_t k = 1; k <= n; ++k) {
        if (completions[(start + k) % n] < criteria.completion) {
            if (++run >= 2) {
                return false;
            }
        } else {
            run = 0;
        }
    }
    return true;
}

bool patch_detachable(const ShellSpecimen& specimen, std::span<const Vec3> path_points,
                      const DetachCriteria& criteria) {
    std::vector<double> completions;
    completions.reserve(path_points.size());
    for (const auto& p : path_points) {
        completions.push_back(specimen.completion_at(p.x(), p.y()));
    }
    return patch_detachable(completions, criteria);
}

}  // namespace drillsim::specimen
