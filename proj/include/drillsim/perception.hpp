/**
 * @file perception.hpp
 * @brief Completion-map sensor model and progress-bar aggregation.
 *
 * Stands in for the image network by reproducing its output contract: a
 * 128x128 two-channel map (completion grayscale + drill mask) over the
 * drilling bounding box, with occluded pixels suppressed. Network error is
 * modelled as a multiplicative, spatially smooth random field whose
 * amplitude is calibrated against a MAPE target.
 */

#pragma once

#include "drillsim/specimen.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace drillsim::perception {

using spline::Vec3;

inline constexpr std::size_t kMapSize = 128;

class InvalidBoundingBoxError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class UndefinedMetricError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class CalibrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Region of the camera image the map covers. The overhead camera is
/// modelled as orthographic, so image coordinates are world x/y in metres.
struct BoundingBox {
    double x1 = 0.0;
    double y1 = 0.0;
    double x2 = 0.0;
    double y2 = 0.0;

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
};

/// Square box around a circle with the given margin factor on the radius.
BoundingBox box_around(const Vec3& center, double radius, double margin = 1.1);

struct CompletionMap {
    BoundingBox bbox;
    std::vector<double> completion = std::vector<double>(kMapSize * kMapSize, 0.0);
    std::vector<double> drill_mask = std::vector<double>(kMapSize * kMapSize, 0.0);

    static std::size_t index(std::size_t row, std::size_t col) { return row * kMapSize + col; }
    double pixel_x(std::size_t col) const;
    double pixel_y(std::size_t row) const;
    bool masked(std::size_t idx) const { return drill_mask[idx] >= 0.5; }
};

/**
 * Samples completion_at on the pixel grid. Pixels within occlusion_radius
 * of the drill get mask 1 and completion 0. Pass no drill position (or a
 * zero radius) to render without occlusion.
 */
CompletionMap render_map(const specimen::ShellSpecimen& specimen, std::optional<Vec3> drill,
                         const BoundingBox& bbox, double occlusion_radius);

/// Angular sector (around the box centre) with an extra persistent error.
struct RegionBias {
    double center_deg = 0.0;
    double half_width_deg = 0.0;
    double bias = 0.0;  ///< added to the multiplicative error inside the sector
};

struct NoiseConfig {
    double sigma = 0.0;               ///< std-dev of the smooth error field
    double bias = 0.0;                ///< global mean of the multiplicative error
    double correlation_length = 0.5e-3; ///< m, spatial scale of the error field
    double correlation_time = 20.0;   ///< s; 0 = independent frames, < 0 = frozen field
    std::size_t modes = 16;
    std::vector<RegionBias> regions;
};

/**
 * Error-field generator. The field is a sum of random Fourier modes with
 * Gaussian coefficients, so it has unit variance everywhere; the
 * coefficients follow an AR(1) process from frame to frame.
 */
class SensorNoiseModel {
public:
    SensorNoiseModel(NoiseConfig config, std::uint64_t seed, double frame_period = 1.0 / 30.0);

    const NoiseConfig& config() const { return config_; }
    bool silent() const;

    /// Advances the field by one frame.
    void advance();
    /// Multiplicative error at a world point for the current frame.
    double error_at(double x, double y, const BoundingBox& bbox) const;

    /// Corrupts every unmasked pixel in place for the current frame.
    void apply(CompletionMap& map);

private:
    void build_basis(const BoundingBox& bbox);
    double region_bias(double x, double y, const BoundingBox& bbox) const;

    NoiseConfig config_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    double frame_period_;
    std::vector<double> kx_;
    std::vector<double> ky_;
    std::vector<double> cos_coef_;
    std::vector<double> sin_coef_;
    bool started_ = false;

    std::optional<BoundingBox> basis_box_;
    std::vector<double> basis_;  // per pixel: modes cosines then modes sines
    std::vector<double> pixel_region_;
};

/// Advances the model one frame and returns a corrupted copy of the map.
CompletionMap corrupt(const CompletionMap& map, SensorNoiseModel& noise);

/// Pixel windows for each angular bin, precomputed from the path geometry.
struct ProgressGeometry {
    std::vector<std::vector<std::size_t>> windows;

    static ProgressGeometry build(const BoundingBox& bbox, std::span<const Vec3> points,
                                  double window_radius_px = 2.0);
};

struct ProgressBar {
    std::vector<double> values;

    explicit ProgressBar(std::size_t bins = 0) : values(bins, 0.0) {}
    std::size_t size() const { return values.size(); }
};

/**
 * bin <- max(bin, mean of the window) for every bin whose window is free of
 * drill-masked pixels; occluded bins keep their previous value.
 */
void update_progress(ProgressBar& bar, const CompletionMap& map, const ProgressGeometry& geometry);

/// Per-bin values, aligned with the trajectory point order.
std::vector<double> sample_completions(const ProgressBar& bar);

/**
 * Mean absolute percentage error over cells whose truth is at least
 * min_truth (and that are not masked, if a mask is given).
 */
double mape(std::span<const double> estimate, std::span<const double> truth, double min_truth = 0.05,
            std::span<const double> mask = {});

/// Monte-Carlo MAPE of the noise model on mid-range synthetic truth maps.
double measure_mape(const NoiseConfig& config, std::size_t frames, std::uint64_t seed);

/// MAPE reached as sigma grows without bound (clamping caps it).
double mape_ceiling(const NoiseConfig& config, std::size_t frames, std::uint64_t seed);

/**
 * Bisects sigma so that measure_mape() hits target_percent. Throws
 * CalibrationError if the target is unreachable under clamping.
 */
double calibrate_sigma(double target_percent, NoiseConfig config, std::size_t frames, std::uint64_t seed);

/// 8-bit binary portable graymap of one channel (row 0 written first).
void write_pgm(std::ostream& os, std::span<const double> channel);

}  // namespace drillsim::perception
