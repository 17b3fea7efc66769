#include "drillsim/perception.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

namespace drillsim::perception {

BoundingBox box_around(const Vec3& center, double radius, double margin) {
    const double half = radius * margin;
    return {center.x() - half, center.y() - half, center.x() + half, center.y() + half};
}

double CompletionMap::pixel_x(std::size_t col) const {
    return bbox.x1 + (static_cast<double>(col) + 0.5) * bbox.width() / static_cast<double>(kMapSize);
}

double CompletionMap::pixel_y(std::size_t row) const {
    return bbox.y1 + (static_cast<double>(row) + 0.5) * bbox.height() / static_cast<double>(kMapSize);
}

CompletionMap render_map(const specimen::ShellSpecimen& specimen, std::optional<Vec3> drill,
                         const BoundingBox& bbox, double occlusion_radius) {
    if (!(bbox.width() > 0.0 && bbox.height() > 0.0)) {
        throw InvalidBoundingBoxError("bounding box must have positive width and height");
    }
    if (!specimen.contains(bbox.x1, bbox.y1) || !specimen.contains(bbox.x2, bbox.y2)) {
        throw InvalidBoundingBoxError("bounding box extends beyond the specimen grid");
    }

    CompletionMap map;
    map.bbox = bbox;
    const bool occlude = drill.has_value() && occlusion_radius > 0.0;
    const double occ2 = occlusion_radius * occlusion_radius;
    for (std::size_t row = 0; row < kMapSize; ++row) {
        const double y = map.pixel_y(row);
        for (std::size_t col = 0; col < kMapSize; ++col) {
            const double x = map.pixel_x(col);
            const std::size_t idx = CompletionMap::index(row, col);
            if (occlude) {
                const double dx = x - drill->x();
                const double dy = y - drill->y();
                if (dx * dx + dy * dy <= occ2) {
                    map.drill_mask[idx] = 1.0;
                    continue;
                }
            }
            map.completion[idx] = specimen.completion_at(x, y);
        }
    }
    return map;
}

SensorNoiseModel::SensorNoiseModel(NoiseConfig config, std::uint64_t seed, double frame_period)
    : config_(std::move(config)), rng_(seed), frame_period_(frame_period) {
    if (!(config_.sigma >= 0.0)) {
        throw std::invalid_argument("noise sigma must be non-negative");
    }
    if (config_.modes == 0) {
        config_.modes = 1;
    }
    if (!(config_.correlation_length > 0.0)) {
        throw std::invalid_argument("noise correlation_length must be positive");
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double k0 = 2.0 * std::numbers::pi / config_.correlation_length;
    for (std::size_t m = 0; m < config_.modes; ++m) {
        const double dir = 2.0 * std::numbers::pi * unit(rng_);
        const double k = k0 * (0.5 + unit(rng_));
        kx_.push_back(k * std::cos(dir));
        ky_.push_back(k * std::sin(dir));
    }
    cos_coef_.assign(config_.modes, 0.0);
    sin_coef_.assign(config_.modes, 0.0);
}

bool SensorNoiseModel::silent() const {
    if (config_.sigma != 0.0 || config_.bias != 0.0) {
        return false;
    }
    return std::all_of(config_.regions.begin(), config_.regions.end(),
                       [](const RegionBias& r) { return r.bias == 0.0; });
}

void SensorNoiseModel::advance() {
    const double scale = 1.0 / std::sqrt(static_cast<double>(config_.modes));
    double keep = 0.0;
    if (started_) {
        if (config_.correlation_time < 0.0) {
            keep = 1.0;
        } else if (config_.correlation_time > 0.0) {
            keep = std::exp(-frame_period_ / config_.correlation_time);
        }
    }
    const double fresh = std::sqrt(1.0 - keep * keep);
    for (std::size_t m = 0; m < config_.modes; ++m) {
        cos_coef_[m] = keep * cos_coef_[m] + fresh * scale * normal_(rng_);
        sin_coef_[m] = keep * sin_coef_[m] + fresh * scale * normal_(rng_);
    }
    started_ = true;
}

double SensorNoiseModel::region_bias(double x, double y, const BoundingBox& bbox) const {
    if (config_.regions.empty()) {
        return 0.0;
    }
    const double cx = 0.5 * (bbox.x1 + bbox.x2);
    const double cy = 0.5 * (bbox.y1 + bbox.y2);
    const double angle = std::atan2(y - cy, x - cx) * 180.0 / std::numbers::pi;
    double total = 0.0;
    for (const auto& r : config_.regions) {
        double diff = std::fmod(angle - r.center_deg, 360.0);
        if (diff > 180.0) {
            diff -= 360.0;
        } else if (diff < -180.0) {
            diff += 360.0;
        }
        if (std::abs(diff) <= r.half_width_deg) {
            total += r.bias;
        }
    }
    return total;
}

double SensorNoiseModel::error_at(double x, double y, const BoundingBox& bbox) const {
    const double cx = 0.5 * (bbox.x1 + bbox.x2);
    const double cy = 0.5 * (bbox.y1 + bbox.y2);
    double field = 0.0;
    for (std::size_t m = 0; m < config_.modes; ++m) {
        const double phase = kx_[m] * (x - cx) + ky_[m] * (y - cy);
        field += cos_coef_[m] * std::cos(phase) + sin_coef_[m] * std::sin(phase);
    }
    return config_.bias + config_.sigma * field + region_bias(x, y, bbox);
}

void SensorNoiseModel::build_basis(const BoundingBox& bbox) {
    const std::size_t modes = config_.modes;
    CompletionMap geometry;
    geometry.bbox = bbox;
    const double cx = 0.5 * (bbox.x1 + bbox.x2);
    const double cy = 0.5 * (bbox.y1 + bbox.y2);
    basis_.assign(kMapSize * kMapSize * 2 * modes, 0.0);
    pixel_region_.assign(kMapSize * kMapSize, 0.0);
    for (std::size_t row = 0; row < kMapSize; ++row) {
        const double y = geometry.pixel_y(row);
        for (std::size_t col = 0; col < kMapSize; ++col) {
            const double x = geometry.pixel_x(col);
            const std::size_t idx = CompletionMap::index(row, col);
            double* out = &basis_[idx * 2 * modes];
            for (std::size_t m = 0; m < modes; ++m) {
                const double phase = kx_[m] * (x - cx) + ky_[m] * (y - cy);
                out[m] = std::cos(phase);
                out[modes + m] = std::sin(phase);
            }
            pixel_region_[idx] = region_bias(x, y, bbox);
        }
    }
    basis_box_ = bbox;
}

void SensorNoiseModel::apply(CompletionMap& map) {
    if (silent()) {
        return;
    }
    if (!started_) {
        advance();
    }
    const auto& b = map.bbox;
    if (!basis_box_ || basis_box_->x1 != b.x1 || basis_box_->y1 != b.y1 || basis_box_->x2 != b.x2 ||
        basis_box_->y2 != b.y2) {
        build_basis(b);
    }
    const std::size_t modes = config_.modes;
    for (std::size_t idx = 0; idx < kMapSize * kMapSize; ++idx) {
        const double truth = map.completion[idx];
        if (truth == 0.0 || map.masked(idx)) {
            continue;
        }
        const double* basis = &basis_[idx * 2 * modes];
        double field = 0.0;
        for (std::size_t m = 0; m < modes; ++m) {
            field += cos_coef_[m] * basis[m] + sin_coef_[m] * basis[modes + m];
        }
        const double e = config_.bias + config_.sigma * field + pixel_region_[idx];
        map.completion[idx] = std::clamp(truth * (1.0 + e), 0.0, 1.0);
    }
}

CompletionMap corrupt(const CompletionMap& map, SensorNoiseModel& noise) {
    CompletionMap out = map;
    if (noise.silent()) {
        return out;
    }
    noise.advance();
    noise.apply(out);
    return out;
}

ProgressGeometry ProgressGeometry::build(const BoundingBox& bbox, std::span<const Vec3> points,
                                         double window_radius_px) {
    ProgressGeometry g;
    g.windows.resize(points.size());
    const double px_w = bbox.width() / static_cast<double>(kMapSize);
    const double px_h = bbox.height() / static_cast<double>(kMapSize);
    const auto reach = static_cast<long>(std::ceil(window_radius_px)) + 1;
    const long last = static_cast<long>(kMapSize) - 1;
    for (std::size_t i = 0; i < points.size(); ++i) {
        // continuous pixel coordinates of the point (pixel centres at k + 0.5)
        const double fc = (points[i].x() - bbox.x1) / px_w;
        const double fr = (points[i].y() - bbox.y1) / px_h;
        const auto c0 = static_cast<long>(std::floor(fc));
        const auto r0 = static_cast<long>(std::floor(fr));
        for (long r = std::max(0L, r0 - reach); r <= std::min(last, r0 + reach); ++r) {
            for (long c = std::max(0L, c0 - reach); c <= std::min(last, c0 + reach); ++c) {
                const double dc = static_cast<double>(c) + 0.5 - fc;
                const double dr = static_cast<double>(r) + 0.5 - fr;
                if (dc * dc + dr * dr <= window_radius_px * window_radius_px) {
                    g.windows[i].push_back(CompletionMap::index(static_cast<std::size_t>(r),
                                                                static_cast<std::size_t>(c)));
                }
            }
        }
    }
    return g;
}

void update_progress(ProgressBar& bar, const CompletionMap& map, const ProgressGeometry& geometry) {
    if (geometry.windows.size() != bar.size()) {
        throw std::invalid_argument("progress geometry has " + std::to_string(geometry.windows.size()) +
                                    " bins, bar has " + std::to_string(bar.size()));
    }
    for (std::size_t i = 0; i < bar.size(); ++i) {
        const auto& window = geometry.windows[i];
        if (window.empty()) {
            continue;
        }
        double sum = 0.0;
        bool occluded = false;
        for (std::size_t idx : window) {
            if (map.masked(idx)) {
                occluded = true;
                break;
            }
            sum += map.completion[idx];
        }
        if (occluded) {
            continue;
        }
        const double mean = std::clamp(sum / static_cast<double>(window.size()), 0.0, 1.0);
        bar.values[i] = std::max(bar.values[i], mean);
    }
}

std::vector<double> sample_completions(const ProgressBar& bar) { return bar.values; }

double mape(std::span<const double> estimate, std::span<const double> truth, double min_truth,
            std::span<const double> mask) {
    if (estimate.size() != truth.size()) {
        throw std::invalid_argument("estimate and truth differ in size");
    }
    if (!mask.empty() && mask.size() != truth.size()) {
        throw std::invalid_argument("mask and truth differ in size");
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < min_truth || (!mask.empty() && mask[i] >= 0.5)) {
            continue;
        }
        sum += std::abs(estimate[i] - truth[i]) / truth[i];
        ++count;
    }
    if (count == 0) {
        throw UndefinedMetricError("no cells with truth >= " + std::to_string(min_truth));
    }
    return 100.0 * sum / static_cast<double>(count);
}

namespace {

// Mid-range truth values used for calibration frames.
constexpr double kTruthLow = 0.2;
constexpr double kTruthHigh = 0.8;

}  // namespace

double measure_mape(const NoiseConfig& config, std::size_t frames, std::uint64_t seed) {
    if (frames == 0) {
        throw std::invalid_argument("need at least one frame");
    }
    // The per-frame marginal does not depend on temporal correlation, so
    // calibration frames are drawn independently to converge faster.
    NoiseConfig independent = config;
    independent.correlation_time = 0.0;
    SensorNoiseModel noise(independent, seed);
    std::mt19937_64 truth_rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> truth_dist(kTruthLow, kTruthHigh);

    CompletionMap map;
    map.bbox = box_around(Vec3::Zero(), 8e-3);
    double total = 0.0;
    for (std::size_t f = 0; f < frames; ++f) {
        for (double& v : map.completion) {
            v = truth_dist(truth_rng);
        }
        const CompletionMap est = corrupt(map, noise);
        total += mape(est.completion, map.completion);
    }
    return total / static_cast<double>(frames);
}

double mape_ceiling(const NoiseConfig& config, std::size_t frames, std::uint64_t seed) {
    NoiseConfig huge = config;
    huge.sigma = 1e6;
    return measure_mape(huge, frames, seed);
}

double calibrate_sigma(double target_percent, NoiseConfig config, std::size_t frames, std::uint64_t seed) {
    if (!(target_percent >= 0.0)) {
        throw CalibrationError("target MAPE must be non-negative");
    }
    config.sigma = 0.0;
    const double floor = measure_mape(config, frames, seed);
    if (target_percent <= floor) {
        if (target_percent == 0.0 && floor == 0.0) {
            return 0.0;
        }
        throw CalibrationError("target MAPE " + std::to_string(target_percent) +
                               "% is below the bias-only floor of " + std::to_string(floor) + "%");
    }
    const double ceiling = mape_ceiling(config, frames, seed);
    if (target_percent >= ceiling) {
        throw CalibrationError("target MAPE " + std::to_string(target_percent) +
                               "% is unreachable: clamping to [0, 1] caps it at " + std::to_string(ceiling) + "%");
    }

    double lo = 0.0;
    double hi = 0.25;
    while (true) {
        config.sigma = hi;
        if (measure_mape(config, frames, seed) >= target_percent) {
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    // MAPE is monotone in sigma under common random numbers.
    for (int it = 0; it < 40 && hi - lo > 1e-5; ++it) {
        const double mid = 0.5 * (lo + hi);
        config.sigma = mid;
        const double measured = measure_mape(config, frames, seed);
        if (std::abs(measured - target_percent) < 0.05) {
            return mid;
        }
        if (measured < target_percent) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

void write_pgm(std::ostream& os, std::span<const double> channel) {
    if (channel.size() != kMapSize * kMapSize) {
        throw std::invalid_argument("channel must be 128x128");
    }
    os << "P5\n" << kMapSize << ' ' << kMapSize << "\n255\n";
    for (double v : channel) {
        const auto byte = static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
        os.put(static_cast<char>(byte));
    }
}

}  // namespace drillsim::perception
