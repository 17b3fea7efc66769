#include "drillsim/controller.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

namespace drillsim::controller {

namespace {

// splitmix64 finaliser: derives independent sub-seeds from the trial seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t kSpecimenStream = 1;
constexpr std::uint64_t kNoiseStream = 2;
constexpr std::uint64_t kRandomizeStream = 3;

// The specimen grid spans (2.5 R)^2 around the drilling centre.
constexpr double kGridHalfExtentPerRadius = 1.25;

void require(bool ok, const char* field, const std::string& message) {
    if (!ok) {
        throw ConfigError(field, message);
    }
}

}  // namespace

void validate(const TrialConfig& c) {
    require(c.v0 > 0.0, "v0", "must be positive");
    require(c.radius > 0.0, "radius", "must be positive");
    require(c.frequency > 0.0, "frequency", "must be positive");
    require(c.points >= 3, "points", "must be at least 3, got " + std::to_string(c.points));
    require(c.quasi_static || c.lap_period > 0.0, "lap_period", "must be positive in swept mode");
    require(c.stop.point_fraction > 0.0 && c.stop.point_fraction <= 1.0, "stop.point_fraction",
            "must lie in (0, 1]");
    require(c.stop.completion_threshold > 0.0 && c.stop.completion_threshold <= 1.0,
            "stop.completion_threshold", "must lie in (0, 1]");
    require(c.detach.completion > 0.0 && c.detach.completion <= 1.0, "detach.completion", "must lie in (0, 1]");
    require(c.detach.coverage > 0.0 && c.detach.coverage <= 1.0, "detach.coverage", "must lie in (0, 1]");
    require(c.burr_radius > 0.0, "burr_radius", "must be positive");
    require(c.perception.occlusion_radius >= 0.0, "perception.occlusion_radius", "must be non-negative");
    require(c.perception.window_radius_px > 0.0, "perception.window_radius_px", "must be positive");
    require(c.perception.bbox_margin > 1.0 && c.perception.bbox_margin < kGridHalfExtentPerRadius,
            "perception.bbox_margin", "must lie in (1, 1.25)");
    require(c.perception.noise.sigma >= 0.0, "perception.noise.sigma", "must be non-negative");
    require(c.perception.noise.correlation_length > 0.0, "perception.noise.correlation_length",
            "must be positive");
    require(c.perception.noise.modes >= 1, "perception.noise.modes", "must be at least 1");
    require(c.initial_clearance >= 0.0, "initial_clearance", "must be non-negative");
    require(c.max_time > 0.0, "max_time", "must be positive");
    if (c.randomize.enabled) {
        require(c.randomize.thickness_min > 0.0 && c.randomize.thickness_min <= c.randomize.thickness_max,
                "randomize.thickness_min", "must be positive and not above thickness_max");
        require(c.randomize.tilt_min_deg <= c.randomize.tilt_max_deg && std::abs(c.randomize.tilt_max_deg) < 90.0 &&
                    std::abs(c.randomize.tilt_min_deg) < 90.0,
                "randomize.tilt_min_deg", "tilt range must be ordered and within (-90, 90)");
    }
    try {
        specimen::SpecimenConfig probe = c.specimen;
        probe.half_extent = kGridHalfExtentPerRadius * c.radius;
        probe.center = Vec3::Zero();
        if (c.randomize.enabled) {
            probe.base_thickness = c.randomize.thickness_min;
        }
        specimen::ShellSpecimen check(probe);
    } catch (const specimen::InvalidSpecimenError& e) {
        throw ConfigError("specimen", e.what());
    }
}

TrialConfig resolve(const TrialConfig& config) {
    TrialConfig out = config;
    out.specimen.center = Vec3::Zero();
    out.specimen.half_extent = kGridHalfExtentPerRadius * config.radius;
    out.specimen.seed = derive_seed(config.seed, kSpecimenStream);
    if (config.randomize.enabled) {
        std::mt19937_64 rng(derive_seed(config.seed, kRandomizeStream));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const auto& r = config.randomize;
        out.specimen.base_thickness = r.thickness_min + (r.thickness_max - r.thickness_min) * unit(rng);
        out.specimen.tilt_deg = r.tilt_min_deg + (r.tilt_max_deg - r.tilt_min_deg) * unit(rng);
        out.specimen.tilt_axis_deg = 360.0 * unit(rng);
        out.randomize.enabled = false;
    }
    return out;
}

bool stop_condition(std::span<const double> completions, const StopRule& rule) {
    const double needed_real = rule.point_fraction * static_cast<double>(completions.size());
    const auto needed = static_cast<std::size_t>(std::ceil(needed_real - 1e-9));
    const auto reached = static_cast<std::size_t>(std::count_if(
        completions.begin(), completions.end(), [&](double c) { return c >= rule.completion_threshold; }));
    return reached >= needed;
}

std::string_view to_string(Classification c) {
    switch (c) {
    case Classification::Success:
        return "Success";
    case Classification::MembraneRupture:
        return "MembraneRupture";
    case Classification::PatchNotDetachable:
        return "PatchNotDetachable";
    case Classification::Timeout:
        return "Timeout";
    }
    return "Unknown";
}

int exit_code(Classification c) {
    switch (c) {
    case Classification::Success:
        return 0;
    case Classification::MembraneRupture:
        return 1;
    case Classification::PatchNotDetachable:
        return 2;
    case Classification::Timeout:
        return 3;
    }
    return 3;
}

// ---------------------------------------------------------------------------
// MapSensor

MapSensor::MapSensor(const PerceptionConfig& config, const perception::BoundingBox& bbox,
                     std::span<const Vec3> points, std::uint64_t seed, double frame_period)
    : config_(config),
      bbox_(bbox),
      geometry_(perception::ProgressGeometry::build(bbox, points, config.window_radius_px)),
      bar_(points.size()),
      noise_(config.noise, seed, frame_period) {}

std::vector<double> MapSensor::measure(const SensorInput& input) {
    truth_ = perception::render_map(input.specimen, input.drill, bbox_, config_.occlusion_radius);
    estimate_ = perception::corrupt(truth_, noise_);
    for (std::size_t i = 0; i < truth_.completion.size(); ++i) {
        const double t = truth_.completion[i];
        if (t >= 0.05 && !truth_.masked(i)) {
            ape_sum_ += std::abs(estimate_.completion[i] - t) / t;
            ++ape_count_;
        }
    }
    perception::update_progress(bar_, estimate_, geometry_);
    return perception::sample_completions(bar_);
}

double MapSensor::running_mape() const {
    if (ape_count_ == 0) {
        return -1.0;
    }
    return 100.0 * ape_sum_ / static_cast<double>(ape_count_);
}

// ---------------------------------------------------------------------------
// Trial

namespace {

TrialConfig checked(const TrialConfig& config) {
    validate(config);
    return resolve(config);
}

std::vector<trajectory::TrajectoryPoint> initial_points(const TrialConfig& c, const specimen::ShellSpecimen& s) {
    auto points = trajectory::discretize_circle(Vec3::Zero(), c.radius, c.points);
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& p : points) {
        top = std::max(top, s.surface_height(p.x, p.y));
    }
    for (auto& p : points) {
        p.z = top + c.initial_clearance;
    }
    return points;
}

}  // namespace

Trial::Trial(const TrialConfig& config, std::unique_ptr<CompletionSensor> sensor)
    : config_(checked(config)),
      period_(1.0 / config_.frequency),
      specimen_(config_.specimen),
      state_(initial_points(config_, specimen_), config_.v0, period_),
      path_(trajectory::rebuild_path(state_)),
      sensor_(std::move(sensor)) {
    if (!sensor_) {
        std::vector<Vec3> xy;
        for (const auto& p : state_.points()) {
            xy.emplace_back(p.x, p.y, 0.0);
        }
        auto map_sensor = std::make_unique<MapSensor>(
            config_.perception, perception::box_around(Vec3::Zero(), config_.radius, config_.perception.bbox_margin),
            xy, derive_seed(config_.seed, kNoiseStream), period_);
        map_sensor_ = map_sensor.get();
        sensor_ = std::move(map_sensor);
    }
    estimates_.assign(state_.size(), 0.0);
    if (!config_.quasi_static) {
        drill_ = trajectory::setpoint_at(path_, 0.0);
    }
}

std::vector<double> Trial::true_completions() const {
    std::vector<double> out;
    out.reserve(state_.size());
    for (const auto& p : state_.points()) {
        out.push_back(specimen_.completion_at(p.x, p.y));
    }
    return out;
}

void Trial::drill_quasi_static() {
    specimen::DrillTool tool;
    tool.burr_radius = config_.burr_radius;
    for (const auto& p : state_.points()) {
        tool.tip = p.position();
        specimen_.apply_drill(tool, period_);
    }
}

void Trial::drill_swept() {
    specimen::DrillTool tool;
    tool.burr_radius = config_.burr_radius;
    const double advance = period_ / config_.lap_period;
    const double arc = 2.0 * std::numbers::pi * config_.radius * advance;
    const auto steps = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(arc / (0.5 * specimen_.cell_size()))));
    const std::size_t first = tick_ == 0 ? 0 : 1;
    for (std::size_t j = first; j <= steps; ++j) {
        const double phase = phase_ + advance * static_cast<double>(j) / static_cast<double>(steps);
        tool.tip = trajectory::setpoint_at(path_, phase);
        specimen_.apply_drill(tool, period_ / static_cast<double>(steps));
    }
    phase_ += advance;
    phase_ -= std::floor(phase_);
    drill_ = tool.tip;
}

bool Trial::step() {
    if (outcome_) {
        return false;
    }
    const double t = time();

    // 1-2: perception and sampling on the state left by the previous tick
    std::vector<double> measured = sensor_->measure({specimen_, drill_, state_.points(), tick_});
    if (measured.size() != state_.size()) {
        throw std::runtime_error("sensor returned " + std::to_string(measured.size()) + " values for " +
                                 std::to_string(state_.size()) + " points");
    }
    estimates_ = std::move(measured);
    std::vector<double> truth;
    if (config_.record_trace) {
        truth = true_completions();
    }

    // 3-4: lower the points and rebuild the spline
    const std::vector<double> velocities = state_.integrate(estimates_);
    path_ = trajectory::rebuild_path(state_);

    // 5: cut
    if (config_.quasi_static) {
        drill_quasi_static();
    } else {
        drill_swept();
    }

    if (config_.record_trace) {
        for (std::size_t i = 0; i < state_.size(); ++i) {
            trace_.push_back({t, i + 1, state_.point(i).z, truth[i], estimates_[i], velocities[i]});
        }
    }
    ++tick_;

    // 6: termination
    const bool stop = stop_condition(estimates_, config_.stop);
    if (specimen_.membrane_ruptured()) {
        terminate(Classification::MembraneRupture, stop);
    } else if (stop) {
        const bool detachable = specimen::patch_detachable(true_completions(), config_.detach);
        terminate(detachable ? Classification::Success : Classification::PatchNotDetachable, true);
    } else if (time() >= config_.max_time - 0.5 * period_) {
        terminate(Classification::Timeout, false);
    }
    return !outcome_;
}

void Trial::terminate(Classification c, bool stop_fired) {
    TrialOutcome out;
    out.classification = c;
    out.drilling_time = time();
    out.ticks = tick_;
    out.stop_fired = stop_fired;
    out.rupture = specimen_.rupture();
    out.final_completions = true_completions();
    out.final_estimates = estimates_;
    out.perception_mape = map_sensor_ ? map_sensor_->running_mape() : -1.0;
    out.seed = config_.seed;
    out.trace = std::move(trace_);
    outcome_ = std::move(out);
}

TrialOutcome Trial::run() {
    while (step()) {
    }
    return *outcome_;
}

TrialOutcome run_trial(const TrialConfig& config) {
    Trial trial(config);
    return trial.run();
}

// ---------------------------------------------------------------------------
// Batches

double BatchSummary::success_rate() const {
    return trials == 0 ? 0.0 : static_cast<double>(successes) / static_cast<double>(trials);
}

namespace {

double percentile(std::vector<double> values, double p) {
    if (values.empty()) {
        return 0.0;
    }
    std::sort(values.begin(), values.end());
    const auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(values.size())));
    return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

double mean(const std::vector<double>& values) {
    if (values.empty()) {
        return 0.0;
    }
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

BatchTrial run_one(const TrialConfig& base, std::size_t index, std::uint64_t seed) {
    TrialConfig config = base;
    config.seed = seed;
    config.record_trace = false;
    const TrialOutcome out = run_trial(config);
    BatchTrial t;
    t.index = index;
    t.seed = seed;
    t.classification = out.classification;
    t.drilling_time = out.drilling_time;
    t.ticks = out.ticks;
    t.min_completion = *std::min_element(out.final_completions.begin(), out.final_completions.end());
    t.mean_completion = mean(out.final_completions);
    t.perception_mape = out.perception_mape;
    return t;
}

}  // namespace

BatchSummary run_batch(const TrialConfig& config, std::size_t count, std::uint64_t seed_base,
                       std::size_t parallelism) {
    if (count == 0) {
        throw std::invalid_argument("batch needs at least one trial");
    }
    validate(config);

    std::vector<BatchTrial> results(count);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto worker = [&] {
        while (!failed) {
            const std::size_t k = next.fetch_add(1);
            if (k >= count) {
                return;
            }
            try {
                results[k] = run_one(config, k, seed_base + k);
            } catch (...) {
                if (!failed.exchange(true)) {
                    failure = std::current_exception();
                }
            }
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(parallelism, 1, count);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(worker);
        }
        for (auto& th : pool) {
            th.join();
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    BatchSummary s;
    s.trials = count;
    s.seed_base = seed_base;
    std::vector<double> success_times;
    std::vector<double> all_times;
    std::vector<double> mapes;
    for (const auto& r : results) {
        all_times.push_back(r.drilling_time);
        if (r.perception_mape >= 0.0) {
            mapes.push_back(r.perception_mape);
        }
        switch (r.classification) {
        case Classification::Success:
            ++s.successes;
            success_times.push_back(r.drilling_time);
            break;
        case Classification::MembraneRupture:
            ++s.ruptures;
            break;
        case Classification::PatchNotDetachable:
            ++s.not_detachable;
            break;
        case Classification::Timeout:
            ++s.timeouts;
            break;
        }
    }
    s.mean_time_success = mean(success_times);
    s.median_time_success = percentile(success_times, 0.5);
    s.p90_time_success = percentile(success_times, 0.9);
    s.mean_time_all = mean(all_times);
    s.mean_perception_mape = mapes.empty() ? -1.0 : mean(mapes);
    s.outcomes = std::move(results);
    return s;
}

std::string success_line(std::size_t successes, std::size_t trials) {
    std::ostringstream os;
    const double pct = trials == 0 ? 0.0 : 100.0 * static_cast<double>(successes) / static_cast<double>(trials);
    os << "success: " << successes << '/' << trials << " (";
    if (std::abs(pct - std::round(pct)) < 1e-9) {
        os << static_cast<long>(std::round(pct));
    } else {
        os << std::fixed << std::setprecision(1) << pct;
    }
    os << "%)";
    return os.str();
}

void write_summary(std::ostream& os, const BatchSummary& s) {
    os << "trials: " << s.trials << '\n';
    os << success_line(s.successes, s.trials) << '\n';
    os << "paper_reference: 16/20 (80%)\n";
    os << "membrane_rupture: " << s.ruptures << '\n';
    os << "patch_not_detachable: " << s.not_detachable << '\n';
    os << "timeout: " << s.timeouts << '\n';
    os << std::setprecision(10);
    os << "mean_drilling_time_success_s: " << s.mean_time_success << '\n';
    os << "median_drilling_time_success_s: " << s.median_time_success << '\n';
    os << "p90_drilling_time_success_s: " << s.p90_time_success << '\n';
    os << "mean_drilling_time_all_s: " << s.mean_time_all << '\n';
    os << "mean_perception_mape_percent: " << s.mean_perception_mape << '\n';
    os << "seed_base: " << s.seed_base << '\n';
}

void write_batch_trials(std::ostream& os, const BatchSummary& s) {
    os << "trial,seed,classification,drilling_time_s,ticks,min_completion,mean_completion,perception_mape\n";
    os << std::setprecision(10);
    for (const auto& t : s.outcomes) {
        os << t.index << ',' << t.seed << ',' << to_string(t.classification) << ',' << t.drilling_time << ','
           << t.ticks << ',' << t.min_completion << ',' << t.mean_completion << ',' << t.perception_mape << '\n';
    }
}

void write_trace_csv(std::ostream& os, std::span<const TraceRow> trace) {
    os << "t,point,p_z,c_true,c_est,v\n";
    const auto old = os.precision(12);
    for (const auto& r : trace) {
        os << r.t << ',' << r.point << ',' << r.p_z << ',' << r.c_true << ',' << r.c_est << ',' << r.v << '\n';
    }
    os.precision(old);
}

void write_outcome(std::ostream& os, const TrialOutcome& o) {
    os << std::setprecision(10);
    os << "classification: " << to_string(o.classification) << '\n';
    os << "exit_code: " << exit_code(o.classification) << '\n';
    os << "drilling_time_s: " << o.drilling_time << '\n';
    os << "ticks: " << o.ticks << '\n';
    os << "stop_fired: " << (o.stop_fired ? "true" : "false") << '\n';
    os << "membrane_ruptured: " << (o.rupture ? "true" : "false") << '\n';
    if (o.rupture) {
        os << "rupture_x_m: " << o.rupture->x << '\n';
        os << "rupture_y_m: " << o.rupture->y << '\n';
        os << "rupture_overshoot_m: " << o.rupture->overshoot << '\n';
    }
    os << "perception_mape_percent: " << o.perception_mape << '\n';
    os << "seed: " << o.seed << '\n';
    os << "final_completions:";
    for (double c : o.final_completions) {
        os << ' ' << c;
    }
    os << '\n';
    os << "final_estimates:";
    for (double c : o.final_estimates) {
        os << ' ' << c;
    }
    os << '\n';
}

}  // namespace drillsim::controller
