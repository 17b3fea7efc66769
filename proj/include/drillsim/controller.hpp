/**
 * @file controller.hpp
 * @brief Closed drilling loop, stop rule, trial classification and batches.
 *
 * One tick of period T = 1/f runs, in order:
 *   1. perception (render, corrupt, progress bar)
 *   2. completion sampling
 *   3. depth integration
 *   4. spline rebuild
 *   5. drill advance + material removal (sub-stepped at <= half a cell)
 *   6. stop rule / rupture / timeout evaluation
 */

#pragma once

#include "drillsim/perception.hpp"
#include "drillsim/specimen.hpp"
#include "drillsim/spline.hpp"
#include "drillsim/trajectory.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace drillsim::controller {

using spline::Vec3;

/// Invalid trial configuration; field() names the offending entry.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& message)
        : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

struct StopRule {
    double point_fraction = 0.80;
    double completion_threshold = 0.85;
};

struct PerceptionConfig {
    double occlusion_radius = 1e-3;  ///< m around the drill tip
    double window_radius_px = 2.0;
    double bbox_margin = 1.1;        ///< box half-width as a multiple of R
    perception::NoiseConfig noise;
};

/// Per-trial specimen randomisation, drawn from the trial seed.
struct RandomizeConfig {
    bool enabled = false;
    double thickness_min = 250e-6;
    double thickness_max = 350e-6;
    double tilt_min_deg = 0.0;
    double tilt_max_deg = 0.0;
};

struct TrialConfig {
    double v0 = 6e-6;          ///< m/s initial lowering speed
    double radius = 8e-3;      ///< m drilling circle radius
    double frequency = 30.0;   ///< Hz control/setpoint rate
    std::size_t points = 30;
    double lap_period = 10.0;  ///< s per lap of the drill along the circle
    bool quasi_static = false; ///< drill every point every tick
    StopRule stop;
    specimen::DetachCriteria detach{0.80, 0.80};
    specimen::SpecimenConfig specimen;
    double burr_radius = 0.7e-3;
    PerceptionConfig perception;
    double initial_clearance = 0.0;  ///< m above the highest surface point on the path
    double max_time = 3600.0;        ///< s
    std::uint64_t seed = 1;
    bool record_trace = true;
    RandomizeConfig randomize;
};

/// Throws ConfigError naming the first invalid field.
void validate(const TrialConfig& config);

/// Applies seed-driven randomisation and fills in derived specimen geometry.
TrialConfig resolve(const TrialConfig& config);

/// True iff at least ceil(point_fraction * n) values reach the threshold.
bool stop_condition(std::span<const double> completions, const StopRule& rule = {});

enum class Classification { Success, MembraneRupture, PatchNotDetachable, Timeout };

std::string_view to_string(Classification c);

/// Exit status of the CLI for a classification.
int exit_code(Classification c);

struct TraceRow {
    double t;
    std::size_t point;  ///< 1-based
    double p_z;
    double c_true;
    double c_est;
    double v;
};

struct TrialOutcome {
    Classification classification = Classification::Timeout;
    double drilling_time = 0.0;
    std::size_t ticks = 0;
    bool stop_fired = false;
    std::optional<specimen::RuptureEvent> rupture;
    std::vector<double> final_completions;  ///< ground truth at the path points
    std::vector<double> final_estimates;    ///< progress-bar values
    double perception_mape = -1.0;          ///< < 0 when undefined
    std::uint64_t seed = 0;
    std::vector<TraceRow> trace;
};

/// What a completion sensor sees at the start of a tick.
struct SensorInput {
    const specimen::ShellSpecimen& specimen;
    std::optional<Vec3> drill;
    std::span<const trajectory::TrajectoryPoint> points;
    std::size_t tick;
};

class CompletionSensor {
public:
    virtual ~CompletionSensor() = default;
    /// Returns one completion estimate per trajectory point.
    virtual std::vector<double> measure(const SensorInput& input) = 0;
};

/// Map-based sensor: render, corrupt, progress bar, sample.
class MapSensor : public CompletionSensor {
public:
    MapSensor(const PerceptionConfig& config, const perception::BoundingBox& bbox,
              std::span<const Vec3> points, std::uint64_t seed, double frame_period);

    std::vector<double> measure(const SensorInput& input) override;

    const perception::ProgressBar& bar() const { return bar_; }
    const perception::CompletionMap& last_truth() const { return truth_; }
    const perception::CompletionMap& last_estimate() const { return estimate_; }
    /// Running MAPE of estimates vs truth over all frames so far; < 0 if undefined.
    double running_mape() const;

private:
    PerceptionConfig config_;
    perception::BoundingBox bbox_;
    perception::ProgressGeometry geometry_;
    perception::ProgressBar bar_;
    perception::SensorNoiseModel noise_;
    perception::CompletionMap truth_;
    perception::CompletionMap estimate_;
    double ape_sum_ = 0.0;
    std::size_t ape_count_ = 0;
};

/// A running trial. step() advances one tick until the trial terminates.
class Trial {
public:
    explicit Trial(const TrialConfig& config, std::unique_ptr<CompletionSensor> sensor = nullptr);

    /// Returns false once the trial has terminated.
    bool step();
    bool finished() const { return outcome_.has_value(); }
    TrialOutcome run();

    const TrialConfig& config() const { return config_; }
    const specimen::ShellSpecimen& specimen() const { return specimen_; }
    const trajectory::PathState& state() const { return state_; }
    const spline::SplinePath& path() const { return path_; }
    std::span<const double> estimates() const { return estimates_; }
    std::size_t ticks() const { return tick_; }
    double time() const { return static_cast<double>(tick_) * period_; }
    std::optional<Vec3> drill_position() const { return drill_; }
    std::vector<double> true_completions() const;
    /// Null unless the default map sensor is in use.
    const MapSensor* map_sensor() const { return map_sensor_; }
    const std::optional<TrialOutcome>& outcome() const { return outcome_; }

private:
    void drill_quasi_static();
    void drill_swept();
    void terminate(Classification c, bool stop_fired);

    TrialConfig config_;
    double period_;
    specimen::ShellSpecimen specimen_;
    trajectory::PathState state_;
    spline::SplinePath path_;
    std::unique_ptr<CompletionSensor> sensor_;
    MapSensor* map_sensor_ = nullptr;
    std::vector<double> estimates_;
    std::optional<Vec3> drill_;
    double phase_ = 0.0;
    std::size_t tick_ = 0;
    std::vector<TraceRow> trace_;
    std::optional<TrialOutcome> outcome_;
};

TrialOutcome run_trial(const TrialConfig& config);

struct BatchTrial {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    Classification classification = Classification::Timeout;
    double drilling_time = 0.0;
    std::size_t ticks = 0;
    double min_completion = 0.0;
    double mean_completion = 0.0;
    double perception_mape = -1.0;
};

struct BatchSummary {
    std::size_t trials = 0;
    std::size_t successes = 0;
    std::size_t ruptures = 0;
    std::size_t not_detachable = 0;
    std::size_t timeouts = 0;
    double mean_time_success = 0.0;
    double median_time_success = 0.0;
    double p90_time_success = 0.0;
    double mean_time_all = 0.0;
    double mean_perception_mape = -1.0;  ///< over trials where it is defined; < 0 if none
    std::uint64_t seed_base = 0;
    std::vector<BatchTrial> outcomes;  ///< ordered by trial index

    double success_rate() const;
};

/// Trial k uses seed seed_base + k. Up to `parallelism` trials run at once;
/// results do not depend on it.
BatchSummary run_batch(const TrialConfig& config, std::size_t count, std::uint64_t seed_base,
                       std::size_t parallelism = 1);

/// "success: K/N (P%)"
std::string success_line(std::size_t successes, std::size_t trials);

/// Key-value summary text; see docs/summary_schema.md.
void write_summary(std::ostream& os, const BatchSummary& summary);

/// One CSV row per trial.
void write_batch_trials(std::ostream& os, const BatchSummary& summary);

/// "t,point,p_z,c_true,c_est,v" rows.
void write_trace_csv(std::ostream& os, std::span<const TraceRow> trace);

/// Key-value outcome text for a single trial.
void write_outcome(std::ostream& os, const TrialOutcome& outcome);

}  // namespace drillsim::controller
