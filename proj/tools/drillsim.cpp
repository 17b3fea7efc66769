// drillsim: command-line front end for single trials, batches, the spline
// comparison dataset and noise calibration.

#include "drillsim/config_io.hpp"
#include "drillsim/controller.hpp"
#include "drillsim/perception.hpp"
#include "drillsim/spline.hpp"
#include "drillsim/trajectory.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace drillsim;

namespace {

constexpr int kExitConfig = 64;
constexpr int kExitCalibration = 65;
constexpr int kExitIo = 74;
constexpr int kExitExists = 73;

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExistsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

controller::TrialConfig load(const std::string& path) {
    return path.empty() ? controller::TrialConfig{} : config::load_config(path);
}

// Creates dir if needed; refuses when any target file is already there.
void prepare_dir(const fs::path& dir, const std::vector<std::string>& files, bool overwrite) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError("cannot create " + dir.string() + ": " + ec.message());
    }
    if (overwrite) {
        return;
    }
    for (const auto& f : files) {
        if (fs::exists(dir / f)) {
            throw ExistsError((dir / f).string() + " exists; pass --overwrite to replace it");
        }
    }
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.precision(17);
    return out;
}

struct TrialArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out = "trial_out";
    bool overwrite = false;
    bool maps = false;
};

int cmd_trial(const TrialArgs& a) {
    auto cfg = load(a.config);
    if (a.seed) {
        cfg.seed = *a.seed;
    }
    controller::validate(cfg);

    std::vector<std::string> files = {"trace.csv", "outcome.txt", "config_echo.json", "thickness.csv",
                                      "removal.csv"};
    if (a.maps) {
        files.insert(files.end(), {"map_truth.pgm", "map_estimate.pgm", "map_mask.pgm"});
    }
    const fs::path dir(a.out);
    prepare_dir(dir, files, a.overwrite);

    controller::Trial trial(cfg);
    const auto outcome = trial.run();

    {
        auto os = open_out(dir / "trace.csv");
        controller::write_trace_csv(os, outcome.trace);
    }
    {
        auto os = open_out(dir / "outcome.txt");
        controller::write_outcome(os, outcome);
    }
    {
        auto os = open_out(dir / "config_echo.json");
        os << config::to_json(cfg).dump(2) << '\n';
    }
    const auto& spec = trial.specimen();
    {
        auto os = open_out(dir / "thickness.csv");
        specimen::ShellSpecimen::write_matrix(os, spec.thickness_field(), spec.resolution());
    }
    {
        auto os = open_out(dir / "removal.csv");
        specimen::ShellSpecimen::write_matrix(os, spec.removal_field(), spec.resolution());
    }
    if (a.maps && trial.map_sensor()) {
        const auto* sensor = trial.map_sensor();
        std::ofstream truth(dir / "map_truth.pgm", std::ios::binary);
        perception::write_pgm(truth, sensor->last_truth().completion);
        std::ofstream est(dir / "map_estimate.pgm", std::ios::binary);
        perception::write_pgm(est, sensor->last_estimate().completion);
        std::ofstream mask(dir / "map_mask.pgm", std::ios::binary);
        perception::write_pgm(mask, sensor->last_truth().drill_mask);
    }

    std::cout << "classification: " << controller::to_string(outcome.classification) << '\n'
              << "drilling_time_s: " << outcome.drilling_time << '\n';
    return controller::exit_code(outcome.classification);
}

struct BatchArgs {
    std::string config;
    std::size_t trials = 20;
    std::uint64_t seed = 1;
    std::size_t parallel = 1;
    std::string out;
    bool overwrite = false;
};

int cmd_batch(const BatchArgs& a) {
    const auto cfg = load(a.config);
    controller::validate(cfg);
    if (a.trials < 1) {
        throw controller::ConfigError("trials", "must be at least 1");
    }
    if (!a.out.empty()) {
        prepare_dir(a.out, {"summary.txt", "trials.csv"}, a.overwrite);
    }
    const auto summary = controller::run_batch(cfg, a.trials, a.seed, a.parallel);
    if (!a.out.empty()) {
        auto s = open_out(fs::path(a.out) / "summary.txt");
        controller::write_summary(s, summary);
        auto t = open_out(fs::path(a.out) / "trials.csv");
        controller::write_batch_trials(t, summary);
    }
    std::cout << controller::success_line(summary.successes, summary.trials) << '\n';
    return 0;
}

struct SplineArgs {
    std::size_t points = 30;
    double radius = 8e-3;
    double step = 1e-3;
    std::size_t raised = 1;
    std::string out = "spline_demo.csv";
    bool overwrite = false;
};

int cmd_spline_demo(const SplineArgs& a) {
    if (a.points < 3) {
        throw controller::ConfigError("points", "at least 3 knots are required");
    }
    if (!(a.radius > 0.0)) {
        throw controller::ConfigError("radius", "must be positive");
    }
    const fs::path out(a.out);
    if (!a.overwrite && fs::exists(out)) {
        throw ExistsError(out.string() + " exists; pass --overwrite to replace it");
    }
    if (out.has_parent_path()) {
        fs::create_directories(out.parent_path());
    }
    const auto knots = trajectory::step_profile(spline::Vec3::Zero(), a.radius, a.points, a.step, a.raised);
    const auto constrained = spline::fit_constrained(knots, true);
    const auto natural = spline::fit_natural(knots, true);
    {
        auto os = open_out(out);
        spline::write_comparison_csv(os, constrained, natural);
    }
    const auto rc = spline::check_envelope(constrained, spline::Axis::Z);
    const auto rn = spline::check_envelope(natural, spline::Axis::Z);
    std::cout << "rows: " << a.points * 1000 << '\n'
              << "constrained_max_violation_m: " << rc.max_violation() << '\n'
              << "natural_max_violation_m: " << rn.max_violation() << '\n';
    if (a.step != 0.0) {
        std::cout << "natural_violation_fraction_of_step: " << rn.max_violation() / std::abs(a.step) << '\n';
    }
    return 0;
}

struct CalibrateArgs {
    std::string config;
    double target = 15.05;
    std::size_t frames = 5000;
    std::uint64_t seed = 1;
};

int cmd_calibrate(const CalibrateArgs& a) {
    auto noise = load(a.config).perception.noise;
    const double sigma = perception::calibrate_sigma(a.target, noise, a.frames, a.seed);
    noise.sigma = sigma;
    std::cout << "sigma: " << sigma << '\n';
    if (a.target > 0.0) {
        std::cout << "mape_percent: " << perception::measure_mape(noise, a.frames, a.seed) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Closed-loop drilling simulator"};
    app.require_subcommand(1);
    int verbosity = 0;
    app.add_flag("-v,--verbose", verbosity, "More log output (repeatable)");

    TrialArgs ta;
    auto* trial = app.add_subcommand("trial", "Run one trial and write its artifacts");
    trial->add_option("--config", ta.config, "JSON config file (defaults when omitted)")->check(CLI::ExistingFile);
    trial->add_option("--seed", ta.seed, "Overrides the config seed");
    trial->add_option("--out", ta.out, "Output directory")->capture_default_str();
    trial->add_flag("--overwrite", ta.overwrite, "Replace existing artifacts");
    trial->add_flag("--maps", ta.maps, "Also dump the final completion maps as PGM");

    BatchArgs ba;
    auto* batch = app.add_subcommand("batch", "Run seeded trials and summarise them");
    batch->add_option("--config", ba.config, "JSON config file")->check(CLI::ExistingFile);
    batch->add_option("--trials", ba.trials, "Number of trials")->capture_default_str();
    batch->add_option("--seed", ba.seed, "Seed of trial 0; trial k uses seed + k")->capture_default_str();
    batch->add_option("--parallel", ba.parallel, "Trials run concurrently")->capture_default_str()->check(
        CLI::PositiveNumber);
    batch->add_option("--out", ba.out, "Directory for summary.txt and trials.csv");
    batch->add_flag("--overwrite", ba.overwrite, "Replace existing artifacts");

    SplineArgs sa;
    auto* demo = app.add_subcommand("spline-demo", "Constrained vs natural spline on a step profile");
    demo->add_option("--points", sa.points, "Knots on the circle")->capture_default_str();
    demo->add_option("--radius", sa.radius, "Circle radius, m")->capture_default_str();
    demo->add_option("--step", sa.step, "Step height, m")->capture_default_str();
    demo->add_option("--raised", sa.raised, "Knots lifted by the step")->capture_default_str();
    demo->add_option("--out", sa.out, "Output CSV")->capture_default_str();
    demo->add_flag("--overwrite", sa.overwrite, "Replace an existing CSV");

    CalibrateArgs ca;
    auto* cal = app.add_subcommand("calibrate-noise", "Find the noise sigma for a MAPE target");
    cal->add_option("--target", ca.target, "Target MAPE in percent")->capture_default_str();
    cal->add_option("--frames", ca.frames, "Synthetic frames per evaluation")->capture_default_str();
    cal->add_option("--seed", ca.seed, "Calibration seed")->capture_default_str();
    cal->add_option("--config", ca.config, "Config whose noise structure is used")->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }
    spdlog::set_level(verbosity >= 2 ? spdlog::level::debug
                      : verbosity == 1 ? spdlog::level::info
                                       : spdlog::level::warn);

    try {
        if (*trial) return cmd_trial(ta);
        if (*batch) return cmd_batch(ba);
        if (*demo) return cmd_spline_demo(sa);
        if (*cal) return cmd_calibrate(ca);
    } catch (const controller::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const perception::CalibrationError& e) {
        std::cerr << "calibration error: " << e.what() << '\n';
        return kExitCalibration;
    } catch (const ExistsError& e) {
        std::cerr << "refusing to overwrite: " << e.what() << '\n';
        return kExitExists;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitConfig;
}
