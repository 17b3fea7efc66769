#include "drillsim/config_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace drillsim::config {

using controller::ConfigError;
using controller::TrialConfig;
using nlohmann::json;

namespace {

// Reads the members of one JSON object, remembering which keys were used.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
        }
    }

    template <typename T>
    void read(const char* key, T& out) {
        used_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end()) {
            return;
        }
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!it->is_boolean()) {
                    throw ConfigError(name(key), "expected true or false");
                }
            } else if constexpr (std::is_integral_v<T>) {
                if (!it->is_number_integer() || (std::is_unsigned_v<T> && it->get<long long>() < 0)) {
                    throw ConfigError(name(key), "expected a non-negative integer");
                }
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!it->is_number()) {
                    throw ConfigError(name(key), "expected a number");
                }
            }
            out = it->get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(name(key), e.what());
        }
    }

    const json* child(const char* key) {
        used_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!used_.count(key)) {
                throw ConfigError(name(key), "unknown field");
            }
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

void read_noise(const json& j, const std::string& path, perception::NoiseConfig& n) {
    Section s(j, path);
    s.read("sigma", n.sigma);
    s.read("bias", n.bias);
    s.read("correlation_length", n.correlation_length);
    s.read("correlation_time", n.correlation_time);
    s.read("modes", n.modes);
    if (const json* regions = s.child("regions")) {
        if (!regions->is_array()) {
            throw ConfigError(s.name("regions"), "expected an array");
        }
        n.regions.clear();
        for (std::size_t i = 0; i < regions->size(); ++i) {
            perception::RegionBias r;
            Section rs((*regions)[i], s.name("regions") + "[" + std::to_string(i) + "]");
            rs.read("center_deg", r.center_deg);
            rs.read("half_width_deg", r.half_width_deg);
            rs.read("bias", r.bias);
            rs.finish();
            n.regions.push_back(r);
        }
    }
    s.finish();
}

}  // namespace

TrialConfig from_json(const json& j) {
    TrialConfig c;
    Section root(j, "");
    root.read("v0", c.v0);
    root.read("radius", c.radius);
    root.read("frequency", c.frequency);
    root.read("points", c.points);
    root.read("lap_period", c.lap_period);
    root.read("quasi_static", c.quasi_static);
    root.read("burr_radius", c.burr_radius);
    root.read("initial_clearance", c.initial_clearance);
    root.read("max_time", c.max_time);
    root.read("seed", c.seed);
    root.read("record_trace", c.record_trace);

    if (const json* stop = root.child("stop")) {
        Section s(*stop, "stop");
        s.read("point_fraction", c.stop.point_fraction);
        s.read("completion_threshold", c.stop.completion_threshold);
        s.finish();
    }
    if (const json* detach = root.child("detach")) {
        Section s(*detach, "detach");
        s.read("completion", c.detach.completion);
        s.read("coverage", c.detach.coverage);
        s.finish();
    }
    if (const json* spec = root.child("specimen")) {
        Section s(*spec, "specimen");
        s.read("base_thickness", c.specimen.base_thickness);
        s.read("variation_amplitude", c.specimen.variation_amplitude);
        s.read("variation_wavelength", c.specimen.variation_wavelength);
        s.read("cap_radius", c.specimen.cap_radius);
        s.read("tilt_deg", c.specimen.tilt_deg);
        s.read("tilt_axis_deg", c.specimen.tilt_axis_deg);
        s.read("membrane_tolerance", c.specimen.membrane_tolerance);
        s.read("grid_resolution", c.specimen.grid_resolution);
        s.finish();
    }
    if (const json* per = root.child("perception")) {
        Section s(*per, "perception");
        s.read("occlusion_radius", c.perception.occlusion_radius);
        s.read("window_radius_px", c.perception.window_radius_px);
        s.read("bbox_margin", c.perception.bbox_margin);
        if (const json* noise = s.child("noise")) {
            read_noise(*noise, "perception.noise", c.perception.noise);
        }
        s.finish();
    }
    if (const json* rnd = root.child("randomize")) {
        Section s(*rnd, "randomize");
        s.read("enabled", c.randomize.enabled);
        s.read("thickness_min", c.randomize.thickness_min);
        s.read("thickness_max", c.randomize.thickness_max);
        s.read("tilt_min_deg", c.randomize.tilt_min_deg);
        s.read("tilt_max_deg", c.randomize.tilt_max_deg);
        s.finish();
    }
    root.finish();
    controller::validate(c);
    return c;
}

json to_json(const TrialConfig& c) {
    json regions = json::array();
    for (const auto& r : c.perception.noise.regions) {
        regions.push_back({{"center_deg", r.center_deg}, {"half_width_deg", r.half_width_deg}, {"bias", r.bias}});
    }
    const auto& n = c.perception.noise;
    return {
        {"v0", c.v0},
        {"radius", c.radius},
        {"frequency", c.frequency},
        {"points", c.points},
        {"lap_period", c.lap_period},
        {"quasi_static", c.quasi_static},
        {"burr_radius", c.burr_radius},
        {"initial_clearance", c.initial_clearance},
        {"max_time", c.max_time},
        {"seed", c.seed},
        {"record_trace", c.record_trace},
        {"stop", {{"point_fraction", c.stop.point_fraction}, {"completion_threshold", c.stop.completion_threshold}}},
        {"detach", {{"completion", c.detach.completion}, {"coverage", c.detach.coverage}}},
        {"specimen",
         {{"base_thickness", c.specimen.base_thickness},
          {"variation_amplitude", c.specimen.variation_amplitude},
          {"variation_wavelength", c.specimen.variation_wavelength},
          {"cap_radius", c.specimen.cap_radius},
          {"tilt_deg", c.specimen.tilt_deg},
          {"tilt_axis_deg", c.specimen.tilt_axis_deg},
          {"membrane_tolerance", c.specimen.membrane_tolerance},
          {"grid_resolution", c.specimen.grid_resolution}}},
        {"perception",
         {{"occlusion_radius", c.perception.occlusion_radius},
          {"window_radius_px", c.perception.window_radius_px},
          {"bbox_margin", c.perception.bbox_margin},
          {"noise",
           {{"sigma", n.sigma},
            {"bias", n.bias},
            {"correlation_length", n.correlation_length},
            {"correlation_time", n.correlation_time},
            {"modes", n.modes},
            {"regions", regions}}}}},
        {"randomize",
         {{"enabled", c.randomize.enabled},
          {"thickness_min", c.randomize.thickness_min},
          {"thickness_max", c.randomize.thickness_max},
          {"tilt_min_deg", c.randomize.tilt_min_deg},
          {"tilt_max_deg", c.randomize.tilt_max_deg}}},
    };
}

TrialConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        // e.byte is 1-based; translate to line/column for the diagnostic
        std::size_t line = 1;
        std::size_t column = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(column),
                          "JSON syntax error");
    }
    return from_json(j);
}

TrialConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(path.string(), "cannot open config file");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

}  // namespace drillsim::config
