#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rct/presets.hpp"
#include "rct/synth.hpp"

// Key-value text format for scenario configurations.
//
//   # comment                     [mount]          repeatable
//   preset = suburban             id = 1
//   duration = 4.0                x = 3.6
//   scan_interval = 0.06          y = 0.9
//   seed = 7                      yaw = 25
//                                 fov_half_angle = 60
//   [ego]                         max_range = 100
//   segment = 2.0 11.0 0.0      # duration speed yaw_rate
//
//   [object]                      [reflector]      repeatable
//   class = car                   p1 = 10 -8
//   position = 60 4               p2 = 130 -8
//   velocity = -13 0              reflectivity = 0.4
//   half_length = 2
//   half_width = 0.9              [noise] / [clutter] / [stationary]
//   min_detections = 2            scalar keys, see parse_scenario_config
//   max_detections = 6
//
// `preset = <name>` (top of file) starts from that preset; later keys
// override it. Sections [mount], [object], [reflector] append an entry each
// time they open; the first [mount]/[object]/[reflector] section clears the
// preset's list so a config that names any replaces them all.

namespace rct {

namespace cfgdetail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline double to_double(const std::string& v, const std::string& path) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config: " + path + ": not a number: '" + v + "'");
    }
}

inline int to_int(const std::string& v, const std::string& path) {
    const double d = to_double(v, path);
    return static_cast<int>(d);
}

inline bool to_bool(const std::string& v, const std::string& path) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config: " + path + ": not a boolean: '" + v + "'");
}

inline std::vector<double> to_doubles(const std::string& v, std::size_t n,
                                      const std::string& path) {
    std::istringstream in(v);
    std::vector<double> out;
    double d = 0.0;
    while (in >> d) out.push_back(d);
    if (out.size() != n)
        throw ConfigError("config: " + path + ": expected " + std::to_string(n) + " numbers");
    return out;
}

}  // namespace cfgdetail

inline ScenarioConfig parse_scenario_config(const std::string& text) {
    using namespace cfgdetail;
    ScenarioConfig cfg;
    cfg.mounts = {SensorMount{}};  // minimal default, replaced by preset or [mount]

    std::string section;
    int mount_no = 0, object_no = 0, reflector_no = 0, ego_no = 0;
    bool preset_mounts = false, preset_objects = false, preset_reflectors = false,
         preset_segments = false, first_line = true;

    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config: line " + std::to_string(line_no) + ": bad section");
            section = trim(line.substr(1, line.size() - 2));
            if (section == "mount") {
                if (!preset_mounts) {
                    cfg.mounts.clear();
                    preset_mounts = true;
                }
                cfg.mounts.push_back(SensorMount{});
                ++mount_no;
            } else if (section == "object") {
                if (!preset_objects) {
                    cfg.objects.clear();
                    preset_objects = true;
                }
                cfg.objects.push_back(ObjectSpec{});
                ++object_no;
            } else if (section == "reflector") {
                if (!preset_reflectors) {
                    cfg.reflectors.clear();
                    preset_reflectors = true;
                }
                cfg.reflectors.push_back(Reflector{{0.0, 0.0}, {1.0, 0.0}, 1.0});
                ++reflector_no;
            } else if (section == "ego") {
                if (!preset_segments) {
                    cfg.ego_segments.clear();
                    preset_segments = true;
                }
                ++ego_no;
            } else if (section != "noise" && section != "clutter" && section != "stationary") {
                throw ConfigError("config: unknown section [" + section + "]");
            }
            first_line = false;
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const std::string path = section.empty() ? key : section + "." + key;

        if (section.empty()) {
            if (key == "preset") {
                if (!first_line)
                    throw ConfigError("config: preset must be the first key");
                const std::uint64_t keep_seed = cfg.seed;
                cfg = preset_by_name(value);
                cfg.seed = keep_seed;
                preset_mounts = preset_objects = preset_reflectors = preset_segments = false;
            } else if (key == "duration") {
                cfg.duration_s = to_double(value, path);
            } else if (key == "scan_interval") {
                cfg.scan_interval_s = to_double(value, path);
            } else if (key == "seed") {
                cfg.seed = static_cast<std::uint64_t>(to_double(value, path));
            } else if (key == "min_dets_per_scan") {
                cfg.min_dets_per_scan = to_int(value, path);
            } else if (key == "max_dets_per_scan") {
                cfg.max_dets_per_scan = to_int(value, path);
            } else if (key == "edge_scatter_rate") {
                cfg.edge_scatter_rate = to_double(value, path);
            } else if (key == "edge_scatter_dr") {
                cfg.edge_scatter_dr = to_double(value, path);
            } else if (key == "edge_scatter_daz") {
                cfg.edge_scatter_daz = to_double(value, path);
            } else {
                throw ConfigError("config: unknown key '" + path + "'");
            }
        } else if (section == "noise") {
            if (key == "sigma_range") cfg.noise.sigma_range_m = to_double(value, path);
            else if (key == "sigma_azimuth") cfg.noise.sigma_azimuth_deg = to_double(value, path);
            else if (key == "sigma_v") cfg.noise.sigma_v = to_double(value, path);
            else if (key == "comp_error_bound") cfg.noise.comp_error_bound = to_double(value, path);
            else throw ConfigError("config: unknown key '" + path + "'");
        } else if (section == "clutter") {
            if (key == "noise_rate") cfg.clutter.noise_rate = to_double(value, path);
            else if (key == "noise_v_max") cfg.clutter.noise_v_max = to_double(value, path);
            else if (key == "velocity_alias_rate")
                cfg.clutter.velocity_alias_rate = to_double(value, path);
            else if (key == "velocity_alias_span")
                cfg.clutter.velocity_alias_span = to_double(value, path);
            else if (key == "angle_alias_rate")
                cfg.clutter.angle_alias_rate = to_double(value, path);
            else if (key == "angle_alias_offset")
                cfg.clutter.angle_alias_offset_deg = to_double(value, path);
            else if (key == "alias_objects") cfg.clutter.alias_objects = to_bool(value, path);
            else throw ConfigError("config: unknown key '" + path + "'");
        } else if (section == "stationary") {
            if (key == "count") cfg.stationary.count = to_int(value, path);
            else if (key == "detect_prob") cfg.stationary.detect_prob = to_double(value, path);
            else if (key == "margin") cfg.stationary.margin_m = to_double(value, path);
            else if (key == "region") {
                const auto v = to_doubles(value, 4, path);
                cfg.stationary.has_region = true;
                cfg.stationary.x0 = v[0];
                cfg.stationary.y0 = v[1];
                cfg.stationary.x1 = v[2];
                cfg.stationary.y1 = v[3];
            } else {
                throw ConfigError("config: unknown key '" + path + "'");
            }
        } else if (section == "mount") {
            SensorMount& m = cfg.mounts.back();
            const std::string p = "mount[" + std::to_string(mount_no) + "]." + key;
            if (key == "id") m.sensor_id = to_int(value, p);
            else if (key == "x") m.x = to_double(value, p);
            else if (key == "y") m.y = to_double(value, p);
            else if (key == "yaw") m.yaw_deg = to_double(value, p);
            else if (key == "fov_half_angle") m.fov_half_angle_deg = to_double(value, p);
            else if (key == "max_range") m.max_range_m = to_double(value, p);
            else throw ConfigError("config: unknown key '" + p + "'");
        } else if (section == "ego") {
            const std::string p = "ego." + key;
            if (key == "segment") {
                const auto v = to_doubles(value, 3, p);
                cfg.ego_segments.push_back({v[0], v[1], v[2]});
            } else {
                throw ConfigError("config: unknown key '" + p + "'");
            }
        } else if (section == "object") {
            ObjectSpec& o = cfg.objects.back();
            const std::string p = "object[" + std::to_string(object_no) + "]." + key;
            if (key == "class") o.class_tag = value;
            else if (key == "position") {
                const auto v = to_doubles(value, 2, p);
                o.position = {v[0], v[1]};
            } else if (key == "velocity") {
                const auto v = to_doubles(value, 2, p);
                o.velocity = {v[0], v[1]};
            } else if (key == "half_length") o.half_length = to_double(value, p);
            else if (key == "half_width") o.half_width = to_double(value, p);
            else if (key == "min_detections") o.min_detections = to_int(value, p);
            else if (key == "max_detections") o.max_detections = to_int(value, p);
            else throw ConfigError("config: unknown key '" + p + "'");
        } else if (section == "reflector") {
            Reflector& r = cfg.reflectors.back();
            const std::string p = "reflector[" + std::to_string(reflector_no) + "]." + key;
            if (key == "p1") {
                const auto v = to_doubles(value, 2, p);
                r.p1 = {v[0], v[1]};
            } else if (key == "p2") {
                const auto v = to_doubles(value, 2, p);
                r.p2 = {v[0], v[1]};
            } else if (key == "reflectivity") r.reflectivity = to_double(value, p);
            else throw ConfigError("config: unknown key '" + p + "'");
        }
        first_line = false;
    }
    cfg.validate();
    return cfg;
}

inline ScenarioConfig load_scenario_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario_config(buf.str());
}

}  // namespace rct
