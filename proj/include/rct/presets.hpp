#pragma once

#include <string>
#include <vector>

#include "rct/synth.hpp"

// Ready-made scenario configurations. Each models one evaluation regime:
// an everyday mixed drive, a ghost-heavy bridge crossing, a noise-bounded
// recording for validating the relabeling rules, a class-separable training
// set for desk-scale learning checks, and a dense burst for constant-size
// processing checks.

namespace rct {

/// Four 2D sensors facing front or side, +-60 deg FOV, 100 m range.
inline std::vector<SensorMount> default_mounts() {
    SensorMount s1{1, 3.6, 0.9, 25.0, 60.0, 100.0};
    SensorMount s2{2, 3.6, -0.9, -25.0, 60.0, 100.0};
    SensorMount s3{3, 3.4, 1.0, 85.0, 60.0, 100.0};
    SensorMount s4{4, 3.4, -1.0, -85.0, 60.0, 100.0};
    return {s1, s2, s3, s4};
}

/// Mixed suburban drive: three road users, one guardrail, moderate clutter.
inline ScenarioConfig preset_suburban() {
    ScenarioConfig cfg;
    cfg.duration_s = 4.0;
    cfg.scan_interval_s = 0.06;
    cfg.mounts = default_mounts();
    cfg.ego_segments = {{2.0, 11.0, 0.0}, {2.0, 9.0, 0.12}};

    ObjectSpec oncoming;
    oncoming.class_tag = "car";
    oncoming.position = {60.0, 4.0};
    oncoming.velocity = {-13.0, 0.0};
    ObjectSpec lead;
    lead.class_tag = "truck";
    lead.position = {18.0, 1.5};
    lead.velocity = {14.0, 0.0};
    lead.half_length = 3.0;
    lead.half_width = 1.2;
    lead.max_detections = 8;
    ObjectSpec pedestrian;
    pedestrian.class_tag = "pedestrian";
    pedestrian.position = {28.0, -7.0};
    pedestrian.velocity = {0.0, 1.2};
    pedestrian.half_length = 0.4;
    pedestrian.half_width = 0.4;
    pedestrian.min_detections = 1;
    pedestrian.max_detections = 3;
    cfg.objects = {oncoming, lead, pedestrian};

    cfg.reflectors = {{{10.0, -8.0}, {130.0, -8.0}, 0.4}};
    cfg.clutter.noise_rate = 1.5;
    cfg.clutter.velocity_alias_rate = 0.02;
    cfg.clutter.angle_alias_rate = 0.01;
    cfg.stationary.count = 700;
    cfg.stationary.detect_prob = 0.35;
    return cfg;
}

/// Drive over a bridge with guardrails on both sides; specular reflections of
/// the surrounding cars cause a lot of multipath ghosts.
inline ScenarioConfig preset_bridge_guardrail() {
    ScenarioConfig cfg;
    cfg.duration_s = 3.5;
    cfg.scan_interval_s = 0.06;
    cfg.mounts = default_mounts();
    cfg.ego_segments = {{3.5, 12.0, 0.0}};

    ObjectSpec a;
    a.class_tag = "car";
    a.position = {70.0, 4.5};
    a.velocity = {-15.0, 0.0};
    ObjectSpec b;
    b.class_tag = "car";
    b.position = {95.0, 4.0};
    b.velocity = {-17.0, 0.0};
    ObjectSpec c;
    c.class_tag = "car";
    c.position = {22.0, -3.5};
    c.velocity = {16.0, 0.0};
    cfg.objects = {a, b, c};

    cfg.reflectors = {{{0.0, -8.0}, {140.0, -8.0}, 0.8}, {{0.0, 8.0}, {140.0, 8.0}, 0.8}};
    cfg.clutter.noise_rate = 1.0;
    cfg.clutter.velocity_alias_rate = 0.015;
    cfg.stationary.count = 350;
    cfg.stationary.detect_prob = 0.3;
    return cfg;
}

/// Noise-bounded recording for validating the relabeling rules: velocity
/// measurement noise is off, the compensation error stays within its bound,
/// position noise stays within the relabel tolerances, and the geometry keeps
/// ghosts far away from every moving object.
inline ScenarioConfig preset_oracle_soundness() {
    ScenarioConfig cfg;
    cfg.duration_s = 6.0;
    cfg.scan_interval_s = 0.06;
    cfg.mounts = default_mounts();
    cfg.ego_segments = {{6.0, 10.0, 0.0}};

    ObjectSpec oncoming;
    oncoming.class_tag = "car";
    oncoming.position = {55.0, 1.5};
    oncoming.velocity = {-12.0, 0.0};
    oncoming.min_detections = 4;
    oncoming.max_detections = 8;
    ObjectSpec passing;
    passing.class_tag = "car";
    passing.position = {12.0, -1.5};
    passing.velocity = {14.0, 0.0};
    passing.min_detections = 4;
    passing.max_detections = 8;
    ObjectSpec lead;  // pulls ahead slowly, visible to the front sensors throughout
    lead.class_tag = "truck";
    lead.position = {25.0, 2.5};
    lead.velocity = {12.0, 0.0};
    lead.half_length = 3.0;
    lead.half_width = 1.1;
    lead.min_detections = 4;
    lead.max_detections = 8;
    cfg.objects = {oncoming, passing, lead};

    // guardrail far to the right: ghosts land >= 15 m away from the objects
    cfg.reflectors = {{{-20.0, -10.0}, {160.0, -10.0}, 0.8}};

    cfg.noise.sigma_range_m = 0.08;     // 3 sigma = 0.24 < 0.3 range tolerance
    cfg.noise.sigma_azimuth_deg = 0.5;  // 3 sigma <= 1.5 at boresight, 3.0 at 60 deg
    cfg.noise.sigma_v = 0.0;            // oracle regime: velocities exact
    cfg.noise.comp_error_bound = 0.2;

    cfg.clutter.noise_rate = 1.0;
    cfg.clutter.velocity_alias_rate = 0.04;
    cfg.clutter.velocity_alias_span = 25.0;
    cfg.clutter.angle_alias_rate = 0.0;
    cfg.clutter.alias_objects = false;
    cfg.clutter.alias_stationary_only = true;  // aliases spawn from the stationary strip only

    cfg.stationary.has_region = true;  // strip on the far left, clear of the road
    cfg.stationary.x0 = -30.0;
    cfg.stationary.x1 = 150.0;
    cfg.stationary.y0 = 12.0;
    cfg.stationary.y1 = 30.0;
    cfg.stationary.count = 2200;
    cfg.stationary.detect_prob = 0.5;

    cfg.edge_scatter_rate = 0.25;
    return cfg;
}

/// Class-separable single-sensor set for desk-scale learning: moving objects
/// are fast, ambiguity ghosts occupy a mid velocity band, mirror ghosts sit
/// beyond the guardrail, stationary points are slow.
inline ScenarioConfig preset_separable() {
    ScenarioConfig cfg;
    cfg.duration_s = 0.07;  // two scans per recording
    cfg.scan_interval_s = 0.06;
    cfg.mounts = {SensorMount{1, 3.5, 0.0, 0.0, 60.0, 100.0}};
    cfg.ego_segments = {{1.0, 8.0, 0.0}};

    ObjectSpec oncoming;
    oncoming.class_tag = "car";
    oncoming.position = {32.0, 5.0};
    oncoming.velocity = {-11.0, 0.0};
    oncoming.min_detections = 3;
    oncoming.max_detections = 6;
    ObjectSpec receding;
    receding.class_tag = "car";
    receding.position = {18.0, -4.0};
    receding.velocity = {13.0, 0.0};
    receding.min_detections = 3;
    receding.max_detections = 6;
    cfg.objects = {oncoming, receding};

    cfg.reflectors = {{{5.0, -8.0}, {70.0, -8.0}, 0.5}};

    cfg.clutter.noise_rate = 0.8;
    cfg.clutter.noise_v_max = 2.5;
    cfg.clutter.velocity_alias_rate = 0.18;
    cfg.clutter.velocity_alias_span = 1.8;  // mid band, clear of both thresholds
    cfg.clutter.alias_objects = false;
    cfg.clutter.alias_stationary_only = true;

    cfg.stationary.count = 350;
    cfg.stationary.detect_prob = 0.4;
    cfg.stationary.margin_m = 50.0;
    return cfg;
}

/// Dense environment saturating every scan at the per-scan cap; accumulated
/// clouds spike above ten thousand points.
inline ScenarioConfig preset_burst() {
    ScenarioConfig cfg;
    cfg.duration_s = 1.6;
    cfg.scan_interval_s = 0.06;
    cfg.mounts = {SensorMount{1, 3.6, 0.9, 20.0, 60.0, 100.0},
                  SensorMount{2, 3.6, -0.9, -20.0, 60.0, 100.0},
                  SensorMount{3, 3.4, 1.0, 45.0, 60.0, 100.0},
                  SensorMount{4, 3.4, -1.0, -45.0, 60.0, 100.0}};
    cfg.ego_segments = {{1.6, 12.0, 0.0}};

    ObjectSpec car;
    car.class_tag = "car";
    car.position = {45.0, 3.0};
    car.velocity = {-14.0, 0.0};
    cfg.objects = {car};

    cfg.clutter.noise_rate = 0.5;
    cfg.stationary.has_region = true;
    cfg.stationary.x0 = 10.0;
    cfg.stationary.x1 = 110.0;
    cfg.stationary.y0 = -40.0;
    cfg.stationary.y1 = 40.0;
    cfg.stationary.count = 9000;
    cfg.stationary.detect_prob = 0.8;
    return cfg;
}

inline std::vector<std::string> preset_names() {
    return {"suburban", "bridge-guardrail", "oracle-soundness", "separable", "burst"};
}

inline ScenarioConfig preset_by_name(const std::string& name) {
    if (name == "suburban") return preset_suburban();
    if (name == "bridge-guardrail") return preset_bridge_guardrail();
    if (name == "oracle-soundness") return preset_oracle_soundness();
    if (name == "separable") return preset_separable();
    if (name == "burst") return preset_burst();
    throw ConfigError("unknown preset: " + name + " (available: suburban, bridge-guardrail, "
                      "oracle-soundness, separable, burst)");
}

}  // namespace rct
