#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rct/core.hpp"

// Desk-scale labeled radar recordings with known true causes. The generator
// fills original_annotation (strict box rule: only detections whose
// noise-free position lies inside an object's extent carry the class tag) and
// true_source for every detection, so it doubles as the oracle for validating
// the relabeling algorithm.
//
// All measurement noise is bounded: Gaussian draws are clamped at 3 sigma,
// the ego-motion compensation error is uniform within a configured bound.

namespace rct {

struct EgoSegment {
    double duration_s = 1.0;
    double speed = 0.0;     // m/s
    double yaw_rate = 0.0;  // rad/s
};

struct ObjectSpec {
    std::string class_tag = "car";
    Vec2 position;            // world frame at t = 0
    Vec2 velocity;            // world frame, constant
    double half_length = 2.0; // extent along the heading
    double half_width = 0.9;
    int min_detections = 2;   // per visible scan
    int max_detections = 6;

    double heading() const {
        return (velocity.squared_norm() > 1e-12) ? std::atan2(velocity.y, velocity.x) : 0.0;
    }
};

/// Specular surface (guardrail, wall) acting as a mirror for radar waves.
struct Reflector {
    Vec2 p1;
    Vec2 p2;
    double reflectivity = 1.0;  // probability a ghost is emitted per visible object per scan

    void validate() const {
        if ((p2 - p1).squared_norm() < 1e-12)
            throw ConfigError("Reflector: degenerate segment");
        if (!(reflectivity >= 0.0 && reflectivity <= 1.0))
            throw ConfigError("Reflector: reflectivity must be in [0, 1]");
    }
};

struct RcsDist {
    double mean = 0.0;
    double sigma = 1.0;
};

struct NoiseModel {
    double sigma_range_m = 0.1;      // clamped at 3 sigma
    double sigma_azimuth_deg = 0.5;  // at boresight; doubles at 60 deg view angle
    double sigma_v = 0.1;            // 3 sigma = 0.3 m/s
    double comp_error_bound = 0.2;   // uniform ego-compensation error, m/s
    RcsDist rcs_object{12.0, 4.0};
    RcsDist rcs_stationary{2.0, 5.0};
    RcsDist rcs_ghost{2.0, 4.0};
    RcsDist rcs_noise{-3.0, 4.0};

    /// Azimuth noise grows linearly from sigma at boresight to 2 sigma at 60 deg.
    double sigma_azimuth_at(double view_angle_deg) const {
        return sigma_azimuth_deg * (1.0 + std::abs(view_angle_deg) / 60.0);
    }
};

struct ClutterModel {
    double noise_rate = 1.0;             // expected random noise detections per scan
    double noise_v_max = 8.0;            // |v_rel| of noise returns, m/s
    double velocity_alias_rate = 0.0;    // probability per eligible detection
    double velocity_alias_span = 25.0;   // m/s
    double angle_alias_rate = 0.0;
    double angle_alias_offset_deg = 25.0;
    bool alias_objects = true;            // may annotated detections spawn aliases?
    bool alias_stationary_only = false;   // restrict alias sources to stationary returns
};

/// Static world scatterers (roadside, ground). Sampled once per recording.
struct StationaryField {
    int count = 400;
    double detect_prob = 0.35;  // per scatterer in FOV per scan
    bool has_region = false;    // explicit world rectangle; otherwise derived
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
    double margin_m = 60.0;     // derived region: trajectory bounds + margin
};

struct ScenarioConfig {
    double duration_s = 4.0;
    double scan_interval_s = 0.06;  // per sensor; sensors fire staggered
    std::vector<SensorMount> mounts;
    std::vector<EgoSegment> ego_segments;
    std::vector<ObjectSpec> objects;
    std::vector<Reflector> reflectors;
    NoiseModel noise;
    ClutterModel clutter;
    StationaryField stationary;
    int min_dets_per_scan = 20;
    int max_dets_per_scan = 330;
    // Off-object scatter: occasional extra return offset from an annotated
    // detection by less than the relabel tolerances (models slight
    // measurement errors outside the strict box).
    double edge_scatter_rate = 0.15;
    double edge_scatter_dr = 0.25;
    double edge_scatter_daz = 1.5;
    std::uint64_t seed = 1;

    void validate() const {
        if (mounts.empty()) throw ConfigError("ScenarioConfig: no sensor mounts");
        for (const auto& m : mounts) m.validate();
        for (std::size_t i = 0; i < mounts.size(); ++i)
            for (std::size_t j = i + 1; j < mounts.size(); ++j)
                if (mounts[i].sensor_id == mounts[j].sensor_id)
                    throw ConfigError("ScenarioConfig: duplicate sensor_id " +
                                      std::to_string(mounts[i].sensor_id));
        if (!(duration_s > 0.0)) throw ConfigError("ScenarioConfig: duration must be > 0");
        if (!(scan_interval_s > 0.0))
            throw ConfigError("ScenarioConfig: scan_interval must be > 0");
        for (const auto& r : reflectors) r.validate();
        if (noise.sigma_range_m < 0.0 || noise.sigma_azimuth_deg < 0.0 || noise.sigma_v < 0.0 ||
            noise.comp_error_bound < 0.0)
            throw ConfigError("ScenarioConfig: noise sigmas must be >= 0");
        if (clutter.noise_rate < 0.0 || clutter.velocity_alias_rate < 0.0 ||
            clutter.angle_alias_rate < 0.0)
            throw ConfigError("ScenarioConfig: clutter rates must be >= 0");
        if (min_dets_per_scan < 0 || max_dets_per_scan < min_dets_per_scan)
            throw ConfigError("ScenarioConfig: bad detections-per-scan bounds");
        for (const auto& o : objects)
            if (o.min_detections < 0 || o.max_detections < o.min_detections)
                throw ConfigError("ScenarioConfig: bad object detection counts");
    }
};

// ---------------------------------------------------------------------------
// Clutter-effect models
// ---------------------------------------------------------------------------

/// Geometric mirror-ghost model: the target reflected across the reflector's
/// infinite line, accepted only when the sensor-to-ghost ray crosses the
/// reflector segment and the ghost falls inside FOV and range. The returned
/// detection is noise-free: v_comp is the radial component of the mirrored
/// velocity; v_rel is left for the caller (it needs the ego state).
/// Positions are in the mount's (vehicle) frame.
inline std::optional<Detection> mirror_ghost(Vec2 target_pos, Vec2 target_vel,
                                             const Reflector& reflector,
                                             const SensorMount& mount) {
    const Vec2 a = reflector.p1;
    const Vec2 dir = reflector.p2 - reflector.p1;
    const double len2 = dir.squared_norm();
    if (len2 < 1e-12) return std::nullopt;

    const Vec2 sensor = mount.position();
    // target and sensor must see the same face of the line
    const double side_target = dir.cross(target_pos - a);
    const double side_sensor = dir.cross(sensor - a);
    if (side_target * side_sensor <= 0.0) return std::nullopt;

    const double t = (target_pos - a).dot(dir) / len2;
    const Vec2 foot = a + dir * t;
    const Vec2 ghost = foot * 2.0 - target_pos;

    // sensor->ghost ray must cross the finite segment
    const Vec2 ray = ghost - sensor;
    const double denom = ray.cross(dir);
    if (std::abs(denom) < 1e-15) return std::nullopt;
    const double u = (a - sensor).cross(dir) / denom;
    const double v = (a - sensor).cross(ray) / denom;
    if (u < 0.0 || u > 1.0 || v < 0.0 || v > 1.0) return std::nullopt;

    const Polar polar = to_sensor_frame(ghost, mount);
    if (polar.range_m > mount.max_range_m || polar.range_m <= 0.0 ||
        std::abs(polar.azimuth_deg) > mount.fov_half_angle_deg)
        return std::nullopt;

    // velocity mirrored across the line direction
    const Vec2 n{-dir.y, dir.x};
    const Vec2 vel_mirrored = target_vel - n * (2.0 * target_vel.dot(n) / n.squared_norm());
    const Vec2 los = ghost - sensor;
    const double los_norm = los.norm();
    const Vec2 u_los{los.x / los_norm, los.y / los_norm};

    Detection det;
    det.range_m = polar.range_m;
    det.azimuth_deg = polar.azimuth_deg;
    det.v_comp = vel_mirrored.dot(u_los);
    det.annotation = "background";
    det.true_source = TrueSource::mirror_ghost;
    return det;
}

/// Velocity-ambiguity ghost: the measured radial velocity wraps by one
/// ambiguity span. Position is unchanged; v_rel and v_comp shift together.
inline Detection velocity_alias(const Detection& det, double v_span, int direction) {
    Detection out = det;
    const double delta = direction >= 0 ? v_span : -v_span;
    out.v_rel = det.v_rel + delta;
    out.v_comp = det.v_comp + delta;
    out.annotation = "background";
    out.true_source = TrueSource::ambiguity_ghost;
    return out;
}

/// Angle-ambiguity ghost: azimuth offset by a fixed amount. Returns nothing
/// when the aliased detection leaves the FOV.
inline std::optional<Detection> angle_alias(const Detection& det, double offset_deg,
                                            const SensorMount& mount) {
    Detection out = det;
    out.azimuth_deg = det.azimuth_deg + offset_deg;
    if (std::abs(out.azimuth_deg) > mount.fov_half_angle_deg) return std::nullopt;
    out.annotation = "background";
    out.true_source = TrueSource::ambiguity_ghost;
    return out;
}

// ---------------------------------------------------------------------------
// Recording generation
// ---------------------------------------------------------------------------

namespace detail {

/// Closed-form unicycle pose after driving (speed, yaw_rate) for tau seconds.
inline Pose2 advance_pose(Pose2 p, double speed, double yaw_rate, double tau) {
    if (std::abs(yaw_rate) < 1e-9) {
        p.x += speed * tau * std::cos(p.yaw);
        p.y += speed * tau * std::sin(p.yaw);
    } else {
        const double yaw1 = p.yaw + yaw_rate * tau;
        p.x += speed / yaw_rate * (std::sin(yaw1) - std::sin(p.yaw));
        p.y -= speed / yaw_rate * (std::cos(yaw1) - std::cos(p.yaw));
        p.yaw = yaw1;
    }
    return p;
}

class EgoTrajectory {
public:
    explicit EgoTrajectory(const std::vector<EgoSegment>& segments) : segments_(segments) {
        if (segments_.empty()) segments_.push_back({1e9, 0.0, 0.0});
        Pose2 p;
        double t = 0.0;
        for (const auto& seg : segments_) {
            starts_.push_back({t, p});
            p = advance_pose(p, seg.speed, seg.yaw_rate, seg.duration_s);
            t += seg.duration_s;
        }
    }

    EgoState at(double t, std::int64_t timestamp_us) const {
        std::size_t i = 0;
        while (i + 1 < segments_.size() && t >= starts_[i + 1].first) ++i;
        const EgoSegment& seg = segments_[i];
        double tau = t - starts_[i].first;
        if (i + 1 < segments_.size()) tau = std::min(tau, seg.duration_s);
        EgoState e;
        e.pose = advance_pose(starts_[i].second, seg.speed, seg.yaw_rate, tau);
        e.speed = seg.speed;
        e.yaw_rate = seg.yaw_rate;
        e.timestamp_us = timestamp_us;
        return e;
    }

private:
    std::vector<EgoSegment> segments_;
    std::vector<std::pair<double, Pose2>> starts_;
};

inline double clamped_gauss(std::mt19937_64& rng, double sigma) {
    if (sigma <= 0.0) return 0.0;
    std::normal_distribution<double> n(0.0, sigma);
    return std::clamp(n(rng), -3.0 * sigma, 3.0 * sigma);
}

inline double uniform_sym(std::mt19937_64& rng, double bound) {
    if (bound <= 0.0) return 0.0;
    return std::uniform_real_distribution<double>(-bound, bound)(rng);
}

inline double draw_rcs(std::mt19937_64& rng, const RcsDist& d) {
    return d.mean + clamped_gauss(rng, d.sigma);
}

}  // namespace detail

struct SourceTally {
    std::array<long long, 6> counts{};  // indexed by TrueSource
    long long total = 0;

    long long of(TrueSource s) const { return counts[static_cast<int>(s)]; }
};

/// Generator bookkeeping per detection: the noise-free values behind the
/// measured ones. Not part of the recording schema; used by oracle checks.
struct DetectionTruth {
    double v_comp = 0.0;  // noise-free compensated radial velocity
    double v_rel = 0.0;   // noise-free measured radial velocity
};

inline SourceTally tally_sources(const std::vector<Scan>& scans) {
    SourceTally t;
    for (const auto& s : scans)
        for (const auto& d : s.detections) {
            t.counts[static_cast<int>(d.true_source)] += 1;
            t.total += 1;
        }
    return t;
}

inline std::vector<Scan> generate_recording(
    const ScenarioConfig& cfg, std::vector<std::vector<DetectionTruth>>* truth_out = nullptr) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    const detail::EgoTrajectory trajectory(cfg.ego_segments);

    // world region for the stationary field
    double x0 = cfg.stationary.x0, y0 = cfg.stationary.y0;
    double x1 = cfg.stationary.x1, y1 = cfg.stationary.y1;
    if (!cfg.stationary.has_region) {
        double lo_x = 0.0, hi_x = 0.0, lo_y = 0.0, hi_y = 0.0;
        for (double t = 0.0; t <= cfg.duration_s; t += cfg.scan_interval_s) {
            const Pose2 p = trajectory.at(t, 0).pose;
            lo_x = std::min(lo_x, p.x);
            hi_x = std::max(hi_x, p.x);
            lo_y = std::min(lo_y, p.y);
            hi_y = std::max(hi_y, p.y);
        }
        x0 = lo_x - cfg.stationary.margin_m;
        x1 = hi_x + cfg.stationary.margin_m;
        y0 = lo_y - cfg.stationary.margin_m;
        y1 = hi_y + cfg.stationary.margin_m;
    }
    std::vector<Vec2> field(static_cast<std::size_t>(std::max(0, cfg.stationary.count)));
    {
        std::uniform_real_distribution<double> ux(x0, x1), uy(y0, y1);
        for (auto& p : field) p = {ux(rng), uy(rng)};
    }

    // scan schedule: sensors fire round-robin, staggered within the interval
    struct Tick {
        double t;
        std::size_t mount_index;
    };
    std::vector<Tick> ticks;
    for (std::size_t mi = 0; mi < cfg.mounts.size(); ++mi) {
        const double phase =
            cfg.scan_interval_s * static_cast<double>(mi) / static_cast<double>(cfg.mounts.size());
        for (double t = phase; t <= cfg.duration_s + 1e-12; t += cfg.scan_interval_s)
            ticks.push_back({t, mi});
    }
    std::sort(ticks.begin(), ticks.end(), [](const Tick& a, const Tick& b) {
        if (a.t != b.t) return a.t < b.t;
        return a.mount_index < b.mount_index;
    });

    std::vector<Scan> scans;
    scans.reserve(ticks.size());
    std::int64_t last_ts = -1;

    for (std::size_t tick_index = 0; tick_index < ticks.size(); ++tick_index) {
        const Tick& tick = ticks[tick_index];
        const SensorMount& mount = cfg.mounts[tick.mount_index];

        Scan scan;
        scan.scan_id = tick_index;
        scan.sensor_id = mount.sensor_id;
        scan.timestamp_us = static_cast<std::int64_t>(std::llround(tick.t * 1e6));
        if (scan.timestamp_us <= last_ts) scan.timestamp_us = last_ts + 1;
        last_ts = scan.timestamp_us;
        scan.ego = trajectory.at(tick.t, scan.timestamp_us);

        const Pose2 pose = scan.ego.pose;
        const Vec2 v_sensor = sensor_velocity(scan.ego, mount);
        const double cos_yaw = std::cos(pose.yaw), sin_yaw = std::sin(pose.yaw);
        auto world_vel_to_vehicle = [&](Vec2 w) -> Vec2 {
            return {cos_yaw * w.x + sin_yaw * w.y, -sin_yaw * w.x + cos_yaw * w.y};
        };

        std::vector<DetectionTruth> scan_truth;  // parallel to scan.detections

        // Emit one measured detection. `vel_vehicle` is the scatterer's ground
        // velocity in vehicle axes; v_comp gets the bounded compensation error.
        auto emit = [&](Vec2 pos_vehicle, Vec2 vel_vehicle, const std::string& annotation,
                        TrueSource source, const RcsDist& rcs) -> bool {
            const Polar truth = to_sensor_frame(pos_vehicle, mount);
            if (truth.range_m <= 0.0 || truth.range_m > mount.max_range_m ||
                std::abs(truth.azimuth_deg) > mount.fov_half_angle_deg)
                return false;
            const Vec2 los = pos_vehicle - mount.position();
            const double los_norm = los.norm();
            const Vec2 u_los{los.x / los_norm, los.y / los_norm};

            Detection d;
            d.range_m = truth.range_m + detail::clamped_gauss(rng, cfg.noise.sigma_range_m);
            d.azimuth_deg = truth.azimuth_deg +
                            detail::clamped_gauss(rng, cfg.noise.sigma_azimuth_at(truth.azimuth_deg));
            if (d.range_m <= 0.0 || d.range_m > mount.max_range_m ||
                std::abs(d.azimuth_deg) > mount.fov_half_angle_deg)
                return false;  // noise pushed it out of bounds; drop
            const double v_noise = detail::clamped_gauss(rng, cfg.noise.sigma_v);
            DetectionTruth dt;
            dt.v_comp = vel_vehicle.dot(u_los);
            dt.v_rel = (vel_vehicle - v_sensor).dot(u_los);
            d.v_rel = dt.v_rel + v_noise;
            d.v_comp = dt.v_comp + v_noise +
                       detail::uniform_sym(rng, cfg.noise.comp_error_bound);
            d.rcs_dbsm = detail::draw_rcs(rng, rcs);
            d.annotation = annotation;
            d.true_source = source;
            scan.detections.push_back(std::move(d));
            scan_truth.push_back(dt);
            return true;
        };

        // stationary world scatterers
        for (const Vec2& w : field) {
            const Vec2 pos = pose.apply_inverse(w);
            const Polar p = to_sensor_frame(pos, mount);
            if (p.range_m <= 0.0 || p.range_m > mount.max_range_m ||
                std::abs(p.azimuth_deg) > mount.fov_half_angle_deg)
                continue;
            if (u01(rng) >= cfg.stationary.detect_prob) continue;
            emit(pos, {0.0, 0.0}, "background", TrueSource::real_stationary,
                 cfg.noise.rcs_stationary);
        }

        // moving objects: scatter inside the extent is annotated (strict box
        // rule); edge scatter lands just outside, anchored to a kept detection
        for (const auto& obj : cfg.objects) {
            const Vec2 center_w = obj.position + obj.velocity * tick.t;
            const double heading = obj.heading();
            const double ch = std::cos(heading), sh = std::sin(heading);
            const Vec2 vel_vehicle = world_vel_to_vehicle(obj.velocity);
            const int want = obj.min_detections +
                             (obj.max_detections > obj.min_detections
                                  ? static_cast<int>(rng() % static_cast<std::uint64_t>(
                                                         obj.max_detections - obj.min_detections + 1))
                                  : 0);
            std::vector<std::size_t> anchors;
            for (int k = 0; k < want; ++k) {
                const double lu = detail::uniform_sym(rng, obj.half_length);
                const double lv = detail::uniform_sym(rng, obj.half_width);
                const Vec2 w{center_w.x + ch * lu - sh * lv, center_w.y + sh * lu + ch * lv};
                if (emit(pose.apply_inverse(w), vel_vehicle, obj.class_tag,
                         TrueSource::real_moving, cfg.noise.rcs_object))
                    anchors.push_back(scan.detections.size() - 1);
            }
            if (!anchors.empty() && cfg.edge_scatter_rate > 0.0) {
                for (std::size_t a : anchors) {
                    if (u01(rng) >= cfg.edge_scatter_rate) continue;
                    const Detection anchor = scan.detections[a];
                    Detection d = anchor;
                    d.range_m += detail::uniform_sym(rng, cfg.edge_scatter_dr);
                    d.azimuth_deg += detail::uniform_sym(rng, cfg.edge_scatter_daz);
                    if (d.range_m <= 0.0 || d.range_m > mount.max_range_m ||
                        std::abs(d.azimuth_deg) > mount.fov_half_angle_deg)
                        continue;
                    d.annotation = "background";
                    d.true_source = TrueSource::real_moving;
                    d.v_rel = anchor.v_rel + detail::clamped_gauss(rng, cfg.noise.sigma_v);
                    d.v_comp = anchor.v_comp + detail::clamped_gauss(rng, cfg.noise.sigma_v);
                    d.rcs_dbsm = detail::draw_rcs(rng, cfg.noise.rcs_object);
                    scan.detections.push_back(std::move(d));
                    scan_truth.push_back(scan_truth[a]);
                }
            }
        }

        // multipath ghosts: one per (object, reflector, scan) when accepted
        for (const auto& reflector : cfg.reflectors) {
            Reflector ref_vehicle = reflector;
            ref_vehicle.p1 = pose.apply_inverse(reflector.p1);
            ref_vehicle.p2 = pose.apply_inverse(reflector.p2);
            for (const auto& obj : cfg.objects) {
                if (reflector.reflectivity <= 0.0) continue;
                if (u01(rng) >= reflector.reflectivity) continue;
                const Vec2 center_w = obj.position + obj.velocity * tick.t;
                auto ghost = mirror_ghost(pose.apply_inverse(center_w),
                                          world_vel_to_vehicle(obj.velocity), ref_vehicle, mount);
                if (!ghost) continue;
                const Vec2 pos = to_vehicle_frame(ghost->range_m, ghost->azimuth_deg, mount);
                // re-derive the mirrored velocity vector from the radial value
                const Vec2 los = pos - mount.position();
                const double los_norm = los.norm();
                const Vec2 u_los{los.x / los_norm, los.y / los_norm};
                emit(pos, u_los * ghost->v_comp, "background", TrueSource::mirror_ghost,
                     cfg.noise.rcs_ghost);
            }
        }

        // ambiguity ghosts derived from the detections so far
        if (cfg.clutter.velocity_alias_rate > 0.0 || cfg.clutter.angle_alias_rate > 0.0) {
            const std::size_t base_count = scan.detections.size();
            for (std::size_t i = 0; i < base_count; ++i) {
                const bool is_object = !scan.detections[i].is_background();
                if (is_object && !cfg.clutter.alias_objects) continue;
                if (cfg.clutter.alias_stationary_only &&
                    scan.detections[i].true_source != TrueSource::real_stationary)
                    continue;
                if (cfg.clutter.velocity_alias_rate > 0.0 &&
                    u01(rng) < cfg.clutter.velocity_alias_rate) {
                    const int direction = (rng() & 1) ? 1 : -1;
                    Detection ghost = velocity_alias(scan.detections[i],
                                                     cfg.clutter.velocity_alias_span, direction);
                    ghost.rcs_dbsm = detail::draw_rcs(rng, cfg.noise.rcs_ghost);
                    const double delta = ghost.v_rel - scan.detections[i].v_rel;
                    scan.detections.push_back(std::move(ghost));
                    scan_truth.push_back(
                        {scan_truth[i].v_comp + delta, scan_truth[i].v_rel + delta});
                }
                if (cfg.clutter.angle_alias_rate > 0.0 &&
                    u01(rng) < cfg.clutter.angle_alias_rate) {
                    const int direction = (rng() & 1) ? 1 : -1;
                    auto ghost = angle_alias(scan.detections[i],
                                             direction * cfg.clutter.angle_alias_offset_deg, mount);
                    if (ghost) {
                        // compensation re-evaluated at the aliased position
                        const Vec2 pos = to_vehicle_frame(ghost->range_m, ghost->azimuth_deg, mount);
                        const Vec2 los = pos - mount.position();
                        const double los_norm = los.norm();
                        const Vec2 u_los{los.x / los_norm, los.y / los_norm};
                        ghost->v_comp = ghost->v_rel + v_sensor.dot(u_los) +
                                        detail::uniform_sym(rng, cfg.noise.comp_error_bound);
                        ghost->rcs_dbsm = detail::draw_rcs(rng, cfg.noise.rcs_ghost);
                        scan.detections.push_back(std::move(*ghost));
                        scan_truth.push_back({scan_truth[i].v_rel + v_sensor.dot(u_los),
                                              scan_truth[i].v_rel});
                    }
                }
            }
        }

        // uncorrelated noise returns
        if (cfg.clutter.noise_rate > 0.0) {
            std::poisson_distribution<int> n_noise(cfg.clutter.noise_rate);
            const int n = n_noise(rng);
            std::uniform_real_distribution<double> ur(1.0, mount.max_range_m);
            std::uniform_real_distribution<double> ua(-mount.fov_half_angle_deg,
                                                      mount.fov_half_angle_deg);
            for (int k = 0; k < n; ++k) {
                Detection d;
                d.range_m = ur(rng);
                d.azimuth_deg = ua(rng);
                d.v_rel = detail::uniform_sym(rng, cfg.clutter.noise_v_max);
                const Vec2 pos = to_vehicle_frame(d.range_m, d.azimuth_deg, mount);
                const Vec2 los = pos - mount.position();
                const double los_norm = los.norm();
                const Vec2 u_los{los.x / los_norm, los.y / los_norm};
                const double v_comp_nf = d.v_rel + v_sensor.dot(u_los);
                d.v_comp = v_comp_nf + detail::uniform_sym(rng, cfg.noise.comp_error_bound);
                d.rcs_dbsm = detail::draw_rcs(rng, cfg.noise.rcs_noise);
                d.annotation = "background";
                d.true_source = TrueSource::noise;
                scan_truth.push_back({v_comp_nf, d.v_rel});
                scan.detections.push_back(std::move(d));
            }
        }

        // enforce the configured per-scan size bounds
        if (static_cast<int>(scan.detections.size()) < cfg.min_dets_per_scan) {
            std::uniform_real_distribution<double> ur(1.0, mount.max_range_m);
            std::uniform_real_distribution<double> ua(-mount.fov_half_angle_deg,
                                                      mount.fov_half_angle_deg);
            while (static_cast<int>(scan.detections.size()) < cfg.min_dets_per_scan) {
                const double r = ur(rng);
                const double az = ua(rng);
                emit(to_vehicle_frame(r, az, mount), {0.0, 0.0}, "background",
                     TrueSource::real_stationary, cfg.noise.rcs_stationary);
            }
        }
        if (static_cast<int>(scan.detections.size()) > cfg.max_dets_per_scan) {
            // drop only points no other detection depends on
            std::vector<std::size_t> removable;
            for (std::size_t i = 0; i < scan.detections.size(); ++i) {
                const TrueSource s = scan.detections[i].true_source;
                if (s != TrueSource::real_moving) removable.push_back(i);
            }
            const std::size_t need = scan.detections.size() -
                                     static_cast<std::size_t>(cfg.max_dets_per_scan);
            if (removable.size() >= need) {
                std::vector<std::size_t> drop;
                std::sample(removable.begin(), removable.end(), std::back_inserter(drop), need,
                            rng);
                std::vector<char> dead(scan.detections.size(), 0);
                for (std::size_t i : drop) dead[i] = 1;
                std::vector<Detection> kept;
                std::vector<DetectionTruth> kept_truth;
                kept.reserve(cfg.max_dets_per_scan);
                kept_truth.reserve(cfg.max_dets_per_scan);
                for (std::size_t i = 0; i < scan.detections.size(); ++i)
                    if (!dead[i]) {
                        kept.push_back(std::move(scan.detections[i]));
                        kept_truth.push_back(scan_truth[i]);
                    }
                scan.detections = std::move(kept);
                scan_truth = std::move(kept_truth);
            }
        }

        if (truth_out) truth_out->push_back(std::move(scan_truth));
        scans.push_back(std::move(scan));
    }
    return scans;
}

}  // namespace rct
