#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

// Domain types and coordinate transforms shared by every other module.
//
// Conventions:
//  - Angles are stored in degrees wherever they cross a module boundary
//    (sensor mounts, detections); ego pose yaw is in radians.
//  - v_rel is the measured radial velocity, positive = receding from the
//    sensor. v_comp is the ego-motion-compensated radial velocity, so a
//    stationary target reads exactly 0 in noise-free data.
//  - The world frame is an arbitrary fixed 2D frame per recording.

namespace rct {

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * (kPi / 180.0); }
inline double rad2deg(double rad) { return rad * (180.0 / kPi); }

/// Wrap an angle in degrees to (-180, 180].
inline double wrap_deg(double deg) {
    double d = std::fmod(deg + 180.0, 360.0);
    if (d <= 0.0) d += 360.0;
    return d - 180.0;
}

// ---------------------------------------------------------------------------
// Errors. The CLI maps ConfigError to exit code 2, everything else to 1.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A value violates an operation's domain (out-of-FOV input, zero LOS, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed or incomplete input data (missing annotation, bad file, ...).
class DataError : public Error {
public:
    using Error::Error;
};

/// API misuse: a precondition the caller controls was violated.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration values.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Training aborted (diverging loss, non-finite gradient).
class TrainingError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Small geometry helpers
// ---------------------------------------------------------------------------

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double cross(Vec2 o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    double squared_norm() const { return x * x + y * y; }
};

/// 2D rigid pose (translation + yaw in radians).
struct Pose2 {
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;  // radians

    /// Map a point from this pose's local frame into the parent (world) frame.
    Vec2 apply(Vec2 p) const {
        const double c = std::cos(yaw), s = std::sin(yaw);
        return {x + c * p.x - s * p.y, y + s * p.x + c * p.y};
    }

    /// Map a parent-frame point into this pose's local frame.
    Vec2 apply_inverse(Vec2 p) const {
        const double c = std::cos(yaw), s = std::sin(yaw);
        const double dx = p.x - x, dy = p.y - y;
        return {c * dx + s * dy, -s * dx + c * dy};
    }

    bool finite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(yaw);
    }
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct SensorMount {
    int sensor_id = 1;                // 1..4
    double x = 0.0;                   // vehicle frame, meters
    double y = 0.0;
    double yaw_deg = 0.0;             // boresight direction in vehicle frame
    double fov_half_angle_deg = 60.0;
    double max_range_m = 100.0;

    Vec2 position() const { return {x, y}; }

    void validate() const {
        if (!(fov_half_angle_deg > 0.0 && fov_half_angle_deg <= 90.0))
            throw ConfigError("SensorMount: fov_half_angle must be in (0, 90], got " +
                              std::to_string(fov_half_angle_deg));
        if (!(max_range_m > 0.0))
            throw ConfigError("SensorMount: max_range must be > 0, got " +
                              std::to_string(max_range_m));
    }
};

struct EgoState {
    Pose2 pose;                    // world frame, yaw in radians
    double speed = 0.0;            // m/s along heading
    double yaw_rate = 0.0;         // rad/s
    std::int64_t timestamp_us = 0;
};

enum class Label : std::uint8_t {
    moving_object = 0,
    clutter = 1,
    stationary = 2,
    unlabeled = 3,
};

enum class TrueSource : std::uint8_t {
    real_moving = 0,
    real_stationary = 1,
    mirror_ghost = 2,
    ambiguity_ghost = 3,
    noise = 4,
    unknown = 5,
};

inline const char* to_string(Label l) {
    switch (l) {
        case Label::moving_object: return "moving_object";
        case Label::clutter: return "clutter";
        case Label::stationary: return "stationary";
        case Label::unlabeled: return "unlabeled";
    }
    return "unlabeled";
}

inline Label label_from_string(const std::string& s) {
    if (s == "moving_object") return Label::moving_object;
    if (s == "clutter") return Label::clutter;
    if (s == "stationary") return Label::stationary;
    if (s == "unlabeled") return Label::unlabeled;
    throw DataError("unknown label: " + s);
}

inline const char* to_string(TrueSource t) {
    switch (t) {
        case TrueSource::real_moving: return "real_moving";
        case TrueSource::real_stationary: return "real_stationary";
        case TrueSource::mirror_ghost: return "mirror_ghost";
        case TrueSource::ambiguity_ghost: return "ambiguity_ghost";
        case TrueSource::noise: return "noise";
        case TrueSource::unknown: return "unknown";
    }
    return "unknown";
}

inline TrueSource true_source_from_string(const std::string& s) {
    if (s == "real_moving") return TrueSource::real_moving;
    if (s == "real_stationary") return TrueSource::real_stationary;
    if (s == "mirror_ghost") return TrueSource::mirror_ghost;
    if (s == "ambiguity_ghost") return TrueSource::ambiguity_ghost;
    if (s == "noise") return TrueSource::noise;
    if (s == "unknown") return TrueSource::unknown;
    throw DataError("unknown true_source: " + s);
}

/// One radar return. `annotation` is the original dataset annotation: an
/// object class tag ("car", ...) or "background". `label` is filled by the
/// relabeling step. `true_source` is generator ground truth (`unknown` for
/// ingested real data).
struct Detection {
    double range_m = 0.0;
    double azimuth_deg = 0.0;  // sensor frame
    double v_rel = 0.0;        // m/s, positive = receding
    double v_comp = 0.0;       // m/s, ego-motion compensated
    double rcs_dbsm = 0.0;
    std::string annotation = "background";
    Label label = Label::unlabeled;
    TrueSource true_source = TrueSource::unknown;

    bool is_background() const { return annotation == "background"; }
};

/// One sensor's output at one timestamp, plus the ego state at that time.
struct Scan {
    std::uint64_t scan_id = 0;
    int sensor_id = 1;
    std::int64_t timestamp_us = 0;
    EgoState ego;
    std::vector<Detection> detections;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Polar sensor-frame measurement -> Cartesian vehicle-frame position.
inline Vec2 to_vehicle_frame(double range_m, double azimuth_deg, const SensorMount& mount) {
    if (!(range_m >= 0.0 && range_m <= mount.max_range_m))
        throw DomainError("to_vehicle_frame: range " + std::to_string(range_m) +
                          " outside [0, " + std::to_string(mount.max_range_m) + "]");
    if (!(std::abs(azimuth_deg) <= mount.fov_half_angle_deg))
        throw DomainError("to_vehicle_frame: azimuth " + std::to_string(azimuth_deg) +
                          " outside FOV +-" + std::to_string(mount.fov_half_angle_deg));
    const double a = deg2rad(mount.yaw_deg + azimuth_deg);
    return {mount.x + range_m * std::cos(a), mount.y + range_m * std::sin(a)};
}

struct Polar {
    double range_m = 0.0;
    double azimuth_deg = 0.0;
};

/// Inverse of to_vehicle_frame (no FOV check; callers decide what to do with
/// out-of-FOV results).
inline Polar to_sensor_frame(Vec2 p, const SensorMount& mount) {
    const Vec2 d = p - mount.position();
    Polar out;
    out.range_m = d.norm();
    out.azimuth_deg = wrap_deg(rad2deg(std::atan2(d.y, d.x)) - mount.yaw_deg);
    return out;
}

/// Instantaneous velocity of the mounted sensor, expressed in vehicle-frame
/// axes: translation along heading plus yaw_rate x mount offset.
inline Vec2 sensor_velocity(const EgoState& ego, const SensorMount& mount) {
    return {ego.speed - ego.yaw_rate * mount.y, ego.yaw_rate * mount.x};
}

/// Remove the sensor's own motion from a measured radial velocity. A
/// stationary target yields exactly 0 in noise-free data.
inline double compensate_velocity(double v_rel, Vec2 det_pos_vehicle, const EgoState& ego,
                                  const SensorMount& mount) {
    const Vec2 los = det_pos_vehicle - mount.position();
    const double n = los.norm();
    if (n < 1e-12)
        throw DomainError("compensate_velocity: detection coincides with sensor (zero LOS)");
    const Vec2 u{los.x / n, los.y / n};
    return v_rel + sensor_velocity(ego, mount).dot(u);
}

/// Re-express a vehicle-frame position recorded at pose `old_pose` in the
/// vehicle frame at pose `new_pose` (rigid 2D motion composition).
inline Vec2 transform_to_latest(Vec2 p, const Pose2& old_pose, const Pose2& new_pose) {
    if (!old_pose.finite() || !new_pose.finite() || !std::isfinite(p.x) || !std::isfinite(p.y))
        throw DomainError("transform_to_latest: non-finite input");
    return new_pose.apply_inverse(old_pose.apply(p));
}

}  // namespace rct
