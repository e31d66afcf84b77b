#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "rct/core.hpp"

// Automatic label generation: turns object/background annotations into
// {moving_object, clutter, stationary}.
//
// Rules, applied per scan:
//   1. every detection with an object-class annotation -> moving_object
//   2. background detections within (range_tol, azimuth tolerance) of a
//      rule-1 detection of the same scan -> moving_object
//   3. remaining background detections with |v_comp| >= v_threshold -> clutter
//   4. everything else -> stationary
//
// Proximity is tested in polar sensor coordinates because the tolerances are
// stated per coordinate, and only against originally annotated points (no
// transitive region growing). Matching never crosses scan boundaries.

namespace rct {

struct RelabelParams {
    double range_tol_m = 0.3;
    double az_tol_min_deg = 2.0;
    double az_tol_max_deg = 4.0;
    double az_tol_max_angle_deg = 60.0;
    double v_threshold = 0.5;  // m/s, |v_comp| at or above is clutter

    void validate() const {
        if (!(range_tol_m > 0.0 && az_tol_min_deg > 0.0 && az_tol_max_deg > 0.0 &&
              az_tol_max_angle_deg > 0.0))
            throw ConfigError("RelabelParams: tolerances must be positive");
        if (!(v_threshold >= 0.0))
            throw ConfigError("RelabelParams: v_threshold must be >= 0");
        if (!(az_tol_min_deg <= az_tol_max_deg))
            throw ConfigError("RelabelParams: az_tol_min must not exceed az_tol_max");
    }
};

/// Azimuth tolerance in degrees at a given view angle, linearly increasing
/// from az_tol_min at boresight to az_tol_max at az_tol_max_angle.
inline double azimuth_tolerance(double view_angle_deg, const RelabelParams& p = {}) {
    return p.az_tol_min_deg +
           (p.az_tol_max_deg - p.az_tol_min_deg) * std::abs(view_angle_deg) / p.az_tol_max_angle_deg;
}

/// Apply the label-generation rules to one scan. Every detection of the
/// result carries one of the three labels.
inline Scan relabel_scan(const Scan& scan, const RelabelParams& params = {}) {
    params.validate();
    Scan out = scan;

    std::vector<std::size_t> object_idx;
    for (std::size_t i = 0; i < out.detections.size(); ++i) {
        Detection& d = out.detections[i];
        if (d.annotation.empty())
            throw DataError("relabel: detection without annotation in scan " +
                            std::to_string(scan.scan_id));
        if (!d.is_background()) {
            d.label = Label::moving_object;
            object_idx.push_back(i);
        }
    }

    for (auto& d : out.detections) {
        if (!d.is_background()) continue;
        const double az_tol = azimuth_tolerance(d.azimuth_deg, params);
        bool near_object = false;
        for (std::size_t j : object_idx) {
            const Detection& o = out.detections[j];
            if (std::abs(d.range_m - o.range_m) <= params.range_tol_m &&
                std::abs(d.azimuth_deg - o.azimuth_deg) <= az_tol) {
                near_object = true;
                break;
            }
        }
        if (near_object)
            d.label = Label::moving_object;
        else if (std::abs(d.v_comp) >= params.v_threshold)
            d.label = Label::clutter;
        else
            d.label = Label::stationary;
    }
    return out;
}

/// Per-class detection counts / total.
struct ClassDistribution {
    std::array<long long, 3> counts{};  // moving_object, clutter, stationary
    long long total = 0;

    double ratio(Label l) const {
        return total > 0 ? static_cast<double>(counts[static_cast<int>(l)]) / total : 0.0;
    }
    double f_moving() const { return ratio(Label::moving_object); }
    double f_clutter() const { return ratio(Label::clutter); }
    double f_stationary() const { return ratio(Label::stationary); }
};

/// Relabel every scan in place and tally the class distribution.
inline ClassDistribution relabel_dataset(std::vector<Scan>& scans,
                                         const RelabelParams& params = {}) {
    if (scans.empty()) throw ContractError("relabel_dataset: empty input");
    ClassDistribution dist;
    for (auto& scan : scans) {
        scan = relabel_scan(scan, params);
        for (const auto& d : scan.detections) {
            dist.counts[static_cast<int>(d.label)] += 1;
            dist.total += 1;
        }
    }
    return dist;
}

/// Tally an already-labeled set of scans.
inline ClassDistribution class_distribution(const std::vector<Scan>& scans) {
    ClassDistribution dist;
    for (const auto& scan : scans)
        for (const auto& d : scan.detections) {
            if (d.label == Label::unlabeled)
                throw DataError("class_distribution: unlabeled detection in scan " +
                                std::to_string(scan.scan_id));
            dist.counts[static_cast<int>(d.label)] += 1;
            dist.total += 1;
        }
    return dist;
}

}  // namespace rct
