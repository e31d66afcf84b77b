#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <vector>

#include "rct/accum.hpp"
#include "rct/core.hpp"

// Per-detection feature vector and its standardization.
//
// Row layout (11 features):
//   0 x, 1 y          vehicle frame at latest scan time [m]
//   2 range, 3 azimuth  polar sensor frame [m, deg]
//   4 v_comp [m/s], 5 rcs [dBsm], 6 dt [s, <= 0]
//   7..10 sensor one-hot (sensor_id 1..4)
//
// The first 7 features are standardized; x and y share one scale,
// sqrt((var_x + var_y)/2), so standardized distances stay proportional to
// metric distances. One-hot flags pass through untouched.

namespace rct {

inline constexpr int kFeatureDim = 11;
inline constexpr int kContinuousFeatures = 7;

enum FeatureIndex : int {
    kFeatX = 0,
    kFeatY = 1,
    kFeatRange = 2,
    kFeatAzimuth = 3,
    kFeatVComp = 4,
    kFeatRcs = 5,
    kFeatDt = 6,
    kFeatSensorOneHot = 7,
};

/// Feature matrix, one row per cloud point, in cloud order. Replicas produce
/// rows identical to their originals.
inline Eigen::MatrixXd assemble(const Cloud& cloud) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cloud.size()), kFeatureDim);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const CloudPoint& p = cloud[static_cast<std::size_t>(i)];
        if (p.sensor_id < 1 || p.sensor_id > 4)
            throw DataError("assemble: sensor_id must be in 1..4, got " +
                            std::to_string(p.sensor_id));
        m(i, kFeatX) = p.pos.x;
        m(i, kFeatY) = p.pos.y;
        m(i, kFeatRange) = p.det.range_m;
        m(i, kFeatAzimuth) = p.det.azimuth_deg;
        m(i, kFeatVComp) = p.det.v_comp;
        m(i, kFeatRcs) = p.det.rcs_dbsm;
        m(i, kFeatDt) = p.dt_s;
        m(i, kFeatSensorOneHot + (p.sensor_id - 1)) = 1.0;
    }
    return m;
}

/// Raw (x, y) positions used for grouping geometry in the network.
inline Eigen::MatrixXd positions(const Cloud& cloud) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(cloud.size()), 2);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        m(i, 0) = cloud[static_cast<std::size_t>(i)].pos.x;
        m(i, 1) = cloud[static_cast<std::size_t>(i)].pos.y;
    }
    return m;
}

struct Standardizer {
    std::array<double, kContinuousFeatures> mean{};
    std::array<double, kContinuousFeatures> scale{};  // scale[x] == scale[y]
    std::vector<int> clamped;  // features whose scale was clamped to 1 (zero variance)
    bool fitted = false;

    double shared_xy_scale() const { return scale[kFeatX]; }

    /// (value - mean) / scale on the continuous features; one-hots untouched.
    Eigen::MatrixXd apply(const Eigen::MatrixXd& m) const {
        if (!fitted) throw ContractError("Standardizer: apply before fit");
        if (m.cols() != kFeatureDim)
            throw DataError("Standardizer: expected " + std::to_string(kFeatureDim) +
                            " columns, got " + std::to_string(m.cols()));
        Eigen::MatrixXd out = m;
        for (int c = 0; c < kContinuousFeatures; ++c)
            out.col(c) = (out.col(c).array() - mean[c]) / scale[c];
        return out;
    }
};

/// Streaming moment accumulator; replicas are excluded from fitting.
class StandardizerFit {
public:
    void add(const Eigen::MatrixXd& m, const std::vector<char>* replica = nullptr) {
        if (m.cols() != kFeatureDim)
            throw DataError("StandardizerFit: expected " + std::to_string(kFeatureDim) +
                            " columns, got " + std::to_string(m.cols()));
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (replica && (*replica)[static_cast<std::size_t>(i)]) continue;
            ++count_;
            for (int c = 0; c < kContinuousFeatures; ++c) {
                sum_[c] += m(i, c);
                sumsq_[c] += m(i, c) * m(i, c);
            }
        }
    }

    void add(const Cloud& cloud) {
        std::vector<char> replica(cloud.size());
        for (std::size_t i = 0; i < cloud.size(); ++i) replica[i] = cloud[i].is_replica ? 1 : 0;
        add(assemble(cloud), &replica);
    }

    long long count() const { return count_; }

    Standardizer finish() const {
        if (count_ < 2) throw ContractError("StandardizerFit: need at least 2 samples");
        Standardizer s;
        const double n = static_cast<double>(count_);
        std::array<double, kContinuousFeatures> var{};
        for (int c = 0; c < kContinuousFeatures; ++c) {
            s.mean[c] = sum_[c] / n;
            var[c] = sumsq_[c] / n - s.mean[c] * s.mean[c];  // population variance
            if (var[c] < 0.0) var[c] = 0.0;
        }
        const double xy_var = 0.5 * (var[kFeatX] + var[kFeatY]);
        for (int c = 0; c < kContinuousFeatures; ++c) {
            double v = (c == kFeatX || c == kFeatY) ? xy_var : var[c];
            if (v > 0.0) {
                s.scale[c] = std::sqrt(v);
            } else {
                s.scale[c] = 1.0;
                s.clamped.push_back(c);
            }
        }
        s.fitted = true;
        return s;
    }

private:
    std::array<double, kContinuousFeatures> sum_{};
    std::array<double, kContinuousFeatures> sumsq_{};
    long long count_ = 0;
};

/// Convenience one-shot fit over feature matrices (optionally with replica
/// masks, one entry per row).
inline Standardizer fit_standardizer(const std::vector<Eigen::MatrixXd>& mats,
                                     const std::vector<std::vector<char>>* replica = nullptr) {
    StandardizerFit fit;
    for (std::size_t i = 0; i < mats.size(); ++i)
        fit.add(mats[i], replica ? &(*replica)[i] : nullptr);
    return fit.finish();
}

}  // namespace rct
