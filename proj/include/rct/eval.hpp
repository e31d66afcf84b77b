#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "rct/accum.hpp"
#include "rct/core.hpp"

// Metrics and timing harness. Only predictions for the most recent scan are
// analyzed; points added by upsampling are ignored (mask = dt == 0 and not a
// replica).

namespace rct {

using Confusion = std::array<std::array<long long, 3>, 3>;  // rows truth, cols prediction

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    long long support = 0;  // truth count
    // Degenerate denominators (no predictions / no truth / no overlap) are
    // reported as 0 and flagged rather than NaN.
    bool precision_defined = true;
    bool recall_defined = true;
    bool f1_defined = true;
};

struct EvalReport {
    Confusion confusion{};
    std::array<ClassMetrics, 3> per_class{};
    double mean_f1 = 0.0;
    long long masked_points = 0;
    long long total_points = 0;
    bool latest_scan_direct_coverage = true;  // false when predictions were copied in
};

/// Evaluation mask: latest-scan points that are not replicas.
inline std::vector<char> eval_mask(const Cloud& cloud) {
    std::vector<char> mask(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i)
        mask[i] = (cloud[i].dt_s == 0.0 && !cloud[i].is_replica) ? 1 : 0;
    return mask;
}

inline Confusion confusion(const std::vector<Label>& predictions, const std::vector<Label>& truths,
                           const std::vector<char>& mask) {
    if (predictions.size() != truths.size() || predictions.size() != mask.size())
        throw ContractError("confusion: predictions/truths/mask length mismatch");
    Confusion c{};
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (!mask[i]) continue;
        const int t = static_cast<int>(truths[i]);
        const int p = static_cast<int>(predictions[i]);
        if (t > 2 || p > 2) throw DataError("confusion: unlabeled point under mask");
        c[t][p] += 1;
    }
    return c;
}

inline double macro_mean_f1(double f1_moving, double f1_clutter, double f1_stationary) {
    return (f1_moving + f1_clutter + f1_stationary) / 3.0;
}

/// Per-class precision/recall/F1 plus unweighted macro mean F1.
inline EvalReport prf1(const Confusion& c) {
    EvalReport r;
    r.confusion = c;
    for (int k = 0; k < 3; ++k) {
        long long tp = c[k][k], fp = 0, fn = 0;
        for (int j = 0; j < 3; ++j) {
            if (j == k) continue;
            fp += c[j][k];
            fn += c[k][j];
        }
        ClassMetrics& m = r.per_class[k];
        m.support = tp + fn;
        if (tp + fp > 0) {
            m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        } else {
            m.precision = 0.0;
            m.precision_defined = false;
        }
        if (tp + fn > 0) {
            m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
        } else {
            m.recall = 0.0;
            m.recall_defined = false;
        }
        if (m.precision + m.recall > 0.0) {
            m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
        } else {
            m.f1 = 0.0;
            m.f1_defined = false;
        }
        r.masked_points += m.support;
    }
    r.mean_f1 = macro_mean_f1(r.per_class[0].f1, r.per_class[1].f1, r.per_class[2].f1);
    r.total_points = r.masked_points;
    return r;
}

/// Give every removed point the label of its nearest surviving point.
/// Distances are squared Euclidean over (x, y); with the shared standardizer
/// scale the standardized and metric orderings coincide. Ties resolve to the
/// survivor with the lowest cloud index.
///
/// `survivor_indices[k]` is the cloud index that received `survivor_preds[k]`.
/// Returns one label per cloud point.
inline std::vector<Label> nn_postprocess(const Cloud& cloud,
                                         const std::vector<std::size_t>& survivor_indices,
                                         const std::vector<Label>& survivor_preds) {
    if (survivor_indices.empty()) throw ContractError("nn_postprocess: no survivors");
    if (survivor_indices.size() != survivor_preds.size())
        throw ContractError("nn_postprocess: survivor indices/predictions length mismatch");

    std::vector<Label> out(cloud.size(), Label::unlabeled);
    std::vector<char> direct(cloud.size(), 0);
    for (std::size_t k = 0; k < survivor_indices.size(); ++k) {
        out[survivor_indices[k]] = survivor_preds[k];
        direct[survivor_indices[k]] = 1;
    }
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (direct[i]) continue;
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_index = cloud.size();
        Label best_label = Label::unlabeled;
        for (std::size_t k = 0; k < survivor_indices.size(); ++k) {
            const std::size_t j = survivor_indices[k];
            const double d = (cloud[i].pos - cloud[j].pos).squared_norm();
            if (d < best || (d == best && j < best_index)) {
                best = d;
                best_index = j;
                best_label = survivor_preds[k];
            }
        }
        out[i] = best_label;
    }
    return out;
}

struct BenchResult {
    double mean_ms = 0.0;
    double variance_ms2 = 0.0;  // population variance
    std::vector<double> per_cloud_ms;
    std::vector<long long> processed_points;
};

/// Time `run_cloud(i)` over a stream of `n_clouds`, excluding `warmup`
/// untimed runs of the first cloud. The callable returns the processed point
/// count so constant-size processing can be asserted on counts.
inline BenchResult bench(std::size_t n_clouds, int warmup,
                         const std::function<long long(std::size_t)>& run_cloud) {
    BenchResult r;
    r.per_cloud_ms.reserve(n_clouds);
    r.processed_points.reserve(n_clouds);
    for (int w = 0; w < warmup && n_clouds > 0; ++w) run_cloud(0);

    double mean = 0.0, m2 = 0.0;  // Welford
    for (std::size_t i = 0; i < n_clouds; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        const long long points = run_cloud(i);
        const auto t1 = std::chrono::steady_clock::now();
        const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        r.per_cloud_ms.push_back(ms);
        r.processed_points.push_back(points);
        const double delta = ms - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (ms - mean);
    }
    if (!r.per_cloud_ms.empty()) {
        r.mean_ms = mean;
        r.variance_ms2 = m2 / static_cast<double>(r.per_cloud_ms.size());
    }
    return r;
}

}  // namespace rct
