#pragma once

#include <cstdint>
#include <vector>

#include "rct/accum.hpp"
#include "rct/core.hpp"
#include "rct/features.hpp"
#include "rct/net/train.hpp"
#include "rct/relabel.hpp"

// Glue between recordings and the network: window selection, resampling,
// feature assembly, standardization, class weighting, train/validation
// splits.

namespace rct {

/// One cloud as processed by the network, with enough bookkeeping to map
/// predictions back onto the accumulated cloud (for the nearest-neighbor
/// post-processing baseline).
struct BuiltCloud {
    Cloud processed;                          // resampled (and possibly padded) cloud
    Cloud full;                               // accumulated cloud before downsampling
    std::vector<std::size_t> survivor_index;  // processed[i] -> index into full (non-replicas)
    std::uint64_t latest_scan_id = 0;
};

/// Kept-row indices of `downsample` (ascending). Shares its semantics.
inline std::vector<std::size_t> downsample_keep_indices(const Cloud& cloud, int target_points,
                                                        Strategy strategy, std::uint64_t seed) {
    Cloud marked = cloud;
    for (std::size_t i = 0; i < marked.size(); ++i) marked[i].det.range_m = static_cast<double>(i);
    // reuse the real implementation on a tagged copy so the two can't drift
    Cloud kept = downsample(marked, target_points, strategy, seed);
    std::vector<std::size_t> out;
    out.reserve(kept.size());
    for (const auto& p : kept) out.push_back(static_cast<std::size_t>(p.det.range_m));
    return out;
}

/// Build the cloud whose latest scan is scans[latest_index], accumulating
/// over cfg.window_s and applying the configured resampling.
inline BuiltCloud build_cloud(const std::vector<Scan>& scans, std::size_t latest_index,
                              const std::vector<SensorMount>& mounts, const AccumConfig& cfg,
                              std::uint64_t seed) {
    cfg.validate();
    const Scan& latest = scans[latest_index];
    std::vector<Scan> window;
    if (cfg.window_s > 0.0) {
        const std::int64_t horizon =
            latest.timestamp_us - static_cast<std::int64_t>(cfg.window_s * 1e6);
        for (std::size_t j = 0; j < latest_index; ++j)
            if (scans[j].timestamp_us >= horizon) window.push_back(scans[j]);
    }

    BuiltCloud out;
    out.latest_scan_id = latest.scan_id;
    out.full = accumulate(window, latest, mounts);
    if (cfg.strategy == Strategy::none) {
        out.survivor_index.resize(out.full.size());
        std::iota(out.survivor_index.begin(), out.survivor_index.end(), std::size_t{0});
        out.processed = out.full.size() < static_cast<std::size_t>(cfg.target_points)
                            ? upsample(out.full, cfg.target_points, seed + 0x9e3779b97f4a7c15ULL)
                            : out.full;
        return out;
    }
    out.survivor_index = downsample_keep_indices(out.full, cfg.target_points, cfg.strategy, seed);
    Cloud kept;
    kept.reserve(out.survivor_index.size());
    for (std::size_t i : out.survivor_index) kept.push_back(out.full[i]);
    out.processed = kept.size() < static_cast<std::size_t>(cfg.target_points)
                        ? upsample(kept, cfg.target_points, seed + 0x9e3779b97f4a7c15ULL)
                        : std::move(kept);
    return out;
}

/// All clouds of a recording, one per scan (each scan once as the latest).
inline std::vector<BuiltCloud> build_clouds(const std::vector<Scan>& scans,
                                            const std::vector<SensorMount>& mounts,
                                            const AccumConfig& cfg, std::uint64_t seed) {
    std::vector<BuiltCloud> out;
    out.reserve(scans.size());
    for (std::size_t i = 0; i < scans.size(); ++i)
        out.push_back(build_cloud(scans, i, mounts, cfg, seed + i));
    return out;
}

inline int label_index(const CloudPoint& p) {
    if (p.det.label == Label::unlabeled)
        throw DataError("pipeline: unlabeled detection in scan " + std::to_string(p.scan_id) +
                        " (run the relabel step first)");
    return static_cast<int>(p.det.label);
}

/// Standardized features + masks for the network.
inline net::TrainCloud to_train_cloud(const BuiltCloud& built, const Standardizer& std_) {
    net::TrainCloud out;
    out.features = std_.apply(assemble(built.processed));
    out.pos = positions(built.processed);
    out.labels.reserve(built.processed.size());
    out.loss_mask.reserve(built.processed.size());
    out.eval_mask.resize(built.processed.size());
    for (std::size_t i = 0; i < built.processed.size(); ++i) {
        const CloudPoint& p = built.processed[i];
        out.labels.push_back(label_index(p));
        out.loss_mask.push_back(p.is_replica ? 0 : 1);
        out.eval_mask[i] = (p.dt_s == 0.0 && !p.is_replica) ? 1 : 0;
    }
    return out;
}

/// Per-class frequencies over non-replica points of the given clouds.
inline std::array<double, 3> class_frequencies(const std::vector<BuiltCloud>& clouds) {
    std::array<long long, 3> counts{};
    long long total = 0;
    for (const auto& c : clouds)
        for (const auto& p : c.processed) {
            if (p.is_replica) continue;
            counts[static_cast<std::size_t>(label_index(p))] += 1;
            ++total;
        }
    if (total == 0) throw DataError("class_frequencies: no points");
    return {static_cast<double>(counts[0]) / total, static_cast<double>(counts[1]) / total,
            static_cast<double>(counts[2]) / total};
}

/// Everything `train` needs, derived from labeled recordings: clouds of the
/// train/validation split, a standardizer fitted on the training split only,
/// and the class weights from the training frequencies.
struct ExperimentData {
    std::vector<net::TrainCloud> train;
    std::vector<net::TrainCloud> val;
    Standardizer standardizer;
    net::ClassWeights weights;
    std::array<double, 3> train_frequencies{};
};

inline ExperimentData prepare_experiment(const std::vector<std::vector<Scan>>& recordings,
                                         const std::vector<SensorMount>& mounts,
                                         const AccumConfig& accum, double val_fraction,
                                         double w_stationary) {
    if (recordings.empty()) throw ContractError("prepare_experiment: no recordings");
    const std::size_t n_val =
        std::min(recordings.size() - 1,
                 static_cast<std::size_t>(val_fraction * static_cast<double>(recordings.size())));
    const std::size_t n_train = recordings.size() - n_val;

    // cloud seeds depend only on the recording's index within its split, so a
    // later eval over the same files reproduces the clouds exactly
    std::vector<BuiltCloud> train_built, val_built;
    for (std::size_t r = 0; r < recordings.size(); ++r) {
        const std::size_t local = r < n_train ? r : r - n_train;
        auto clouds = build_clouds(recordings[r], mounts, accum, 1000003ULL * local);
        auto& dst = r < n_train ? train_built : val_built;
        for (auto& c : clouds) dst.push_back(std::move(c));
    }

    StandardizerFit fit;
    for (const auto& c : train_built) fit.add(c.processed);

    ExperimentData out;
    out.standardizer = fit.finish();
    out.train_frequencies = class_frequencies(train_built);
    out.weights = net::class_weights(out.train_frequencies[0], out.train_frequencies[1],
                                     out.train_frequencies[2], w_stationary);
    out.train.reserve(train_built.size());
    for (const auto& c : train_built) out.train.push_back(to_train_cloud(c, out.standardizer));
    out.val.reserve(val_built.size());
    for (const auto& c : val_built) out.val.push_back(to_train_cloud(c, out.standardizer));
    return out;
}

}  // namespace rct
