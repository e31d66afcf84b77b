#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "rct/core.hpp"

// Accumulation of scans over a sliding time window into point clouds, and the
// resampling strategies that bring them to a fixed size. The two
// accumulation-aware strategies (old_only_random, fixed_queue) never remove
// points of the latest scan, so a direct prediction exists for every relevant
// detection.

namespace rct {

enum class Strategy {
    none,
    random,
    lowest_rcs,
    old_only_random,
    fixed_queue,
    nn_postprocess_baseline,  // random removal; eval copies predictions back
};

inline const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::none: return "none";
        case Strategy::random: return "random";
        case Strategy::lowest_rcs: return "lowest_rcs";
        case Strategy::old_only_random: return "old_only_random";
        case Strategy::fixed_queue: return "fixed_queue";
        case Strategy::nn_postprocess_baseline: return "nn_postprocess_baseline";
    }
    return "none";
}

inline Strategy strategy_from_string(const std::string& s) {
    if (s == "none") return Strategy::none;
    if (s == "random") return Strategy::random;
    if (s == "lowest_rcs") return Strategy::lowest_rcs;
    if (s == "old_only_random" || s == "old-only") return Strategy::old_only_random;
    if (s == "fixed_queue" || s == "queue") return Strategy::fixed_queue;
    if (s == "nn_postprocess_baseline" || s == "nn-postprocess")
        return Strategy::nn_postprocess_baseline;
    throw ConfigError("unknown strategy: " + s);
}

struct AccumConfig {
    double window_s = 0.5;   // 0 = single scan
    int target_points = 3072;
    Strategy strategy = Strategy::old_only_random;

    void validate() const {
        if (!(target_points > 0)) throw ConfigError("AccumConfig: target_points must be > 0");
        if (!(window_s >= 0.0)) throw ConfigError("AccumConfig: window must be >= 0");
    }
};

/// One detection inside an accumulated cloud, aligned to the latest scan's
/// vehicle frame. dt_s == 0 iff the point belongs to the latest scan.
struct CloudPoint {
    Detection det;
    Vec2 pos;               // vehicle frame at latest scan time
    double dt_s = 0.0;      // seconds, <= 0
    bool is_replica = false;
    std::uint64_t scan_id = 0;
    int sensor_id = 1;
};

using Cloud = std::vector<CloudPoint>;

namespace detail {
inline const SensorMount& mount_for(const std::vector<SensorMount>& mounts, int sensor_id) {
    for (const auto& m : mounts)
        if (m.sensor_id == sensor_id) return m;
    throw DataError("no mount configured for sensor_id " + std::to_string(sensor_id));
}
}  // namespace detail

/// Concatenate `older_scans` (ascending timestamps) and `latest` into one
/// cloud in the latest scan's vehicle frame. No resampling is applied.
inline Cloud accumulate(const std::vector<Scan>& older_scans, const Scan& latest,
                        const std::vector<SensorMount>& mounts) {
    Cloud cloud;
    std::size_t total = latest.detections.size();
    for (const auto& s : older_scans) total += s.detections.size();
    cloud.reserve(total);

    auto add_scan = [&](const Scan& s) {
        if (s.timestamp_us > latest.timestamp_us)
            throw ContractError("accumulate: scan " + std::to_string(s.scan_id) +
                                " is newer than the latest scan");
        const SensorMount& mount = detail::mount_for(mounts, s.sensor_id);
        const double dt = static_cast<double>(s.timestamp_us - latest.timestamp_us) * 1e-6;
        for (const auto& d : s.detections) {
            CloudPoint p;
            p.det = d;
            p.pos = transform_to_latest(to_vehicle_frame(d.range_m, d.azimuth_deg, mount),
                                        s.ego.pose, latest.ego.pose);
            p.dt_s = dt;
            p.scan_id = s.scan_id;
            p.sensor_id = s.sensor_id;
            cloud.push_back(std::move(p));
        }
    };

    for (const auto& s : older_scans) add_scan(s);
    add_scan(latest);
    return cloud;
}

namespace detail {
/// Indices of `n` points in the order they are pushed into the queue:
/// ascending |v_comp|, ties by ascending RCS, then input order.
template <typename VFn, typename RcsFn>
std::vector<std::size_t> slowest_first_order(std::size_t n, VFn v_of, RcsFn rcs_of) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double va = std::abs(v_of(a)), vb = std::abs(v_of(b));
        if (va != vb) return va < vb;
        return rcs_of(a) < rcs_of(b);
    });
    return order;
}
}  // namespace detail

inline std::vector<std::size_t> slowest_first_order(const std::vector<Detection>& dets) {
    return detail::slowest_first_order(
        dets.size(), [&](std::size_t i) { return dets[i].v_comp; },
        [&](std::size_t i) { return dets[i].rcs_dbsm; });
}

inline std::vector<std::size_t> slowest_first_order(const Cloud& cloud) {
    return detail::slowest_first_order(
        cloud.size(), [&](std::size_t i) { return cloud[i].det.v_comp; },
        [&](std::size_t i) { return cloud[i].det.rcs_dbsm; });
}

/// Fixed-capacity buffer: pushing a new point in at the front drops the
/// oldest point from the back once full. Single-owner streaming state;
/// contents() snapshots are safe to hand elsewhere.
template <typename T>
class FixedQueue {
public:
    explicit FixedQueue(std::size_t capacity) : buf_(capacity), capacity_(capacity) {
        if (capacity == 0) throw ConfigError("FixedQueue: capacity must be > 0");
    }

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return size_; }

    void push(T item) {
        if (size_ < capacity_) {
            buf_[(start_ + size_) % capacity_] = std::move(item);
            ++size_;
        } else {
            buf_[start_] = std::move(item);  // overwrite the back (oldest)
            start_ = (start_ + 1) % capacity_;
        }
    }

    /// Contents in push order: oldest (back) first, newest (front) last.
    std::vector<T> contents() const {
        std::vector<T> out;
        out.reserve(size_);
        for (std::size_t i = 0; i < size_; ++i) out.push_back(buf_[(start_ + i) % capacity_]);
        return out;
    }

private:
    std::vector<T> buf_;
    std::size_t capacity_ = 0;
    std::size_t start_ = 0;  // index of the oldest element
    std::size_t size_ = 0;
};

/// Push one scan's points into the queue, slowest first, so the slowest sit
/// nearest the back among that scan's points and are evicted first.
inline void queue_push_scan(FixedQueue<Detection>& q, const std::vector<Detection>& dets) {
    for (std::size_t i : slowest_first_order(dets)) q.push(dets[i]);
}

inline void queue_push_scan(FixedQueue<CloudPoint>& q, const Cloud& scan_points) {
    for (std::size_t i : slowest_first_order(scan_points)) q.push(scan_points[i]);
}

/// Reference result for the fixed-size queue: drop whole oldest scans while
/// more than one scan still overflows the capacity, then keep only the
/// latest-pushed points of the oldest remaining scan. `history` holds each
/// scan's points already in push order.
template <typename T>
std::vector<T> queue_equivalence_oracle(const std::vector<std::vector<T>>& history,
                                        std::size_t capacity) {
    std::size_t total = 0;
    for (const auto& scan : history) total += scan.size();

    std::size_t first = 0;
    while (first < history.size() && total > capacity + history[first].size()) {
        total -= history[first].size();
        ++first;
    }

    std::vector<T> out;
    out.reserve(std::min(total, capacity));
    for (std::size_t s = first; s < history.size(); ++s) {
        const auto& scan = history[s];
        std::size_t skip = 0;
        if (s == first && total > capacity) skip = total - capacity;  // earliest-pushed dropped
        for (std::size_t i = skip; i < scan.size(); ++i) out.push_back(scan[i]);
    }
    return out;
}

/// Reduce `cloud` to min(|cloud|, target) points under the given strategy.
/// Survivors keep their relative order. Strategy none returns the cloud
/// unchanged regardless of size.
inline Cloud downsample(const Cloud& cloud, int target_points, Strategy strategy,
                        std::uint64_t seed) {
    if (cloud.empty()) throw ContractError("downsample: empty cloud");
    const std::size_t n = cloud.size();
    const std::size_t target = static_cast<std::size_t>(target_points);
    if (strategy == Strategy::none || n <= target) return cloud;

    const std::size_t need = n - target;
    std::vector<char> removed(n, 0);
    std::mt19937_64 rng(seed);

    switch (strategy) {
        case Strategy::random:
        case Strategy::nn_postprocess_baseline: {
            std::vector<std::size_t> idx(n);
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            std::vector<std::size_t> out;
            std::sample(idx.begin(), idx.end(), std::back_inserter(out), need, rng);
            for (std::size_t i : out) removed[i] = 1;
            break;
        }
        case Strategy::lowest_rcs: {
            std::vector<std::size_t> idx(n);
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
                return cloud[a].det.rcs_dbsm < cloud[b].det.rcs_dbsm;
            });
            for (std::size_t i = 0; i < need; ++i) removed[idx[i]] = 1;
            break;
        }
        case Strategy::old_only_random: {
            std::vector<std::size_t> old_idx;
            for (std::size_t i = 0; i < n; ++i)
                if (cloud[i].dt_s < 0.0) old_idx.push_back(i);
            if (old_idx.size() < need)
                throw DomainError(
                    "old_only_random: latest scan alone exceeds the target (need to remove " +
                    std::to_string(need) + " points but only " + std::to_string(old_idx.size()) +
                    " old points exist)");
            std::vector<std::size_t> out;
            std::sample(old_idx.begin(), old_idx.end(), std::back_inserter(out), need, rng);
            for (std::size_t i : out) removed[i] = 1;
            break;
        }
        case Strategy::fixed_queue: {
            // Queue-equivalent selection: survivors are the last `target`
            // entries of the push stream (scans in cloud order, each scan's
            // points ordered slowest first).
            std::vector<std::vector<std::size_t>> scans;
            for (std::size_t i = 0; i < n; ++i) {
                if (scans.empty() || cloud[scans.back().back()].scan_id != cloud[i].scan_id)
                    scans.emplace_back();
                scans.back().push_back(i);
            }
            std::vector<std::size_t> stream;
            stream.reserve(n);
            for (const auto& scan : scans) {
                auto order = detail::slowest_first_order(
                    scan.size(), [&](std::size_t k) { return cloud[scan[k]].det.v_comp; },
                    [&](std::size_t k) { return cloud[scan[k]].det.rcs_dbsm; });
                for (std::size_t k : order) stream.push_back(scan[k]);
            }
            for (std::size_t i = 0; i < need; ++i) removed[stream[i]] = 1;
            break;
        }
        case Strategy::none:
            break;
    }

    Cloud out;
    out.reserve(target);
    for (std::size_t i = 0; i < n; ++i)
        if (!removed[i]) out.push_back(cloud[i]);
    return out;
}

/// Pad the cloud to exactly target_points by duplicating randomly selected
/// points; replicas carry is_replica = true and are excluded from loss and
/// metrics downstream.
inline Cloud upsample(const Cloud& cloud, int target_points, std::uint64_t seed) {
    if (cloud.empty()) throw DataError("upsample: empty cloud");
    const std::size_t target = static_cast<std::size_t>(target_points);
    if (cloud.size() > target)
        throw ContractError("upsample: cloud already larger than target");
    Cloud out = cloud;
    out.reserve(target);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, cloud.size() - 1);
    while (out.size() < target) {
        CloudPoint replica = cloud[pick(rng)];
        replica.is_replica = true;
        out.push_back(std::move(replica));
    }
    return out;
}

/// Downsample-then-upsample to exactly target_points. For fixed_queue the
/// downsampling step replays the queue semantics over the cloud. Strategy
/// none never removes points: oversize clouds pass through (their size
/// varies), undersize clouds are still padded to the target.
inline Cloud resample(const Cloud& cloud, const AccumConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Cloud out = cfg.strategy == Strategy::none
                    ? cloud
                    : downsample(cloud, cfg.target_points, cfg.strategy, seed);
    if (out.size() < static_cast<std::size_t>(cfg.target_points))
        out = upsample(out, cfg.target_points, seed + 0x9e3779b97f4a7c15ULL);
    return out;
}

}  // namespace rct
