#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "rct/core.hpp"

// Point-set building blocks of the segmentation networks: farthest point
// sampling, radius ball queries, the triangular learning-rate schedule and
// the class-weight solver.

namespace rct::net {

/// Greedy sampling maximizing the minimum distance to the chosen set.
/// The first index is a seeded uniform choice, ties break to the lowest
/// index. In canonical mode the start is the lexicographically smallest
/// position and ties break by position, which makes the result a function of
/// the point multiset alone (used by permutation-invariance checks).
inline std::vector<int> farthest_point_sample(const Eigen::MatrixXd& pos, int m,
                                              std::uint64_t seed, bool canonical = false) {
    const int n = static_cast<int>(pos.rows());
    if (m > n)
        throw ContractError("farthest_point_sample: m = " + std::to_string(m) + " > n = " +
                            std::to_string(n));
    std::vector<int> out;
    if (m <= 0) return out;
    out.reserve(static_cast<std::size_t>(m));

    auto pos_less = [&](int a, int b) {
        if (pos(a, 0) != pos(b, 0)) return pos(a, 0) < pos(b, 0);
        return pos(a, 1) < pos(b, 1);
    };

    int start = 0;
    if (canonical) {
        for (int i = 1; i < n; ++i)
            if (pos_less(i, start)) start = i;
    } else {
        std::mt19937_64 rng(seed);
        start = static_cast<int>(std::uniform_int_distribution<int>(0, n - 1)(rng));
    }
    out.push_back(start);

    std::vector<double> min_d2(static_cast<std::size_t>(n),
                               std::numeric_limits<double>::infinity());
    std::vector<char> chosen(static_cast<std::size_t>(n), 0);
    chosen[static_cast<std::size_t>(start)] = 1;
    int last = start;
    for (int picked = 1; picked < m; ++picked) {
        int best = -1;
        double best_d2 = -1.0;
        for (int i = 0; i < n; ++i) {
            const double dx = pos(i, 0) - pos(last, 0);
            const double dy = pos(i, 1) - pos(last, 1);
            const double d2 = dx * dx + dy * dy;
            if (d2 < min_d2[static_cast<std::size_t>(i)]) min_d2[static_cast<std::size_t>(i)] = d2;
            if (chosen[static_cast<std::size_t>(i)]) continue;
            const double md = min_d2[static_cast<std::size_t>(i)];
            // ascending i plus strict > makes the lowest index win ties
            if (md > best_d2 || (canonical && md == best_d2 && best >= 0 && pos_less(i, best))) {
                best = i;
                best_d2 = md;
            }
        }
        chosen[static_cast<std::size_t>(best)] = 1;
        out.push_back(best);
        last = best;
    }
    return out;
}

/// Index groups of up to K in-radius points per query center, nearest first.
/// Groups with fewer than K members repeat the nearest member; a center with
/// an empty ball gets its globally nearest point repeated and a degenerate
/// flag.
struct BallGroups {
    int group_cap = 0;
    std::vector<std::vector<int>> idx;  // [center][K]
    std::vector<int> in_radius;         // members before padding
    std::vector<char> degenerate;
};

inline BallGroups ball_query(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centers,
                             double radius, int K, bool canonical = false) {
    if (!(radius > 0.0)) throw ContractError("ball_query: radius must be > 0");
    if (K < 1) throw ContractError("ball_query: K must be >= 1");
    const int n = static_cast<int>(points.rows());
    const int c = static_cast<int>(centers.rows());
    if (n == 0) throw ContractError("ball_query: empty point set");

    auto pos_less = [&](int a, int b) {
        if (points(a, 0) != points(b, 0)) return points(a, 0) < points(b, 0);
        return points(a, 1) < points(b, 1);
    };

    BallGroups out;
    out.group_cap = K;
    out.idx.resize(static_cast<std::size_t>(c));
    out.in_radius.resize(static_cast<std::size_t>(c), 0);
    out.degenerate.resize(static_cast<std::size_t>(c), 0);

    const double r2 = radius * radius;
    std::vector<std::pair<double, int>> hits;
    for (int ci = 0; ci < c; ++ci) {
        hits.clear();
        int nearest = 0;
        double nearest_d2 = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            const double dx = points(i, 0) - centers(ci, 0);
            const double dy = points(i, 1) - centers(ci, 1);
            const double d2 = dx * dx + dy * dy;
            if (d2 <= r2) hits.emplace_back(d2, i);
            if (d2 < nearest_d2) {
                nearest_d2 = d2;
                nearest = i;
            }
        }
        auto& group = out.idx[static_cast<std::size_t>(ci)];
        group.assign(static_cast<std::size_t>(K), 0);
        if (hits.empty()) {
            for (int k = 0; k < K; ++k) group[static_cast<std::size_t>(k)] = nearest;
            out.degenerate[static_cast<std::size_t>(ci)] = 1;
            continue;
        }
        std::sort(hits.begin(), hits.end(), [&](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first < b.first;
            return canonical ? pos_less(a.second, b.second) : a.second < b.second;
        });
        const int take = std::min<int>(K, static_cast<int>(hits.size()));
        out.in_radius[static_cast<std::size_t>(ci)] = take;
        for (int k = 0; k < take; ++k)
            group[static_cast<std::size_t>(k)] = hits[static_cast<std::size_t>(k)].second;
        for (int k = take; k < K; ++k)
            group[static_cast<std::size_t>(k)] = hits[0].second;  // pad with the nearest
    }
    return out;
}

/// Triangular cyclical learning rate: lr_min -> lr_max over half_cycle steps
/// and back, repeating with period 2 * half_cycle.
inline double cyclical_lr(long long step, double lr_min, double lr_max,
                          long long half_cycle_steps) {
    if (step < 0) throw ContractError("cyclical_lr: negative step");
    if (half_cycle_steps <= 0) throw ConfigError("cyclical_lr: half cycle must be positive");
    const long long period = 2 * half_cycle_steps;
    const long long phase = step % period;
    const double pos = phase <= half_cycle_steps
                           ? static_cast<double>(phase) / static_cast<double>(half_cycle_steps)
                           : static_cast<double>(period - phase) /
                                 static_cast<double>(half_cycle_steps);
    return lr_min + (lr_max - lr_min) * pos;
}

struct ClassWeights {
    double moving = 1.0;
    double clutter = 1.0;
    double stationary = 1.0;
};

/// Solve w_o*f_o = w_c*f_c and sum_i w_i*f_i = 1 for the stationary weight
/// fixed at w_stationary.
inline ClassWeights class_weights(double f_moving, double f_clutter, double f_stationary,
                                  double w_stationary = 0.6) {
    if (!(f_moving > 0.0 && f_clutter > 0.0 && f_stationary > 0.0))
        throw ContractError("class_weights: frequencies must be positive");
    if (std::abs(f_moving + f_clutter + f_stationary - 1.0) > 1e-6)
        throw ContractError("class_weights: frequencies must sum to 1");
    const double rem = 1.0 - w_stationary * f_stationary;
    if (rem <= 0.0)
        throw DomainError("class_weights: w_s * f_s >= 1, no positive solution");
    const double q = rem / 2.0;  // common value of w_o*f_o and w_c*f_c
    ClassWeights w;
    w.moving = q / f_moving;
    w.clutter = q / f_clutter;
    w.stationary = w_stationary;
    return w;
}

}  // namespace rct::net
