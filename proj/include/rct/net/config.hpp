#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rct/core.hpp"

namespace rct::net {

enum class Variant { A, B };

inline const char* to_string(Variant v) { return v == Variant::A ? "A" : "B"; }

inline Variant variant_from_string(const std::string& s) {
    if (s == "A" || s == "a") return Variant::A;
    if (s == "B" || s == "b") return Variant::B;
    throw ConfigError("unknown variant: " + s);
}

/// Topology of a segmentation network: three set-abstraction levels with
/// multi-scale grouping, three feature-propagation levels, a per-point head.
/// Variant B prepends a per-point unit network and works on single scans.
struct NetworkConfig {
    Variant variant = Variant::B;
    int input_points = 330;
    std::vector<int> sa_samples;                        // per level, strictly decreasing
    std::vector<std::vector<double>> sa_radii;          // [level][scale], meters
    int group_cap = 32;                                 // K points per query ball
    std::vector<std::vector<std::vector<int>>> sa_mlp;  // [level][scale] -> widths
    std::vector<std::vector<int>> fp_mlp;               // [level] widths, deepest first
    int fp_k = 3;
    std::vector<int> preproc;      // unit network channels; empty = none (variant A)
    std::vector<int> head_hidden;  // hidden widths before the class logits
    int num_classes = 3;
    int feature_dim = 11;

    void validate() const {
        if (sa_samples.size() != 3 || sa_radii.size() != 3 || sa_mlp.size() != 3 ||
            fp_mlp.size() != 3)
            throw ConfigError("NetworkConfig: expected 3 SA and 3 FP levels");
        for (std::size_t l = 0; l < sa_samples.size(); ++l) {
            if (sa_samples[l] <= 0) throw ConfigError("NetworkConfig: sa_samples must be > 0");
            if (l > 0 && sa_samples[l] >= sa_samples[l - 1])
                throw ConfigError("NetworkConfig: sa_samples must be strictly decreasing");
            if (sa_radii[l].size() != sa_mlp[l].size() || sa_radii[l].empty())
                throw ConfigError("NetworkConfig: radii/mlp scale counts differ");
            for (std::size_t s = 0; s < sa_radii[l].size(); ++s) {
                if (!(sa_radii[l][s] > 0.0))
                    throw ConfigError("NetworkConfig: radii must be positive");
                if (s > 0 && sa_radii[l][s] <= sa_radii[l][s - 1])
                    throw ConfigError(
                        "NetworkConfig: radii must be strictly increasing across scales");
                if (sa_mlp[l][s].empty())
                    throw ConfigError("NetworkConfig: empty shared MLP");
            }
            if (fp_mlp[l].empty()) throw ConfigError("NetworkConfig: empty FP MLP");
        }
        if (sa_samples[0] > input_points)
            throw ConfigError("NetworkConfig: first SA level samples more than input_points");
        if (group_cap < 1) throw ConfigError("NetworkConfig: group_cap must be >= 1");
        if (fp_k < 1) throw ConfigError("NetworkConfig: fp_k must be >= 1");
        if (num_classes < 2) throw ConfigError("NetworkConfig: need at least 2 classes");
    }

    /// Channel width entering the first SA level (after the unit network).
    int base_channels() const { return preproc.empty() ? feature_dim : preproc.back(); }

    /// Concatenated output width of one SA level.
    int sa_out_channels(int level) const {
        int total = 0;
        for (const auto& widths : sa_mlp[static_cast<std::size_t>(level)]) total += widths.back();
        return total;
    }
};

/// Variant A: accumulated clouds of 1280 points, two grouping scales.
inline NetworkConfig variant_a_config() {
    NetworkConfig c;
    c.variant = Variant::A;
    c.input_points = 1280;
    c.sa_samples = {1024, 512, 256};
    c.sa_radii = {{1.0, 3.0}, {2.0, 5.0}, {4.0, 10.0}};
    c.sa_mlp = {{{32, 32, 64}, {32, 32, 64}},
                {{64, 64, 128}, {64, 64, 128}},
                {{128, 128, 256}, {128, 128, 256}}};
    c.fp_mlp = {{128, 128}, {128, 64}, {64, 64}};
    c.preproc = {};
    c.head_hidden = {};
    return c;
}

/// Variant B: single scans padded to 330 points, three grouping scales, unit
/// network preprocessing, halved SA widths.
inline NetworkConfig variant_b_config() {
    NetworkConfig c;
    c.variant = Variant::B;
    c.input_points = 330;
    c.sa_samples = {256, 128, 64};
    c.sa_radii = {{1.0, 3.0, 6.0}, {2.0, 4.0, 8.0}, {3.0, 6.0, 12.0}};
    c.sa_mlp = {{{16, 16, 32}, {16, 16, 32}, {16, 16, 32}},
                {{32, 32, 64}, {32, 32, 64}, {32, 32, 64}},
                {{64, 64, 128}, {64, 64, 128}, {64, 64, 128}}};
    c.fp_mlp = {{128, 128}, {128, 64}, {64, 64}};
    c.preproc = {64, 64, 32};
    c.head_hidden = {};
    return c;
}

/// Desk-scale variant B with reduced widths; architecture (samples, radii,
/// scale counts) unchanged.
inline NetworkConfig reduced_b_config() {
    NetworkConfig c = variant_b_config();
    c.group_cap = 8;
    c.preproc = {16, 16, 8};
    c.sa_mlp = {{{8, 8, 16}, {8, 8, 16}, {8, 8, 16}},
                {{8, 8, 16}, {8, 8, 16}, {8, 8, 16}},
                {{16, 16, 32}, {16, 16, 32}, {16, 16, 32}}};
    c.fp_mlp = {{32, 32}, {32, 16}, {16, 16}};
    return c;
}

/// Tiny variant-B topology for finite-difference gradient checks.
inline NetworkConfig tiny_b_config() {
    NetworkConfig c;
    c.variant = Variant::B;
    c.input_points = 16;
    c.sa_samples = {8, 4, 2};
    c.sa_radii = {{0.5, 1.0, 2.0}, {0.8, 1.6, 3.0}, {1.0, 2.0, 4.0}};
    c.group_cap = 4;
    c.sa_mlp = {{{4, 8}, {4, 8}, {4, 8}},
                {{6, 8}, {6, 8}, {6, 8}},
                {{8, 8}, {8, 8}, {8, 8}}};
    c.fp_mlp = {{8, 8}, {8, 6}, {6, 6}};
    c.preproc = {6, 4};
    c.head_hidden = {};
    return c;
}

struct TrainConfig {
    int epochs = 20;
    int batch_size = 1;
    double lr_min = 1e-9;
    double lr_max = 1e-3;
    long long half_cycle_steps = 0;  // 0: derived as two epochs of steps
    double focal_gamma = 2.0;
    double w_moving = 1.0;
    double w_clutter = 1.0;
    double w_stationary = 1.0;
    std::uint64_t seed = 1;
    // adaptive first-order updates, standard momentum defaults
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const {
        if (!(lr_min < lr_max)) throw ConfigError("TrainConfig: lr_min must be < lr_max");
        if (!(focal_gamma >= 0.0)) throw ConfigError("TrainConfig: gamma must be >= 0");
        if (!(w_moving > 0.0 && w_clutter > 0.0 && w_stationary > 0.0))
            throw ConfigError("TrainConfig: class weights must be positive");
        if (epochs < 0) throw ConfigError("TrainConfig: negative epochs");
        if (batch_size < 1) throw ConfigError("TrainConfig: batch_size must be >= 1");
    }
};

}  // namespace rct::net
