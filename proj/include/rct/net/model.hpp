#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rct/features.hpp"
#include "rct/net/config.hpp"
#include "rct/net/ops.hpp"

// The segmentation network: parameter store with a layer manifest, forward
// pass over a sampling plan, hand-derived reverse-mode gradients, focal loss.
//
// Geometry (FPS, ball queries, interpolation neighbors) lives in a
// SamplingPlan computed from the positions alone; parameters never move
// points, so a plan can be reused to replay a forward pass exactly.

namespace rct::net {

struct LayerSpec {
    std::string name;
    int in = 0;
    int out = 0;
    std::size_t w_offset = 0;
    std::size_t b_offset = 0;

    std::size_t size() const {
        return static_cast<std::size_t>(in) * static_cast<std::size_t>(out) +
               static_cast<std::size_t>(out);
    }
};

/// Fixed enumeration of every affine layer in the network, with offsets into
/// the flat parameter vector.
class ModelShape {
public:
    explicit ModelShape(const NetworkConfig& cfg) {
        cfg.validate();
        std::size_t offset = 0;
        auto add = [&](std::vector<LayerSpec>& dst, const std::string& name, int in, int out) {
            LayerSpec l;
            l.name = name;
            l.in = in;
            l.out = out;
            l.w_offset = offset;
            offset += static_cast<std::size_t>(in) * static_cast<std::size_t>(out);
            l.b_offset = offset;
            offset += static_cast<std::size_t>(out);
            dst.push_back(l);
        };

        int d = cfg.feature_dim;
        for (std::size_t k = 0; k < cfg.preproc.size(); ++k) {
            add(preproc_, "preproc." + std::to_string(k), d, cfg.preproc[k]);
            d = cfg.preproc[k];
        }
        level_channels_.push_back(d);  // h0

        sa_.resize(3);
        for (int l = 0; l < 3; ++l) {
            sa_[static_cast<std::size_t>(l)].resize(cfg.sa_mlp[static_cast<std::size_t>(l)].size());
            int out_total = 0;
            for (std::size_t s = 0; s < cfg.sa_mlp[static_cast<std::size_t>(l)].size(); ++s) {
                int cin = 2 + level_channels_.back();
                for (std::size_t k = 0; k < cfg.sa_mlp[static_cast<std::size_t>(l)][s].size(); ++k) {
                    const int cout = cfg.sa_mlp[static_cast<std::size_t>(l)][s][k];
                    add(sa_[static_cast<std::size_t>(l)][s],
                        "sa" + std::to_string(l) + ".scale" + std::to_string(s) + ".mlp" +
                            std::to_string(k),
                        cin, cout);
                    cin = cout;
                }
                out_total += cin;
            }
            level_channels_.push_back(out_total);  // h_{l+1}
        }

        fp_.resize(3);
        int carried = level_channels_[3];  // deepest features
        for (int j = 0; j < 3; ++j) {
            const int skip = level_channels_[static_cast<std::size_t>(2 - j)];
            int cin = carried + skip;
            for (std::size_t k = 0; k < cfg.fp_mlp[static_cast<std::size_t>(j)].size(); ++k) {
                const int cout = cfg.fp_mlp[static_cast<std::size_t>(j)][k];
                add(fp_[static_cast<std::size_t>(j)],
                    "fp" + std::to_string(j) + ".mlp" + std::to_string(k), cin, cout);
                cin = cout;
            }
            carried = cin;
        }

        int hin = carried;
        for (std::size_t k = 0; k < cfg.head_hidden.size(); ++k) {
            add(head_, "head.hidden" + std::to_string(k), hin, cfg.head_hidden[k]);
            hin = cfg.head_hidden[k];
        }
        add(head_, "head.out", hin, cfg.num_classes);

        total_ = offset;
    }

    const std::vector<LayerSpec>& preproc() const { return preproc_; }
    const std::vector<LayerSpec>& sa(int level, int scale) const {
        return sa_[static_cast<std::size_t>(level)][static_cast<std::size_t>(scale)];
    }
    const std::vector<LayerSpec>& fp(int level) const {
        return fp_[static_cast<std::size_t>(level)];
    }
    const std::vector<LayerSpec>& head() const { return head_; }
    std::size_t param_count() const { return total_; }

    /// Feature width entering level l (h0..h3 for l = 0..3).
    int channels(int level) const { return level_channels_[static_cast<std::size_t>(level)]; }

    std::vector<LayerSpec> all_layers() const {
        std::vector<LayerSpec> out = preproc_;
        for (const auto& level : sa_)
            for (const auto& scale : level) out.insert(out.end(), scale.begin(), scale.end());
        for (const auto& level : fp_) out.insert(out.end(), level.begin(), level.end());
        out.insert(out.end(), head_.begin(), head_.end());
        return out;
    }

private:
    std::vector<LayerSpec> preproc_;
    std::vector<std::vector<std::vector<LayerSpec>>> sa_;
    std::vector<std::vector<LayerSpec>> fp_;
    std::vector<LayerSpec> head_;
    std::vector<int> level_channels_;
    std::size_t total_ = 0;
};

inline std::size_t param_count(const NetworkConfig& cfg) { return ModelShape(cfg).param_count(); }

struct Model {
    NetworkConfig config;
    Eigen::VectorXd params;
    Standardizer standardizer;
};

/// He-normal weights, drawn in manifest order. Biases start at a small
/// positive constant so no pre-activation sits exactly on the ReLU kink.
inline Model init_model(const NetworkConfig& cfg, std::uint64_t seed) {
    ModelShape shape(cfg);
    Model m;
    m.config = cfg;
    m.params = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(shape.param_count()));
    std::mt19937_64 rng(seed);
    for (const LayerSpec& l : shape.all_layers()) {
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(l.in)));
        double* w = m.params.data() + l.w_offset;
        for (int i = 0; i < l.in * l.out; ++i) w[i] = dist(rng);
        double* b = m.params.data() + l.b_offset;
        for (int i = 0; i < l.out; ++i) b[i] = 0.01;
    }
    return m;
}

// ---------------------------------------------------------------------------
// Shared MLP (per-point affine + ReLU stack)
// ---------------------------------------------------------------------------

struct MlpTrace {
    std::vector<Eigen::MatrixXd> acts;  // acts[0] = input, acts[k+1] = layer k output
};

inline Eigen::Map<const Eigen::MatrixXd> weight_of(const Eigen::VectorXd& params,
                                                   const LayerSpec& l) {
    return {params.data() + l.w_offset, l.in, l.out};
}

inline Eigen::Map<const Eigen::VectorXd> bias_of(const Eigen::VectorXd& params,
                                                 const LayerSpec& l) {
    return {params.data() + l.b_offset, l.out};
}

inline Eigen::MatrixXd mlp_forward(const Eigen::VectorXd& params,
                                   const std::vector<LayerSpec>& layers, Eigen::MatrixXd x,
                                   bool relu_last, MlpTrace* trace) {
    if (trace) {
        trace->acts.clear();
        trace->acts.push_back(x);
    }
    for (std::size_t k = 0; k < layers.size(); ++k) {
        Eigen::MatrixXd y = x * weight_of(params, layers[k]);
        y.rowwise() += bias_of(params, layers[k]).transpose();
        if (relu_last || k + 1 < layers.size()) y = y.cwiseMax(0.0);
        x = std::move(y);
        if (trace) trace->acts.push_back(x);
    }
    return x;
}

/// Accumulates parameter gradients into `grad` and returns the gradient with
/// respect to the MLP input.
inline Eigen::MatrixXd mlp_backward(const Eigen::VectorXd& params, Eigen::VectorXd& grad,
                                    const std::vector<LayerSpec>& layers, const MlpTrace& trace,
                                    Eigen::MatrixXd dout, bool relu_last) {
    for (int k = static_cast<int>(layers.size()) - 1; k >= 0; --k) {
        const LayerSpec& l = layers[static_cast<std::size_t>(k)];
        const bool relu = relu_last || k + 1 < static_cast<int>(layers.size());
        if (relu) {
            const Eigen::MatrixXd& post = trace.acts[static_cast<std::size_t>(k) + 1];
            dout = dout.cwiseProduct((post.array() > 0.0).cast<double>().matrix());
        }
        Eigen::Map<Eigen::MatrixXd> wg(grad.data() + l.w_offset, l.in, l.out);
        wg.noalias() += trace.acts[static_cast<std::size_t>(k)].transpose() * dout;
        Eigen::Map<Eigen::VectorXd> bg(grad.data() + l.b_offset, l.out);
        bg.noalias() += dout.colwise().sum().transpose();
        dout = dout * weight_of(params, l).transpose();
    }
    return dout;
}

// ---------------------------------------------------------------------------
// Sampling plan
// ---------------------------------------------------------------------------

struct FpInterp {
    std::vector<std::array<int, 3>> idx;
    std::vector<std::array<double, 3>> w;
};

struct SamplingPlan {
    std::vector<std::vector<int>> sa_index;       // [level] rows of the previous level
    std::vector<std::vector<BallGroups>> groups;  // [level][scale]
    std::vector<FpInterp> fp;                     // [level], deepest first
    std::vector<Eigen::MatrixXd> level_pos;       // positions per level (0 = input)
};

namespace detail {
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
}  // namespace detail

/// 3-nearest-neighbor inverse-distance-squared interpolation weights from
/// `coarse` to `fine` positions. Exact coincidences copy (average when
/// several coarse points coincide with the fine point).
inline FpInterp knn_interp(const Eigen::MatrixXd& coarse, const Eigen::MatrixXd& fine, int k) {
    const int nc = static_cast<int>(coarse.rows());
    const int nf = static_cast<int>(fine.rows());
    const int kk = std::min(k, nc);
    FpInterp out;
    out.idx.resize(static_cast<std::size_t>(nf), {0, 0, 0});
    out.w.resize(static_cast<std::size_t>(nf), {0.0, 0.0, 0.0});

    std::vector<std::pair<double, int>> d(static_cast<std::size_t>(nc));
    for (int i = 0; i < nf; ++i) {
        for (int j = 0; j < nc; ++j) {
            const double dx = coarse(j, 0) - fine(i, 0);
            const double dy = coarse(j, 1) - fine(i, 1);
            d[static_cast<std::size_t>(j)] = {dx * dx + dy * dy, j};
        }
        std::partial_sort(d.begin(), d.begin() + kk, d.end());
        auto& idx = out.idx[static_cast<std::size_t>(i)];
        auto& w = out.w[static_cast<std::size_t>(i)];
        int coincident = 0;
        for (int t = 0; t < kk; ++t)
            if (d[static_cast<std::size_t>(t)].first == 0.0) ++coincident;
        if (coincident > 0) {
            for (int t = 0; t < kk; ++t) {
                idx[static_cast<std::size_t>(t)] = d[static_cast<std::size_t>(t)].second;
                w[static_cast<std::size_t>(t)] =
                    d[static_cast<std::size_t>(t)].first == 0.0 ? 1.0 / coincident : 0.0;
            }
        } else {
            double total = 0.0;
            for (int t = 0; t < kk; ++t) total += 1.0 / d[static_cast<std::size_t>(t)].first;
            for (int t = 0; t < kk; ++t) {
                idx[static_cast<std::size_t>(t)] = d[static_cast<std::size_t>(t)].second;
                w[static_cast<std::size_t>(t)] =
                    (1.0 / d[static_cast<std::size_t>(t)].first) / total;
            }
        }
        for (int t = kk; t < 3; ++t) idx[static_cast<std::size_t>(t)] = idx[0];
    }
    return out;
}

inline SamplingPlan make_plan(const Eigen::MatrixXd& pos, const NetworkConfig& cfg,
                              std::uint64_t seed, bool canonical = false) {
    cfg.validate();
    if (pos.rows() < cfg.sa_samples[0])
        throw ContractError("make_plan: cloud of " + std::to_string(pos.rows()) +
                            " points is smaller than the first SA level (" +
                            std::to_string(cfg.sa_samples[0]) + ")");
    SamplingPlan plan;
    plan.level_pos.push_back(pos);
    plan.sa_index.resize(3);
    plan.groups.resize(3);
    for (int l = 0; l < 3; ++l) {
        const Eigen::MatrixXd& prev = plan.level_pos.back();
        auto idx = farthest_point_sample(prev, cfg.sa_samples[static_cast<std::size_t>(l)],
                                         detail::mix_seed(seed, static_cast<std::uint64_t>(l)),
                                         canonical);
        Eigen::MatrixXd centers(static_cast<Eigen::Index>(idx.size()), 2);
        for (std::size_t i = 0; i < idx.size(); ++i) centers.row(static_cast<Eigen::Index>(i)) = prev.row(idx[i]);
        plan.sa_index[static_cast<std::size_t>(l)] = std::move(idx);
        for (double radius : cfg.sa_radii[static_cast<std::size_t>(l)])
            plan.groups[static_cast<std::size_t>(l)].push_back(
                ball_query(prev, centers, radius, cfg.group_cap, canonical));
        plan.level_pos.push_back(std::move(centers));
    }
    plan.fp.resize(3);
    for (int j = 0; j < 3; ++j)
        plan.fp[static_cast<std::size_t>(j)] =
            knn_interp(plan.level_pos[static_cast<std::size_t>(3 - j)],
                       plan.level_pos[static_cast<std::size_t>(2 - j)], cfg.fp_k);
    return plan;
}

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

struct SaScaleTrace {
    MlpTrace mlp;
    std::vector<int> argmax;  // per (center, channel): row in the group matrix
};

struct ForwardTrace {
    MlpTrace preproc;
    std::vector<std::vector<SaScaleTrace>> sa;  // [level][scale]
    std::vector<Eigen::MatrixXd> level_feats;   // h0..h3
    std::vector<MlpTrace> fp;                   // [level]
    MlpTrace head;
};

namespace detail {

inline Eigen::MatrixXd gather_groups(const Eigen::MatrixXd& pos_prev,
                                     const Eigen::MatrixXd& feat_prev,
                                     const Eigen::MatrixXd& centers, const BallGroups& g) {
    const int m = static_cast<int>(centers.rows());
    const int K = g.group_cap;
    const int d = static_cast<int>(feat_prev.cols());
    Eigen::MatrixXd out(static_cast<Eigen::Index>(m) * K, 2 + d);
    for (int c = 0; c < m; ++c) {
        const auto& group = g.idx[static_cast<std::size_t>(c)];
        for (int k = 0; k < K; ++k) {
            const int j = group[static_cast<std::size_t>(k)];
            const Eigen::Index row = static_cast<Eigen::Index>(c) * K + k;
            out(row, 0) = pos_prev(j, 0) - centers(c, 0);
            out(row, 1) = pos_prev(j, 1) - centers(c, 1);
            out.row(row).tail(d) = feat_prev.row(j);
        }
    }
    return out;
}

inline void gather_backward(const Eigen::MatrixXd& dgroups, const BallGroups& g,
                            Eigen::MatrixXd& dfeat_prev) {
    const int K = g.group_cap;
    const int d = static_cast<int>(dfeat_prev.cols());
    for (std::size_t c = 0; c < g.idx.size(); ++c) {
        for (int k = 0; k < K; ++k) {
            const int j = g.idx[c][static_cast<std::size_t>(k)];
            const Eigen::Index row = static_cast<Eigen::Index>(c) * K + k;
            dfeat_prev.row(j) += dgroups.row(row).tail(d);
        }
    }
}

inline Eigen::MatrixXd pool_max(const Eigen::MatrixXd& h, int m, int K,
                                std::vector<int>& argmax) {
    const int w = static_cast<int>(h.cols());
    Eigen::MatrixXd out(m, w);
    argmax.assign(static_cast<std::size_t>(m) * static_cast<std::size_t>(w), 0);
    for (int c = 0; c < m; ++c) {
        for (int j = 0; j < w; ++j) {
            double best = h(static_cast<Eigen::Index>(c) * K, j);
            int best_row = c * K;
            for (int k = 1; k < K; ++k) {
                const double v = h(static_cast<Eigen::Index>(c) * K + k, j);
                if (v > best) {
                    best = v;
                    best_row = c * K + k;
                }
            }
            out(c, j) = best;
            argmax[static_cast<std::size_t>(c) * static_cast<std::size_t>(w) +
                   static_cast<std::size_t>(j)] = best_row;
        }
    }
    return out;
}

inline Eigen::MatrixXd pool_max_backward(const Eigen::MatrixXd& dpool, int rows, int K,
                                         const std::vector<int>& argmax) {
    const int w = static_cast<int>(dpool.cols());
    Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(rows, w);
    for (int c = 0; c < static_cast<int>(dpool.rows()); ++c)
        for (int j = 0; j < w; ++j)
            dh(argmax[static_cast<std::size_t>(c) * static_cast<std::size_t>(w) +
                      static_cast<std::size_t>(j)],
               j) += dpool(c, j);
    return dh;
}

inline Eigen::MatrixXd interp_forward(const Eigen::MatrixXd& coarse_feat, const FpInterp& fp) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(fp.idx.size()),
                                                coarse_feat.cols());
    for (std::size_t i = 0; i < fp.idx.size(); ++i)
        for (int t = 0; t < 3; ++t)
            if (fp.w[i][static_cast<std::size_t>(t)] != 0.0)
                out.row(static_cast<Eigen::Index>(i)) +=
                    fp.w[i][static_cast<std::size_t>(t)] *
                    coarse_feat.row(fp.idx[i][static_cast<std::size_t>(t)]);
    return out;
}

inline void interp_backward(const Eigen::MatrixXd& dfine, const FpInterp& fp,
                            Eigen::MatrixXd& dcoarse) {
    for (std::size_t i = 0; i < fp.idx.size(); ++i)
        for (int t = 0; t < 3; ++t)
            if (fp.w[i][static_cast<std::size_t>(t)] != 0.0)
                dcoarse.row(fp.idx[i][static_cast<std::size_t>(t)]) +=
                    fp.w[i][static_cast<std::size_t>(t)] * dfine.row(static_cast<Eigen::Index>(i));
}

}  // namespace detail

/// Per-point class logits for a cloud. `features` are standardized rows,
/// `plan` fixes all sampling decisions. Pass a trace to enable backward().
inline Eigen::MatrixXd forward(const Model& model, const Eigen::MatrixXd& features,
                               const SamplingPlan& plan, ForwardTrace* trace) {
    const NetworkConfig& cfg = model.config;
    if (features.cols() != cfg.feature_dim)
        throw ContractError("forward: feature matrix must have " +
                            std::to_string(cfg.feature_dim) + " columns");
    if (features.rows() != plan.level_pos[0].rows())
        throw ContractError("forward: features and plan positions disagree");
    const ModelShape shape(cfg);

    ForwardTrace local;
    ForwardTrace& tr = trace ? *trace : local;
    tr.sa.assign(3, {});
    tr.fp.assign(3, {});
    tr.level_feats.clear();

    Eigen::MatrixXd h = cfg.preproc.empty()
                            ? features
                            : mlp_forward(model.params, shape.preproc(), features, true,
                                          trace ? &tr.preproc : nullptr);
    tr.level_feats.push_back(h);

    for (int l = 0; l < 3; ++l) {
        const Eigen::MatrixXd& pos_prev = plan.level_pos[static_cast<std::size_t>(l)];
        const Eigen::MatrixXd& centers = plan.level_pos[static_cast<std::size_t>(l) + 1];
        const int m = static_cast<int>(centers.rows());
        Eigen::MatrixXd level_out;
        for (std::size_t s = 0; s < plan.groups[static_cast<std::size_t>(l)].size(); ++s) {
            const BallGroups& g = plan.groups[static_cast<std::size_t>(l)][s];
            Eigen::MatrixXd grouped = detail::gather_groups(pos_prev, h, centers, g);
            SaScaleTrace scale_trace;
            Eigen::MatrixXd hidden =
                mlp_forward(model.params, shape.sa(l, static_cast<int>(s)), std::move(grouped),
                            true, trace ? &scale_trace.mlp : nullptr);
            std::vector<int> argmax;
            Eigen::MatrixXd pooled = detail::pool_max(hidden, m, g.group_cap, argmax);
            if (trace) {
                scale_trace.argmax = std::move(argmax);
                tr.sa[static_cast<std::size_t>(l)].push_back(std::move(scale_trace));
            }
            if (level_out.size() == 0) {
                level_out = std::move(pooled);
            } else {
                Eigen::MatrixXd joined(m, level_out.cols() + pooled.cols());
                joined << level_out, pooled;
                level_out = std::move(joined);
            }
        }
        h = std::move(level_out);
        tr.level_feats.push_back(h);
    }

    // feature propagation back to the input resolution
    Eigen::MatrixXd carried = tr.level_feats[3];
    for (int j = 0; j < 3; ++j) {
        const Eigen::MatrixXd interp =
            detail::interp_forward(carried, plan.fp[static_cast<std::size_t>(j)]);
        const Eigen::MatrixXd& skip = tr.level_feats[static_cast<std::size_t>(2 - j)];
        Eigen::MatrixXd joined(interp.rows(), interp.cols() + skip.cols());
        joined << interp, skip;
        carried = mlp_forward(model.params, shape.fp(j), std::move(joined), true,
                              trace ? &tr.fp[static_cast<std::size_t>(j)] : nullptr);
    }

    return mlp_forward(model.params, shape.head(), std::move(carried), false,
                       trace ? &tr.head : nullptr);
}

/// Reverse-mode gradients of every parameter given dL/dlogits. Returns a
/// vector aligned with model.params.
inline Eigen::VectorXd backward(const Model& model, const SamplingPlan& plan,
                                const ForwardTrace& trace, const Eigen::MatrixXd& dlogits) {
    const NetworkConfig& cfg = model.config;
    const ModelShape shape(cfg);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(model.params.size());

    // head
    Eigen::MatrixXd dcarried =
        mlp_backward(model.params, grad, shape.head(), trace.head, dlogits, false);

    // FP levels in reverse order; accumulate gradients for h0..h3
    std::vector<Eigen::MatrixXd> dh(4);
    for (int i = 0; i < 4; ++i)
        dh[static_cast<std::size_t>(i)] = Eigen::MatrixXd::Zero(
            trace.level_feats[static_cast<std::size_t>(i)].rows(),
            trace.level_feats[static_cast<std::size_t>(i)].cols());

    for (int j = 2; j >= 0; --j) {
        Eigen::MatrixXd dconcat = mlp_backward(model.params, grad, shape.fp(j),
                                               trace.fp[static_cast<std::size_t>(j)],
                                               std::move(dcarried), true);
        const int skip_level = 2 - j;
        const Eigen::Index skip_cols = trace.level_feats[static_cast<std::size_t>(skip_level)].cols();
        const Eigen::Index interp_cols = dconcat.cols() - skip_cols;
        dh[static_cast<std::size_t>(skip_level)] += dconcat.rightCols(skip_cols);
        // interpolated part flows to the carried features of the level above,
        // which live on level (3 - j) points
        if (j == 0) {
            detail::interp_backward(dconcat.leftCols(interp_cols), plan.fp[0], dh[3]);
        } else {
            Eigen::MatrixXd dprev = Eigen::MatrixXd::Zero(
                plan.level_pos[static_cast<std::size_t>(3 - j)].rows(), interp_cols);
            detail::interp_backward(dconcat.leftCols(interp_cols),
                                    plan.fp[static_cast<std::size_t>(j)], dprev);
            dcarried = std::move(dprev);
        }
    }

    // SA levels, deepest first
    for (int l = 2; l >= 0; --l) {
        const Eigen::MatrixXd& pooled_grad = dh[static_cast<std::size_t>(l) + 1];
        Eigen::Index col = 0;
        for (std::size_t s = 0; s < plan.groups[static_cast<std::size_t>(l)].size(); ++s) {
            const BallGroups& g = plan.groups[static_cast<std::size_t>(l)][s];
            const SaScaleTrace& st = trace.sa[static_cast<std::size_t>(l)][s];
            const Eigen::Index w = st.mlp.acts.back().cols();
            const int m = static_cast<int>(plan.level_pos[static_cast<std::size_t>(l) + 1].rows());
            Eigen::MatrixXd dpool = pooled_grad.middleCols(col, w);
            col += w;
            Eigen::MatrixXd dhidden = detail::pool_max_backward(
                dpool, m * g.group_cap, g.group_cap, st.argmax);
            Eigen::MatrixXd dgroups = mlp_backward(model.params, grad,
                                                   shape.sa(l, static_cast<int>(s)), st.mlp,
                                                   std::move(dhidden), true);
            detail::gather_backward(dgroups, g, dh[static_cast<std::size_t>(l)]);
        }
    }

    if (!cfg.preproc.empty())
        mlp_backward(model.params, grad, shape.preproc(), trace.preproc, dh[0], true);

    return grad;
}

// ---------------------------------------------------------------------------
// Focal loss
// ---------------------------------------------------------------------------

struct FocalResult {
    double loss = 0.0;
    Eigen::MatrixXd dlogits;
    long long masked = 0;
};

/// Mean over masked points of -w_label * (1 - p_t)^gamma * log(p_t).
/// gamma = 0 reduces to weighted cross-entropy.
inline FocalResult focal_loss(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                              const std::array<double, 3>& weights, double gamma,
                              const std::vector<char>& mask) {
    const Eigen::Index n = logits.rows();
    const Eigen::Index c = logits.cols();
    if (static_cast<Eigen::Index>(labels.size()) != n ||
        static_cast<Eigen::Index>(mask.size()) != n)
        throw ContractError("focal_loss: labels/mask length mismatch");

    long long m_count = 0;
    for (char e : mask) m_count += e ? 1 : 0;
    if (m_count == 0) throw ContractError("focal_loss: empty mask");

    FocalResult r;
    r.masked = m_count;
    r.dlogits = Eigen::MatrixXd::Zero(n, c);
    const double inv_m = 1.0 / static_cast<double>(m_count);

    for (Eigen::Index i = 0; i < n; ++i) {
        if (!mask[static_cast<std::size_t>(i)]) continue;
        const int t = labels[static_cast<std::size_t>(i)];
        if (t < 0 || t >= c) throw DataError("focal_loss: label out of range");
        const double w = weights[static_cast<std::size_t>(t)];

        const double zmax = logits.row(i).maxCoeff();
        double sum = 0.0;
        for (Eigen::Index k = 0; k < c; ++k) sum += std::exp(logits(i, k) - zmax);
        const double lse = zmax + std::log(sum);
        const double logp_t = logits(i, t) - lse;
        const double p_t = std::exp(logp_t);
        const double om = 1.0 - p_t;

        double coef;  // shared factor of the gradient
        if (om < 1e-15) {
            coef = 0.0;  // fully confident and correct: no loss, no gradient
        } else {
            const double pow_g = std::pow(om, gamma);
            r.loss += -w * pow_g * logp_t * inv_m;
            coef = w * (pow_g - gamma * p_t * (pow_g / om) * logp_t);
        }
        for (Eigen::Index k = 0; k < c; ++k) {
            const double p_k = std::exp(logits(i, k) - lse);
            const double delta = (k == t) ? 1.0 : 0.0;
            r.dlogits(i, k) = coef * (p_k - delta) * inv_m;
        }
    }
    return r;
}

/// Convenience inference path: plan + forward, argmax labels.
inline Eigen::MatrixXd predict_logits(const Model& model, const Eigen::MatrixXd& features_std,
                                      const Eigen::MatrixXd& pos, std::uint64_t plan_seed) {
    const SamplingPlan plan = make_plan(pos, model.config, plan_seed);
    return forward(model, features_std, plan, nullptr);
}

inline std::vector<Label> argmax_labels(const Eigen::MatrixXd& logits) {
    std::vector<Label> out(static_cast<std::size_t>(logits.rows()));
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        Eigen::Index k = 0;
        logits.row(i).maxCoeff(&k);
        out[static_cast<std::size_t>(i)] = static_cast<Label>(static_cast<int>(k));
    }
    return out;
}

}  // namespace rct::net
