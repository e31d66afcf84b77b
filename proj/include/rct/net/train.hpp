#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "rct/eval.hpp"
#include "rct/net/model.hpp"

// Training loop: shuffled epochs, gradient accumulation over a batch,
// adaptive first-order updates with the triangular learning-rate schedule,
// checkpoint callback after every epoch.

namespace rct::net {

/// One resampled cloud ready for the network. Features are standardized,
/// positions are metric. loss_mask marks non-replica points; eval_mask marks
/// latest-scan non-replica points.
struct TrainCloud {
    Eigen::MatrixXd features;
    Eigen::MatrixXd pos;
    std::vector<int> labels;
    std::vector<char> loss_mask;
    std::vector<char> eval_mask;
};

struct EpochLog {
    int epoch = 0;
    double mean_loss = 0.0;
    double lr_last = 0.0;
};

struct TrainResult {
    Model model;
    std::vector<EpochLog> log;
    long long global_steps = 0;
};

class Adam {
public:
    Adam(Eigen::Index n, double beta1, double beta2, double eps)
        : m_(Eigen::VectorXd::Zero(n)), v_(Eigen::VectorXd::Zero(n)), beta1_(beta1),
          beta2_(beta2), eps_(eps) {}

    void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr) {
        ++t_;
        m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
        v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        params.array() -=
            lr * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + eps_);
    }

private:
    Eigen::VectorXd m_, v_;
    double beta1_, beta2_, eps_;
    long long t_ = 0;
};

namespace detail {
inline std::string first_nonfinite_layer(const ModelShape& shape, const Eigen::VectorXd& grad) {
    for (const LayerSpec& l : shape.all_layers()) {
        for (std::size_t i = 0; i < l.size(); ++i)
            if (!std::isfinite(grad[static_cast<Eigen::Index>(l.w_offset + i)])) return l.name;
    }
    return "unknown";
}
}  // namespace detail

/// Train (or, with `resume_from`, continue training) a model. Checkpointing
/// is delegated to `on_epoch`, called with a snapshot after every epoch.
/// Deterministic given the seed.
inline TrainResult train(const std::vector<TrainCloud>& clouds, const NetworkConfig& netcfg,
                         const TrainConfig& cfg,
                         const std::function<void(const Model&, const EpochLog&)>& on_epoch = {},
                         const Model* resume_from = nullptr, int epochs_done = 0) {
    cfg.validate();
    netcfg.validate();
    if (clouds.empty()) throw ContractError("train: no training clouds");

    TrainResult result;
    if (resume_from) {
        if (resume_from->params.size() !=
            static_cast<Eigen::Index>(ModelShape(netcfg).param_count()))
            throw ContractError("train: resume checkpoint does not match the network config");
        result.model = *resume_from;
        result.model.config = netcfg;
    } else {
        result.model = init_model(netcfg, cfg.seed);
    }

    const ModelShape shape(netcfg);
    const long long steps_per_epoch =
        (static_cast<long long>(clouds.size()) + cfg.batch_size - 1) / cfg.batch_size;
    const long long half_cycle =
        cfg.half_cycle_steps > 0 ? cfg.half_cycle_steps : std::max<long long>(1, 2 * steps_per_epoch);

    Adam adam(result.model.params.size(), cfg.beta1, cfg.beta2, cfg.adam_eps);
    long long global_step = static_cast<long long>(epochs_done) * steps_per_epoch;

    const std::array<double, 3> weights{cfg.w_moving, cfg.w_clutter, cfg.w_stationary};
    std::vector<std::size_t> order(clouds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = epochs_done; epoch < epochs_done + cfg.epochs; ++epoch) {
        std::mt19937_64 shuffle_rng(detail::mix_seed(cfg.seed, 0xe70c * 1024 + static_cast<std::uint64_t>(epoch)));
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double epoch_loss = 0.0;
        double lr = cfg.lr_min;
        std::size_t cursor = 0;
        while (cursor < order.size()) {
            const std::size_t batch_end =
                std::min(order.size(), cursor + static_cast<std::size_t>(cfg.batch_size));
            const double inv_batch = 1.0 / static_cast<double>(batch_end - cursor);
            Eigen::VectorXd grad = Eigen::VectorXd::Zero(result.model.params.size());
            for (std::size_t b = cursor; b < batch_end; ++b) {
                const TrainCloud& cloud = clouds[order[b]];
                const SamplingPlan plan = make_plan(
                    cloud.pos, netcfg,
                    detail::mix_seed(cfg.seed, (static_cast<std::uint64_t>(epoch) << 24) ^
                                                   static_cast<std::uint64_t>(order[b])));
                ForwardTrace trace;
                const Eigen::MatrixXd logits = forward(result.model, cloud.features, plan, &trace);
                FocalResult fr =
                    focal_loss(logits, cloud.labels, weights, cfg.focal_gamma, cloud.loss_mask);
                if (!std::isfinite(fr.loss))
                    throw TrainingError("train: diverging loss at epoch " + std::to_string(epoch));
                epoch_loss += fr.loss;
                fr.dlogits *= inv_batch;
                grad += backward(result.model, plan, trace, fr.dlogits);
            }
            if (!grad.allFinite())
                throw TrainingError("train: non-finite gradient in layer " +
                                    detail::first_nonfinite_layer(shape, grad) + " at epoch " +
                                    std::to_string(epoch));
            lr = cyclical_lr(global_step, cfg.lr_min, cfg.lr_max, half_cycle);
            adam.step(result.model.params, grad, lr);
            ++global_step;
            cursor = batch_end;
        }

        EpochLog entry;
        entry.epoch = epoch;
        entry.mean_loss = epoch_loss / static_cast<double>(clouds.size());
        entry.lr_last = lr;
        result.log.push_back(entry);
        if (on_epoch) on_epoch(result.model, entry);
    }
    result.global_steps = global_step;
    return result;
}

/// Aggregate confusion/metrics of a model over a set of clouds, masked to
/// latest-scan non-replica points. Plans are seeded per cloud index, so the
/// evaluation is reproducible.
inline EvalReport evaluate(const Model& model, const std::vector<TrainCloud>& clouds,
                           std::uint64_t plan_seed = 0) {
    Confusion total{};
    for (std::size_t i = 0; i < clouds.size(); ++i) {
        const TrainCloud& cloud = clouds[i];
        const SamplingPlan plan =
            make_plan(cloud.pos, model.config, detail::mix_seed(plan_seed, i));
        const Eigen::MatrixXd logits = forward(model, cloud.features, plan, nullptr);
        const std::vector<Label> preds = argmax_labels(logits);
        std::vector<Label> truth(cloud.labels.size());
        for (std::size_t k = 0; k < cloud.labels.size(); ++k)
            truth[k] = static_cast<Label>(cloud.labels[k]);
        const Confusion c = confusion(preds, truth, cloud.eval_mask);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) total[a][b] += c[a][b];
    }
    return prf1(total);
}

}  // namespace rct::net
