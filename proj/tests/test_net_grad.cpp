#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "rct/net/model.hpp"

using namespace rct;
using namespace rct::net;

namespace {

constexpr double kH = 1e-4;

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-4});
}

struct TestInput {
    Eigen::MatrixXd features;
    Eigen::MatrixXd pos;
    std::vector<int> labels;
    std::vector<char> mask;
};

TestInput random_input(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    TestInput in;
    in.pos.resize(n, 2);
    in.features.resize(n, kFeatureDim);
    in.labels.resize(static_cast<std::size_t>(n));
    in.mask.assign(static_cast<std::size_t>(n), 1);
    for (int i = 0; i < n; ++i) {
        in.pos(i, 0) = u(rng);
        in.pos(i, 1) = u(rng);
        for (int c = 0; c < kFeatureDim; ++c) in.features(i, c) = g(rng);
        in.labels[static_cast<std::size_t>(i)] = int(rng() % 3);
    }
    return in;
}

/// Max relative error between analytic gradients and central finite
/// differences of `loss_of(params)` over every parameter.
template <typename LossFn>
double max_fd_error(Eigen::VectorXd params, const Eigen::VectorXd& analytic, LossFn loss_of) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < params.size(); ++i) {
        const double keep = params[i];
        params[i] = keep + kH;
        const double up = loss_of(params);
        params[i] = keep - kH;
        const double down = loss_of(params);
        params[i] = keep;
        const double fd = (up - down) / (2.0 * kH);
        worst = std::max(worst, rel_err(fd, analytic[i]));
    }
    return worst;
}

}  // namespace

TEST_CASE("shared MLP gradients match finite differences") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0.0, 1.0);

    std::vector<LayerSpec> layers;
    std::size_t offset = 0;
    auto add = [&](int in, int out) {
        LayerSpec l;
        l.name = "L" + std::to_string(layers.size());
        l.in = in;
        l.out = out;
        l.w_offset = offset;
        offset += static_cast<std::size_t>(in * out);
        l.b_offset = offset;
        offset += static_cast<std::size_t>(out);
        layers.push_back(l);
    };
    add(5, 7);
    add(7, 4);
    add(4, 3);

    Eigen::VectorXd params(static_cast<Eigen::Index>(offset));
    for (Eigen::Index i = 0; i < params.size(); ++i) params[i] = 0.4 * g(rng);
    Eigen::MatrixXd x(9, 5);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
    Eigen::MatrixXd proj(9, 3);  // fixed projection makes the loss a scalar
    for (Eigen::Index i = 0; i < proj.size(); ++i) proj.data()[i] = g(rng);

    for (bool relu_last : {false, true}) {
        auto loss_of = [&](const Eigen::VectorXd& p) {
            return (mlp_forward(p, layers, x, relu_last, nullptr).array() * proj.array()).sum();
        };
        MlpTrace trace;
        mlp_forward(params, layers, x, relu_last, &trace);
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.size());
        mlp_backward(params, grad, layers, trace, proj, relu_last);
        CHECK(max_fd_error(params, grad, loss_of) < 1e-4);
    }
}

TEST_CASE("dead ReLU unit has exactly zero gradient") {
    std::vector<LayerSpec> layers;
    LayerSpec l0{"L0", 3, 2, 0, 6};
    LayerSpec l1{"L1", 2, 1, 8, 10};
    layers = {l0, l1};
    Eigen::VectorXd params(11);
    params << 0.3, -0.2, 0.5, 0.1, -0.4, 0.2,  // W0 (3x2)
        0.0, -100.0,                           // b0: unit 1 never activates
        0.7, 0.9,                              // W1
        0.0;                                   // b1
    Eigen::MatrixXd x(4, 3);
    x << 1, 0, 1, 0, 1, 0, 1, 1, 1, -1, 0.5, 0.25;

    MlpTrace trace;
    mlp_forward(params, layers, x, false, &trace);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(11);
    mlp_backward(params, grad, layers, trace, Eigen::MatrixXd::Ones(4, 1), false);

    // column of W0 feeding the dead unit, and its bias
    CHECK(grad[3] == 0.0);
    CHECK(grad[4] == 0.0);
    CHECK(grad[5] == 0.0);
    CHECK(grad[7] == 0.0);
    // the live path still has gradient
    CHECK(grad[0] != 0.0);
}

TEST_CASE("pooling and gather gradients match finite differences") {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> g(0.0, 1.0);
    const int n = 10, m = 3, K = 4, d = 5;

    Eigen::MatrixXd pos(n, 2), feat(n, d);
    for (Eigen::Index i = 0; i < pos.size(); ++i) pos.data()[i] = 3.0 * g(rng);
    for (Eigen::Index i = 0; i < feat.size(); ++i) feat.data()[i] = g(rng);
    Eigen::MatrixXd centers = pos.topRows(m);
    BallGroups groups = ball_query(pos, centers, 6.0, K);

    std::vector<LayerSpec> layers;
    LayerSpec l0{"L0", 2 + d, 6, 0, static_cast<std::size_t>((2 + d) * 6)};
    layers = {l0};
    const std::size_t total = static_cast<std::size_t>((2 + d) * 6 + 6);
    Eigen::VectorXd params(static_cast<Eigen::Index>(total));
    for (Eigen::Index i = 0; i < params.size(); ++i) params[i] = 0.5 * g(rng);
    Eigen::MatrixXd proj(m, 6);
    for (Eigen::Index i = 0; i < proj.size(); ++i) proj.data()[i] = g(rng);

    auto loss_of = [&](const Eigen::VectorXd& p) {
        Eigen::MatrixXd grouped = net::detail::gather_groups(pos, feat, centers, groups);
        Eigen::MatrixXd h = mlp_forward(p, layers, grouped, true, nullptr);
        std::vector<int> argmax;
        Eigen::MatrixXd pooled = net::detail::pool_max(h, m, K, argmax);
        return (pooled.array() * proj.array()).sum();
    };

    Eigen::MatrixXd grouped = net::detail::gather_groups(pos, feat, centers, groups);
    MlpTrace trace;
    Eigen::MatrixXd h = mlp_forward(params, layers, grouped, true, &trace);
    std::vector<int> argmax;
    net::detail::pool_max(h, m, K, argmax);
    Eigen::MatrixXd dh = net::detail::pool_max_backward(proj, m * K, K, argmax);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.size());
    mlp_backward(params, grad, layers, trace, dh, true);

    CHECK(max_fd_error(params, grad, loss_of) < 1e-4);
}

TEST_CASE("full model gradients match finite differences on a tiny config") {
    // fixture chosen clear of ReLU/max-pool kinks: the FD error scales as h^2
    // for h in [0.5e-4, 2e-4], so no boundary sits within probe reach
    const NetworkConfig cfg = tiny_b_config();
    Model model = init_model(cfg, 2003);
    TestInput in = random_input(cfg.input_points, 73);
    const SamplingPlan plan = make_plan(in.pos, cfg, 33);
    const std::array<double, 3> weights{1.4, 2.2, 0.6};
    const double gamma = 2.0;

    ForwardTrace trace;
    const Eigen::MatrixXd logits = forward(model, in.features, plan, &trace);
    const FocalResult fr = focal_loss(logits, in.labels, weights, gamma, in.mask);
    const Eigen::VectorXd grad = backward(model, plan, trace, fr.dlogits);

    auto loss_of = [&](const Eigen::VectorXd& p) {
        Model probe = model;
        probe.params = p;
        const Eigen::MatrixXd z = forward(probe, in.features, plan, nullptr);
        return focal_loss(z, in.labels, weights, gamma, in.mask).loss;
    };

    INFO("parameters: " << model.params.size());
    const double worst = max_fd_error(model.params, grad, loss_of);
    INFO("max relative error: " << worst);
    CHECK(worst < 1e-4);
}

TEST_CASE("gradients exist for gamma = 0 and masked points are excluded") {
    const NetworkConfig cfg = tiny_b_config();
    Model model = init_model(cfg, 2011);
    TestInput in = random_input(cfg.input_points, 81);
    for (std::size_t i = 8; i < in.mask.size(); ++i) in.mask[i] = 0;  // half masked out
    const SamplingPlan plan = make_plan(in.pos, cfg, 41);

    ForwardTrace trace;
    const Eigen::MatrixXd logits = forward(model, in.features, plan, &trace);
    const FocalResult fr = focal_loss(logits, in.labels, {1, 1, 1}, 0.0, in.mask);
    for (std::size_t i = 8; i < in.mask.size(); ++i)
        CHECK(fr.dlogits.row(static_cast<Eigen::Index>(i)).cwiseAbs().maxCoeff() == 0.0);

    const Eigen::VectorXd grad = backward(model, plan, trace, fr.dlogits);

    auto loss_of = [&](const Eigen::VectorXd& p) {
        Model probe = model;
        probe.params = p;
        return focal_loss(forward(probe, in.features, plan, nullptr), in.labels, {1, 1, 1}, 0.0,
                          in.mask)
            .loss;
    };
    CHECK(max_fd_error(model.params, grad, loss_of) < 1e-4);
}

TEST_CASE("gradients also match on a two-scale topology without preprocessing") {
    // exercises the variant-A path: no unit network, two grouping scales
    NetworkConfig cfg;
    cfg.variant = Variant::A;
    cfg.input_points = 16;
    cfg.sa_samples = {8, 4, 2};
    cfg.sa_radii = {{0.6, 1.2}, {1.0, 2.0}, {1.5, 3.0}};
    cfg.group_cap = 4;
    cfg.sa_mlp = {{{4, 8}, {4, 8}}, {{6, 8}, {6, 8}}, {{8, 8}, {8, 8}}};
    cfg.fp_mlp = {{8, 8}, {8, 6}, {6, 6}};
    cfg.preproc = {};
    Model model = init_model(cfg, 911);
    TestInput in = random_input(cfg.input_points, 83);
    const SamplingPlan plan = make_plan(in.pos, cfg, 51);
    const std::array<double, 3> weights{1.0, 1.0, 1.0};

    ForwardTrace trace;
    const Eigen::MatrixXd logits = forward(model, in.features, plan, &trace);
    const FocalResult fr = focal_loss(logits, in.labels, weights, 2.0, in.mask);
    const Eigen::VectorXd grad = backward(model, plan, trace, fr.dlogits);

    auto loss_of = [&](const Eigen::VectorXd& p) {
        Model probe = model;
        probe.params = p;
        return focal_loss(forward(probe, in.features, plan, nullptr), in.labels, weights, 2.0,
                          in.mask)
            .loss;
    };
    CHECK(max_fd_error(model.params, grad, loss_of) < 1e-4);
}

TEST_CASE("two backward calls on identical state produce identical gradients") {
    const NetworkConfig cfg = tiny_b_config();
    Model model = init_model(cfg, 8);
    TestInput in = random_input(cfg.input_points, 4);
    const SamplingPlan plan = make_plan(in.pos, cfg, 12);

    auto run = [&]() {
        ForwardTrace trace;
        const Eigen::MatrixXd logits = forward(model, in.features, plan, &trace);
        const FocalResult fr = focal_loss(logits, in.labels, {1.0, 2.0, 0.5}, 2.0, in.mask);
        return backward(model, plan, trace, fr.dlogits);
    };
    const Eigen::VectorXd a = run();
    const Eigen::VectorXd b = run();
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}
