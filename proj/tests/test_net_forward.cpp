#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "rct/net/model.hpp"

using namespace rct;
using namespace rct::net;

namespace {

struct TestInput {
    Eigen::MatrixXd features;
    Eigen::MatrixXd pos;
};

TestInput random_input(int n, std::uint64_t seed, double box = 8.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(-box, box);
    TestInput in;
    in.pos.resize(n, 2);
    in.features.resize(n, kFeatureDim);
    for (int i = 0; i < n; ++i) {
        in.pos(i, 0) = u(rng);
        in.pos(i, 1) = u(rng);
        for (int c = 0; c < kFeatureDim; ++c) in.features(i, c) = g(rng);
        in.features(i, 0) = in.pos(i, 0);
        in.features(i, 1) = in.pos(i, 1);
    }
    return in;
}

}  // namespace

TEST_CASE("parameter count is a pure function of the config") {
    const NetworkConfig cfg = tiny_b_config();
    CHECK(param_count(cfg) == param_count(cfg));
    Model a = init_model(cfg, 1), b = init_model(cfg, 2);
    CHECK(a.params.size() == b.params.size());
    CHECK(a.params != b.params);  // different seeds, different draws
    Model c = init_model(cfg, 1);
    CHECK(a.params == c.params);
}

TEST_CASE("forward output shape and determinism") {
    const NetworkConfig cfg = tiny_b_config();
    const Model model = init_model(cfg, 7);
    TestInput in = random_input(16, 99);
    const SamplingPlan plan = make_plan(in.pos, cfg, 5);
    const Eigen::MatrixXd logits = forward(model, in.features, plan, nullptr);
    CHECK(logits.rows() == 16);
    CHECK(logits.cols() == 3);
    const Eigen::MatrixXd again = forward(model, in.features, plan, nullptr);
    CHECK((logits - again).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("all points identical gives identical logit rows") {
    const NetworkConfig cfg = tiny_b_config();
    const Model model = init_model(cfg, 3);
    TestInput in = random_input(16, 4);
    for (int i = 1; i < 16; ++i) {
        in.pos.row(i) = in.pos.row(0);
        in.features.row(i) = in.features.row(0);
    }
    const SamplingPlan plan = make_plan(in.pos, cfg, 11);
    const Eigen::MatrixXd logits = forward(model, in.features, plan, nullptr);
    for (int i = 1; i < 16; ++i)
        CHECK((logits.row(i) - logits.row(0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("single point, single scale, identity MLP reduces to relu of recentered input") {
    // gathered row = [0, 0, features]; identity weights pass it through the
    // nonlinearity; pooling over one member is the member itself
    Eigen::MatrixXd pos(1, 2);
    pos << 4.0, -2.0;
    Eigen::MatrixXd feat(1, 3);
    feat << 0.5, -1.5, 2.0;

    BallGroups g;
    g.group_cap = 1;
    g.idx = {{0}};
    g.in_radius = {1};
    g.degenerate = {0};

    Eigen::MatrixXd grouped = net::detail::gather_groups(pos, feat, pos, g);
    REQUIRE(grouped.rows() == 1);
    REQUIRE(grouped.cols() == 5);
    CHECK(grouped(0, 0) == 0.0);
    CHECK(grouped(0, 1) == 0.0);

    LayerSpec identity;
    identity.name = "t";
    identity.in = 5;
    identity.out = 5;
    identity.w_offset = 0;
    identity.b_offset = 25;
    Eigen::VectorXd params = Eigen::VectorXd::Zero(30);
    Eigen::Map<Eigen::MatrixXd>(params.data(), 5, 5).setIdentity();

    Eigen::MatrixXd out = mlp_forward(params, {identity}, grouped, true, nullptr);
    std::vector<int> argmax;
    Eigen::MatrixXd pooled = net::detail::pool_max(out, 1, 1, argmax);
    CHECK(pooled(0, 0) == 0.0);
    CHECK(pooled(0, 1) == 0.0);
    CHECK(pooled(0, 2) == 0.5);   // relu passes positives
    CHECK(pooled(0, 3) == 0.0);   // relu clips negatives
    CHECK(pooled(0, 4) == 2.0);
}

TEST_CASE("pooled group feature is invariant to member order") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::MatrixXd h(8, 5);
    for (Eigen::Index i = 0; i < h.rows(); ++i)
        for (Eigen::Index j = 0; j < h.cols(); ++j) h(i, j) = g(rng);

    std::vector<int> argmax;
    Eigen::MatrixXd pooled = net::detail::pool_max(h, 2, 4, argmax);

    // permute rows within each group of 4
    Eigen::MatrixXd hp(8, 5);
    const int perm[4] = {2, 0, 3, 1};
    for (int c = 0; c < 2; ++c)
        for (int k = 0; k < 4; ++k) hp.row(c * 4 + k) = h.row(c * 4 + perm[k]);
    Eigen::MatrixXd pooled_p = net::detail::pool_max(hp, 2, 4, argmax);
    CHECK((pooled - pooled_p).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("interpolation weights") {
    SECTION("inverse squared distances (1, 2, 2) give weights (4/6, 1/6, 1/6)") {
        Eigen::MatrixXd coarse(3, 2);
        coarse << 1.0, 0.0, 0.0, 2.0, 0.0, -2.0;
        Eigen::MatrixXd fine(1, 2);
        fine << 0.0, 0.0;
        FpInterp fp = knn_interp(coarse, fine, 3);
        CHECK(fp.w[0][0] == Catch::Approx(4.0 / 6.0));
        CHECK(fp.w[0][1] == Catch::Approx(1.0 / 6.0));
        CHECK(fp.w[0][2] == Catch::Approx(1.0 / 6.0));
        CHECK(fp.idx[0][0] == 0);
    }
    SECTION("coincident coarse point copies exactly") {
        Eigen::MatrixXd coarse(3, 2);
        coarse << 5.0, 5.0, 1.0, 0.0, 0.0, 1.0;
        Eigen::MatrixXd fine(1, 2);
        fine << 5.0, 5.0;
        FpInterp fp = knn_interp(coarse, fine, 3);
        Eigen::MatrixXd cf(3, 4);
        cf.setRandom();
        Eigen::MatrixXd out = net::detail::interp_forward(cf, fp);
        CHECK((out.row(0) - cf.row(0)).cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("two equidistant coarse points average") {
        Eigen::MatrixXd coarse(2, 2);
        coarse << 1.0, 0.0, -1.0, 0.0;
        Eigen::MatrixXd fine(1, 2);
        fine << 0.0, 0.0;
        FpInterp fp = knn_interp(coarse, fine, 3);
        Eigen::MatrixXd cf(2, 3);
        cf << 1.0, 2.0, 3.0, 5.0, 6.0, 7.0;
        Eigen::MatrixXd out = net::detail::interp_forward(cf, fp);
        CHECK(out(0, 0) == Catch::Approx(3.0));
        CHECK(out(0, 1) == Catch::Approx(4.0));
        CHECK(out(0, 2) == Catch::Approx(5.0));
    }
}

TEST_CASE("focal loss values") {
    SECTION("perfect confidence gives zero loss") {
        Eigen::MatrixXd logits(2, 3);
        logits << 1000.0, 0.0, 0.0, 0.0, 1000.0, 0.0;
        auto r = focal_loss(logits, {0, 1}, {1.0, 1.0, 1.0}, 2.0, {1, 1});
        CHECK(r.loss == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("one point, p_t = 0.5, w = 2, gamma = 2") {
        // two-class-like setup inside three logits: make p(class 0) = 0.5 by
        // giving the two other classes equal mass
        Eigen::MatrixXd logits(1, 3);
        const double delta = std::log(2.0);
        logits << delta, 0.0, 0.0;  // softmax = (0.5, 0.25, 0.25)
        auto r = focal_loss(logits, {0}, {2.0, 1.0, 1.0}, 2.0, {1});
        CHECK(r.loss == Catch::Approx(2.0 * 0.25 * std::log(2.0)).epsilon(1e-12));
    }
    SECTION("gamma = 0 equals weighted cross-entropy") {
        std::mt19937_64 rng(31);
        std::normal_distribution<double> g(0.0, 2.0);
        for (int trial = 0; trial < 100; ++trial) {
            const int n = 1 + int(rng() % 40);
            Eigen::MatrixXd logits(n, 3);
            std::vector<int> labels(static_cast<std::size_t>(n));
            std::vector<char> mask(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) {
                for (int c = 0; c < 3; ++c) logits(i, c) = g(rng);
                labels[static_cast<std::size_t>(i)] = int(rng() % 3);
                mask[static_cast<std::size_t>(i)] = (rng() % 4) ? 1 : 0;
            }
            if (std::none_of(mask.begin(), mask.end(), [](char c) { return c; })) mask[0] = 1;
            const std::array<double, 3> w{1.7, 0.4, 2.2};
            auto r = focal_loss(logits, labels, w, 0.0, mask);
            // independent weighted cross-entropy
            double ce = 0.0;
            long long m = 0;
            for (int i = 0; i < n; ++i) {
                if (!mask[static_cast<std::size_t>(i)]) continue;
                ++m;
                double lse = 0.0;
                const double zmax = logits.row(i).maxCoeff();
                for (int c = 0; c < 3; ++c) lse += std::exp(logits(i, c) - zmax);
                lse = zmax + std::log(lse);
                const int t = labels[static_cast<std::size_t>(i)];
                ce += -w[static_cast<std::size_t>(t)] * (logits(i, t) - lse);
            }
            ce /= static_cast<double>(m);
            REQUIRE(r.loss == Catch::Approx(ce).margin(1e-10));
        }
    }
    SECTION("empty mask is a contract error") {
        Eigen::MatrixXd logits(2, 3);
        logits.setZero();
        CHECK_THROWS_AS(focal_loss(logits, {0, 1}, {1, 1, 1}, 2.0, {0, 0}), ContractError);
    }
}

TEST_CASE("full forward is permutation invariant under canonical ordering") {
    const NetworkConfig cfg = tiny_b_config();
    const Model model = init_model(cfg, 13);
    TestInput in = random_input(16, 21);

    const SamplingPlan plan = make_plan(in.pos, cfg, 0, /*canonical=*/true);
    const Eigen::MatrixXd base = forward(model, in.features, plan, nullptr);

    std::mt19937_64 rng(77);
    std::vector<int> perm(16);
    std::iota(perm.begin(), perm.end(), 0);
    for (int trial = 0; trial < 5; ++trial) {
        std::shuffle(perm.begin(), perm.end(), rng);
        Eigen::MatrixXd pos_p(16, 2), feat_p(16, kFeatureDim);
        for (int i = 0; i < 16; ++i) {
            pos_p.row(i) = in.pos.row(perm[static_cast<std::size_t>(i)]);
            feat_p.row(i) = in.features.row(perm[static_cast<std::size_t>(i)]);
        }
        const SamplingPlan plan_p = make_plan(pos_p, cfg, 0, /*canonical=*/true);
        const Eigen::MatrixXd out = forward(model, feat_p, plan_p, nullptr);
        for (int i = 0; i < 16; ++i)
            REQUIRE((out.row(i) - base.row(perm[static_cast<std::size_t>(i)]))
                        .cwiseAbs()
                        .maxCoeff() < 1e-5);
    }
}

TEST_CASE("replicas leave original logits unchanged when the plan is pinned") {
    const NetworkConfig cfg = tiny_b_config();
    const Model model = init_model(cfg, 17);
    TestInput in = random_input(16, 42);
    SamplingPlan plan = make_plan(in.pos, cfg, 9);
    const Eigen::MatrixXd base = forward(model, in.features, plan, nullptr);

    // duplicate the first 6 points as replicas
    const int extra = 6;
    Eigen::MatrixXd pos_ext(16 + extra, 2), feat_ext(16 + extra, kFeatureDim);
    pos_ext.topRows(16) = in.pos;
    feat_ext.topRows(16) = in.features;
    for (int r = 0; r < extra; ++r) {
        pos_ext.row(16 + r) = in.pos.row(r);
        feat_ext.row(16 + r) = in.features.row(r);
    }

    SamplingPlan pinned = plan;  // same SA indices and ball groups
    pinned.level_pos[0] = pos_ext;
    pinned.fp[2] = knn_interp(plan.level_pos[1], pos_ext, cfg.fp_k);

    const Eigen::MatrixXd out = forward(model, feat_ext, pinned, nullptr);
    REQUIRE(out.rows() == 16 + extra);
    for (int i = 0; i < 16; ++i)
        REQUIRE((out.row(i) - base.row(i)).cwiseAbs().maxCoeff() < 1e-12);
    // replica logits equal their originals'
    for (int r = 0; r < extra; ++r)
        REQUIRE((out.row(16 + r) - base.row(r)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("forward rejects clouds smaller than the first SA level") {
    const NetworkConfig cfg = tiny_b_config();
    TestInput in = random_input(4, 5);
    CHECK_THROWS_AS(make_plan(in.pos, cfg, 0), ContractError);
}

TEST_CASE("variant A at full size produces per-point logits") {
    const NetworkConfig cfg = variant_a_config();
    const Model model = init_model(cfg, 1);
    TestInput in = random_input(cfg.input_points, 6, 60.0);
    const SamplingPlan plan = make_plan(in.pos, cfg, 2);
    const Eigen::MatrixXd logits = forward(model, in.features, plan, nullptr);
    CHECK(logits.rows() == 1280);
    CHECK(logits.cols() == 3);
    CHECK(logits.allFinite());
}

TEST_CASE("variant B at full size produces per-point logits") {
    const NetworkConfig cfg = variant_b_config();
    const Model model = init_model(cfg, 1);
    TestInput in = random_input(cfg.input_points, 8, 40.0);
    const SamplingPlan plan = make_plan(in.pos, cfg, 3);
    const Eigen::MatrixXd logits = forward(model, in.features, plan, nullptr);
    CHECK(logits.rows() == 330);
    CHECK(logits.cols() == 3);
    CHECK(logits.allFinite());
}
