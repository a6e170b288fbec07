#include <catch2/catch_amalgamated.hpp>

#include "gradcheck.hpp"
#include "roadvib/loss.hpp"
#include "roadvib/unet.hpp"

using namespace roadvib;

TEST_CASE("builds with the same seed are identical") {
    NetConfig cfg;
    auto a = UNet1D<float>::build(cfg, 42);
    auto b = UNet1D<float>::build(cfg, 42);
    CHECK(checkpoint_to_bytes(a.params) == checkpoint_to_bytes(b.params));
    auto c = UNet1D<float>::build(cfg, 43);
    CHECK(checkpoint_to_bytes(c.params) != checkpoint_to_bytes(a.params));
}

TEST_CASE("parameter count matches the shape-arithmetic audit") {
    NetConfig cfg;
    auto net = UNet1D<float>::build(cfg, 1);

    // independent audit from layer shapes
    const auto conv_block = [&](int cin, int c) {
        const std::int64_t conv1 = static_cast<std::int64_t>(c) * cin * cfg.kernel + c;
        const std::int64_t conv2 = static_cast<std::int64_t>(c) * c * cfg.kernel + c;
        return conv1 + conv2 + 4 * c;  // two bn layers, scale+shift each
    };
    const auto attn = [&](int c) {
        const int h = c / cfg.attn_reduction;
        return static_cast<std::int64_t>(h) * c + h + static_cast<std::int64_t>(c) * h + c;
    };
    std::int64_t trainable = 0, running = 0;
    int cin = cfg.in_channels;
    for (int s = 0; s < cfg.depth(); ++s) {
        const int c = cfg.channels[static_cast<std::size_t>(s)];
        trainable += conv_block(cin, c) + attn(c);
        running += 4 * c;
        cin = c;
    }
    trainable += conv_block(cin, cfg.channels.back());
    running += 4 * cfg.channels.back();
    int deep = cfg.channels.back();
    for (int s = cfg.depth() - 1; s >= 0; --s) {
        const int c = cfg.channels[static_cast<std::size_t>(s)];
        trainable += conv_block(deep + c, c);
        running += 4 * c;
        deep = c;
    }
    trainable += static_cast<std::int64_t>(cfg.n_classes) * cfg.channels[0] + cfg.n_classes;

    CHECK(net.params.trainable_count() == trainable);
    CHECK(net.params.total_count() == trainable + running);
    // frozen regression values for the default configuration
    CHECK(net.params.trainable_count() == 275168);
    CHECK(net.params.total_count() == 276576);
}

TEST_CASE("forward produces a probability simplex at every position") {
    NetConfig cfg;
    cfg.seq_len = 64;
    auto net = UNet1D<float>::build(cfg, 7);
    SplitMix64 rng(3);
    Tensor<float> x({2, 1, 64});
    for (auto& v : x.v) v = static_cast<float>(rng.gaussian());
    UNetCache<float> cache;
    auto P = net.forward(x, true, cache);
    REQUIRE(P.shape == std::vector<std::int64_t>{2, 4, 64});
    for (int n = 0; n < 2; ++n)
        for (int l = 0; l < 64; ++l) {
            float sum = 0;
            for (int c = 0; c < 4; ++c) {
                REQUIRE(P.at(n, c, l) >= 0.0f);
                sum += P.at(n, c, l);
            }
            REQUIRE(sum == Catch::Approx(1.0f).margin(1e-5));
        }
}

TEST_CASE("default shape chain halves the length per stage") {
    NetConfig cfg;
    auto net = UNet1D<float>::build(cfg, 7);
    Tensor<float> x({1, 1, 512});
    UNetCache<float> cache;
    net.forward(x, false, cache);
    CHECK(cache.pooled[0].dim(2) == 256);
    CHECK(cache.pooled[1].dim(2) == 128);
    CHECK(cache.pooled[2].dim(2) == 64);
    CHECK(cache.bottleneck.a2.dim(2) == 64);
    CHECK(cache.dec_cat[2].dim(2) == 128);
    CHECK(cache.dec_cat[1].dim(2) == 256);
    CHECK(cache.dec_cat[0].dim(2) == 512);
    CHECK(cache.probs.dim(2) == 512);
}

TEST_CASE("zero input in eval mode gives position-constant output") {
    NetConfig cfg;
    cfg.seq_len = 128;
    auto net = UNet1D<float>::build(cfg, 11);
    Tensor<float> x({1, 1, 128});
    UNetCache<float> cache;
    auto P = net.forward(x, false, cache);
    for (int c = 0; c < 4; ++c) {
        const float ref = P.at(0, c, 0);
        for (int l = 1; l < 128; ++l) REQUIRE(P.at(0, c, l) == Catch::Approx(ref).margin(1e-4));
    }
}

TEST_CASE("eval-mode forward is bit-reproducible") {
    NetConfig cfg;
    cfg.seq_len = 64;
    auto net = UNet1D<float>::build(cfg, 5);
    SplitMix64 rng(9);
    Tensor<float> x({3, 1, 64});
    for (auto& v : x.v) v = static_cast<float>(rng.gaussian());
    UNetCache<float> c1, c2;
    auto a = net.forward(x, false, c1);
    auto b = net.forward(x, false, c2);
    CHECK(a.v == b.v);
}

TEST_CASE("attention weights stay in (0,1)") {
    NetConfig cfg;
    cfg.seq_len = 64;
    auto net = UNet1D<float>::build(cfg, 13);
    SplitMix64 rng(17);
    Tensor<float> x({2, 1, 64});
    for (auto& v : x.v) v = static_cast<float>(rng.gaussian(0.0, 2.0));
    UNetCache<float> cache;
    net.forward(x, true, cache);
    for (const auto& a : cache.attn)
        for (float w : a.w.v) {
            REQUIRE(w > 0.0f);
            REQUIRE(w < 1.0f);
        }
}

TEST_CASE("predict_labels takes the argmax with low-index ties") {
    Tensor<float> P({1, 4, 3});
    // uniform column -> class 0; one-hot column -> that class
    for (int c = 0; c < 4; ++c) P.at(0, c, 0) = 0.25f;
    P.at(0, 2, 1) = 1.0f;
    P.at(0, 1, 2) = 0.6f;
    P.at(0, 3, 2) = 0.4f;
    auto labels = predict_labels(P);
    CHECK(labels[0] == std::vector<std::uint8_t>{0, 2, 1});

    // brute-force oracle on random matrices
    SplitMix64 rng(23);
    Tensor<float> Q({2, 4, 50});
    for (auto& v : Q.v) v = static_cast<float>(rng.uniform());
    auto got = predict_labels(Q);
    for (int n = 0; n < 2; ++n)
        for (int l = 0; l < 50; ++l) {
            int best = 0;
            for (int c = 1; c < 4; ++c)
                if (Q.at(n, c, l) > Q.at(n, best, l)) best = c;
            REQUIRE(got[static_cast<std::size_t>(n)][static_cast<std::size_t>(l)] == best);
        }
}

TEST_CASE("tiny network end-to-end gradient check") {
    const auto rep = gradcheck::tiny_net_gradcheck(31);
    INFO("params f64 " << rep.err_params_f64 << " input f64 " << rep.err_input_f64 << " params f32 "
                       << rep.err_params_f32);
    CHECK(rep.err_params_f64 < 1e-6);
    CHECK(rep.err_input_f64 < 1e-6);
    CHECK(rep.err_params_f32 < 1e-3);
}

// --- losses -----------------------------------------------------------------

namespace {

Tensor<float> uniform_probs(int B, int L) {
    Tensor<float> P({B, 4, L});
    for (auto& v : P.v) v = 0.25f;
    return P;
}

Tensor<float> onehot_probs(const std::vector<std::uint8_t>& y, int B, int L) {
    Tensor<float> P({B, 4, L});
    for (int n = 0; n < B; ++n)
        for (int l = 0; l < L; ++l) P.at(n, y[static_cast<std::size_t>(n * L + l)], l) = 1.0f;
    return P;
}

}  // namespace

TEST_CASE("focal loss on a perfect one-hot prediction is ~0") {
    std::vector<std::uint8_t> y = {0, 3, 1, 2, 0, 0, 3, 3};
    auto P = onehot_probs(y, 1, 8);
    LossConfig cfg;
    CHECK(focal_loss(P, y, cfg) < 1e-6);
}

TEST_CASE("focal loss on uniform probabilities matches the closed form") {
    std::vector<std::uint8_t> y(16, 1);
    auto P = uniform_probs(1, 16);
    LossConfig cfg;  // gamma 2, alpha 1
    const double expect = std::pow(0.75, 2.0) * (-std::log(0.25 + 1e-7));
    CHECK(focal_loss(P, y, cfg) == Catch::Approx(expect).epsilon(1e-9));
    CHECK(focal_loss(P, y, cfg) == Catch::Approx(0.7798).epsilon(1e-3));
}

TEST_CASE("focal with gamma 0 reduces to weighted cross-entropy") {
    SplitMix64 rng(11);
    Tensor<double> P({2, 4, 10});
    std::vector<std::uint8_t> y;
    for (int n = 0; n < 2; ++n)
        for (int l = 0; l < 10; ++l) {
            double sum = 0;
            for (int c = 0; c < 4; ++c) {
                P.at(n, c, l) = rng.uniform(0.05, 1.0);
                sum += P.at(n, c, l);
            }
            for (int c = 0; c < 4; ++c) P.at(n, c, l) /= sum;
            y.push_back(static_cast<std::uint8_t>(rng.uniform_index(4)));
        }
    LossConfig cfg;
    cfg.gamma = 0.0;
    double ce = 0.0;
    for (int n = 0; n < 2; ++n)
        for (int l = 0; l < 10; ++l) ce += -std::log(P.at(n, y[static_cast<std::size_t>(n * 10 + l)], l) + cfg.eps);
    ce /= 20.0;
    CHECK(focal_loss(P, y, cfg) == Catch::Approx(ce).epsilon(1e-9));
}

TEST_CASE("tversky loss on a perfect prediction is ~0") {
    std::vector<std::uint8_t> y = {0, 3, 1, 2, 0, 0, 3, 3, 2, 1, 0, 0};
    auto P = onehot_probs(y, 1, 12);
    LossConfig cfg;
    CHECK(tversky_loss(P, y, cfg) < 1e-6);
}

TEST_CASE("tversky loss when everything is called class 0 but truth is class 3") {
    const int L = 10;
    std::vector<std::uint8_t> y(L, 3);
    Tensor<double> P({1, 4, L});
    for (int l = 0; l < L; ++l) P.at(0, 0, l) = 1.0;
    LossConfig cfg;
    // direct evaluation: TP_0=0,FP_0=10 -> TI_0 = eps/(3+eps) ~ 0;
    // TI_1 = TI_2 = eps/eps = 1 (no mass anywhere); TP_3=0, FN_3=10 -> TI_3 = eps/(7+eps) ~ 0
    const double e = cfg.eps;
    const double ti0 = e / (0.3 * 10 + e);
    const double ti3 = e / (0.7 * 10 + e);
    const double expect = 1.0 - (ti0 + 1.0 + 1.0 + ti3) / 4.0;
    CHECK(tversky_loss(P, y, cfg) == Catch::Approx(expect).epsilon(1e-9));
}

TEST_CASE("tversky with lambda=beta=0.5 equals soft Dice") {
    SplitMix64 rng(13);
    Tensor<double> P({1, 4, 20});
    std::vector<std::uint8_t> y;
    for (int l = 0; l < 20; ++l) {
        double sum = 0;
        for (int c = 0; c < 4; ++c) {
            P.at(0, c, l) = rng.uniform(0.05, 1.0);
            sum += P.at(0, c, l);
        }
        for (int c = 0; c < 4; ++c) P.at(0, c, l) /= sum;
        y.push_back(static_cast<std::uint8_t>(rng.uniform_index(4)));
    }
    LossConfig cfg;
    cfg.lambda_fp = 0.5;
    cfg.beta_fn = 0.5;
    // soft Dice: 2 TP / (|P| + |Y|); with lambda=beta=0.5 the Tversky index
    // (TP+e)/(TP + 0.5 FP + 0.5 FN + e) equals (2TP+2e)/(sumP + sumY + 2e)
    std::array<double, 4> tp{}, sp{}, sy{};
    for (int l = 0; l < 20; ++l)
        for (int c = 0; c < 4; ++c) {
            const double p = P.at(0, c, l);
            sp[static_cast<std::size_t>(c)] += p;
            if (y[static_cast<std::size_t>(l)] == c) {
                tp[static_cast<std::size_t>(c)] += p;
                sy[static_cast<std::size_t>(c)] += 1.0;
            }
        }
    double dice = 0.0;
    for (int c = 0; c < 4; ++c)
        dice += (2 * tp[static_cast<std::size_t>(c)] + 2 * cfg.eps) /
                (sp[static_cast<std::size_t>(c)] + sy[static_cast<std::size_t>(c)] + 2 * cfg.eps);
    const double expect = 1.0 - dice / 4.0;
    CHECK(tversky_loss(P, y, cfg) == Catch::Approx(expect).epsilon(1e-9));
}

TEST_CASE("combined loss composes focal and tversky") {
    SplitMix64 rng(17);
    Tensor<double> P({1, 4, 16});
    std::vector<std::uint8_t> y;
    for (int l = 0; l < 16; ++l) {
        double sum = 0;
        for (int c = 0; c < 4; ++c) {
            P.at(0, c, l) = rng.uniform(0.05, 1.0);
            sum += P.at(0, c, l);
        }
        for (int c = 0; c < 4; ++c) P.at(0, c, l) /= sum;
        y.push_back(static_cast<std::uint8_t>(rng.uniform_index(4)));
    }
    LossConfig cfg;
    cfg.eta = 0.0;
    CHECK(combined_loss(P, y, cfg).total == Catch::Approx(focal_loss(P, y, cfg)).epsilon(1e-12));
    cfg.eta = 1.0;
    const auto v = combined_loss(P, y, cfg);
    CHECK(v.total == Catch::Approx(focal_loss(P, y, cfg) + tversky_loss(P, y, cfg)).epsilon(1e-12));
    CHECK(v.total >= 0.0);
}

TEST_CASE("loss gradients match finite differences") {
    for (int which : {0, 1, 2}) {
        auto [e64, e32] = gradcheck::loss_gradcheck(which, 1000 + static_cast<std::uint64_t>(which));
        INFO("loss " << which << ": f64 " << e64 << " f32 " << e32);
        CHECK(e64 < 1e-6);
        CHECK(e32 < 1e-3);
    }
}

TEST_CASE("focal monotonicity: lowering the true-class probability never lowers the loss") {
    SplitMix64 rng(19);
    for (int rep = 0; rep < 20; ++rep) {
        Tensor<double> P({1, 4, 8});
        std::vector<std::uint8_t> y;
        for (int l = 0; l < 8; ++l) {
            double sum = 0;
            for (int c = 0; c < 4; ++c) {
                P.at(0, c, l) = rng.uniform(0.1, 1.0);
                sum += P.at(0, c, l);
            }
            for (int c = 0; c < 4; ++c) P.at(0, c, l) /= sum;
            y.push_back(static_cast<std::uint8_t>(rng.uniform_index(4)));
        }
        LossConfig cfg;
        const double before = focal_loss(P, y, cfg);
        const int l = static_cast<int>(rng.uniform_index(8));
        const int cls = y[static_cast<std::size_t>(l)];
        P.at(0, cls, l) *= rng.uniform(0.3, 0.95);  // decrease true-class probability
        const double after = focal_loss(P, y, cfg);
        REQUIRE(after >= before - 1e-12);
    }
}

TEST_CASE("class weights derive from inverse frequency with clamping") {
    std::vector<std::uint8_t> labels;
    for (int i = 0; i < 900; ++i) labels.push_back(0);
    for (int i = 0; i < 50; ++i) labels.push_back(1);
    for (int i = 0; i < 30; ++i) labels.push_back(2);
    for (int i = 0; i < 20; ++i) labels.push_back(3);
    const auto w = class_weights_from_labels(labels);
    CHECK(w[0] >= 0.25);
    CHECK(w[3] <= 10.0);
    CHECK(w[0] < w[1]);
    CHECK(w[1] < w[2]);
    CHECK(w[2] < w[3]);
}
