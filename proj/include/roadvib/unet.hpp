#pragma once

#include <string>
#include <vector>

#include "roadvib/ops.hpp"
#include "roadvib/optim.hpp"
#include "roadvib/params.hpp"
#include "roadvib/rng.hpp"

namespace roadvib {

struct NetConfig {
    int in_channels = 1;
    int n_classes = 4;
    std::vector<int> channels{16, 32, 64, 128};  // encoder stages + bottleneck
    int kernel = 5;
    int attn_reduction = 4;
    int seq_len = 512;

    int depth() const { return static_cast<int>(channels.size()) - 1; }

    void validate() const {
        if (in_channels != 1 && in_channels != 3) throw ConfigError("net: in_channels must be 1 or 3");
        if (n_classes != kNumClasses) throw ConfigError("net: n_classes must be 4");
        if (channels.size() < 2) throw ConfigError("net: need at least one encoder stage plus bottleneck");
        for (std::size_t i = 1; i < channels.size(); ++i)
            if (channels[i] <= channels[i - 1]) throw ConfigError("net: channels must be strictly increasing");
        if (kernel % 2 == 0 || kernel < 1) throw ConfigError("net: kernel must be odd");
        if (attn_reduction < 1) throw ConfigError("net: attn_reduction must be >= 1");
        if (seq_len % (1 << depth()) != 0) throw ConfigError("net: seq_len must be divisible by 2^depth");
        for (int c : channels)
            if (c < attn_reduction) throw ConfigError("net: channels must be >= attn_reduction");
    }
};

namespace netdetail {

template <typename T>
Tensor<T> init_tensor(std::vector<std::int64_t> shape, std::int64_t fan_in, std::uint64_t seed,
                      const std::string& name) {
    Tensor<T> t(std::move(shape));
    SplitMix64 rng(SplitMix64::derive(seed, SplitMix64::fnv1a(name)));
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : t.v) v = static_cast<T>(rng.uniform(-bound, bound));
    return t;
}

template <typename T>
void add_conv(ModelParams<T>& p, const std::string& prefix, int cin, int cout, int k, std::uint64_t seed) {
    p.tensors.emplace(prefix + ".w", init_tensor<T>({cout, cin, k}, static_cast<std::int64_t>(cin) * k, seed,
                                                    prefix + ".w"));
    p.tensors.emplace(prefix + ".b", init_tensor<T>({cout}, static_cast<std::int64_t>(cin) * k, seed,
                                                    prefix + ".b"));
}

template <typename T>
void add_bn(ModelParams<T>& p, const std::string& prefix, int c) {
    Tensor<T> scale({c}), shift({c}), rm({c}), rv({c});
    for (auto& v : scale.v) v = T(1);
    for (auto& v : rv.v) v = T(1);
    p.tensors.emplace(prefix + ".scale", std::move(scale));
    p.tensors.emplace(prefix + ".shift", std::move(shift));
    p.tensors.emplace(prefix + ".running_mean", std::move(rm));
    p.tensors.emplace(prefix + ".running_var", std::move(rv));
}

template <typename T>
void add_dense(ModelParams<T>& p, const std::string& prefix, int in, int out, std::uint64_t seed) {
    p.tensors.emplace(prefix + ".w", init_tensor<T>({out, in}, in, seed, prefix + ".w"));
    p.tensors.emplace(prefix + ".b", init_tensor<T>({out}, in, seed, prefix + ".b"));
}

}  // namespace netdetail

template <typename T>
struct ConvBlockCache {
    Tensor<T> x_in, h1, h1n, a1, h2, h2n, a2;
    BnCache<T> bn1, bn2;
};

template <typename T>
struct AttnCache {
    Tensor<T> f_in;  // block output before gating
    Tensor<T> zavg, zmax;
    std::vector<std::int32_t> max_arg;
    Tensor<T> h_avg, a_avg, s_avg;
    Tensor<T> h_max, a_max, s_max;
    Tensor<T> ssum, w, f_tilde;
};

template <typename T>
struct UNetCache {
    std::vector<ConvBlockCache<T>> enc;
    std::vector<AttnCache<T>> attn;
    std::vector<std::vector<std::int32_t>> pool_arg;
    std::vector<Tensor<T>> pooled;
    ConvBlockCache<T> bottleneck;
    std::vector<Tensor<T>> dec_up, dec_cat;  // indexed by stage
    std::vector<ConvBlockCache<T>> dec;
    Tensor<T> logits, probs;
};

/// 1D Attention U-Net: per-stage double-conv blocks with channel attention on
/// the encoder outputs (which also serve as skip tensors), maxpool/2
/// downsampling, nearest-neighbor upsampling with skip concatenation, and a
/// 1x1 softmax head producing per-position class probabilities.
template <typename T>
struct UNet1D {
    NetConfig cfg;
    ModelParams<T> params;

    static UNet1D build(const NetConfig& cfg, std::uint64_t seed) {
        cfg.validate();
        UNet1D net;
        net.cfg = cfg;
        auto& p = net.params;
        const int d = cfg.depth();
        int cin = cfg.in_channels;
        for (int s = 0; s < d; ++s) {
            const std::string pre = "enc" + std::to_string(s);
            const int c = cfg.channels[static_cast<std::size_t>(s)];
            netdetail::add_conv(p, pre + ".conv1", cin, c, cfg.kernel, seed);
            netdetail::add_bn(p, pre + ".bn1", c);
            netdetail::add_conv(p, pre + ".conv2", c, c, cfg.kernel, seed);
            netdetail::add_bn(p, pre + ".bn2", c);
            netdetail::add_dense(p, pre + ".attn.fc1", c, std::max(1, c / cfg.attn_reduction), seed);
            netdetail::add_dense(p, pre + ".attn.fc2", std::max(1, c / cfg.attn_reduction), c, seed);
            cin = c;
        }
        const int cb = cfg.channels.back();
        netdetail::add_conv(p, "bottleneck.conv1", cin, cb, cfg.kernel, seed);
        netdetail::add_bn(p, "bottleneck.bn1", cb);
        netdetail::add_conv(p, "bottleneck.conv2", cb, cb, cfg.kernel, seed);
        netdetail::add_bn(p, "bottleneck.bn2", cb);
        int deep = cb;
        for (int s = d - 1; s >= 0; --s) {
            const std::string pre = "dec" + std::to_string(s);
            const int c = cfg.channels[static_cast<std::size_t>(s)];
            netdetail::add_conv(p, pre + ".conv1", deep + c, c, cfg.kernel, seed);
            netdetail::add_bn(p, pre + ".bn1", c);
            netdetail::add_conv(p, pre + ".conv2", c, c, cfg.kernel, seed);
            netdetail::add_bn(p, pre + ".bn2", c);
            deep = c;
        }
        netdetail::add_conv(p, "head", cfg.channels[0], cfg.n_classes, 1, seed);
        return net;
    }

    Tensor<T> conv_block_forward(const std::string& pre, const Tensor<T>& x, bool train,
                                 ConvBlockCache<T>& c) {
        c.x_in = x;
        c.h1 = conv1d_forward(x, params.at(pre + ".conv1.w"), params.at(pre + ".conv1.b"));
        c.h1n = batchnorm1d_forward(c.h1, params.at(pre + ".bn1.scale"), params.at(pre + ".bn1.shift"),
                                    params.at(pre + ".bn1.running_mean"), params.at(pre + ".bn1.running_var"),
                                    0.9, 1e-5, train, c.bn1);
        c.a1 = relu_forward(c.h1n);
        c.h2 = conv1d_forward(c.a1, params.at(pre + ".conv2.w"), params.at(pre + ".conv2.b"));
        c.h2n = batchnorm1d_forward(c.h2, params.at(pre + ".bn2.scale"), params.at(pre + ".bn2.shift"),
                                    params.at(pre + ".bn2.running_mean"), params.at(pre + ".bn2.running_var"),
                                    0.9, 1e-5, train, c.bn2);
        c.a2 = relu_forward(c.h2n);
        return c.a2;
    }

    // gy = gradient of the block output; accumulates into c.x_in.grad and params.
    void conv_block_backward(const std::string& pre, ConvBlockCache<T>& c, const Tensor<T>& gy) {
        relu_backward(c.h2n, gy);
        batchnorm1d_backward(c.h2, params.at(pre + ".bn2.scale"), params.at(pre + ".bn2.shift"), c.bn2,
                             c.h2n.grad_tensor());
        conv1d_backward(c.a1, params.at(pre + ".conv2.w"), params.at(pre + ".conv2.b"), c.h2.grad_tensor());
        relu_backward(c.h1n, c.a1.grad_tensor());
        batchnorm1d_backward(c.h1, params.at(pre + ".bn1.scale"), params.at(pre + ".bn1.shift"), c.bn1,
                             c.h1n.grad_tensor());
        conv1d_backward(c.x_in, params.at(pre + ".conv1.w"), params.at(pre + ".conv1.b"),
                        c.h1.grad_tensor());
    }

    Tensor<T> attention_forward(const std::string& pre, const Tensor<T>& f, AttnCache<T>& c) {
        c.f_in = f;
        c.zavg = global_avgpool_forward(f);
        c.zmax = global_maxpool_forward(f, c.max_arg);
        c.h_avg = dense_forward(c.zavg, params.at(pre + ".fc1.w"), params.at(pre + ".fc1.b"));
        c.a_avg = relu_forward(c.h_avg);
        c.s_avg = dense_forward(c.a_avg, params.at(pre + ".fc2.w"), params.at(pre + ".fc2.b"));
        c.h_max = dense_forward(c.zmax, params.at(pre + ".fc1.w"), params.at(pre + ".fc1.b"));
        c.a_max = relu_forward(c.h_max);
        c.s_max = dense_forward(c.a_max, params.at(pre + ".fc2.w"), params.at(pre + ".fc2.b"));
        c.ssum = Tensor<T>(c.s_avg.shape);
        for (std::size_t i = 0; i < c.ssum.v.size(); ++i) c.ssum.v[i] = c.s_avg.v[i] + c.s_max.v[i];
        c.w = sigmoid_forward(c.ssum);
        c.f_tilde = scale_channels_forward(f, c.w);
        return c.f_tilde;
    }

    // gy = gradient of f_tilde; accumulates into c.f_in.grad and params.
    void attention_backward(const std::string& pre, AttnCache<T>& c, const Tensor<T>& gy) {
        scale_channels_backward(c.f_in, c.w, gy);
        sigmoid_backward(c.ssum, c.w, c.w.grad_tensor());
        const Tensor<T> gs = c.ssum.grad_tensor();
        dense_backward(c.a_avg, params.at(pre + ".fc2.w"), params.at(pre + ".fc2.b"), gs);
        relu_backward(c.h_avg, c.a_avg.grad_tensor());
        dense_backward(c.zavg, params.at(pre + ".fc1.w"), params.at(pre + ".fc1.b"), c.h_avg.grad_tensor());
        dense_backward(c.a_max, params.at(pre + ".fc2.w"), params.at(pre + ".fc2.b"), gs);
        relu_backward(c.h_max, c.a_max.grad_tensor());
        dense_backward(c.zmax, params.at(pre + ".fc1.w"), params.at(pre + ".fc1.b"), c.h_max.grad_tensor());
        global_avgpool_backward(c.f_in, c.zavg.grad_tensor());
        global_maxpool_backward(c.f_in, c.max_arg, c.zmax.grad_tensor());
    }

    /// Forward pass; probabilities sum to 1 over classes at every position.
    Tensor<T> forward(const Tensor<T>& x, bool train, UNetCache<T>& cache) {
        require_rank(x, 3, "unet input");
        if (x.dim(1) != cfg.in_channels) throw DataError("shape-error: unet input channels");
        const int d = cfg.depth();
        cache.enc.assign(static_cast<std::size_t>(d), {});
        cache.attn.assign(static_cast<std::size_t>(d), {});
        cache.pool_arg.assign(static_cast<std::size_t>(d), {});
        cache.pooled.assign(static_cast<std::size_t>(d), {});
        cache.dec_up.assign(static_cast<std::size_t>(d), {});
        cache.dec_cat.assign(static_cast<std::size_t>(d), {});
        cache.dec.assign(static_cast<std::size_t>(d), {});

        Tensor<T> cur = x;
        for (int s = 0; s < d; ++s) {
            const auto f = conv_block_forward("enc" + std::to_string(s), cur,
                                              train, cache.enc[static_cast<std::size_t>(s)]);
            const auto ft = attention_forward("enc" + std::to_string(s) + ".attn", f,
                                              cache.attn[static_cast<std::size_t>(s)]);
            cache.pooled[static_cast<std::size_t>(s)] =
                maxpool1d_forward(ft, cache.pool_arg[static_cast<std::size_t>(s)]);
            cur = cache.pooled[static_cast<std::size_t>(s)];
        }
        cur = conv_block_forward("bottleneck", cur, train, cache.bottleneck);
        for (int s = d - 1; s >= 0; --s) {
            cache.dec_up[static_cast<std::size_t>(s)] = upsample_nearest_forward(cur);
            cache.dec_cat[static_cast<std::size_t>(s)] = concat_channels_forward(
                cache.dec_up[static_cast<std::size_t>(s)], cache.attn[static_cast<std::size_t>(s)].f_tilde);
            cur = conv_block_forward("dec" + std::to_string(s), cache.dec_cat[static_cast<std::size_t>(s)],
                                     train, cache.dec[static_cast<std::size_t>(s)]);
        }
        cache.logits = conv1d_forward(cur, params.at("head.w"), params.at("head.b"));
        cache.probs = softmax_channel_forward(cache.logits);
        return cache.probs;
    }

    /// Backward from dL/dP; accumulates parameter gradients (params.zero_grads
    /// first for a fresh step).
    void backward(UNetCache<T>& cache, const Tensor<T>& dprobs) {
        const int d = cfg.depth();
        softmax_channel_backward(cache.logits, cache.probs, dprobs);
        conv1d_backward(cache.dec[0].a2, params.at("head.w"), params.at("head.b"),
                        cache.logits.grad_tensor());
        for (int s = 0; s < d; ++s) {
            conv_block_backward("dec" + std::to_string(s), cache.dec[static_cast<std::size_t>(s)],
                                cache.dec[static_cast<std::size_t>(s)].a2.grad_tensor());
            // dec input = concat(up, skip)
            auto& cat = cache.dec[static_cast<std::size_t>(s)].x_in;
            concat_channels_backward(cache.dec_up[static_cast<std::size_t>(s)],
                                     cache.attn[static_cast<std::size_t>(s)].f_tilde, cat.grad_tensor());
            // gradient into the deeper feature (previous decoder block's output)
            auto& up = cache.dec_up[static_cast<std::size_t>(s)];
            if (s == d - 1) {
                upsample_backward_into(cache.bottleneck.a2, up);
            } else {
                upsample_backward_into(cache.dec[static_cast<std::size_t>(s + 1)].a2, up);
            }
        }
        conv_block_backward("bottleneck", cache.bottleneck,
                            cache.bottleneck.a2.grad_tensor());
        // bottleneck input = pooled[d-1]
        transfer_grad(cache.bottleneck.x_in, cache.pooled[static_cast<std::size_t>(d - 1)]);
        for (int s = d - 1; s >= 0; --s) {
            maxpool1d_backward(cache.attn[static_cast<std::size_t>(s)].f_tilde,
                               cache.pool_arg[static_cast<std::size_t>(s)],
                               cache.pooled[static_cast<std::size_t>(s)].grad_tensor());
            attention_backward("enc" + std::to_string(s) + ".attn", cache.attn[static_cast<std::size_t>(s)],
                               cache.attn[static_cast<std::size_t>(s)].f_tilde.grad_tensor());
            conv_block_backward("enc" + std::to_string(s), cache.enc[static_cast<std::size_t>(s)],
                                cache.attn[static_cast<std::size_t>(s)].f_in.grad_tensor());
            if (s > 0)
                transfer_grad(cache.enc[static_cast<std::size_t>(s)].x_in,
                              cache.pooled[static_cast<std::size_t>(s - 1)]);
        }
    }

    /// Eval-mode forward without gradient bookkeeping kept around.
    Tensor<T> infer(const Tensor<T>& x) {
        UNetCache<T> cache;
        return forward(x, false, cache);
    }

private:
    static void upsample_backward_into(Tensor<T>& deep, Tensor<T>& up) {
        upsample_nearest_backward(deep, up.grad_tensor());
    }
    static void transfer_grad(const Tensor<T>& from, Tensor<T>& to) {
        to.ensure_grad();
        for (std::size_t i = 0; i < to.grad.size(); ++i) to.grad[i] += from.grad[i];
    }
};

/// Per-position argmax; ties resolve to the lowest class index.
template <typename T>
std::vector<std::vector<std::uint8_t>> predict_labels(const Tensor<T>& probs) {
    const std::int64_t B = probs.dim(0), C = probs.dim(1), L = probs.dim(2);
    std::vector<std::vector<std::uint8_t>> out(static_cast<std::size_t>(B));
    for (std::int64_t n = 0; n < B; ++n) {
        auto& row = out[static_cast<std::size_t>(n)];
        row.resize(static_cast<std::size_t>(L));
        for (std::int64_t l = 0; l < L; ++l) {
            int best = 0;
            T bv = probs.at(n, 0, l);
            for (std::int64_t c = 1; c < C; ++c)
                if (probs.at(n, c, l) > bv) {
                    bv = probs.at(n, c, l);
                    best = static_cast<int>(c);
                }
            row[static_cast<std::size_t>(l)] = static_cast<std::uint8_t>(best);
        }
    }
    return out;
}

}  // namespace roadvib
