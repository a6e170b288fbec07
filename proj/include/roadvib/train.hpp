#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "roadvib/dataset.hpp"
#include "roadvib/loss.hpp"
#include "roadvib/metrics.hpp"
#include "roadvib/postproc.hpp"
#include "roadvib/unet.hpp"

namespace roadvib {

struct TrainConfig {
    int epochs = 100;
    int batch_size = 32;
    double lr0 = 0.001;
    int patience = 10;          // early stop on validation event F1; <= 0 disables
    double val_fraction = 0.2;
    std::uint64_t seed = 1;

    void validate() const {
        if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
        if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
        if (lr0 <= 0) throw ConfigError("train: lr0 must be positive");
        if (val_fraction < 0.0 || val_fraction >= 1.0) throw ConfigError("train: bad val_fraction");
    }
};

struct EpochLog {
    int epoch = 0;
    double lr = 0.0;
    double loss = 0.0;
    double focal = 0.0;
    double tversky = 0.0;
    double val_acc = 0.0;
    double val_event_f1 = 0.0;
};

struct TrainResult {
    ModelParams<float> params;
    std::vector<EpochLog> log;
    double best_val_f1 = -1.0;  // below any reachable F1 so the first epoch registers
    double best_val_acc = 0.0;
    int best_epoch = -1;
    int epochs_run = 0;
};

// deterministic order seed for one data pass
inline std::uint64_t epoch_order_seed(std::uint64_t data_seed, int epoch) {
    return SplitMix64::derive(data_seed, 0x04de4, static_cast<std::uint64_t>(epoch));
}

namespace traindetail {

inline void fisher_yates(std::vector<std::size_t>& v, SplitMix64& rng) {
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[rng.uniform_index(i)]);
}

template <typename T>
void fill_batch(const std::vector<LabeledSequence>& corpus, const std::vector<std::size_t>& idxs,
                std::size_t begin, std::size_t end, Tensor<T>& x, std::vector<std::uint8_t>& y) {
    const auto B = static_cast<std::int64_t>(end - begin);
    const auto& first = corpus[idxs[begin]];
    const std::int64_t C = first.channels, L = first.length;
    x = Tensor<T>({B, C, L});
    y.resize(static_cast<std::size_t>(B * L));
    for (std::int64_t n = 0; n < B; ++n) {
        const auto& seq = corpus[idxs[begin + static_cast<std::size_t>(n)]];
        if (seq.channels != C || seq.length != L) throw DataError("batch: inhomogeneous corpus");
        for (std::int64_t c = 0; c < C; ++c)
            for (std::int64_t l = 0; l < L; ++l) x.at(n, c, l) = static_cast<T>(seq.at(static_cast<int>(c), static_cast<int>(l)));
        std::copy(seq.y.begin(), seq.y.end(), y.begin() + static_cast<std::ptrdiff_t>(n * L));
    }
}

}  // namespace traindetail

/// One pass of mini-batch Adam over the given indices in a seeded shuffle
/// order. Returns position-weighted mean loss components.
template <typename T>
LossValue train_one_epoch(UNet1D<T>& net, AdamState<T>& adam, const std::vector<LabeledSequence>& corpus,
                          const std::vector<std::size_t>& train_idx, std::uint64_t order_seed, double lr,
                          const LossConfig& loss_cfg, int batch_size) {
    std::vector<std::size_t> order = train_idx;
    SplitMix64 rng(order_seed);
    traindetail::fisher_yates(order, rng);

    LossValue sum;
    std::size_t n_batches = 0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(batch_size)) {
        const std::size_t e = std::min(order.size(), b + static_cast<std::size_t>(batch_size));
        Tensor<T> x;
        std::vector<std::uint8_t> y;
        traindetail::fill_batch(corpus, order, b, e, x, y);
        UNetCache<T> cache;
        auto probs = net.forward(x, true, cache);
        Tensor<T> dP(probs.shape);
        const auto lv = combined_loss(probs, y, loss_cfg, &dP);
        net.params.ensure_grads();
        net.params.zero_grads();
        net.backward(cache, dP);
        adam_step(net.params, adam, lr);
        sum.total += lv.total;
        sum.focal += lv.focal;
        sum.tversky += lv.tversky;
        ++n_batches;
    }
    if (n_batches) {
        sum.total /= static_cast<double>(n_batches);
        sum.focal /= static_cast<double>(n_batches);
        sum.tversky /= static_cast<double>(n_batches);
    }
    return sum;
}

struct EvalResult {
    double point_acc = 0.0;
    double event_macro_f1 = 0.0;  // at IoU 0.5
    MetricsBundle bundle;
};

/// Window-level evaluation: mode filtering, event extraction and matching
/// against each window's own label runs.
template <typename T>
EvalResult evaluate_windows(UNet1D<T>& net, const std::vector<LabeledSequence>& corpus,
                            const std::vector<std::size_t>& idxs, int batch_size = 32,
                            const std::vector<double>& thresholds = {0.1, 0.3, 0.5, 0.7}) {
    std::vector<std::uint8_t> all_pred, all_true;
    std::vector<std::vector<LabeledInterval>> pred_events, gt_events;
    for (std::size_t b = 0; b < idxs.size(); b += static_cast<std::size_t>(batch_size)) {
        const std::size_t e = std::min(idxs.size(), b + static_cast<std::size_t>(batch_size));
        Tensor<T> x;
        std::vector<std::uint8_t> y;
        traindetail::fill_batch(corpus, idxs, b, e, x, y);
        UNetCache<T> cache;
        auto probs = net.forward(x, false, cache);
        auto labels = predict_labels(probs);
        const std::int64_t L = x.dim(2);
        for (std::size_t n = 0; n < labels.size(); ++n) {
            auto filtered = mode_filter(labels[n], 11);
            ProbTrack track(static_cast<std::size_t>(L));
            for (std::int64_t l = 0; l < L; ++l)
                for (int c = 0; c < kNumClasses; ++c)
                    track[static_cast<std::size_t>(l)][static_cast<std::size_t>(c)] =
                        static_cast<float>(probs.at(static_cast<std::int64_t>(n), c, l));
            const auto reports = extract_events(filtered, track, 10, 0.5);
            std::vector<LabeledInterval> pev;
            for (const auto& r : reports) pev.push_back(r.interval());
            pred_events.push_back(std::move(pev));
            const auto& seq = corpus[idxs[b + n]];
            gt_events.push_back(label_runs(seq.y));
            all_pred.insert(all_pred.end(), filtered.begin(), filtered.end());
            all_true.insert(all_true.end(), seq.y.begin(), seq.y.end());
        }
    }
    EvalResult res;
    res.bundle = compute_metrics(all_pred, all_true, pred_events, gt_events, thresholds);
    res.point_acc = res.bundle.point.accuracy;
    res.event_macro_f1 = res.bundle.at_iou(0.5).macro_f1;
    return res;
}

/// Centralized training: internal hash-based train/val split, Adam with
/// cosine annealing, early stopping on validation event F1 (best parameters
/// are restored). Deterministic in cfg.seed.
inline TrainResult train_centralized(const std::vector<LabeledSequence>& corpus, const NetConfig& net_cfg,
                                     LossConfig loss_cfg, const TrainConfig& cfg,
                                     const ModelParams<float>* initial = nullptr,
                                     std::vector<LabeledSequence> const* external_val = nullptr) {
    cfg.validate();
    net_cfg.validate();
    if (corpus.empty()) throw DataError("train: empty corpus");

    SplitIndices split;
    if (external_val) {
        for (std::size_t i = 0; i < corpus.size(); ++i) split.train.push_back(i);
    } else {
        split = split_train_val(corpus, cfg.val_fraction, cfg.seed);
    }

    if (loss_cfg.auto_alpha) {
        std::vector<std::uint8_t> train_labels;
        for (auto i : split.train)
            train_labels.insert(train_labels.end(), corpus[i].y.begin(), corpus[i].y.end());
        loss_cfg.alpha = class_weights_from_labels(train_labels);
    }

    auto net = UNet1D<float>::build(net_cfg, SplitMix64::derive(cfg.seed, 0x30de1));
    if (initial) {
        if (!initial->same_manifest(net.params)) throw DataError("incompatible-update");
        net.params = *initial;
    }
    AdamState<float> adam;

    const std::vector<LabeledSequence>& val_corpus = external_val ? *external_val : corpus;
    std::vector<std::size_t> val_idx;
    if (external_val) {
        for (std::size_t i = 0; i < external_val->size(); ++i) val_idx.push_back(i);
    } else {
        val_idx = split.val;
    }

    TrainResult result;
    ModelParams<float> best_params = net.params;
    int since_best = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cosine_lr(epoch, cfg.epochs, cfg.lr0);
        const auto lv = train_one_epoch(net, adam, corpus, split.train, epoch_order_seed(cfg.seed, epoch),
                                        lr, loss_cfg, cfg.batch_size);
        EvalResult ev;
        if (!val_idx.empty()) ev = evaluate_windows(net, val_corpus, val_idx, cfg.batch_size, {0.5});
        result.log.push_back({epoch, lr, lv.total, lv.focal, lv.tversky, ev.point_acc, ev.event_macro_f1});
        result.epochs_run = epoch + 1;

        if (val_idx.empty() || ev.event_macro_f1 > result.best_val_f1) {
            result.best_val_f1 = ev.event_macro_f1;
            result.best_val_acc = ev.point_acc;
            result.best_epoch = epoch;
            best_params = net.params;
            since_best = 0;
        } else if (cfg.patience > 0 && ++since_best >= cfg.patience) {
            break;
        }
    }
    result.params = std::move(best_params);
    result.best_val_f1 = std::max(result.best_val_f1, 0.0);
    return result;
}

}  // namespace roadvib
