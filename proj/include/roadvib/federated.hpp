#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "roadvib/train.hpp"

namespace roadvib {

struct FedConfig {
    int clients_per_round = 10;
    int rounds = 20;
    int local_epochs = 2;
    double local_lr = 0.001;
    int batch_size = 32;
    std::uint64_t seed = 1;

    void validate(int n_clients) const {
        if (rounds < 1) throw ConfigError("fed: rounds must be >= 1");
        if (local_epochs < 0) throw ConfigError("fed: local_epochs must be >= 0");
        if (clients_per_round < 1 || clients_per_round > n_clients)
            throw ConfigError("fed: clients_per_round must be in [1, n_clients]");
        if (local_lr <= 0) throw ConfigError("fed: local_lr must be positive");
        if (batch_size < 1) throw ConfigError("fed: batch_size must be >= 1");
    }
};

inline std::uint64_t model_build_seed(std::uint64_t seed) { return SplitMix64::derive(seed, 0x30de1); }

/// Per-(round, client) seed for the local data pass; public so that a
/// centralized run can be arranged to use the identical batch order.
inline std::uint64_t fed_client_seed(std::uint64_t seed, int round, int client_ordinal) {
    return SplitMix64::derive(seed, 0xC11E17 + static_cast<std::uint64_t>(round),
                              static_cast<std::uint64_t>(client_ordinal));
}

/// What a client sends back: its id, sample count, and parameters. Raw
/// sequences never cross this boundary.
struct ClientUpdate {
    int client_id = 0;
    std::int64_t n_samples = 0;
    ModelParams<float> params;
};

/// Local optimization: copy of the global model trained for local_epochs of
/// mini-batch Adam with a fresh optimizer state. Deterministic per
/// (cfg.seed, round, client_id).
inline ClientUpdate local_update(const ModelParams<float>& global, const NetConfig& net_cfg,
                                 const std::vector<LabeledSequence>& data, LossConfig loss_cfg,
                                 const FedConfig& cfg, int round, int client_id,
                                 LossValue* mean_loss = nullptr) {
    if (data.empty()) throw DataError("local_update: empty client dataset");
    UNet1D<float> net;
    net.cfg = net_cfg;
    net.params = global;

    if (loss_cfg.auto_alpha) {
        std::vector<std::uint8_t> labels;
        for (const auto& s : data) labels.insert(labels.end(), s.y.begin(), s.y.end());
        loss_cfg.alpha = class_weights_from_labels(labels);
    }

    std::vector<std::size_t> idx(data.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;

    AdamState<float> adam;  // fresh per round
    LossValue acc;
    for (int k = 0; k < cfg.local_epochs; ++k) {
        const auto lv = train_one_epoch(net, adam, data, idx,
                                        epoch_order_seed(fed_client_seed(cfg.seed, round, client_id), k),
                                        cfg.local_lr, loss_cfg, cfg.batch_size);
        acc.total += lv.total;
        acc.focal += lv.focal;
        acc.tversky += lv.tversky;
    }
    if (mean_loss && cfg.local_epochs > 0) {
        mean_loss->total = acc.total / cfg.local_epochs;
        mean_loss->focal = acc.focal / cfg.local_epochs;
        mean_loss->tversky = acc.tversky / cfg.local_epochs;
    }
    return {client_id, static_cast<std::int64_t>(data.size()), std::move(net.params)};
}

/// Sample-size-weighted parameter average over client updates, accumulated in
/// f64 with a fixed summation order (sorted by client id).
inline ModelParams<float> aggregate(std::vector<ClientUpdate> updates) {
    if (updates.empty()) throw DataError("aggregate: no updates");
    std::sort(updates.begin(), updates.end(),
              [](const ClientUpdate& a, const ClientUpdate& b) { return a.client_id < b.client_id; });
    double total = 0.0;
    for (const auto& u : updates) {
        if (!u.params.same_manifest(updates[0].params)) throw DataError("incompatible-update");
        total += static_cast<double>(u.n_samples);
    }
    if (total <= 0.0) throw DataError("aggregate: zero total sample count");

    ModelParams<float> out = updates[0].params;
    for (auto& [name, t] : out.tensors) {
        std::vector<double> acc(t.v.size(), 0.0);
        for (const auto& u : updates) {
            const double w = static_cast<double>(u.n_samples) / total;
            const auto& src = u.params.at(name).v;
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * static_cast<double>(src[i]);
        }
        for (std::size_t i = 0; i < acc.size(); ++i) t.v[i] = static_cast<float>(acc[i]);
    }
    return out;
}

inline std::string params_checksum(const ModelParams<float>& params) {
    const std::string bytes = checkpoint_to_bytes(params);
    const std::uint64_t h = SplitMix64::fnv1a(bytes);
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct RoundRecord {
    int round = 0;
    std::vector<int> selected;        // client ids, ascending
    std::vector<std::int64_t> sizes;  // aligned with selected
    double train_loss = 0.0;
    double focal = 0.0;
    double tversky = 0.0;
    double val_acc = 0.0;
    double val_event_f1 = 0.0;
    std::string weights_checksum;
};

struct FedResult {
    ModelParams<float> params;
    std::vector<RoundRecord> rounds;
    double final_val_acc = 0.0;
    double final_val_f1 = 0.0;
    int clients_excluded = 0;
};

/// FedAvg simulation: per round, sample clients uniformly without
/// replacement, run local updates from the broadcast parameters, aggregate
/// by sample count, and validate on the held-out global split.
inline FedResult train_federated(const std::vector<std::vector<LabeledSequence>>& clients,
                                 const std::vector<LabeledSequence>& val, const NetConfig& net_cfg,
                                 const LossConfig& loss_cfg, const FedConfig& cfg) {
    net_cfg.validate();
    std::vector<int> eligible;
    for (std::size_t i = 0; i < clients.size(); ++i)
        if (!clients[i].empty()) eligible.push_back(static_cast<int>(i));
    FedResult result;
    result.clients_excluded = static_cast<int>(clients.size() - eligible.size());
    if (eligible.empty()) throw DataError("fed: no nonempty clients");
    cfg.validate(static_cast<int>(eligible.size()));

    auto net = UNet1D<float>::build(net_cfg, model_build_seed(cfg.seed));
    ModelParams<float> global = net.params;

    std::vector<std::size_t> val_idx(val.size());
    for (std::size_t i = 0; i < val_idx.size(); ++i) val_idx[i] = i;

    for (int r = 0; r < cfg.rounds; ++r) {
        // uniform sample without replacement, then fixed ascending order
        std::vector<int> pool = eligible;
        SplitMix64 sel(SplitMix64::derive(cfg.seed, 0x5e1ec7, static_cast<std::uint64_t>(r)));
        std::vector<int> selected;
        for (int k = 0; k < cfg.clients_per_round; ++k) {
            const auto j = static_cast<std::size_t>(k) + static_cast<std::size_t>(sel.uniform_index(pool.size() - static_cast<std::size_t>(k)));
            std::swap(pool[static_cast<std::size_t>(k)], pool[j]);
            selected.push_back(pool[static_cast<std::size_t>(k)]);
        }
        std::sort(selected.begin(), selected.end());

        RoundRecord rec;
        rec.round = r;
        rec.selected = selected;
        std::vector<ClientUpdate> updates;
        double loss_weight_total = 0.0;
        for (int cid : selected) {
            LossValue lv;
            updates.push_back(local_update(global, net_cfg, clients[static_cast<std::size_t>(cid)], loss_cfg,
                                           cfg, r, cid, &lv));
            const auto n = updates.back().n_samples;
            rec.sizes.push_back(n);
            rec.train_loss += lv.total * static_cast<double>(n);
            rec.focal += lv.focal * static_cast<double>(n);
            rec.tversky += lv.tversky * static_cast<double>(n);
            loss_weight_total += static_cast<double>(n);
        }
        if (loss_weight_total > 0) {
            rec.train_loss /= loss_weight_total;
            rec.focal /= loss_weight_total;
            rec.tversky /= loss_weight_total;
        }
        global = aggregate(std::move(updates));
        rec.weights_checksum = params_checksum(global);

        if (!val.empty()) {
            UNet1D<float> eval_net;
            eval_net.cfg = net_cfg;
            eval_net.params = global;
            const auto ev = evaluate_windows(eval_net, val, val_idx, cfg.batch_size, {0.5});
            rec.val_acc = ev.point_acc;
            rec.val_event_f1 = ev.event_macro_f1;
            result.final_val_acc = ev.point_acc;
            result.final_val_f1 = ev.event_macro_f1;
        }
        result.rounds.push_back(std::move(rec));
    }
    result.params = std::move(global);
    return result;
}

}  // namespace roadvib
