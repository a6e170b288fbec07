#pragma once

#include <cstdio>
#include <filesystem>

#include "roadvib/pipeline.hpp"

namespace roadvib {

namespace e2edetail {

inline std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.8g", v);
    return buf;
}

inline std::string centralized_log_csv(const std::vector<EpochLog>& log) {
    std::string out = "epoch,lr,loss,focal,tversky,val_acc,val_event_f1\n";
    for (const auto& e : log) {
        out += std::to_string(e.epoch) + "," + fmt_g(e.lr) + "," + fmt_g(e.loss) + "," + fmt_g(e.focal) +
               "," + fmt_g(e.tversky) + "," + fmt_g(e.val_acc) + "," + fmt_g(e.val_event_f1) + "\n";
    }
    return out;
}

inline std::string federated_log_csv(const std::vector<RoundRecord>& rounds, double lr) {
    std::string out = "epoch,lr,loss,focal,tversky,val_acc,val_event_f1,round,clients,weights_checksum\n";
    for (const auto& r : rounds) {
        std::string clients;
        for (std::size_t i = 0; i < r.selected.size(); ++i) {
            if (i) clients += ';';
            clients += std::to_string(r.selected[i]);
        }
        out += std::to_string(r.round) + "," + fmt_g(lr) + "," + fmt_g(r.train_loss) + "," + fmt_g(r.focal) +
               "," + fmt_g(r.tversky) + "," + fmt_g(r.val_acc) + "," + fmt_g(r.val_event_f1) + "," +
               std::to_string(r.round) + "," + clients + "," + r.weights_checksum + "\n";
    }
    return out;
}

}  // namespace e2edetail

struct E2eArtifacts {
    std::vector<SensingStream> streams;
    CorpusManifest manifest;
    std::vector<CandidateEvent> events;
    ScreenStats stats;
    double screening_recall = 1.0;
    std::vector<LabeledSequence> windows;
    ModelParams<float> params;
    std::vector<WindowPrediction> predictions;
    StreamEvalResult eval;
};

/// Full pipeline: synth -> screen -> window/label -> train -> infer -> eval.
/// Every artifact is written under out_dir and is a pure function of
/// (config, seed). Returns the summary JSON.
inline ojson run_e2e(const RunConfig& cfg, const std::filesystem::path& out_dir,
                     E2eArtifacts* out_artifacts = nullptr) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir / "streams");
    fs::create_directories(out_dir / "windows");
    detail::write_file(out_dir / "config.json", dump_run_config(cfg).dump(2) + "\n");

    // synth
    E2eArtifacts art;
    art.streams = generate_corpus(cfg.synth);
    art.manifest.sample_rate_hz = cfg.synth.sample_rate_hz;
    for (std::size_t i = 0; i < art.streams.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "stream_%03zu.csv", i);
        write_stream_csv(out_dir / "streams" / name, art.streams[i]);
        art.manifest.streams.push_back(
            {name, art.streams[i].vehicle_id, art.streams[i].size(), art.streams[i].ground_truth});
    }
    write_manifest(out_dir / "streams" / "manifest.json", art.manifest);

    // screen
    std::int64_t gt_total = 0, gt_found = 0;
    for (std::size_t i = 0; i < art.streams.size(); ++i) {
        auto [events, stats] =
            screen_stream(art.streams[i], cfg.gmm, cfg.screen, static_cast<std::int64_t>(i) * 1000000);
        art.stats.samples_in += stats.samples_in;
        art.stats.samples_uploaded += stats.samples_uploaded;
        art.stats.n_events += stats.n_events;
        for (const auto& g : art.streams[i].ground_truth) {
            ++gt_total;
            for (const auto& ev : events) {
                const std::int64_t s = ev.seg_start(cfg.screen.context_left);
                if (s < g.end && g.start < s + ev.seg_len()) {
                    ++gt_found;
                    break;
                }
            }
        }
        art.events.insert(art.events.end(), events.begin(), events.end());
    }
    art.stats.reduction_ratio =
        art.stats.samples_in > 0
            ? 1.0 - static_cast<double>(art.stats.samples_uploaded) / static_cast<double>(art.stats.samples_in)
            : 1.0;
    art.screening_recall = gt_total > 0 ? static_cast<double>(gt_found) / static_cast<double>(gt_total) : 1.0;
    write_events_jsonl(out_dir / "events.jsonl", art.events);
    {
        ojson s;
        s["samples_in"] = art.stats.samples_in;
        s["samples_uploaded"] = art.stats.samples_uploaded;
        s["n_events"] = art.stats.n_events;
        s["reduction_ratio"] = art.stats.reduction_ratio;
        detail::write_file(out_dir / "stats.json", s.dump(2) + "\n");
    }

    // window + label from ground truth
    std::unordered_map<std::string, std::vector<LabeledInterval>> gt_by_vehicle;
    for (const auto& s : art.streams) gt_by_vehicle[s.vehicle_id] = s.ground_truth;
    WindowConfig wcfg = cfg.window;
    wcfg.context_left = cfg.screen.context_left;  // anchors candidate segments
    wcfg.context_right = cfg.screen.context_right;
    art.windows = windows_from_candidates(art.events, gt_by_vehicle, wcfg);
    if (art.windows.empty()) throw DataError("e2e: screening produced no candidate windows");
    for (std::size_t i = 0; i < art.windows.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "win_%05zu.seq", i);
        write_sequence_bin(out_dir / "windows" / name, art.windows[i]);
    }

    // train
    ojson training;
    if (cfg.mode == "centralized") {
        const auto res = train_centralized(art.windows, cfg.net, cfg.loss, cfg.train);
        art.params = res.params;
        detail::write_file(out_dir / "log.csv", e2edetail::centralized_log_csv(res.log));
        training["mode"] = "centralized";
        training["epochs_run"] = res.epochs_run;
        training["best_epoch"] = res.best_epoch;
        training["best_val_acc"] = res.best_val_acc;
        training["best_val_event_f1"] = res.best_val_f1;
    } else {
        const auto split = split_train_val(art.windows, cfg.train.val_fraction, cfg.fed.seed);
        std::vector<LabeledSequence> train_set, val_set;
        for (auto i : split.train) train_set.push_back(art.windows[i]);
        for (auto i : split.val) val_set.push_back(art.windows[i]);
        const auto assignment = partition_noniid(train_set, cfg.partition.n_clients,
                                                 cfg.partition.dirichlet_alpha,
                                                 SplitMix64::derive(cfg.seed, 0xD117));
        std::vector<std::vector<LabeledSequence>> clients;
        for (const auto& idxs : assignment) {
            std::vector<LabeledSequence> d;
            for (auto i : idxs) d.push_back(train_set[i]);
            clients.push_back(std::move(d));
        }
        const auto res = train_federated(clients, val_set, cfg.net, cfg.loss, cfg.fed);
        art.params = res.params;
        detail::write_file(out_dir / "log.csv", e2edetail::federated_log_csv(res.rounds, cfg.fed.local_lr));
        training["mode"] = "federated";
        training["rounds"] = static_cast<int>(res.rounds.size());
        training["clients_excluded"] = res.clients_excluded;
        training["final_val_acc"] = res.final_val_acc;
        training["final_val_event_f1"] = res.final_val_f1;
    }
    save_checkpoint(out_dir / "ckpt.bin", art.params);

    // infer
    UNet1D<float> net;
    net.cfg = cfg.net;
    net.params = art.params;
    art.predictions = infer_windows(net, art.windows, cfg.train.batch_size);
    detail::write_file(out_dir / "predictions.jsonl", predictions_to_jsonl(art.predictions));

    // eval
    art.eval = evaluate_stream_space(art.predictions, art.manifest, cfg.eval);
    const auto metrics_json = metrics_to_json(art.eval.bundle);
    detail::write_file(out_dir / "metrics.json", metrics_json.dump(2) + "\n");

    ojson summary;
    summary["schema_version"] = 1;
    summary["seed"] = cfg.seed;
    summary["mode"] = cfg.mode;
    summary["screening"] = {{"samples_in", art.stats.samples_in},
                            {"samples_uploaded", art.stats.samples_uploaded},
                            {"n_events", art.stats.n_events},
                            {"reduction_ratio", art.stats.reduction_ratio},
                            {"recall", art.screening_recall}};
    summary["training"] = training;
    summary["eval"] = {{"point_accuracy", art.eval.bundle.point.accuracy},
                       {"point_macro_f1", art.eval.bundle.point.macro_f1},
                       {"event_macro_f1_iou50", art.eval.bundle.at_iou(0.5).macro_f1},
                       {"covered_positions", art.eval.covered_positions},
                       {"total_positions", art.eval.total_positions},
                       {"metrics", metrics_json}};
    summary["artifacts"] = {{"streams", "streams/"},      {"events", "events.jsonl"},
                            {"stats", "stats.json"},      {"windows", "windows/"},
                            {"checkpoint", "ckpt.bin"},   {"log", "log.csv"},
                            {"predictions", "predictions.jsonl"}, {"metrics", "metrics.json"}};
    detail::write_file(out_dir / "summary.json", summary.dump(2) + "\n");
    if (out_artifacts) *out_artifacts = std::move(art);
    return summary;
}

/// Rebuild the network topology from a checkpoint's tensor shapes.
inline NetConfig net_config_from_checkpoint(const ModelParams<float>& params, int seq_len) {
    NetConfig cfg;
    cfg.seq_len = seq_len;
    cfg.channels.clear();
    const auto& first = params.at("enc0.conv1.w");
    cfg.in_channels = static_cast<int>(first.dim(1));
    cfg.kernel = static_cast<int>(first.dim(2));
    for (int s = 0;; ++s) {
        const auto name = "enc" + std::to_string(s) + ".conv1.w";
        if (!params.tensors.count(name)) break;
        cfg.channels.push_back(static_cast<int>(params.at(name).dim(0)));
    }
    cfg.channels.push_back(static_cast<int>(params.at("bottleneck.conv1.w").dim(0)));
    const auto& fc1 = params.at("enc0.attn.fc1.w");
    cfg.attn_reduction = static_cast<int>(cfg.channels[0] / std::max<std::int64_t>(1, fc1.dim(0)));
    cfg.n_classes = static_cast<int>(params.at("head.w").dim(0));
    cfg.validate();
    return cfg;
}

}  // namespace roadvib
