// roadvib: synthetic vibration streams, onboard GMM screening, segmentation
// training (centralized or federated), inference and event-level evaluation.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "roadvib/e2e.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using namespace roadvib;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitRuntime = 4;

ojson load_json(const fs::path& path) {
    try {
        return ojson::parse(detail::read_file(path));
    } catch (const ojson::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

RunConfig load_run_config(const std::string& path) {
    if (path.empty()) return RunConfig{};
    return parse_run_config(load_json(path));
}

void set_jobs(int jobs) {
#ifdef _OPENMP
    if (jobs > 0) omp_set_num_threads(jobs);
#else
    (void)jobs;
#endif
}

// streams are loaded through the manifest when present, else by CSV glob
std::pair<std::vector<SensingStream>, CorpusManifest> load_streams(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw DataError("no such stream directory: " + dir.string());
    std::vector<SensingStream> streams;
    CorpusManifest manifest;
    if (fs::exists(dir / "manifest.json")) {
        manifest = read_manifest(dir / "manifest.json");
        for (const auto& e : manifest.streams) {
            auto s = read_stream_csv(dir / e.file, e.vehicle_id, manifest.sample_rate_hz);
            s.ground_truth = e.ground_truth;
            s.validate();
            streams.push_back(std::move(s));
        }
        return {std::move(streams), std::move(manifest)};
    }
    std::vector<fs::path> files;
    for (const auto& de : fs::directory_iterator(dir))
        if (de.path().extension() == ".csv") files.push_back(de.path());
    if (files.empty()) throw DataError("no stream CSVs found in " + dir.string());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        auto s = read_stream_csv(f, f.stem().string());
        manifest.streams.push_back({f.filename().string(), s.vehicle_id, s.size(), {}});
        streams.push_back(std::move(s));
    }
    return {std::move(streams), std::move(manifest)};
}

int cmd_synth(const std::string& config_path, const std::string& out_dir) {
    RunConfig cfg = load_run_config(config_path);
    fs::create_directories(out_dir);
    CorpusManifest manifest;
    manifest.sample_rate_hz = cfg.synth.sample_rate_hz;
    for (int i = 0; i < cfg.synth.n_streams; ++i) {
        auto s = generate_stream(cfg.synth, i);
        char name[32];
        std::snprintf(name, sizeof(name), "stream_%03d.csv", i);
        write_stream_csv(fs::path(out_dir) / name, s);
        manifest.streams.push_back({name, s.vehicle_id, s.size(), s.ground_truth});
    }
    write_manifest(fs::path(out_dir) / "manifest.json", manifest);
    std::printf("wrote %d streams to %s\n", cfg.synth.n_streams, out_dir.c_str());
    return kExitOk;
}

int cmd_screen(const std::string& in_dir, const std::string& out_path, const std::string& gmm_path,
               const std::string& screen_path, const std::string& stats_path) {
    const GmmConfig gmm = gmm_path.empty() ? GmmConfig{} : parse_gmm(load_json(gmm_path));
    const ScreenConfig screen = screen_path.empty() ? ScreenConfig{} : parse_screen(load_json(screen_path));
    auto [streams, manifest] = load_streams(in_dir);
    std::vector<CandidateEvent> all;
    ScreenStats total;
    for (std::size_t i = 0; i < streams.size(); ++i) {
        auto [events, stats] = screen_stream(streams[i], gmm, screen, static_cast<std::int64_t>(i) * 1000000);
        total.samples_in += stats.samples_in;
        total.samples_uploaded += stats.samples_uploaded;
        total.n_events += stats.n_events;
        all.insert(all.end(), events.begin(), events.end());
    }
    total.reduction_ratio =
        total.samples_in > 0
            ? 1.0 - static_cast<double>(total.samples_uploaded) / static_cast<double>(total.samples_in)
            : 1.0;
    write_events_jsonl(out_path, all);
    if (!stats_path.empty()) {
        ojson s;
        s["samples_in"] = total.samples_in;
        s["samples_uploaded"] = total.samples_uploaded;
        s["n_events"] = total.n_events;
        s["reduction_ratio"] = total.reduction_ratio;
        detail::write_file(stats_path, s.dump(2) + "\n");
    }
    std::printf("screened %zu streams: %lld events, reduction %.4f\n", streams.size(),
                static_cast<long long>(total.n_events), total.reduction_ratio);
    return kExitOk;
}

std::vector<LabeledSequence> windows_from_dir(const fs::path& data_dir, const RunConfig& cfg) {
    if (!fs::is_directory(data_dir)) throw DataError("no such data directory: " + data_dir.string());
    const fs::path win_dir = data_dir / "windows";
    if (fs::exists(win_dir)) {
        std::vector<fs::path> files;
        for (const auto& de : fs::directory_iterator(win_dir))
            if (de.path().extension() == ".seq") files.push_back(de.path());
        std::sort(files.begin(), files.end());
        std::vector<LabeledSequence> out;
        for (const auto& f : files) out.push_back(read_sequence_bin(f));
        if (out.empty()) throw DataError("no .seq windows in " + win_dir.string());
        return out;
    }
    // derive windows from candidate events + stream ground truth
    const fs::path events_path = data_dir / "events.jsonl";
    const fs::path manifest_path =
        fs::exists(data_dir / "manifest.json") ? data_dir / "manifest.json" : data_dir / "streams" / "manifest.json";
    if (!fs::exists(events_path) || !fs::exists(manifest_path))
        throw DataError("data dir must contain windows/ or events.jsonl + manifest.json");
    const auto events = read_events_jsonl(events_path);
    const auto manifest = read_manifest(manifest_path);
    std::unordered_map<std::string, std::vector<LabeledInterval>> gt;
    for (const auto& e : manifest.streams) gt[e.vehicle_id] = e.ground_truth;
    WindowConfig wcfg = cfg.window;
    wcfg.context_left = cfg.screen.context_left;
    wcfg.context_right = cfg.screen.context_right;
    return windows_from_candidates(events, gt, wcfg);
}

int cmd_train(const std::string& mode, const std::string& data_dir, const std::string& config_path,
              const std::string& out_path, const std::string& log_path) {
    RunConfig cfg = load_run_config(config_path);
    if (!mode.empty()) cfg.mode = mode;
    const auto corpus = windows_from_dir(data_dir, cfg);
    std::printf("training on %zu windows (%s)\n", corpus.size(), cfg.mode.c_str());

    if (cfg.mode == "centralized") {
        const auto res = train_centralized(corpus, cfg.net, cfg.loss, cfg.train);
        save_checkpoint(out_path, res.params);
        if (!log_path.empty()) detail::write_file(log_path, e2edetail::centralized_log_csv(res.log));
        std::printf("done: %d epochs, best val acc %.4f, best val event F1 %.4f\n", res.epochs_run,
                    res.best_val_acc, res.best_val_f1);
    } else if (cfg.mode == "federated") {
        const auto split = split_train_val(corpus, cfg.train.val_fraction, cfg.fed.seed);
        std::vector<LabeledSequence> train_set, val_set;
        for (auto i : split.train) train_set.push_back(corpus[i]);
        for (auto i : split.val) val_set.push_back(corpus[i]);
        const auto assignment =
            partition_noniid(train_set, cfg.partition.n_clients, cfg.partition.dirichlet_alpha,
                             SplitMix64::derive(cfg.seed, 0xD117));
        std::vector<std::vector<LabeledSequence>> clients;
        for (const auto& idxs : assignment) {
            std::vector<LabeledSequence> d;
            for (auto i : idxs) d.push_back(train_set[i]);
            clients.push_back(std::move(d));
        }
        const auto res = train_federated(clients, val_set, cfg.net, cfg.loss, cfg.fed);
        save_checkpoint(out_path, res.params);
        if (!log_path.empty())
            detail::write_file(log_path, e2edetail::federated_log_csv(res.rounds, cfg.fed.local_lr));
        std::printf("done: %zu rounds, final val acc %.4f, final val event F1 %.4f\n", res.rounds.size(),
                    res.final_val_acc, res.final_val_f1);
    } else {
        throw ConfigError("train: mode must be centralized or federated");
    }
    return kExitOk;
}

int cmd_infer(const std::string& ckpt_path, const std::string& in_path, const std::string& out_path,
              const std::string& screen_path, int seq_len, int batch) {
    const auto params = load_checkpoint(ckpt_path);
    const ScreenConfig screen = screen_path.empty() ? ScreenConfig{} : parse_screen(load_json(screen_path));
    UNet1D<float> net;
    net.cfg = net_config_from_checkpoint(params, seq_len);
    net.params = params;

    const auto events = read_events_jsonl(in_path);
    WindowConfig wcfg;
    wcfg.seq_len = seq_len;
    wcfg.channels = net.cfg.in_channels;
    wcfg.context_left = screen.context_left;
    wcfg.context_right = screen.context_right;
    const auto windows = windows_from_candidates(events, {}, wcfg);
    const auto preds = infer_windows(net, windows, batch);
    detail::write_file(out_path, predictions_to_jsonl(preds));
    std::printf("inferred %zu windows -> %s\n", preds.size(), out_path.c_str());
    return kExitOk;
}

int cmd_eval(const std::string& pred_path, const std::string& gt_dir, const std::string& out_path,
             const std::string& iou_list) {
    EvalConfig ecfg;
    if (!iou_list.empty()) {
        ecfg.iou_thresholds.clear();
        std::size_t pos = 0;
        while (pos < iou_list.size()) {
            std::size_t comma = iou_list.find(',', pos);
            if (comma == std::string::npos) comma = iou_list.size();
            ecfg.iou_thresholds.push_back(std::stod(iou_list.substr(pos, comma - pos)));
            pos = comma + 1;
        }
    }
    const auto preds = predictions_from_jsonl(detail::read_file(pred_path));
    const fs::path manifest_path = fs::exists(fs::path(gt_dir) / "manifest.json")
                                       ? fs::path(gt_dir) / "manifest.json"
                                       : fs::path(gt_dir) / "streams" / "manifest.json";
    const auto manifest = read_manifest(manifest_path);
    const auto result = evaluate_stream_space(preds, manifest, ecfg);
    auto j = metrics_to_json(result.bundle);
    j["covered_positions"] = result.covered_positions;
    j["total_positions"] = result.total_positions;
    detail::write_file(out_path, j.dump(2) + "\n");
    std::printf("point acc %.4f | event macro F1@0.5 %.4f -> %s\n", result.bundle.point.accuracy,
                result.bundle.at_iou(0.5).macro_f1, out_path.c_str());
    return kExitOk;
}

int cmd_report(const std::string& metrics_path, const std::string& out_dir) {
    const auto j = load_json(metrics_path);
    fs::create_directories(out_dir);
    const auto g = [](const ojson& v) { return e2edetail::fmt_g(v.get<double>()); };

    std::string thr = "iou_threshold,precision,recall,f1,macro_f1,weighted_f1,mean_iou\n";
    for (const auto& e : j.at("event"))
        thr += g(e.at("iou_threshold")) + "," + g(e.at("precision")) + "," + g(e.at("recall")) + "," +
               g(e.at("f1")) + "," + g(e.at("macro_f1")) + "," + g(e.at("weighted_f1")) + "," +
               g(e.at("mean_iou")) + "\n";
    detail::write_file(fs::path(out_dir) / "event_f1_by_threshold.csv", thr);

    std::string pc = "class,precision,recall,f1,support\n";
    for (const auto& c : j.at("point").at("per_class"))
        pc += c.at("class").get<std::string>() + "," + g(c.at("precision")) + "," + g(c.at("recall")) + "," +
              g(c.at("f1")) + "," + std::to_string(c.at("support").get<std::int64_t>()) + "\n";
    detail::write_file(fs::path(out_dir) / "point_per_class.csv", pc);

    {
        std::string cm = "true\\pred,normal,manhole,speed_bump,pothole\n";
        const auto& conf = j.at("point").at("confusion");
        const char* names[] = {"normal", "manhole", "speed_bump", "pothole"};
        for (int r = 0; r < kNumClasses; ++r) {
            cm += names[r];
            for (int c = 0; c < kNumClasses; ++c)
                cm += "," + std::to_string(conf[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<std::int64_t>());
            cm += "\n";
        }
        detail::write_file(fs::path(out_dir) / "point_confusion.csv", cm);
    }

    for (const auto& e : j.at("event")) {
        const double t = e.at("iou_threshold").get<double>();
        char name[64];
        std::snprintf(name, sizeof(name), "event_confusion_iou%02d.csv", static_cast<int>(t * 100 + 0.5));
        std::string cm = "true\\pred,normal,manhole,speed_bump,pothole,miss\n";
        const char* names[] = {"normal", "manhole", "speed_bump", "pothole", "false_alarm"};
        const auto& conf = e.at("confusion");
        for (int r = 0; r < kEventConfusionDim; ++r) {
            cm += names[r];
            for (int c = 0; c < kEventConfusionDim; ++c)
                cm += "," + std::to_string(conf[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<std::int64_t>());
            cm += "\n";
        }
        detail::write_file(fs::path(out_dir) / name, cm);
    }
    std::printf("report CSVs written to %s\n", out_dir.c_str());
    return kExitOk;
}

int cmd_e2e(const std::string& config_path, const std::string& out_dir) {
    const RunConfig cfg = load_run_config(config_path);
    const auto summary = run_e2e(cfg, out_dir);
    std::printf("%s\n", summary.dump(2).c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"road vibration event screening and temporal segmentation pipeline"};
    app.require_subcommand(1);
    int jobs = 0;
    app.add_option("--jobs", jobs, "cap worker threads (default: hardware)");

    std::string config_path, out_path, in_path, gmm_path, screen_path, stats_path, mode, data_dir,
        ckpt_path, log_path, gt_dir, iou_list, metrics_path;
    int seq_len = 512, batch = 32;
    bool print_defaults = false;

    auto* synth = app.add_subcommand("synth", "generate synthetic vibration streams");
    synth->add_option("--config", config_path, "run config JSON");
    synth->add_option("--out", out_path, "output directory")->required();

    auto* screen = app.add_subcommand("screen", "onboard GMM candidate-event screening");
    screen->add_option("--in", in_path, "directory of stream CSVs (+ manifest.json)")->required();
    screen->add_option("--out", out_path, "output events JSONL")->required();
    screen->add_option("--gmm-config", gmm_path, "GMM config JSON");
    screen->add_option("--screen-config", screen_path, "screening config JSON");
    screen->add_option("--stats", stats_path, "stats JSON output");

    auto* train = app.add_subcommand("train", "train the segmentation model");
    train->add_option("--mode", mode, "centralized|federated");
    train->add_option("--data", data_dir, "data directory (windows/ or events.jsonl + manifest.json)")->required();
    train->add_option("--config", config_path, "run config JSON");
    train->add_option("--out", ckpt_path, "checkpoint output")->required();
    train->add_option("--log", log_path, "training log CSV");

    auto* infer = app.add_subcommand("infer", "point-wise inference over candidate events");
    infer->add_option("--ckpt", ckpt_path, "checkpoint")->required();
    infer->add_option("--in", in_path, "events JSONL")->required();
    infer->add_option("--out", out_path, "predictions JSONL")->required();
    infer->add_option("--screen-config", screen_path, "screening config used to produce the events");
    infer->add_option("--seq-len", seq_len, "window length (default 512)");
    infer->add_option("--batch", batch, "inference batch size");

    auto* eval = app.add_subcommand("eval", "event-level evaluation against ground truth");
    eval->add_option("--pred", in_path, "predictions JSONL")->required();
    eval->add_option("--gt", gt_dir, "directory with manifest.json ground truth")->required();
    eval->add_option("--out", out_path, "metrics JSON output")->required();
    eval->add_option("--iou", iou_list, "comma-separated IoU thresholds (default 0.1,0.3,0.5,0.7)");

    auto* report = app.add_subcommand("report", "plot-ready CSV tables from metrics JSON");
    report->add_option("--metrics", metrics_path, "metrics JSON")->required();
    report->add_option("--out", out_path, "output directory")->required();

    auto* e2e = app.add_subcommand("e2e", "full pipeline: synth, screen, train, infer, eval");
    e2e->add_option("--config", config_path, "run config JSON");
    e2e->add_option("--out", out_path, "output directory")->required();
    e2e->add_flag("--print-defaults", print_defaults, "print the default config JSON and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        set_jobs(jobs);
        if (print_defaults) {
            std::printf("%s\n", dump_run_config(RunConfig{}).dump(2).c_str());
            return kExitOk;
        }
        if (synth->parsed()) return cmd_synth(config_path, out_path);
        if (screen->parsed()) return cmd_screen(in_path, out_path, gmm_path, screen_path, stats_path);
        if (train->parsed()) return cmd_train(mode, data_dir, config_path, ckpt_path, log_path);
        if (infer->parsed()) return cmd_infer(ckpt_path, in_path, out_path, screen_path, seq_len, batch);
        if (eval->parsed()) return cmd_eval(in_path, gt_dir, out_path, iou_list);
        if (report->parsed()) return cmd_report(metrics_path, out_path);
        if (e2e->parsed()) return cmd_e2e(config_path, out_path);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return kExitData;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
    return kExitOk;
}
