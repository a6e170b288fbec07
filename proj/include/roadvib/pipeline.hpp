#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "roadvib/federated.hpp"
#include "roadvib/io.hpp"
#include "roadvib/screen.hpp"
#include "roadvib/synth.hpp"
#include "roadvib/train.hpp"

namespace roadvib {

namespace cfgdetail {

inline void check_keys(const ojson& j, const std::set<std::string>& allowed, const std::string& ctx) {
    if (!j.is_object()) throw ConfigError(ctx + ": expected a JSON object");
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key)) throw ConfigError(ctx + ": unknown key '" + key + "'");
}

template <typename T>
void get(const ojson& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace cfgdetail

// --- per-block parse/dump ----------------------------------------------------

inline SynthConfig parse_synth(const ojson& j) {
    cfgdetail::check_keys(j, {"seed", "n_streams", "stream_len", "sample_rate_hz", "bg_sigma_min",
                              "bg_sigma_max", "bg_saturation", "bg_mod_depth", "bg_mod_period",
                              "events_per_stream", "class_mix", "speed_min", "speed_max",
                              "min_event_start", "min_event_gap", "pothole_dur", "pothole_amp",
                              "manhole_dur", "speed_bump_amp"},
                         "synth");
    SynthConfig c;
    cfgdetail::get(j, "seed", c.seed);
    cfgdetail::get(j, "n_streams", c.n_streams);
    cfgdetail::get(j, "stream_len", c.stream_len);
    cfgdetail::get(j, "sample_rate_hz", c.sample_rate_hz);
    cfgdetail::get(j, "bg_sigma_min", c.bg_sigma_min);
    cfgdetail::get(j, "bg_sigma_max", c.bg_sigma_max);
    cfgdetail::get(j, "bg_saturation", c.bg_saturation);
    cfgdetail::get(j, "bg_mod_depth", c.bg_mod_depth);
    cfgdetail::get(j, "bg_mod_period", c.bg_mod_period);
    cfgdetail::get(j, "events_per_stream", c.events_per_stream);
    cfgdetail::get(j, "class_mix", c.class_mix);
    cfgdetail::get(j, "speed_min", c.speed_min);
    cfgdetail::get(j, "speed_max", c.speed_max);
    cfgdetail::get(j, "min_event_start", c.min_event_start);
    cfgdetail::get(j, "min_event_gap", c.min_event_gap);
    if (j.contains("pothole_dur")) {
        const auto v = j.at("pothole_dur").get<std::vector<std::int64_t>>();
        if (v.size() != 2) throw ConfigError("synth: pothole_dur must be [min,max]");
        c.pothole.dur_min = v[0];
        c.pothole.dur_max = v[1];
    }
    if (j.contains("pothole_amp")) {
        const auto v = j.at("pothole_amp").get<std::vector<double>>();
        if (v.size() != 2) throw ConfigError("synth: pothole_amp must be [min,max]");
        c.pothole.amp_min = v[0];
        c.pothole.amp_max = v[1];
    }
    if (j.contains("manhole_dur")) {
        const auto v = j.at("manhole_dur").get<std::vector<std::int64_t>>();
        if (v.size() != 2) throw ConfigError("synth: manhole_dur must be [min,max]");
        c.manhole.dur_min = v[0];
        c.manhole.dur_max = v[1];
    }
    if (j.contains("speed_bump_amp")) {
        const auto v = j.at("speed_bump_amp").get<std::vector<double>>();
        if (v.size() != 2) throw ConfigError("synth: speed_bump_amp must be [min,max]");
        c.speed_bump.amp_min = v[0];
        c.speed_bump.amp_max = v[1];
    }
    c.validate();
    return c;
}

inline ojson dump_synth(const SynthConfig& c) {
    ojson j;
    j["seed"] = c.seed;
    j["n_streams"] = c.n_streams;
    j["stream_len"] = c.stream_len;
    j["sample_rate_hz"] = c.sample_rate_hz;
    j["bg_sigma_min"] = c.bg_sigma_min;
    j["bg_sigma_max"] = c.bg_sigma_max;
    j["bg_saturation"] = c.bg_saturation;
    j["bg_mod_depth"] = c.bg_mod_depth;
    j["bg_mod_period"] = c.bg_mod_period;
    j["events_per_stream"] = c.events_per_stream;
    j["class_mix"] = c.class_mix;
    j["speed_min"] = c.speed_min;
    j["speed_max"] = c.speed_max;
    j["min_event_start"] = c.min_event_start;
    j["min_event_gap"] = c.min_event_gap;
    j["pothole_dur"] = {c.pothole.dur_min, c.pothole.dur_max};
    j["pothole_amp"] = {c.pothole.amp_min, c.pothole.amp_max};
    j["manhole_dur"] = {c.manhole.dur_min, c.manhole.dur_max};
    j["speed_bump_amp"] = {c.speed_bump.amp_min, c.speed_bump.amp_max};
    return j;
}

inline GmmConfig parse_gmm(const ojson& j) {
    cfgdetail::check_keys(j, {"k", "alpha", "rho", "m_match", "m_event", "sigma0_sq", "omega0", "t_b",
                              "warmup", "var_floor"},
                         "gmm");
    GmmConfig c;
    cfgdetail::get(j, "k", c.k);
    cfgdetail::get(j, "alpha", c.alpha);
    cfgdetail::get(j, "rho", c.rho);
    cfgdetail::get(j, "m_match", c.m_match);
    cfgdetail::get(j, "m_event", c.m_event);
    cfgdetail::get(j, "sigma0_sq", c.sigma0_sq);
    cfgdetail::get(j, "omega0", c.omega0);
    cfgdetail::get(j, "t_b", c.t_b);
    cfgdetail::get(j, "warmup", c.warmup);
    cfgdetail::get(j, "var_floor", c.var_floor);
    c.validate();
    return c;
}

inline ojson dump_gmm(const GmmConfig& c) {
    ojson j;
    j["k"] = c.k;
    j["alpha"] = c.alpha;
    j["rho"] = c.rho;
    j["m_match"] = c.m_match;
    j["m_event"] = c.m_event;
    j["sigma0_sq"] = c.sigma0_sq;
    j["omega0"] = c.omega0;
    j["t_b"] = c.t_b;
    j["warmup"] = c.warmup;
    j["var_floor"] = c.var_floor;
    return j;
}

inline ScreenConfig parse_screen(const ojson& j) {
    cfgdetail::check_keys(j, {"merge_gap", "min_interval", "context_left", "context_right"}, "screen");
    ScreenConfig c;
    cfgdetail::get(j, "merge_gap", c.merge_gap);
    cfgdetail::get(j, "min_interval", c.min_interval);
    cfgdetail::get(j, "context_left", c.context_left);
    cfgdetail::get(j, "context_right", c.context_right);
    c.validate();
    return c;
}

inline ojson dump_screen(const ScreenConfig& c) {
    ojson j;
    j["merge_gap"] = c.merge_gap;
    j["min_interval"] = c.min_interval;
    j["context_left"] = c.context_left;
    j["context_right"] = c.context_right;
    return j;
}

inline WindowConfig parse_window(const ojson& j) {
    cfgdetail::check_keys(j, {"seq_len", "channels", "context_left", "context_right"}, "window");
    WindowConfig c;
    cfgdetail::get(j, "seq_len", c.seq_len);
    cfgdetail::get(j, "channels", c.channels);
    cfgdetail::get(j, "context_left", c.context_left);
    cfgdetail::get(j, "context_right", c.context_right);
    c.validate();
    return c;
}

inline ojson dump_window(const WindowConfig& c) {
    ojson j;
    j["seq_len"] = c.seq_len;
    j["channels"] = c.channels;
    j["context_left"] = c.context_left;
    j["context_right"] = c.context_right;
    return j;
}

inline NetConfig parse_net(const ojson& j) {
    cfgdetail::check_keys(j, {"in_channels", "n_classes", "channels", "kernel", "attn_reduction", "seq_len"},
                         "net");
    NetConfig c;
    cfgdetail::get(j, "in_channels", c.in_channels);
    cfgdetail::get(j, "n_classes", c.n_classes);
    cfgdetail::get(j, "channels", c.channels);
    cfgdetail::get(j, "kernel", c.kernel);
    cfgdetail::get(j, "attn_reduction", c.attn_reduction);
    cfgdetail::get(j, "seq_len", c.seq_len);
    c.validate();
    return c;
}

inline ojson dump_net(const NetConfig& c) {
    ojson j;
    j["in_channels"] = c.in_channels;
    j["n_classes"] = c.n_classes;
    j["channels"] = c.channels;
    j["kernel"] = c.kernel;
    j["attn_reduction"] = c.attn_reduction;
    j["seq_len"] = c.seq_len;
    return j;
}

inline LossConfig parse_loss(const ojson& j) {
    cfgdetail::check_keys(j, {"alpha", "auto_alpha", "gamma", "eps", "lambda_fp", "beta_fn", "eta"}, "loss");
    LossConfig c;
    cfgdetail::get(j, "alpha", c.alpha);
    cfgdetail::get(j, "auto_alpha", c.auto_alpha);
    cfgdetail::get(j, "gamma", c.gamma);
    cfgdetail::get(j, "eps", c.eps);
    cfgdetail::get(j, "lambda_fp", c.lambda_fp);
    cfgdetail::get(j, "beta_fn", c.beta_fn);
    cfgdetail::get(j, "eta", c.eta);
    c.validate();
    return c;
}

inline ojson dump_loss(const LossConfig& c) {
    ojson j;
    j["alpha"] = c.alpha;
    j["auto_alpha"] = c.auto_alpha;
    j["gamma"] = c.gamma;
    j["eps"] = c.eps;
    j["lambda_fp"] = c.lambda_fp;
    j["beta_fn"] = c.beta_fn;
    j["eta"] = c.eta;
    return j;
}

inline TrainConfig parse_train(const ojson& j) {
    cfgdetail::check_keys(j, {"epochs", "batch_size", "lr0", "patience", "val_fraction", "seed"}, "train");
    TrainConfig c;
    cfgdetail::get(j, "epochs", c.epochs);
    cfgdetail::get(j, "batch_size", c.batch_size);
    cfgdetail::get(j, "lr0", c.lr0);
    cfgdetail::get(j, "patience", c.patience);
    cfgdetail::get(j, "val_fraction", c.val_fraction);
    cfgdetail::get(j, "seed", c.seed);
    c.validate();
    return c;
}

inline ojson dump_train(const TrainConfig& c) {
    ojson j;
    j["epochs"] = c.epochs;
    j["batch_size"] = c.batch_size;
    j["lr0"] = c.lr0;
    j["patience"] = c.patience;
    j["val_fraction"] = c.val_fraction;
    j["seed"] = c.seed;
    return j;
}

struct PartitionConfig {
    int n_clients = 10;
    double dirichlet_alpha = 0.5;
};

inline FedConfig parse_fed(const ojson& j, PartitionConfig* part = nullptr) {
    cfgdetail::check_keys(j, {"clients_per_round", "rounds", "local_epochs", "local_lr", "batch_size",
                              "seed", "n_clients", "dirichlet_alpha"},
                         "fed");
    FedConfig c;
    cfgdetail::get(j, "clients_per_round", c.clients_per_round);
    cfgdetail::get(j, "rounds", c.rounds);
    cfgdetail::get(j, "local_epochs", c.local_epochs);
    cfgdetail::get(j, "local_lr", c.local_lr);
    cfgdetail::get(j, "batch_size", c.batch_size);
    cfgdetail::get(j, "seed", c.seed);
    if (part) {
        cfgdetail::get(j, "n_clients", part->n_clients);
        cfgdetail::get(j, "dirichlet_alpha", part->dirichlet_alpha);
    }
    return c;
}

inline ojson dump_fed(const FedConfig& c, const PartitionConfig& part) {
    ojson j;
    j["n_clients"] = part.n_clients;
    j["dirichlet_alpha"] = part.dirichlet_alpha;
    j["clients_per_round"] = c.clients_per_round;
    j["rounds"] = c.rounds;
    j["local_epochs"] = c.local_epochs;
    j["local_lr"] = c.local_lr;
    j["batch_size"] = c.batch_size;
    j["seed"] = c.seed;
    return j;
}

struct EvalConfig {
    std::vector<double> iou_thresholds{0.1, 0.3, 0.5, 0.7};
    int mode_window = 11;
    std::int64_t min_len = 10;
    double conf_threshold = 0.5;
};

inline EvalConfig parse_eval(const ojson& j) {
    cfgdetail::check_keys(j, {"iou_thresholds", "mode_window", "min_len", "conf_threshold"}, "eval");
    EvalConfig c;
    cfgdetail::get(j, "iou_thresholds", c.iou_thresholds);
    cfgdetail::get(j, "mode_window", c.mode_window);
    cfgdetail::get(j, "min_len", c.min_len);
    cfgdetail::get(j, "conf_threshold", c.conf_threshold);
    return c;
}

inline ojson dump_eval(const EvalConfig& c) {
    ojson j;
    j["iou_thresholds"] = c.iou_thresholds;
    j["mode_window"] = c.mode_window;
    j["min_len"] = c.min_len;
    j["conf_threshold"] = c.conf_threshold;
    return j;
}

// --- full run configuration ---------------------------------------------------

struct RunConfig {
    std::uint64_t seed = 1;
    std::string mode = "centralized";  // or "federated"
    SynthConfig synth;
    GmmConfig gmm;
    ScreenConfig screen;
    WindowConfig window;
    NetConfig net;
    LossConfig loss;
    TrainConfig train;
    FedConfig fed;
    PartitionConfig partition;
    EvalConfig eval;
};

inline RunConfig parse_run_config(const ojson& j) {
    cfgdetail::check_keys(
        j, {"seed", "mode", "synth", "gmm", "screen", "window", "net", "loss", "train", "fed", "eval"},
        "config");
    RunConfig c;
    cfgdetail::get(j, "seed", c.seed);
    cfgdetail::get(j, "mode", c.mode);
    if (c.mode != "centralized" && c.mode != "federated")
        throw ConfigError("config: mode must be 'centralized' or 'federated'");
    if (j.contains("synth")) c.synth = parse_synth(j.at("synth"));
    if (j.contains("gmm")) c.gmm = parse_gmm(j.at("gmm"));
    if (j.contains("screen")) c.screen = parse_screen(j.at("screen"));
    if (j.contains("window")) c.window = parse_window(j.at("window"));
    if (j.contains("net")) c.net = parse_net(j.at("net"));
    if (j.contains("loss")) c.loss = parse_loss(j.at("loss"));
    if (j.contains("train")) c.train = parse_train(j.at("train"));
    if (j.contains("fed")) c.fed = parse_fed(j.at("fed"), &c.partition);
    if (j.contains("eval")) c.eval = parse_eval(j.at("eval"));

    // the global seed drives every stage unless a block overrides its own
    if (!j.contains("synth") || !j.at("synth").contains("seed")) c.synth.seed = c.seed;
    if (!j.contains("train") || !j.at("train").contains("seed"))
        c.train.seed = SplitMix64::derive(c.seed, 0x7Ea1);
    if (!j.contains("fed") || !j.at("fed").contains("seed"))
        c.fed.seed = SplitMix64::derive(c.seed, 0x7Ea1);
    if (c.window.seq_len != c.net.seq_len) throw ConfigError("config: window.seq_len must equal net.seq_len");
    if (c.window.channels != c.net.in_channels)
        throw ConfigError("config: window.channels must equal net.in_channels");
    return c;
}

inline ojson dump_run_config(const RunConfig& c) {
    ojson j;
    j["seed"] = c.seed;
    j["mode"] = c.mode;
    j["synth"] = dump_synth(c.synth);
    j["gmm"] = dump_gmm(c.gmm);
    j["screen"] = dump_screen(c.screen);
    j["window"] = dump_window(c.window);
    j["net"] = dump_net(c.net);
    j["loss"] = dump_loss(c.loss);
    j["train"] = dump_train(c.train);
    j["fed"] = dump_fed(c.fed, c.partition);
    j["eval"] = dump_eval(c.eval);
    return j;
}

// --- prediction records --------------------------------------------------------

struct WindowPrediction {
    std::string vehicle_id;
    std::int64_t event_id = 0;
    std::int64_t window_start = 0;
    std::vector<std::uint8_t> labels;
    ProbTrack probs;  // full per-class probabilities per position
};

inline ojson prediction_to_json(const WindowPrediction& p) {
    ojson j;
    j["vehicle_id"] = p.vehicle_id;
    j["event_id"] = p.event_id;
    j["window_start"] = p.window_start;
    j["labels"] = p.labels;
    ojson maxp = ojson::array();
    ojson probs = ojson::array();
    for (int c = 0; c < kNumClasses; ++c) {
        ojson row = ojson::array();
        for (const auto& col : p.probs) row.push_back(quantize(col[static_cast<std::size_t>(c)], 1e5));
        probs.push_back(std::move(row));
    }
    for (std::size_t l = 0; l < p.probs.size(); ++l)
        maxp.push_back(quantize(p.probs[l][p.labels[l]], 1e5));
    j["max_prob"] = std::move(maxp);
    j["probs"] = std::move(probs);
    return j;
}

inline WindowPrediction prediction_from_json(const ojson& j) {
    WindowPrediction p;
    p.vehicle_id = j.at("vehicle_id").get<std::string>();
    p.event_id = j.at("event_id").get<std::int64_t>();
    p.window_start = j.at("window_start").get<std::int64_t>();
    p.labels = j.at("labels").get<std::vector<std::uint8_t>>();
    const auto& pr = j.at("probs");
    if (!pr.is_array() || pr.size() != kNumClasses) throw DataError("prediction probs must have 4 rows");
    p.probs.assign(p.labels.size(), {});
    for (int c = 0; c < kNumClasses; ++c) {
        const auto row = pr[static_cast<std::size_t>(c)].get<std::vector<double>>();
        if (row.size() != p.labels.size()) throw DataError("prediction probs row length mismatch");
        for (std::size_t l = 0; l < row.size(); ++l)
            p.probs[l][static_cast<std::size_t>(c)] = static_cast<float>(row[l]);
    }
    return p;
}

inline std::string predictions_to_jsonl(const std::vector<WindowPrediction>& preds) {
    std::string out;
    for (const auto& p : preds) {
        out += prediction_to_json(p).dump();
        out += '\n';
    }
    return out;
}

inline std::vector<WindowPrediction> predictions_from_jsonl(const std::string& text) {
    std::vector<WindowPrediction> out;
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string_view line(text.data() + pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(prediction_from_json(ojson::parse(line)));
        } catch (const ojson::exception& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

/// Run the model over candidate-event windows.
inline std::vector<WindowPrediction> infer_windows(UNet1D<float>& net,
                                                   const std::vector<LabeledSequence>& windows,
                                                   int batch_size = 32) {
    std::vector<WindowPrediction> preds;
    std::vector<std::size_t> idx(windows.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t b = 0; b < idx.size(); b += static_cast<std::size_t>(batch_size)) {
        const std::size_t e = std::min(idx.size(), b + static_cast<std::size_t>(batch_size));
        Tensor<float> x;
        std::vector<std::uint8_t> y;
        traindetail::fill_batch(windows, idx, b, e, x, y);
        UNetCache<float> cache;
        const auto probs = net.forward(x, false, cache);
        const auto labels = predict_labels(probs);
        const std::int64_t L = x.dim(2);
        for (std::size_t n = 0; n < labels.size(); ++n) {
            const auto& w = windows[b + n];
            WindowPrediction p;
            p.vehicle_id = w.meta.vehicle_id;
            // meta ids look like "veh000/ev12"; keep the numeric suffix when present
            const auto pos_ev = w.meta.id.rfind("ev");
            p.event_id = pos_ev == std::string::npos
                             ? static_cast<std::int64_t>(b + n)
                             : std::strtoll(w.meta.id.c_str() + pos_ev + 2, nullptr, 10);
            p.window_start = w.meta.window_start;
            p.labels = labels[n];
            p.probs.assign(static_cast<std::size_t>(L), {});
            for (std::int64_t l = 0; l < L; ++l)
                for (int c = 0; c < kNumClasses; ++c)
                    p.probs[static_cast<std::size_t>(l)][static_cast<std::size_t>(c)] =
                        static_cast<float>(probs.at(static_cast<std::int64_t>(n), c, l));
            preds.push_back(std::move(p));
        }
    }
    return preds;
}

// --- stream-space evaluation ----------------------------------------------------

struct StreamEvalResult {
    MetricsBundle bundle;
    std::int64_t covered_positions = 0;
    std::int64_t total_positions = 0;
};

/// Paste window predictions into per-stream tracks (first write wins on the
/// rare overlaps), post-process, and score against the manifest ground truth.
/// Point metrics cover pasted positions; event metrics see the whole stream,
/// so ground-truth events never screened count as misses.
inline StreamEvalResult evaluate_stream_space(const std::vector<WindowPrediction>& preds,
                                              const CorpusManifest& manifest, const EvalConfig& cfg) {
    StreamEvalResult result;
    std::vector<std::uint8_t> point_pred, point_true;
    std::vector<std::vector<LabeledInterval>> pred_events, gt_events;

    std::unordered_map<std::string, std::vector<const WindowPrediction*>> by_vehicle;
    for (const auto& p : preds) by_vehicle[p.vehicle_id].push_back(&p);

    for (const auto& entry : manifest.streams) {
        const auto T = static_cast<std::size_t>(entry.length);
        std::vector<std::uint8_t> track(T, 0);
        ProbTrack probs(T, {1.0f, 0.0f, 0.0f, 0.0f});
        std::vector<char> covered(T, 0);

        auto it = by_vehicle.find(entry.vehicle_id);
        if (it != by_vehicle.end()) {
            auto windows = it->second;
            std::sort(windows.begin(), windows.end(),
                      [](const WindowPrediction* a, const WindowPrediction* b) {
                          return a->event_id < b->event_id;
                      });
            for (const auto* w : windows) {
                const auto filtered = mode_filter(w->labels, cfg.mode_window);
                for (std::size_t l = 0; l < filtered.size(); ++l) {
                    const std::int64_t t = w->window_start + static_cast<std::int64_t>(l);
                    if (t < 0 || t >= entry.length) continue;
                    const auto tt = static_cast<std::size_t>(t);
                    if (covered[tt]) continue;  // first write wins
                    covered[tt] = 1;
                    track[tt] = filtered[l];
                    probs[tt] = w->probs[l];
                }
            }
        }

        const auto reports = extract_events(track, probs, cfg.min_len, cfg.conf_threshold);
        std::vector<LabeledInterval> pev;
        for (const auto& r : reports) pev.push_back(r.interval());
        pred_events.push_back(std::move(pev));
        gt_events.push_back(entry.ground_truth);

        std::vector<std::uint8_t> truth(T, 0);
        for (const auto& g : entry.ground_truth)
            for (std::int64_t t = g.start; t < g.end; ++t)
                truth[static_cast<std::size_t>(t)] = static_cast<std::uint8_t>(g.cls);
        for (std::size_t t = 0; t < T; ++t) {
            if (!covered[t]) continue;
            point_pred.push_back(track[t]);
            point_true.push_back(truth[t]);
            ++result.covered_positions;
        }
        result.total_positions += entry.length;
    }
    result.bundle = compute_metrics(point_pred, point_true, pred_events, gt_events, cfg.iou_thresholds);
    return result;
}

inline ojson point_metrics_to_json(const PointMetrics& m) {
    ojson j;
    j["accuracy"] = m.accuracy;
    j["macro_f1"] = m.macro_f1;
    j["weighted_f1"] = m.weighted_f1;
    ojson per = ojson::array();
    for (int c = 0; c < kNumClasses; ++c)
        per.push_back({{"class", to_string(static_cast<RoadClass>(c))},
                       {"precision", m.precision[static_cast<std::size_t>(c)]},
                       {"recall", m.recall[static_cast<std::size_t>(c)]},
                       {"f1", m.f1[static_cast<std::size_t>(c)]},
                       {"support", m.support[static_cast<std::size_t>(c)]}});
    j["per_class"] = std::move(per);
    j["confusion"] = m.confusion;
    return j;
}

inline ojson event_metrics_to_json(const EventMetricsAtThreshold& m) {
    ojson j;
    j["iou_threshold"] = m.iou_threshold;
    j["n_matched"] = m.n_matched;
    j["n_pred"] = m.n_pred;
    j["n_gt"] = m.n_gt;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f1"] = m.f1;
    j["macro_f1"] = m.macro_f1;
    j["weighted_f1"] = m.weighted_f1;
    j["mean_iou"] = m.mean_iou;
    ojson per = ojson::array();
    for (int c = 0; c < kNumClasses; ++c)
        per.push_back({{"class", to_string(static_cast<RoadClass>(c))},
                       {"precision", m.class_precision[static_cast<std::size_t>(c)]},
                       {"recall", m.class_recall[static_cast<std::size_t>(c)]},
                       {"f1", m.class_f1[static_cast<std::size_t>(c)]},
                       {"n_pred", m.class_pred[static_cast<std::size_t>(c)]},
                       {"n_gt", m.class_gt[static_cast<std::size_t>(c)]},
                       {"n_matched", m.class_matched[static_cast<std::size_t>(c)]}});
    j["per_class"] = std::move(per);
    j["confusion"] = m.confusion;  // rows: gt classes + false-alarm, cols: pred classes + miss
    return j;
}

inline ojson metrics_to_json(const MetricsBundle& b) {
    ojson j;
    j["point"] = point_metrics_to_json(b.point);
    j["event"] = ojson::array();
    for (const auto& e : b.event) j["event"].push_back(event_metrics_to_json(e));
    return j;
}

}  // namespace roadvib
