#pragma once

#include <algorithm>
#include <string>
#include <unordered_map>
#include <vector>

#include "roadvib/rng.hpp"
#include "roadvib/types.hpp"
#include "roadvib/window.hpp"

namespace roadvib {

struct WindowConfig {
    int seq_len = 512;
    int channels = 1;  // 1: vertical axis only; 3: all axes
    std::int64_t context_left = 64;
    std::int64_t context_right = 64;

    void validate() const {
        if (channels != 1 && channels != 3) throw ConfigError("window: channels must be 1 or 3");
        if (seq_len < 8) throw ConfigError("window: seq_len too small");
    }
};

namespace detail_ds {

inline void paint_labels(std::vector<std::uint8_t>& y, std::int64_t span_start,
                         const std::vector<LabeledInterval>& gt) {
    const auto len = static_cast<std::int64_t>(y.size());
    for (const auto& g : gt) {
        const std::int64_t lo = std::max<std::int64_t>(0, g.start - span_start);
        const std::int64_t hi = std::min<std::int64_t>(len, g.end - span_start);
        for (std::int64_t l = lo; l < hi; ++l) y[static_cast<std::size_t>(l)] = static_cast<std::uint8_t>(g.cls);
    }
}

}  // namespace detail_ds

/// Fixed-length normalized window cut around a sample span of a stream, with
/// point labels painted from the stream's ground truth.
inline LabeledSequence window_from_span(const SensingStream& stream, std::int64_t span_start,
                                        std::int64_t span_end, const WindowConfig& cfg,
                                        const std::string& id) {
    cfg.validate();
    const std::int64_t T = stream.size();
    span_start = std::max<std::int64_t>(0, span_start);
    span_end = std::min<std::int64_t>(T, span_end);
    if (span_end <= span_start) throw DataError("empty-segment");
    const auto len = static_cast<int>(span_end - span_start);

    LabeledSequence seq;
    seq.channels = cfg.channels;
    seq.length = len;
    seq.x.resize(static_cast<std::size_t>(cfg.channels) * len);
    seq.y.assign(static_cast<std::size_t>(len), 0);
    for (int l = 0; l < len; ++l) {
        const auto& r = stream.records[static_cast<std::size_t>(span_start + l)];
        if (cfg.channels == 1) {
            seq.at(0, l) = r.accel[2];
        } else {
            for (int c = 0; c < 3; ++c) seq.at(c, l) = r.accel[static_cast<std::size_t>(c)];
        }
    }
    detail_ds::paint_labels(seq.y, span_start, stream.ground_truth);

    const auto& mid = stream.records[static_cast<std::size_t>((span_start + span_end - 1) / 2)];
    seq.meta.id = id;
    seq.meta.vehicle_id = stream.vehicle_id;
    seq.meta.timestamp = mid.timestamp;
    seq.meta.lat = mid.lat;
    seq.meta.lon = mid.lon;
    seq.meta.speed = mid.speed;
    seq.meta.window_start = span_start;

    return normalize(to_fixed_length(seq, cfg.seq_len));
}

/// Training corpus cut directly around ground-truth events (one window each).
inline std::vector<LabeledSequence> windows_from_ground_truth(const std::vector<SensingStream>& streams,
                                                              const WindowConfig& cfg) {
    std::vector<LabeledSequence> out;
    for (const auto& s : streams) {
        int idx = 0;
        for (const auto& g : s.ground_truth) {
            const auto id = s.vehicle_id + "/gt" + std::to_string(idx++);
            out.push_back(window_from_span(s, g.start - cfg.context_left, g.end + cfg.context_right, cfg, id));
        }
    }
    return out;
}

/// Windows for uploaded candidate events, labeled from per-vehicle ground
/// truth. context_left must match the screener configuration that produced
/// the packets (it anchors the segment in stream coordinates).
inline std::vector<LabeledSequence> windows_from_candidates(
    const std::vector<CandidateEvent>& events,
    const std::unordered_map<std::string, std::vector<LabeledInterval>>& gt_by_vehicle,
    const WindowConfig& cfg) {
    cfg.validate();
    std::vector<LabeledSequence> out;
    static const std::vector<LabeledInterval> kEmpty;
    for (const auto& ev : events) {
        const auto len = static_cast<int>(ev.seg_len());
        if (len < 1) continue;
        LabeledSequence seq;
        seq.channels = cfg.channels;
        seq.length = len;
        seq.x.resize(static_cast<std::size_t>(cfg.channels) * len);
        seq.y.assign(static_cast<std::size_t>(len), 0);
        for (int l = 0; l < len; ++l) {
            if (cfg.channels == 1) {
                seq.at(0, l) = ev.accel[2][static_cast<std::size_t>(l)];
            } else {
                for (int c = 0; c < 3; ++c) seq.at(c, l) = ev.accel[static_cast<std::size_t>(c)][static_cast<std::size_t>(l)];
            }
        }
        const std::int64_t span_start = ev.seg_start(cfg.context_left);
        const auto it = gt_by_vehicle.find(ev.vehicle_id);
        detail_ds::paint_labels(seq.y, span_start, it != gt_by_vehicle.end() ? it->second : kEmpty);

        seq.meta.id = ev.vehicle_id + "/ev" + std::to_string(ev.event_id);
        seq.meta.vehicle_id = ev.vehicle_id;
        seq.meta.timestamp = ev.timestamp;
        seq.meta.lat = ev.lat;
        seq.meta.lon = ev.lon;
        seq.meta.speed = ev.speed;
        seq.meta.window_start = span_start;
        out.push_back(normalize(to_fixed_length(seq, cfg.seq_len)));
    }
    return out;
}

/// Deterministic 80/20-style split keyed by hashed sequence ids (leakage-free,
/// stable under corpus reordering when ids are unique).
struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
};

inline SplitIndices split_train_val(const std::vector<LabeledSequence>& corpus, double val_fraction,
                                    std::uint64_t seed) {
    if (corpus.empty()) throw DataError("split: empty corpus");
    std::vector<std::size_t> order(corpus.size());
    std::vector<std::uint64_t> keys(corpus.size());
    const std::uint64_t salt = SplitMix64::derive(seed, 0x5eed);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        order[i] = i;
        keys[i] = SplitMix64::mix64(SplitMix64::fnv1a(corpus[i].meta.id) + salt);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (keys[a] != keys[b]) return keys[a] < keys[b];
        return corpus[a].meta.id < corpus[b].meta.id;
    });
    const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(corpus.size())));
    SplitIndices out;
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < n_val ? out.val : out.train).push_back(order[i]);
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.val.begin(), out.val.end());
    return out;
}

}  // namespace roadvib
