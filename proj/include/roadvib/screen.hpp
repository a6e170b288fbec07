#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "roadvib/gmm.hpp"
#include "roadvib/types.hpp"

namespace roadvib {

struct ScreenConfig {
    std::int64_t merge_gap = 25;      // merge intervals closer than this
    std::int64_t min_interval = 3;    // drop shorter intervals
    std::int64_t context_left = 64;   // samples of context kept on each side
    std::int64_t context_right = 64;

    void validate() const {
        if (merge_gap < 0 || min_interval < 0 || context_left < 0 || context_right < 0)
            throw ConfigError("screen: all parameters must be non-negative");
    }
};

struct ScreenStats {
    std::int64_t samples_in = 0;
    std::int64_t samples_uploaded = 0;
    std::int64_t n_events = 0;
    double reduction_ratio = 1.0;
};

using Interval = std::pair<std::int64_t, std::int64_t>;  // half-open [start, end)

/// Maximal indicator runs -> merge gaps < merge_gap -> drop runs < min_interval.
inline std::vector<Interval> group_intervals(const std::vector<std::uint8_t>& indicator,
                                             const ScreenConfig& cfg) {
    cfg.validate();
    std::vector<Interval> runs;
    const auto n = static_cast<std::int64_t>(indicator.size());
    std::int64_t t = 0;
    while (t < n) {
        if (!indicator[static_cast<std::size_t>(t)]) {
            ++t;
            continue;
        }
        std::int64_t e = t;
        while (e < n && indicator[static_cast<std::size_t>(e)]) ++e;
        runs.emplace_back(t, e);
        t = e;
    }
    std::vector<Interval> merged;
    for (const auto& r : runs) {
        if (!merged.empty() && r.first - merged.back().second < cfg.merge_gap)
            merged.back().second = r.second;
        else
            merged.push_back(r);
    }
    std::vector<Interval> kept;
    for (const auto& r : merged)
        if (r.second - r.first >= cfg.min_interval) kept.push_back(r);
    return kept;
}

/// Attach context and metadata to abnormal intervals, producing upload packets.
/// Metadata comes from the valid record nearest the interval midpoint; events
/// without valid GPS inside the interval, or with gaps in the acceleration
/// segment, are discarded.
inline std::vector<CandidateEvent> group_events(const std::vector<std::uint8_t>& indicator,
                                                const SensingStream& stream, const ScreenConfig& cfg,
                                                std::int64_t event_id_base = 0) {
    if (indicator.size() != stream.records.size())
        throw DataError("indicator length does not match stream length");
    const auto intervals = group_intervals(indicator, cfg);

    // records are sorted by t; positions are looked up by sample index
    const auto& recs = stream.records;
    const auto pos_of = [&](std::int64_t t) -> std::ptrdiff_t {
        auto it = std::lower_bound(recs.begin(), recs.end(), t,
                                   [](const SensorRecord& r, std::int64_t v) { return r.t < v; });
        if (it == recs.end() || it->t != t) return -1;
        return it - recs.begin();
    };

    const std::int64_t t_min = recs.empty() ? 0 : recs.front().t;
    const std::int64_t t_max = recs.empty() ? 0 : recs.back().t + 1;

    std::vector<CandidateEvent> events;
    std::int64_t next_id = event_id_base;
    for (const auto& [rs, re] : intervals) {
        // indicator positions are record positions; convert to sample indices
        const std::int64_t s = recs[static_cast<std::size_t>(rs)].t;
        const std::int64_t e = recs[static_cast<std::size_t>(re - 1)].t + 1;

        // metadata record: valid GPS, nearest to the interval midpoint
        const std::int64_t mid = (s + e) / 2;
        std::ptrdiff_t meta_pos = -1;
        std::int64_t meta_dist = 0;
        for (std::ptrdiff_t p = rs; p < re; ++p) {
            const auto& r = recs[static_cast<std::size_t>(p)];
            if (!r.gps_valid()) continue;
            const std::int64_t d = std::abs(r.t - mid);
            if (meta_pos < 0 || d < meta_dist) {
                meta_pos = p;
                meta_dist = d;
            }
        }
        if (meta_pos < 0) continue;  // no reliable location: drop

        const std::int64_t seg_s = std::max(t_min, s - cfg.context_left);
        const std::int64_t seg_e = std::min(t_max, e + cfg.context_right);

        CandidateEvent ev;
        ev.vehicle_id = stream.vehicle_id;
        ev.event_id = next_id;
        ev.t_start = s;
        ev.t_end = e;
        ev.sample_rate_hz = stream.sample_rate_hz;
        const auto& mr = recs[static_cast<std::size_t>(meta_pos)];
        ev.timestamp = mr.timestamp;
        ev.lat = mr.lat;
        ev.lon = mr.lon;
        ev.speed = mr.speed;

        bool complete = true;
        for (auto& ch : ev.accel) ch.reserve(static_cast<std::size_t>(seg_e - seg_s));
        for (std::int64_t t = seg_s; t < seg_e && complete; ++t) {
            const auto p = pos_of(t);
            if (p < 0) {
                complete = false;
                break;
            }
            for (int k = 0; k < 3; ++k) ev.accel[static_cast<std::size_t>(k)].push_back(recs[static_cast<std::size_t>(p)].accel[static_cast<std::size_t>(k)]);
        }
        if (!complete) continue;  // incomplete acceleration segment: drop

        events.push_back(std::move(ev));
        ++next_id;
    }
    return events;
}

/// Full onboard stage for one stream: model the vertical axis online, group
/// abnormal points, emit candidate packets and exact traffic stats.
inline std::pair<std::vector<CandidateEvent>, ScreenStats> screen_stream(const SensingStream& stream,
                                                                         const GmmConfig& gmm_cfg,
                                                                         const ScreenConfig& screen_cfg,
                                                                         std::int64_t event_id_base = 0) {
    std::vector<double> az;
    az.reserve(stream.records.size());
    for (const auto& r : stream.records) az.push_back(r.accel[2]);
    const auto indicator = gmm_indicator(az, gmm_cfg);
    auto events = group_events(indicator, stream, screen_cfg, event_id_base);

    ScreenStats stats;
    stats.samples_in = static_cast<std::int64_t>(stream.records.size());
    for (const auto& ev : events) stats.samples_uploaded += ev.seg_len();
    stats.n_events = static_cast<std::int64_t>(events.size());
    stats.reduction_ratio =
        stats.samples_in > 0
            ? 1.0 - static_cast<double>(stats.samples_uploaded) / static_cast<double>(stats.samples_in)
            : 1.0;
    return {std::move(events), stats};
}

/// Fixed-threshold point detector used as a screening baseline:
/// flags |x - global mean| > z_th * global sigma.
inline std::vector<std::uint8_t> zpeak_indicator(const std::vector<double>& xs, double z_th) {
    std::vector<std::uint8_t> ind(xs.size(), 0);
    if (xs.empty()) return ind;
    double mean = 0.0;
    for (double v : xs) mean += v;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double v : xs) var += (v - mean) * (v - mean);
    var /= static_cast<double>(xs.size());
    const double sigma = std::sqrt(std::max(var, 1e-24));
    for (std::size_t i = 0; i < xs.size(); ++i) ind[i] = std::abs(xs[i] - mean) > z_th * sigma ? 1 : 0;
    return ind;
}

}  // namespace roadvib
