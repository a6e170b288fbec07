#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "roadvib/types.hpp"

namespace roadvib {

/// Sliding majority vote over a label sequence. Ties keep the original label;
/// edge positions use the truncated window.
inline std::vector<std::uint8_t> mode_filter(const std::vector<std::uint8_t>& labels, int window = 11) {
    if (window < 1 || window % 2 == 0) throw ConfigError("mode_filter: window must be odd and positive");
    const auto n = static_cast<std::int64_t>(labels.size());
    std::vector<std::uint8_t> out(labels.size());
    const std::int64_t half = window / 2;
    for (std::int64_t i = 0; i < n; ++i) {
        std::array<int, kNumClasses> counts{};
        const std::int64_t lo = std::max<std::int64_t>(0, i - half);
        const std::int64_t hi = std::min<std::int64_t>(n, i + half + 1);
        for (std::int64_t j = lo; j < hi; ++j) ++counts[labels[static_cast<std::size_t>(j)]];
        int best = labels[static_cast<std::size_t>(i)];  // tie -> original
        for (int c = 0; c < kNumClasses; ++c)
            if (counts[static_cast<std::size_t>(c)] > counts[static_cast<std::size_t>(best)]) best = c;
        out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(best);
    }
    return out;
}

/// Per-position class probabilities alongside a label track.
using ProbTrack = std::vector<std::array<float, kNumClasses>>;

struct EventReport {
    RoadClass cls = RoadClass::Pothole;
    std::int64_t start = 0;  // half-open [start, end)
    std::int64_t end = 0;
    double confidence = 0.0;  // mean probability of cls over the interval
    std::string vehicle_id;
    std::int64_t event_id = 0;
    double timestamp = 0.0;
    double lat = 0.0;
    double lon = 0.0;

    LabeledInterval interval() const { return {start, end, cls}; }
};

/// Group maximal runs of identical non-Normal labels into event reports.
/// Runs shorter than min_len or with mean class probability below
/// conf_threshold are dropped.
inline std::vector<EventReport> extract_events(const std::vector<std::uint8_t>& labels,
                                               const ProbTrack& probs, std::int64_t min_len = 10,
                                               double conf_threshold = 0.5) {
    if (probs.size() != labels.size()) throw DataError("extract_events: probs/labels length mismatch");
    std::vector<EventReport> out;
    const auto n = static_cast<std::int64_t>(labels.size());
    std::int64_t i = 0;
    while (i < n) {
        const std::uint8_t cls = labels[static_cast<std::size_t>(i)];
        if (cls == static_cast<std::uint8_t>(RoadClass::Normal)) {
            ++i;
            continue;
        }
        std::int64_t j = i;
        while (j < n && labels[static_cast<std::size_t>(j)] == cls) ++j;
        if (j - i >= min_len) {
            double conf = 0.0;
            for (std::int64_t t = i; t < j; ++t)
                conf += probs[static_cast<std::size_t>(t)][cls];
            conf /= static_cast<double>(j - i);
            if (conf >= conf_threshold) {
                EventReport r;
                r.cls = static_cast<RoadClass>(cls);
                r.start = i;
                r.end = j;
                r.confidence = conf;
                out.push_back(r);
            }
        }
        i = j;
    }
    return out;
}

}  // namespace roadvib
