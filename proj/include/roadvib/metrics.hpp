#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <vector>

#include "roadvib/types.hpp"

namespace roadvib {

/// Temporal IoU of two half-open sample intervals.
inline double interval_iou(const LabeledInterval& a, const LabeledInterval& b) {
    const std::int64_t inter = std::min(a.end, b.end) - std::max(a.start, b.start);
    if (inter <= 0) return 0.0;
    const std::int64_t uni = std::max(a.end, b.end) - std::min(a.start, b.start);
    return static_cast<double>(inter) / static_cast<double>(uni);
}

struct MatchResult {
    std::vector<std::pair<std::size_t, std::size_t>> matches;  // (pred idx, gt idx)
    std::vector<double> match_ious;                            // aligned with matches
    std::vector<std::size_t> misses;                           // unmatched gt
    std::vector<std::size_t> false_alarms;                     // unmatched pred
};

/// Greedy one-to-one matching over class-equal pairs with IoU strictly above
/// the threshold, taken in IoU-descending order (ties: earlier prediction
/// start, then earlier ground-truth start).
inline MatchResult match_events(const std::vector<LabeledInterval>& pred,
                                const std::vector<LabeledInterval>& gt, double iou_threshold,
                                bool require_class = true) {
    struct Pair {
        double iou;
        std::size_t p, g;
    };
    std::vector<Pair> pairs;
    for (std::size_t p = 0; p < pred.size(); ++p)
        for (std::size_t g = 0; g < gt.size(); ++g) {
            if (require_class && pred[p].cls != gt[g].cls) continue;
            const double iou = interval_iou(pred[p], gt[g]);
            if (iou > iou_threshold) pairs.push_back({iou, p, g});
        }
    std::sort(pairs.begin(), pairs.end(), [&](const Pair& a, const Pair& b) {
        if (a.iou != b.iou) return a.iou > b.iou;
        if (pred[a.p].start != pred[b.p].start) return pred[a.p].start < pred[b.p].start;
        return gt[a.g].start < gt[b.g].start;
    });
    MatchResult res;
    std::vector<char> p_used(pred.size(), 0), g_used(gt.size(), 0);
    for (const auto& pr : pairs) {
        if (p_used[pr.p] || g_used[pr.g]) continue;
        p_used[pr.p] = g_used[pr.g] = 1;
        res.matches.emplace_back(pr.p, pr.g);
        res.match_ious.push_back(pr.iou);
    }
    for (std::size_t g = 0; g < gt.size(); ++g)
        if (!g_used[g]) res.misses.push_back(g);
    for (std::size_t p = 0; p < pred.size(); ++p)
        if (!p_used[p]) res.false_alarms.push_back(p);
    return res;
}

// Zero-denominator conventions: precision, recall and F1 all fall back to 0.
inline double safe_div(double num, double den) { return den > 0.0 ? num / den : 0.0; }
inline double f1_of(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

struct PointMetrics {
    double accuracy = 0.0;
    std::array<double, kNumClasses> precision{}, recall{}, f1{};
    std::array<std::int64_t, kNumClasses> support{};
    double macro_f1 = 0.0;
    double weighted_f1 = 0.0;
    std::array<std::array<std::int64_t, kNumClasses>, kNumClasses> confusion{};  // [true][pred]
};

inline PointMetrics point_metrics(const std::vector<std::uint8_t>& pred,
                                  const std::vector<std::uint8_t>& truth) {
    if (pred.size() != truth.size()) throw DataError("point_metrics: length mismatch");
    PointMetrics m;
    std::int64_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        ++m.confusion[truth[i]][pred[i]];
        if (pred[i] == truth[i]) ++correct;
    }
    m.accuracy = pred.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(pred.size());
    double weighted = 0.0;
    std::int64_t total = 0;
    for (int c = 0; c < kNumClasses; ++c) {
        std::int64_t tp = m.confusion[c][c], fp = 0, fn = 0;
        for (int o = 0; o < kNumClasses; ++o) {
            if (o != c) {
                fp += m.confusion[o][c];
                fn += m.confusion[c][o];
            }
        }
        m.support[static_cast<std::size_t>(c)] = tp + fn;
        const double p = safe_div(static_cast<double>(tp), static_cast<double>(tp + fp));
        const double r = safe_div(static_cast<double>(tp), static_cast<double>(tp + fn));
        m.precision[static_cast<std::size_t>(c)] = p;
        m.recall[static_cast<std::size_t>(c)] = r;
        m.f1[static_cast<std::size_t>(c)] = f1_of(p, r);
        m.macro_f1 += m.f1[static_cast<std::size_t>(c)] / kNumClasses;
        weighted += m.f1[static_cast<std::size_t>(c)] * static_cast<double>(m.support[static_cast<std::size_t>(c)]);
        total += m.support[static_cast<std::size_t>(c)];
    }
    m.weighted_f1 = safe_div(weighted, static_cast<double>(total));
    return m;
}

/// Event confusion has a pseudo-row for false alarms and a pseudo-column for
/// misses (class-agnostic IoU matching decides which events correspond).
inline constexpr int kEventConfusionDim = kNumClasses + 1;

struct EventMetricsAtThreshold {
    double iou_threshold = 0.5;
    std::int64_t n_matched = 0, n_pred = 0, n_gt = 0;
    double precision = 0.0, recall = 0.0, f1 = 0.0;  // pooled over classes
    std::array<double, kNumClasses> class_precision{}, class_recall{}, class_f1{};
    std::array<std::int64_t, kNumClasses> class_pred{}, class_gt{}, class_matched{};
    double macro_f1 = 0.0;     // over event classes with any presence
    double weighted_f1 = 0.0;  // weighted by ground-truth support
    double mean_iou = 0.0;     // over matched pairs
    std::array<std::array<std::int64_t, kEventConfusionDim>, kEventConfusionDim> confusion{};
};

/// Events are matched per sequence; counts aggregate across sequences.
inline EventMetricsAtThreshold event_metrics(const std::vector<std::vector<LabeledInterval>>& pred,
                                             const std::vector<std::vector<LabeledInterval>>& gt,
                                             double iou_threshold) {
    if (pred.size() != gt.size()) throw DataError("event_metrics: sequence count mismatch");
    EventMetricsAtThreshold m;
    m.iou_threshold = iou_threshold;
    double iou_sum = 0.0;
    for (std::size_t s = 0; s < pred.size(); ++s) {
        const auto res = match_events(pred[s], gt[s], iou_threshold);
        m.n_matched += static_cast<std::int64_t>(res.matches.size());
        m.n_pred += static_cast<std::int64_t>(pred[s].size());
        m.n_gt += static_cast<std::int64_t>(gt[s].size());
        for (std::size_t k = 0; k < res.matches.size(); ++k) {
            iou_sum += res.match_ious[k];
            ++m.class_matched[static_cast<std::size_t>(gt[s][res.matches[k].second].cls)];
        }
        for (const auto& e : pred[s]) ++m.class_pred[static_cast<std::size_t>(e.cls)];
        for (const auto& e : gt[s]) ++m.class_gt[static_cast<std::size_t>(e.cls)];

        // class-agnostic matching for the confusion structure
        const auto agn = match_events(pred[s], gt[s], iou_threshold, false);
        for (const auto& [p, g] : agn.matches)
            ++m.confusion[static_cast<std::size_t>(gt[s][g].cls)][static_cast<std::size_t>(pred[s][p].cls)];
        for (auto g : agn.misses) ++m.confusion[static_cast<std::size_t>(gt[s][g].cls)][kNumClasses];
        for (auto p : agn.false_alarms) ++m.confusion[kNumClasses][static_cast<std::size_t>(pred[s][p].cls)];
    }
    m.precision = safe_div(static_cast<double>(m.n_matched), static_cast<double>(m.n_pred));
    m.recall = safe_div(static_cast<double>(m.n_matched), static_cast<double>(m.n_gt));
    m.f1 = f1_of(m.precision, m.recall);
    m.mean_iou = safe_div(iou_sum, static_cast<double>(m.n_matched));

    double weighted = 0.0;
    std::int64_t support = 0;
    int present = 0;
    for (int c = 0; c < kNumClasses; ++c) {
        const auto cc = static_cast<std::size_t>(c);
        const double p = safe_div(static_cast<double>(m.class_matched[cc]), static_cast<double>(m.class_pred[cc]));
        const double r = safe_div(static_cast<double>(m.class_matched[cc]), static_cast<double>(m.class_gt[cc]));
        m.class_precision[cc] = p;
        m.class_recall[cc] = r;
        m.class_f1[cc] = f1_of(p, r);
        if (c != static_cast<int>(RoadClass::Normal) && (m.class_gt[cc] > 0 || m.class_pred[cc] > 0)) {
            m.macro_f1 += m.class_f1[cc];
            ++present;
        }
        weighted += m.class_f1[cc] * static_cast<double>(m.class_gt[cc]);
        support += m.class_gt[cc];
    }
    m.macro_f1 = present > 0 ? m.macro_f1 / present : 0.0;
    m.weighted_f1 = safe_div(weighted, static_cast<double>(support));
    return m;
}

struct MetricsBundle {
    PointMetrics point;
    std::vector<EventMetricsAtThreshold> event;  // one per IoU threshold

    const EventMetricsAtThreshold& at_iou(double thr) const {
        for (const auto& e : event)
            if (std::abs(e.iou_threshold - thr) < 1e-12) return e;
        throw DataError("metrics: threshold not computed");
    }
};

inline MetricsBundle compute_metrics(const std::vector<std::uint8_t>& point_pred,
                                     const std::vector<std::uint8_t>& point_truth,
                                     const std::vector<std::vector<LabeledInterval>>& event_pred,
                                     const std::vector<std::vector<LabeledInterval>>& event_gt,
                                     const std::vector<double>& thresholds = {0.1, 0.3, 0.5, 0.7}) {
    MetricsBundle b;
    b.point = point_metrics(point_pred, point_truth);
    for (double t : thresholds) b.event.push_back(event_metrics(event_pred, event_gt, t));
    return b;
}

/// Label runs of a dense sequence as intervals (all non-Normal runs).
inline std::vector<LabeledInterval> label_runs(const std::vector<std::uint8_t>& labels) {
    std::vector<LabeledInterval> out;
    const auto n = static_cast<std::int64_t>(labels.size());
    std::int64_t i = 0;
    while (i < n) {
        const auto cls = labels[static_cast<std::size_t>(i)];
        if (cls == 0) {
            ++i;
            continue;
        }
        std::int64_t j = i;
        while (j < n && labels[static_cast<std::size_t>(j)] == cls) ++j;
        out.push_back({i, j, static_cast<RoadClass>(cls)});
        i = j;
    }
    return out;
}

}  // namespace roadvib
