#pragma once

#include <algorithm>
#include <cmath>

#include "roadvib/types.hpp"

namespace roadvib {

/// Resize a variable-length segment to exactly `target_len` samples.
///
/// Shorter segments are centered and zero/Normal padded (left pad =
/// floor((L-len)/2)). Longer segments are cropped to a window of length L
/// centered on the midpoint of the union of non-Normal labels (falling back
/// to the sequence midpoint when all labels are Normal); the window is
/// shifted as needed to stay inside the segment. Labels move rigidly with
/// their samples and meta.window_start is adjusted to keep stream
/// coordinates consistent.
inline LabeledSequence to_fixed_length(const LabeledSequence& seg, int target_len) {
    if (seg.length < 1 || seg.x.empty()) throw DataError("empty-segment");
    if (target_len < 8) throw ConfigError("to_fixed_length: target length must be >= 8");
    seg.validate();

    const int C = seg.channels;
    const int len = seg.length;
    LabeledSequence out;
    out.channels = C;
    out.length = target_len;
    out.meta = seg.meta;
    out.x.assign(static_cast<std::size_t>(C) * target_len, 0.0);
    out.y.assign(static_cast<std::size_t>(target_len), static_cast<std::uint8_t>(RoadClass::Normal));

    if (len == target_len) {
        out.x = seg.x;
        out.y = seg.y;
        return out;
    }

    if (len < target_len) {
        const int pad_left = (target_len - len) / 2;
        for (int c = 0; c < C; ++c)
            std::copy_n(seg.x.begin() + static_cast<std::size_t>(c) * len, len,
                        out.x.begin() + static_cast<std::size_t>(c) * target_len + pad_left);
        std::copy(seg.y.begin(), seg.y.end(), out.y.begin() + pad_left);
        out.meta.window_start = seg.meta.window_start - pad_left;
        return out;
    }

    // Crop: center on the union of non-Normal labels.
    int first = -1, last = -1;
    for (int l = 0; l < len; ++l) {
        if (seg.y[l] != static_cast<std::uint8_t>(RoadClass::Normal)) {
            if (first < 0) first = l;
            last = l;
        }
    }
    const std::int64_t mid = (first < 0) ? len / 2 : (static_cast<std::int64_t>(first) + last + 1) / 2;
    std::int64_t start = mid - target_len / 2;
    start = std::clamp<std::int64_t>(start, 0, len - target_len);

    for (int c = 0; c < C; ++c)
        std::copy_n(seg.x.begin() + static_cast<std::size_t>(c) * len + start, target_len,
                    out.x.begin() + static_cast<std::size_t>(c) * target_len);
    std::copy_n(seg.y.begin() + start, target_len, out.y.begin());
    out.meta.window_start = seg.meta.window_start + start;
    return out;
}

/// Per-channel z-score over the window (population denominator L).
/// Constant channels map to all zeros; labels are untouched. Idempotent.
inline LabeledSequence normalize(const LabeledSequence& seq) {
    LabeledSequence out = seq;
    const int L = seq.length;
    if (L == 0) return out;
    for (int c = 0; c < seq.channels; ++c) {
        double mean = 0.0;
        for (int l = 0; l < L; ++l) mean += seq.at(c, l);
        mean /= L;
        double var = 0.0;
        for (int l = 0; l < L; ++l) {
            const double d = seq.at(c, l) - mean;
            var += d * d;
        }
        var /= L;
        if (var < 1e-24) {
            for (int l = 0; l < L; ++l) out.at(c, l) = 0.0;
        } else {
            const double inv_sd = 1.0 / std::sqrt(var);
            for (int l = 0; l < L; ++l) out.at(c, l) = (seq.at(c, l) - mean) * inv_sd;
        }
    }
    return out;
}

}  // namespace roadvib
