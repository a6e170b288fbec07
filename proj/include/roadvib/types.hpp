#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace roadvib {

/// Configuration problems (bad JSON, unknown keys, invalid values). CLI exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Data problems (malformed files, invariant violations in inputs). CLI exit code 3.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Point-wise road surface classes. Normal is the background value.
enum class RoadClass : std::uint8_t {
    Normal = 0,
    Manhole = 1,
    SpeedBump = 2,
    Pothole = 3,
};

inline constexpr int kNumClasses = 4;

inline const char* to_string(RoadClass c) {
    switch (c) {
        case RoadClass::Normal: return "normal";
        case RoadClass::Manhole: return "manhole";
        case RoadClass::SpeedBump: return "speed_bump";
        case RoadClass::Pothole: return "pothole";
    }
    return "?";
}

inline RoadClass road_class_from_int(int v) {
    if (v < 0 || v >= kNumClasses) throw DataError("road class out of range: " + std::to_string(v));
    return static_cast<RoadClass>(v);
}

/// One sensing sample: index, wall time, location, speed and 3-axis acceleration.
struct SensorRecord {
    std::int64_t t = 0;         // sample index, strictly increasing per stream
    double timestamp = 0.0;     // seconds since epoch
    double lat = 0.0;           // degrees, |lat| <= 90
    double lon = 0.0;           // degrees, |lon| <= 180
    double speed = 0.0;         // m/s, >= 0
    std::array<double, 3> accel{0.0, 0.0, 0.0};  // ax, ay, az in m/s^2

    bool gps_valid() const { return std::abs(lat) <= 90.0 && std::abs(lon) <= 180.0; }
    bool accel_finite() const {
        return std::isfinite(accel[0]) && std::isfinite(accel[1]) && std::isfinite(accel[2]);
    }
};

/// Half-open labeled interval [start, end) in sample indices.
struct LabeledInterval {
    std::int64_t start = 0;
    std::int64_t end = 0;
    RoadClass cls = RoadClass::Normal;

    std::int64_t length() const { return end - start; }
    bool operator==(const LabeledInterval&) const = default;
};

/// A continuous per-vehicle sensing stream, optionally with ground truth.
struct SensingStream {
    std::string vehicle_id;
    double sample_rate_hz = 100.0;
    std::vector<SensorRecord> records;
    std::vector<LabeledInterval> ground_truth;  // non-overlapping, within [0, T)

    std::int64_t size() const { return static_cast<std::int64_t>(records.size()); }

    void validate() const {
        for (std::size_t i = 1; i < records.size(); ++i) {
            if (records[i].t <= records[i - 1].t)
                throw DataError("stream " + vehicle_id + ": sample indices not strictly increasing at row " +
                                std::to_string(i));
        }
        const std::int64_t T = records.empty() ? 0 : records.back().t + 1;
        std::int64_t prev_end = -1;
        for (const auto& gt : ground_truth) {
            if (gt.end <= gt.start) throw DataError("stream " + vehicle_id + ": empty ground-truth interval");
            if (gt.start < prev_end) throw DataError("stream " + vehicle_id + ": overlapping ground-truth intervals");
            if (gt.start < 0 || gt.end > T) throw DataError("stream " + vehicle_id + ": ground truth outside [0,T)");
            prev_end = gt.end;
        }
    }
};

/// Context attached to a fixed-length training/inference window.
struct SequenceMeta {
    std::string id;          // stable unique id, e.g. "veh003/ev012"
    std::string vehicle_id;
    double timestamp = 0.0;
    double lat = 0.0;
    double lon = 0.0;
    double speed = 0.0;
    std::int64_t window_start = 0;  // stream sample index of position 0 (may be < 0 after padding)
};

/// Fixed-length multichannel window with point-wise labels.
/// Values are kept in double precision in memory; the on-disk format is f32.
struct LabeledSequence {
    int channels = 1;
    int length = 0;
    std::vector<double> x;        // channel-major, channels*length
    std::vector<std::uint8_t> y;  // length entries, RoadClass values
    SequenceMeta meta;

    double& at(int c, int l) { return x[static_cast<std::size_t>(c) * length + l]; }
    double at(int c, int l) const { return x[static_cast<std::size_t>(c) * length + l]; }

    RoadClass label(int l) const { return static_cast<RoadClass>(y[l]); }

    void validate() const {
        if (x.size() != static_cast<std::size_t>(channels) * length)
            throw DataError("sequence " + meta.id + ": value grid size mismatch");
        if (y.size() != static_cast<std::size_t>(length))
            throw DataError("sequence " + meta.id + ": label length mismatch");
        for (double v : x)
            if (!std::isfinite(v)) throw DataError("sequence " + meta.id + ": non-finite value");
        for (auto c : y)
            if (c >= kNumClasses) throw DataError("sequence " + meta.id + ": label out of range");
    }
};

/// Compact edge-to-cloud packet: an abnormal interval plus temporal context.
struct CandidateEvent {
    std::string vehicle_id;
    std::int64_t event_id = 0;
    std::int64_t t_start = 0;  // abnormal interval bounds, pre-context, half-open
    std::int64_t t_end = 0;
    double timestamp = 0.0;
    double lat = 0.0;
    double lon = 0.0;
    double speed = 0.0;
    double sample_rate_hz = 100.0;
    std::array<std::vector<double>, 3> accel;  // 3 x seg_len, context included

    std::int64_t seg_len() const { return static_cast<std::int64_t>(accel[0].size()); }

    /// Stream index of the first segment sample, given the left context width
    /// the screener was configured with (clipped at the stream start).
    std::int64_t seg_start(std::int64_t context_left) const {
        return t_start > context_left ? t_start - context_left : 0;
    }
};

/// Round to a fixed decimal grid. Values written to text formats are quantized
/// at creation time so that write/read/write round-trips are byte-identical.
inline double quantize(double v, double scale) { return std::round(v * scale) / scale; }

}  // namespace roadvib
