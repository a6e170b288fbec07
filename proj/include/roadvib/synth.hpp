#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "roadvib/rng.hpp"
#include "roadvib/types.hpp"

namespace roadvib {

/// Waveform family injected for one road-event class. Shapes are plausible
/// hand-designed stand-ins (there is no public per-class waveform ground
/// truth): a pothole is a sharp negative dip with overshoot and a damped
/// ~8 Hz tail, a manhole a short biphasic spike, a speed bump two smooth
/// positive humps separated by the axle-spacing gap.
struct EventTemplate {
    RoadClass cls = RoadClass::Pothole;
    std::int64_t dur_min = 20;  // samples
    std::int64_t dur_max = 80;
    double amp_min = 5.0;  // multiples of local background sigma
    double amp_max = 10.0;
};

struct SynthConfig {
    std::uint64_t seed = 1;
    int n_streams = 50;
    std::int64_t stream_len = 30000;  // samples per stream
    double sample_rate_hz = 100.0;
    double bg_sigma_min = 0.7;  // per-stream background noise level, m/s^2
    double bg_sigma_max = 1.4;
    // Suspension-filtered road noise is amplitude-bounded; the background is
    // near-Gaussian with a soft saturation at this many sigma.
    double bg_saturation = 2.2;
    double bg_mod_depth = 0.15;      // slow relative sigma modulation
    double bg_mod_period = 6000.0;   // samples
    double events_per_stream = 12.0;                    // Poisson mean
    std::array<double, 3> class_mix{0.3, 0.3, 0.4};     // manhole, speed bump, pothole
    double speed_min = 5.0;                             // m/s
    double speed_max = 20.0;
    std::int64_t min_event_start = 500;                 // keep events clear of model burn-in
    std::int64_t min_event_gap = 200;                   // samples (2 s @ 100 Hz)

    EventTemplate pothole{RoadClass::Pothole, 20, 80, 12.0, 30.0};
    EventTemplate manhole{RoadClass::Manhole, 8, 24, 0.0, 0.0};       // amp = pothole draw x U(0.6,1.2)
    EventTemplate speed_bump{RoadClass::SpeedBump, 0, 0, 8.0, 20.0};  // dur = pothole draw x U(2,4)

    void validate() const {
        if (n_streams < 1) throw ConfigError("synth: n_streams must be >= 1");
        if (stream_len < 1) throw ConfigError("synth: stream_len must be >= 1");
        if (sample_rate_hz <= 0) throw ConfigError("synth: sample_rate_hz must be positive");
        if (bg_sigma_min <= 0 || bg_sigma_max < bg_sigma_min) throw ConfigError("synth: bad sigma range");
        const double mix = class_mix[0] + class_mix[1] + class_mix[2];
        if (std::abs(mix - 1.0) > 1e-9) throw ConfigError("synth: class mix must sum to 1");
        const std::int64_t max_dur = 4 * pothole.dur_max;  // longest possible (speed bump)
        if (stream_len <= 4 * max_dur) throw ConfigError("synth: stream_len must exceed 4x max event duration");
    }
};

/// Ground-truth interval plus the realized waveform amplitude (test hook).
struct InjectedEvent {
    LabeledInterval interval;
    double amplitude = 0.0;  // peak |waveform| in m/s^2
};

namespace detail {

// Unit-peak waveforms sampled over d points; i in [0, d).
inline double waveform_pothole(std::int64_t i, std::int64_t d, double fs) {
    const double u = static_cast<double>(i) / static_cast<double>(d);
    const double t = static_cast<double>(i) / fs;
    return -std::exp(-3.0 * u) * std::cos(2.0 * 3.14159265358979323846 * 8.0 * t);
}

inline double waveform_manhole(std::int64_t i, std::int64_t d, double /*fs*/) {
    const double u = static_cast<double>(i) / static_cast<double>(d);
    const double pi = 3.14159265358979323846;
    return -std::sin(2.0 * pi * u) * std::sin(pi * u);
}

inline double waveform_speed_bump(std::int64_t i, std::int64_t d, double /*fs*/) {
    const double u = static_cast<double>(i) / static_cast<double>(d);
    const auto hump = [](double x, double c, double w) {
        const double z = (x - c) / w;
        return std::exp(-z * z);
    };
    return hump(u, 0.27, 0.11) + hump(u, 0.73, 0.11);
}

inline double waveform(RoadClass cls, std::int64_t i, std::int64_t d, double fs) {
    switch (cls) {
        case RoadClass::Pothole: return waveform_pothole(i, d, fs);
        case RoadClass::Manhole: return waveform_manhole(i, d, fs);
        case RoadClass::SpeedBump: return waveform_speed_bump(i, d, fs);
        case RoadClass::Normal: break;
    }
    return 0.0;
}

}  // namespace detail

/// Deterministic synthetic vibration stream with injected road events.
/// Pure function of (cfg.seed, stream_index); the background noise substream
/// is independent of event parameters, so regenerating with a different
/// event load reproduces the identical noise track.
inline SensingStream generate_stream(const SynthConfig& cfg, int stream_index,
                                     std::vector<InjectedEvent>* injected = nullptr) {
    cfg.validate();
    const std::uint64_t base = SplitMix64::derive(cfg.seed, static_cast<std::uint64_t>(stream_index));
    SplitMix64 noise_rng(SplitMix64::derive(base, 0));
    SplitMix64 place_rng(SplitMix64::derive(base, 1));
    SplitMix64 shape_rng(SplitMix64::derive(base, 2));
    SplitMix64 drive_rng(SplitMix64::derive(base, 3));

    const std::int64_t T = cfg.stream_len;
    const double fs = cfg.sample_rate_hz;
    const double pi = 3.14159265358979323846;

    // Per-stream noise profile: slowly varying sigma around a stream-level base.
    const double sigma_base = noise_rng.uniform(cfg.bg_sigma_min, cfg.bg_sigma_max);
    const double mod_phase = noise_rng.uniform(0.0, 2.0 * pi);
    const auto sigma_at = [&](std::int64_t t) {
        return sigma_base *
               (1.0 + cfg.bg_mod_depth *
                          std::sin(2.0 * pi * static_cast<double>(t) / cfg.bg_mod_period + mod_phase));
    };

    // Draw events: class, duration, amplitude, then non-overlapping placement.
    struct PlannedEvent {
        std::int64_t start = 0, dur = 0;
        RoadClass cls = RoadClass::Pothole;
        double amp_mult = 0.0;
    };
    std::vector<PlannedEvent> plan;
    const std::uint64_t n_events = place_rng.poisson(cfg.events_per_stream);
    for (std::uint64_t k = 0; k < n_events; ++k) {
        PlannedEvent ev;
        const double u = place_rng.uniform();
        ev.cls = u < cfg.class_mix[0]               ? RoadClass::Manhole
                 : u < cfg.class_mix[0] + cfg.class_mix[1] ? RoadClass::SpeedBump
                                                           : RoadClass::Pothole;
        const auto pothole_dur = shape_rng.uniform_int(cfg.pothole.dur_min, cfg.pothole.dur_max);
        const double pothole_amp = shape_rng.uniform(cfg.pothole.amp_min, cfg.pothole.amp_max);
        switch (ev.cls) {
            case RoadClass::Pothole:
                ev.dur = pothole_dur;
                ev.amp_mult = pothole_amp;
                break;
            case RoadClass::Manhole:
                ev.dur = shape_rng.uniform_int(cfg.manhole.dur_min, cfg.manhole.dur_max);
                ev.amp_mult = pothole_amp * shape_rng.uniform(0.6, 1.2);
                break;
            case RoadClass::SpeedBump:
                ev.dur = static_cast<std::int64_t>(static_cast<double>(pothole_dur) * shape_rng.uniform(2.0, 4.0));
                ev.amp_mult = shape_rng.uniform(cfg.speed_bump.amp_min, cfg.speed_bump.amp_max);
                break;
            case RoadClass::Normal: break;
        }
        ev.dur = std::max<std::int64_t>(ev.dur, 8);

        bool placed = false;
        for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
            const std::int64_t lo = cfg.min_event_start;
            const std::int64_t hi = T - ev.dur - cfg.min_event_gap;
            if (hi <= lo) break;
            const std::int64_t start = place_rng.uniform_int(lo, hi);
            placed = true;
            for (const auto& other : plan) {
                if (start < other.start + other.dur + cfg.min_event_gap &&
                    other.start < start + ev.dur + cfg.min_event_gap) {
                    placed = false;
                    break;
                }
            }
            if (placed) ev.start = start;
        }
        if (!placed) throw DataError("placement-failed");
        plan.push_back(ev);
    }
    std::sort(plan.begin(), plan.end(), [](const auto& a, const auto& b) { return a.start < b.start; });

    // Driving profile.
    const double speed_mid = drive_rng.uniform(cfg.speed_min, cfg.speed_max);
    const double speed_amp = drive_rng.uniform(0.0, 0.5 * (cfg.speed_max - cfg.speed_min));
    const double speed_phase = drive_rng.uniform(0.0, 2.0 * pi);
    const double lat0 = 23.10 + 0.001 * stream_index;
    const double lon0 = 113.20 + 0.001 * stream_index;
    const double epoch0 = 1.7e9 + 1.0e4 * stream_index;

    SensingStream s;
    char vid[16];
    std::snprintf(vid, sizeof(vid), "veh%03d", stream_index);
    s.vehicle_id = vid;
    s.sample_rate_hz = fs;
    s.records.resize(static_cast<std::size_t>(T));

    // Background tracks (noise substream consumed in a fixed full pass).
    const double sat = cfg.bg_saturation;
    const auto road_noise = [&](double sigma) {
        return sigma * sat * std::tanh(noise_rng.gaussian() / sat);
    };
    for (std::int64_t t = 0; t < T; ++t) {
        const double sig = sigma_at(t);
        auto& r = s.records[static_cast<std::size_t>(t)];
        r.t = t;
        r.timestamp = quantize(epoch0 + static_cast<double>(t) / fs, 1e3);
        r.lat = quantize(lat0 + 1e-6 * static_cast<double>(t), 1e7);
        r.lon = quantize(lon0 + 1e-6 * static_cast<double>(t), 1e7);
        const double v =
            speed_mid + speed_amp * std::sin(2.0 * pi * static_cast<double>(t) / 2000.0 + speed_phase);
        r.speed = quantize(std::max(0.0, v), 1e3);
        r.accel[0] = road_noise(0.5 * sig);
        r.accel[1] = road_noise(0.5 * sig);
        r.accel[2] = road_noise(sig);
    }

    // Inject events; waveforms are normalized to unit peak then scaled so the
    // realized peak equals amp_mult x sigma at the event start.
    for (const auto& ev : plan) {
        double peak = 0.0;
        for (std::int64_t i = 0; i < ev.dur; ++i)
            peak = std::max(peak, std::abs(detail::waveform(ev.cls, i, ev.dur, fs)));
        const double amp = ev.amp_mult * sigma_at(ev.start);
        const double scale = amp / peak;
        for (std::int64_t i = 0; i < ev.dur; ++i) {
            const double w = scale * detail::waveform(ev.cls, i, ev.dur, fs);
            auto& r = s.records[static_cast<std::size_t>(ev.start + i)];
            r.accel[2] += w;
            r.accel[0] += 0.2 * w;
            r.accel[1] += 0.15 * w;
        }
        s.ground_truth.push_back({ev.start, ev.start + ev.dur, ev.cls});
        if (injected) injected->push_back({{ev.start, ev.start + ev.dur, ev.cls}, amp});
    }
    for (auto& r : s.records)
        for (auto& a : r.accel) a = quantize(a, 1e6);

    s.validate();
    return s;
}

inline std::vector<SensingStream> generate_corpus(const SynthConfig& cfg) {
    std::vector<SensingStream> streams;
    streams.reserve(static_cast<std::size_t>(cfg.n_streams));
    for (int i = 0; i < cfg.n_streams; ++i) streams.push_back(generate_stream(cfg, i));
    return streams;
}

/// Dominant event class of a labeled window (most frequent non-Normal label,
/// ties to the lowest class id; all-Normal windows bucket under Normal).
inline RoadClass dominant_class(const LabeledSequence& seq) {
    std::array<std::int64_t, kNumClasses> counts{};
    for (auto y : seq.y) ++counts[y];
    int best = 0;
    std::int64_t best_n = 0;
    for (int c = 1; c < kNumClasses; ++c) {
        if (counts[c] > best_n) {
            best = c;
            best_n = counts[c];
        }
    }
    return static_cast<RoadClass>(best);
}

/// Dirichlet non-IID assignment of sequences to clients, keyed by dominant
/// event class. Returns per-client index lists into `corpus`; every sequence
/// is assigned exactly once and the result is a pure function of `seed`.
inline std::vector<std::vector<std::size_t>> partition_noniid(const std::vector<LabeledSequence>& corpus,
                                                              int n_clients, double dirichlet_alpha,
                                                              std::uint64_t seed) {
    if (n_clients < 1) throw ConfigError("partition: n_clients must be >= 1");
    if (dirichlet_alpha <= 0.0) throw ConfigError("partition: dirichlet_alpha must be positive");
    if (corpus.empty()) throw ConfigError("partition: corpus is empty");
    if (static_cast<std::size_t>(n_clients) > corpus.size()) throw DataError("too-many-clients");

    std::array<std::vector<double>, kNumClasses> proportions;
    for (int c = 0; c < kNumClasses; ++c) {
        SplitMix64 rng(SplitMix64::derive(seed, static_cast<std::uint64_t>(c)));
        proportions[c] = rng.dirichlet(dirichlet_alpha, static_cast<std::size_t>(n_clients));
    }

    std::array<SplitMix64, kNumClasses> pick;
    for (int c = 0; c < kNumClasses; ++c)
        pick[c] = SplitMix64(SplitMix64::derive(seed, 16 + static_cast<std::uint64_t>(c)));

    std::vector<std::vector<std::size_t>> clients(static_cast<std::size_t>(n_clients));
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const int c = static_cast<int>(dominant_class(corpus[i]));
        const double u = pick[c].uniform();
        double acc = 0.0;
        int chosen = n_clients - 1;
        for (int k = 0; k < n_clients; ++k) {
            acc += proportions[c][static_cast<std::size_t>(k)];
            if (u < acc) {
                chosen = k;
                break;
            }
        }
        clients[static_cast<std::size_t>(chosen)].push_back(i);
    }
    return clients;
}

}  // namespace roadvib
