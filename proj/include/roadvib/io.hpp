#pragma once

#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "roadvib/types.hpp"

namespace roadvib {

static_assert(std::endian::native == std::endian::little, "on-disk formats assume a little-endian host");

using ojson = nlohmann::ordered_json;

namespace detail {

inline std::string fmt_fixed(double v, int prec) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
    return buf;
}

inline double parse_double(std::string_view tok, const std::string& context) {
    double out = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last) throw DataError("malformed number '" + std::string(tok) + "' " + context);
    return out;
}

inline std::int64_t parse_int(std::string_view tok, const std::string& context) {
    std::int64_t out = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
        throw DataError("malformed integer '" + std::string(tok) + "' " + context);
    return out;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw DataError("write failed for " + path.string());
}

}  // namespace detail

inline constexpr const char* kStreamCsvHeader = "t,timestamp,lat,lon,speed,ax,ay,az";

/// Counters for records dropped while reading a stream (mirrors onboard cleaning).
struct StreamReadStats {
    std::size_t rows = 0;
    std::size_t dropped_nan_accel = 0;
    std::size_t dropped_invalid_gps = 0;
    std::size_t dropped_invalid_speed = 0;

    std::size_t dropped() const { return dropped_nan_accel + dropped_invalid_gps + dropped_invalid_speed; }
};

inline std::string stream_to_csv(const SensingStream& s) {
    std::string out;
    out.reserve(80 * s.records.size() + 32);
    out += kStreamCsvHeader;
    out += '\n';
    for (const auto& r : s.records) {
        out += std::to_string(r.t);
        out += ',';
        out += detail::fmt_fixed(r.timestamp, 3);
        out += ',';
        out += detail::fmt_fixed(r.lat, 7);
        out += ',';
        out += detail::fmt_fixed(r.lon, 7);
        out += ',';
        out += detail::fmt_fixed(r.speed, 3);
        for (double a : r.accel) {
            out += ',';
            out += detail::fmt_fixed(a, 6);
        }
        out += '\n';
    }
    return out;
}

inline void write_stream_csv(const std::filesystem::path& path, const SensingStream& s) {
    detail::write_file(path, stream_to_csv(s));
}

inline SensingStream stream_from_csv(const std::string& text, const std::string& vehicle_id,
                                     double sample_rate_hz = 100.0, StreamReadStats* stats = nullptr) {
    SensingStream s;
    s.vehicle_id = vehicle_id;
    s.sample_rate_hz = sample_rate_hz;
    StreamReadStats local;
    StreamReadStats& st = stats ? *stats : local;

    std::size_t pos = 0;
    std::size_t line_no = 0;
    std::int64_t prev_t = -1;
    bool header_seen = false;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string_view line(text.data() + pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (!header_seen) {
            if (line != kStreamCsvHeader)
                throw DataError("line 1: expected header '" + std::string(kStreamCsvHeader) + "'");
            header_seen = true;
            continue;
        }

        std::array<std::string_view, 8> tok;
        std::size_t field = 0;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                if (field >= tok.size())
                    throw DataError("line " + std::to_string(line_no) + ": too many fields");
                tok[field++] = line.substr(start, i - start);
                start = i + 1;
            }
        }
        if (field != 8) throw DataError("line " + std::to_string(line_no) + ": expected 8 fields, got " +
                                        std::to_string(field));

        const std::string ctx = "at line " + std::to_string(line_no);
        SensorRecord r;
        r.t = detail::parse_int(tok[0], ctx);
        r.timestamp = detail::parse_double(tok[1], ctx);
        r.lat = detail::parse_double(tok[2], ctx);
        r.lon = detail::parse_double(tok[3], ctx);
        r.speed = detail::parse_double(tok[4], ctx);
        for (int k = 0; k < 3; ++k) r.accel[k] = detail::parse_double(tok[5 + k], ctx);
        ++st.rows;

        if (r.t <= prev_t)
            throw DataError("line " + std::to_string(line_no) + ": non-monotonic sample index");
        prev_t = r.t;

        // Onboard-style cleaning: unreliable rows are dropped, not fatal.
        if (!r.accel_finite()) {
            ++st.dropped_nan_accel;
            continue;
        }
        if (!r.gps_valid()) {
            ++st.dropped_invalid_gps;
            continue;
        }
        if (r.speed < 0.0) {
            ++st.dropped_invalid_speed;
            continue;
        }
        s.records.push_back(r);
    }
    if (!header_seen) throw DataError("empty file: missing CSV header");
    return s;
}

inline SensingStream read_stream_csv(const std::filesystem::path& path, const std::string& vehicle_id,
                                     double sample_rate_hz = 100.0, StreamReadStats* stats = nullptr) {
    try {
        return stream_from_csv(detail::read_file(path), vehicle_id, sample_rate_hz, stats);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Candidate-event JSONL
// ---------------------------------------------------------------------------

inline ojson event_to_json(const CandidateEvent& e) {
    ojson j;
    j["vehicle_id"] = e.vehicle_id;
    j["event_id"] = e.event_id;
    j["t_start"] = e.t_start;
    j["t_end"] = e.t_end;
    j["timestamp"] = e.timestamp;
    j["lat"] = e.lat;
    j["lon"] = e.lon;
    j["speed"] = e.speed;
    j["sample_rate_hz"] = e.sample_rate_hz;
    j["accel"] = ojson::array({e.accel[0], e.accel[1], e.accel[2]});
    return j;
}

inline CandidateEvent event_from_json(const ojson& j) {
    CandidateEvent e;
    e.vehicle_id = j.at("vehicle_id").get<std::string>();
    e.event_id = j.at("event_id").get<std::int64_t>();
    e.t_start = j.at("t_start").get<std::int64_t>();
    e.t_end = j.at("t_end").get<std::int64_t>();
    e.timestamp = j.at("timestamp").get<double>();
    e.lat = j.at("lat").get<double>();
    e.lon = j.at("lon").get<double>();
    e.speed = j.at("speed").get<double>();
    e.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    const auto& acc = j.at("accel");
    if (!acc.is_array() || acc.size() != 3) throw DataError("event accel must have 3 channels");
    for (int k = 0; k < 3; ++k) e.accel[k] = acc[k].get<std::vector<double>>();
    if (e.accel[1].size() != e.accel[0].size() || e.accel[2].size() != e.accel[0].size())
        throw DataError("event accel channels differ in length");
    return e;
}

inline std::string events_to_jsonl(const std::vector<CandidateEvent>& events) {
    std::string out;
    for (const auto& e : events) {
        out += event_to_json(e).dump();
        out += '\n';
    }
    return out;
}

inline void write_events_jsonl(const std::filesystem::path& path, const std::vector<CandidateEvent>& events) {
    detail::write_file(path, events_to_jsonl(events));
}

inline std::vector<CandidateEvent> events_from_jsonl(const std::string& text) {
    std::vector<CandidateEvent> events;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string_view line(text.data() + pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (line.empty()) continue;
        try {
            events.push_back(event_from_json(ojson::parse(line)));
        } catch (const ojson::exception& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return events;
}

inline std::vector<CandidateEvent> read_events_jsonl(const std::filesystem::path& path) {
    try {
        return events_from_jsonl(detail::read_file(path));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Sequence binary: u32 manifest length (LE) + JSON manifest + f32 payload
// (channel-major) + u8 label payload.
// ---------------------------------------------------------------------------

inline std::string sequence_to_bytes(const LabeledSequence& seq) {
    seq.validate();
    ojson manifest;
    manifest["dtype"] = "f32";
    manifest["shape"] = {seq.channels, seq.length};
    manifest["label_shape"] = {seq.length};
    manifest["meta"] = {{"id", seq.meta.id},
                        {"vehicle_id", seq.meta.vehicle_id},
                        {"timestamp", seq.meta.timestamp},
                        {"lat", seq.meta.lat},
                        {"lon", seq.meta.lon},
                        {"speed", seq.meta.speed},
                        {"window_start", seq.meta.window_start}};
    const std::string m = manifest.dump();

    std::string out;
    out.reserve(4 + m.size() + 4 * seq.x.size() + seq.y.size());
    const auto mlen = static_cast<std::uint32_t>(m.size());
    out.append(reinterpret_cast<const char*>(&mlen), 4);
    out += m;
    for (double v : seq.x) {
        const float f = static_cast<float>(v);
        char buf[4];
        std::memcpy(buf, &f, 4);
        out.append(buf, 4);
    }
    out.append(reinterpret_cast<const char*>(seq.y.data()), seq.y.size());
    return out;
}

inline LabeledSequence sequence_from_bytes(const std::string& bytes) {
    if (bytes.size() < 4) throw DataError("sequence file truncated (no manifest length)");
    std::uint32_t mlen = 0;
    std::memcpy(&mlen, bytes.data(), 4);
    if (bytes.size() < 4 + static_cast<std::size_t>(mlen)) throw DataError("sequence file truncated (manifest)");
    ojson manifest;
    try {
        manifest = ojson::parse(bytes.substr(4, mlen));
    } catch (const ojson::exception& e) {
        throw DataError(std::string("bad sequence manifest: ") + e.what());
    }
    if (manifest.at("dtype").get<std::string>() != "f32") throw DataError("unsupported sequence dtype");
    const auto shape = manifest.at("shape").get<std::vector<int>>();
    if (shape.size() != 2) throw DataError("sequence shape must be [C,L]");

    LabeledSequence seq;
    seq.channels = shape[0];
    seq.length = shape[1];
    if (manifest.contains("meta")) {
        const auto& m = manifest["meta"];
        seq.meta.id = m.value("id", std::string());
        seq.meta.vehicle_id = m.value("vehicle_id", std::string());
        seq.meta.timestamp = m.value("timestamp", 0.0);
        seq.meta.lat = m.value("lat", 0.0);
        seq.meta.lon = m.value("lon", 0.0);
        seq.meta.speed = m.value("speed", 0.0);
        seq.meta.window_start = m.value("window_start", std::int64_t{0});
    }
    const std::size_t n_vals = static_cast<std::size_t>(seq.channels) * seq.length;
    const std::size_t need = 4 + mlen + 4 * n_vals + static_cast<std::size_t>(seq.length);
    if (bytes.size() != need)
        throw DataError("sequence file size mismatch: got " + std::to_string(bytes.size()) + ", expected " +
                        std::to_string(need));
    seq.x.resize(n_vals);
    const char* p = bytes.data() + 4 + mlen;
    for (std::size_t i = 0; i < n_vals; ++i) {
        float f = 0.0f;
        std::memcpy(&f, p + 4 * i, 4);
        seq.x[i] = f;
    }
    seq.y.assign(bytes.begin() + static_cast<std::ptrdiff_t>(4 + mlen + 4 * n_vals), bytes.end());
    seq.validate();
    return seq;
}

inline void write_sequence_bin(const std::filesystem::path& path, const LabeledSequence& seq) {
    detail::write_file(path, sequence_to_bytes(seq));
}

inline LabeledSequence read_sequence_bin(const std::filesystem::path& path) {
    try {
        return sequence_from_bytes(detail::read_file(path));
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Corpus manifest: stream files, vehicle ids and ground-truth intervals.
// ---------------------------------------------------------------------------

struct StreamEntry {
    std::string file;
    std::string vehicle_id;
    std::int64_t length = 0;
    std::vector<LabeledInterval> ground_truth;
};

struct CorpusManifest {
    double sample_rate_hz = 100.0;
    std::vector<StreamEntry> streams;
};

inline ojson manifest_to_json(const CorpusManifest& m) {
    ojson j;
    j["version"] = 1;
    j["sample_rate_hz"] = m.sample_rate_hz;
    j["streams"] = ojson::array();
    for (const auto& s : m.streams) {
        ojson gt = ojson::array();
        for (const auto& g : s.ground_truth) gt.push_back({g.start, g.end, static_cast<int>(g.cls)});
        j["streams"].push_back(
            {{"file", s.file}, {"vehicle_id", s.vehicle_id}, {"length", s.length}, {"ground_truth", gt}});
    }
    return j;
}

inline CorpusManifest manifest_from_json(const ojson& j) {
    CorpusManifest m;
    m.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    for (const auto& s : j.at("streams")) {
        StreamEntry e;
        e.file = s.at("file").get<std::string>();
        e.vehicle_id = s.at("vehicle_id").get<std::string>();
        e.length = s.at("length").get<std::int64_t>();
        for (const auto& g : s.at("ground_truth")) {
            if (!g.is_array() || g.size() != 3) throw DataError("ground_truth entries must be [start,end,class]");
            e.ground_truth.push_back(
                {g[0].get<std::int64_t>(), g[1].get<std::int64_t>(), road_class_from_int(g[2].get<int>())});
        }
        m.streams.push_back(std::move(e));
    }
    return m;
}

inline void write_manifest(const std::filesystem::path& path, const CorpusManifest& m) {
    detail::write_file(path, manifest_to_json(m).dump(2) + "\n");
}

inline CorpusManifest read_manifest(const std::filesystem::path& path) {
    try {
        return manifest_from_json(ojson::parse(detail::read_file(path)));
    } catch (const ojson::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

}  // namespace roadvib
