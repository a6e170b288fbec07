#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "roadvib/synth.hpp"

using namespace roadvib;

namespace {

LabeledSequence fake_seq(RoadClass dominant, std::uint64_t seed) {
    LabeledSequence s;
    s.channels = 1;
    s.length = 64;
    s.x.assign(64, 0.0);
    s.y.assign(64, 0);
    if (dominant != RoadClass::Normal)
        for (int l = 20; l < 40; ++l) s.y[l] = static_cast<std::uint8_t>(dominant);
    s.meta.id = "fake" + std::to_string(seed);
    return s;
}

}  // namespace

TEST_CASE("generate_stream is deterministic in (seed, index)") {
    SynthConfig cfg;
    cfg.seed = 123;
    cfg.stream_len = 8000;
    auto a = generate_stream(cfg, 4);
    auto b = generate_stream(cfg, 4);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        REQUIRE(a.records[i].accel == b.records[i].accel);
        REQUIRE(a.records[i].speed == b.records[i].speed);
    }
    REQUIRE(a.ground_truth.size() == b.ground_truth.size());
    for (std::size_t i = 0; i < a.ground_truth.size(); ++i) REQUIRE(a.ground_truth[i] == b.ground_truth[i]);
    auto c = generate_stream(cfg, 5);
    CHECK(c.records[100].accel != a.records[100].accel);
}

TEST_CASE("pure pothole mix yields only pothole ground truth") {
    SynthConfig cfg;
    cfg.seed = 9;
    cfg.stream_len = 8000;
    cfg.class_mix = {0.0, 0.0, 1.0};
    for (int i = 0; i < 5; ++i) {
        auto s = generate_stream(cfg, i);
        for (const auto& gt : s.ground_truth) CHECK(gt.cls == RoadClass::Pothole);
    }
}

TEST_CASE("event count concentrates around the Poisson mean") {
    SynthConfig cfg;
    cfg.seed = 11;
    cfg.stream_len = 12000;
    cfg.events_per_stream = 5.0;
    const int n = 50;
    std::int64_t total = 0;
    for (int i = 0; i < n; ++i) total += static_cast<std::int64_t>(generate_stream(cfg, i).ground_truth.size());
    const double mean = static_cast<double>(total) / n;
    // 3 sigma of the sample mean for Poisson(5) over 50 streams
    const double tol = 3.0 * std::sqrt(5.0 / n);
    CHECK(std::abs(mean - 5.0) <= tol);
}

TEST_CASE("ground-truth intervals are disjoint, gapped and in range") {
    SynthConfig cfg;
    cfg.seed = 17;
    for (int i = 0; i < 10; ++i) {
        auto s = generate_stream(cfg, i);
        std::int64_t prev_end = -cfg.min_event_gap;
        for (const auto& gt : s.ground_truth) {
            CHECK(gt.start >= cfg.min_event_start);
            CHECK(gt.end <= cfg.stream_len);
            CHECK(gt.start - prev_end >= cfg.min_event_gap);
            CHECK(gt.length() >= 8);
            prev_end = gt.end;
        }
    }
}

TEST_CASE("injected amplitude matches the template request") {
    SynthConfig cfg;
    cfg.seed = 33;
    cfg.stream_len = 15000;
    cfg.events_per_stream = 8.0;
    SynthConfig quiet = cfg;
    quiet.events_per_stream = 0.0;
    for (int i = 0; i < 4; ++i) {
        std::vector<InjectedEvent> injected;
        auto loud = generate_stream(cfg, i, &injected);
        auto background = generate_stream(quiet, i);
        REQUIRE(background.ground_truth.empty());
        for (const auto& ev : injected) {
            double peak = 0.0;
            for (std::int64_t t = ev.interval.start; t < ev.interval.end; ++t) {
                const double d = loud.records[static_cast<std::size_t>(t)].accel[2] -
                                 background.records[static_cast<std::size_t>(t)].accel[2];
                peak = std::max(peak, std::abs(d));
            }
            CHECK(peak == Catch::Approx(ev.amplitude).epsilon(0.01));
        }
    }
}

TEST_CASE("partition with one client returns the whole corpus") {
    std::vector<LabeledSequence> corpus;
    for (int i = 0; i < 20; ++i) corpus.push_back(fake_seq(static_cast<RoadClass>(i % 4), i));
    auto clients = partition_noniid(corpus, 1, 0.5, 3);
    REQUIRE(clients.size() == 1);
    CHECK(clients[0].size() == corpus.size());
}

TEST_CASE("partition covers the corpus exactly once") {
    std::vector<LabeledSequence> corpus;
    for (int i = 0; i < 333; ++i) corpus.push_back(fake_seq(static_cast<RoadClass>(i % 4), i));
    auto clients = partition_noniid(corpus, 7, 0.3, 5);
    std::vector<int> seen(corpus.size(), 0);
    for (const auto& cl : clients)
        for (auto idx : cl) ++seen[idx];
    for (int s : seen) REQUIRE(s == 1);
}

TEST_CASE("huge alpha approaches an IID split") {
    std::vector<LabeledSequence> corpus;
    // 400 per event class
    for (int i = 0; i < 1200; ++i) corpus.push_back(fake_seq(static_cast<RoadClass>(1 + i % 3), i));
    const int n_clients = 4;
    auto clients = partition_noniid(corpus, n_clients, 1e6, 7);
    // global proportions: 1/3 each event class
    for (const auto& cl : clients) {
        REQUIRE(!cl.empty());
        std::array<double, kNumClasses> hist{};
        for (auto idx : cl) hist[static_cast<int>(dominant_class(corpus[idx]))] += 1.0;
        for (int c = 1; c < kNumClasses; ++c) {
            const double share = hist[c] / static_cast<double>(cl.size());
            CHECK(std::abs(share - 1.0 / 3.0) < 0.05);
        }
    }
}

TEST_CASE("small alpha produces a skewed client") {
    std::vector<LabeledSequence> corpus;
    for (int i = 0; i < 900; ++i) corpus.push_back(fake_seq(static_cast<RoadClass>(1 + i % 3), i));
    auto clients = partition_noniid(corpus, 10, 0.1, 3);
    // global share of every event class is 1/3; look for a client dominated
    // by one class at >= 2x that share
    bool found = false;
    for (const auto& cl : clients) {
        if (cl.empty()) continue;
        std::array<double, kNumClasses> hist{};
        for (auto idx : cl) hist[static_cast<int>(dominant_class(corpus[idx]))] += 1.0;
        const double top = *std::max_element(hist.begin(), hist.end()) / static_cast<double>(cl.size());
        if (top >= 2.0 / 3.0) found = true;
    }
    CHECK(found);
}

TEST_CASE("partition rejects more clients than sequences") {
    std::vector<LabeledSequence> corpus;
    for (int i = 0; i < 3; ++i) corpus.push_back(fake_seq(RoadClass::Pothole, i));
    CHECK_THROWS_WITH(partition_noniid(corpus, 4, 0.5, 1), Catch::Matchers::ContainsSubstring("too-many-clients"));
}

TEST_CASE("dominant class rules") {
    auto s = fake_seq(RoadClass::Normal, 0);
    CHECK(dominant_class(s) == RoadClass::Normal);
    for (int l = 0; l < 10; ++l) s.y[l] = static_cast<std::uint8_t>(RoadClass::Manhole);
    for (int l = 10; l < 20; ++l) s.y[l] = static_cast<std::uint8_t>(RoadClass::Pothole);
    CHECK(dominant_class(s) == RoadClass::Manhole);  // tie -> lowest class id
    for (int l = 20; l < 31; ++l) s.y[l] = static_cast<std::uint8_t>(RoadClass::Pothole);
    CHECK(dominant_class(s) == RoadClass::Pothole);
}
