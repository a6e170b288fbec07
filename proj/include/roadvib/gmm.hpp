#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "roadvib/types.hpp"

namespace roadvib {

/// Online Gaussian-mixture background model over a scalar vibration stream.
struct GmmConfig {
    int k = 4;                 // component count
    double alpha = 0.01;       // weight learning rate
    double rho = 0.01;         // matched-component update rate (fixed = alpha)
    double m_match = 2.5;      // matching threshold, sigma units
    double m_event = 3.0;      // abnormality threshold, sigma units
    double sigma0_sq = 1.0;    // variance for new/initial components
    double omega0 = 0.05;      // weight for replacement components
    double t_b = 0.9;          // cumulative background weight threshold
    std::int64_t warmup = 200; // samples before the indicator may fire
    double var_floor = 1e-4;

    void validate() const {
        if (k < 1) throw ConfigError("gmm: k must be >= 1");
        if (alpha <= 0.0 || alpha >= 1.0) throw ConfigError("gmm: alpha must be in (0,1)");
        if (rho <= 0.0 || rho >= 1.0) throw ConfigError("gmm: rho must be in (0,1)");
        if (omega0 <= 0.0 || omega0 >= 1.0) throw ConfigError("gmm: omega0 must be in (0,1)");
        if (t_b <= 0.0 || t_b >= 1.0) throw ConfigError("gmm: t_b must be in (0,1)");
        if (sigma0_sq < var_floor) throw ConfigError("gmm: sigma0_sq below variance floor");
        if (m_match <= 0.0 || m_event <= 0.0) throw ConfigError("gmm: thresholds must be positive");
        if (warmup < 0) throw ConfigError("gmm: warmup must be >= 0");
    }
};

struct GmmComponent {
    double weight = 0.0;
    double mean = 0.0;
    double var = 1.0;
};

struct GmmState {
    std::vector<GmmComponent> comps;
    std::int64_t t = 0;  // samples consumed (including the init sample)

    double weight_sum() const {
        return std::accumulate(comps.begin(), comps.end(), 0.0,
                               [](double a, const GmmComponent& c) { return a + c.weight; });
    }
};

struct GmmStepResult {
    bool indicator = false;   // abnormal vibration point
    bool matched = false;     // matched-update (true) vs replacement (false)
    int component = -1;       // index updated or replaced
};

/// Seed the mixture from the first sample: component 0 carries all weight at
/// x0; the rest sit at 3-sigma offsets with zero weight until recruited.
inline GmmState gmm_init(const GmmConfig& cfg, double x0) {
    cfg.validate();
    if (!std::isfinite(x0)) throw DataError("invalid-sample");
    GmmState st;
    const double sigma0 = std::sqrt(cfg.sigma0_sq);
    st.comps.resize(static_cast<std::size_t>(cfg.k));
    for (int k = 0; k < cfg.k; ++k) {
        st.comps[static_cast<std::size_t>(k)] = {k == 0 ? 1.0 : 0.0, x0 + 3.0 * sigma0 * k, cfg.sigma0_sq};
    }
    st.t = 1;
    return st;
}

/// Background component set: components ranked by weight/sigma (descending,
/// stable) until their cumulative weight exceeds t_b. Returns indices.
inline std::vector<int> background_set(const GmmState& st, const GmmConfig& cfg) {
    std::vector<int> order(st.comps.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const auto& ca = st.comps[static_cast<std::size_t>(a)];
        const auto& cb = st.comps[static_cast<std::size_t>(b)];
        return ca.weight / std::sqrt(ca.var) > cb.weight / std::sqrt(cb.var);
    });
    std::vector<int> bg;
    double cum = 0.0;
    for (int idx : order) {
        bg.push_back(idx);
        cum += st.comps[static_cast<std::size_t>(idx)].weight;
        if (cum > cfg.t_b) break;
    }
    return bg;
}

/// One online update. Exactly one of {matched update, replacement} happens,
/// weights are renormalized, and the abnormality indicator is evaluated
/// against the post-update background set.
inline GmmStepResult gmm_step(GmmState& st, double x, const GmmConfig& cfg) {
    if (!std::isfinite(x)) throw DataError("invalid-sample");
    const std::int64_t sample_index = st.t;  // index of the sample being consumed

    // Match: |x - mu| <= m_match * sigma, smallest normalized distance wins.
    int best = -1;
    double best_dist = 0.0;
    for (int k = 0; k < static_cast<int>(st.comps.size()); ++k) {
        const auto& c = st.comps[static_cast<std::size_t>(k)];
        const double sigma = std::sqrt(c.var);
        const double dist = std::abs(x - c.mean) / sigma;
        if (std::abs(x - c.mean) <= cfg.m_match * sigma) {
            if (best < 0 || dist < best_dist) {
                best = k;
                best_dist = dist;
            }
        }
    }

    GmmStepResult res;
    if (best >= 0) {
        res.matched = true;
        res.component = best;
        auto& c = st.comps[static_cast<std::size_t>(best)];
        c.mean = (1.0 - cfg.rho) * c.mean + cfg.rho * x;
        const double d = x - c.mean;  // residual against the updated mean
        c.var = (1.0 - cfg.rho) * c.var + cfg.rho * d * d;
        for (int k = 0; k < static_cast<int>(st.comps.size()); ++k) {
            auto& ck = st.comps[static_cast<std::size_t>(k)];
            ck.weight = (1.0 - cfg.alpha) * ck.weight + (k == best ? cfg.alpha : 0.0);
        }
    } else {
        res.matched = false;
        int victim = 0;
        for (int k = 1; k < static_cast<int>(st.comps.size()); ++k)
            if (st.comps[static_cast<std::size_t>(k)].weight < st.comps[static_cast<std::size_t>(victim)].weight)
                victim = k;
        res.component = victim;
        auto& c = st.comps[static_cast<std::size_t>(victim)];
        c.mean = x;
        c.var = cfg.sigma0_sq;
        c.weight = cfg.omega0;
    }

    double sum = st.weight_sum();
    if (sum <= 0.0) sum = 1.0;
    for (auto& c : st.comps) {
        c.weight /= sum;
        c.var = std::max(c.var, cfg.var_floor);
    }

    // Abnormality indicator against the post-update background set.
    double min_dist = std::numeric_limits<double>::infinity();
    for (int idx : background_set(st, cfg)) {
        const auto& c = st.comps[static_cast<std::size_t>(idx)];
        min_dist = std::min(min_dist, std::abs(x - c.mean) / std::sqrt(c.var));
    }
    res.indicator = sample_index >= cfg.warmup && min_dist > cfg.m_event;

    st.t = sample_index + 1;
    return res;
}

/// Indicator sequence for a whole scalar stream (init on the first sample).
inline std::vector<std::uint8_t> gmm_indicator(const std::vector<double>& xs, const GmmConfig& cfg) {
    std::vector<std::uint8_t> ind(xs.size(), 0);
    if (xs.empty()) return ind;
    GmmState st = gmm_init(cfg, xs[0]);
    for (std::size_t t = 1; t < xs.size(); ++t) ind[t] = gmm_step(st, xs[t], cfg).indicator ? 1 : 0;
    return ind;
}

}  // namespace roadvib
