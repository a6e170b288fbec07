#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "roadvib/tensor.hpp"

namespace roadvib {

struct LossConfig {
    std::array<double, kNumClasses> alpha{1.0, 1.0, 1.0, 1.0};  // per-class focal weights
    double gamma = 2.0;       // focal focusing
    double eps = 1e-7;
    double lambda_fp = 0.3;   // Tversky false-positive weight
    double beta_fn = 0.7;     // Tversky false-negative weight
    double eta = 1.0;         // Tversky contribution in the combined loss
    bool auto_alpha = true;   // derive alpha from training label frequencies

    void validate() const {
        for (double a : alpha)
            if (a <= 0) throw ConfigError("loss: alpha must be positive");
        if (gamma < 0) throw ConfigError("loss: gamma must be >= 0");
        if (lambda_fp <= 0 || beta_fn <= 0) throw ConfigError("loss: tversky weights must be positive");
        if (eps <= 0) throw ConfigError("loss: eps must be positive");
    }
};

/// Inverse-frequency class weights, normalized to mean 1 and clamped to
/// [0.25, 10] so extreme imbalance cannot dominate the objective.
inline std::array<double, kNumClasses> class_weights_from_labels(const std::vector<std::uint8_t>& labels) {
    std::array<double, kNumClasses> counts{};
    for (auto y : labels) counts[y] += 1.0;
    std::array<double, kNumClasses> raw{};
    double sum = 0.0;
    for (int c = 0; c < kNumClasses; ++c) {
        raw[static_cast<std::size_t>(c)] = 1.0 / std::max(counts[static_cast<std::size_t>(c)], 1.0);
        sum += raw[static_cast<std::size_t>(c)];
    }
    std::array<double, kNumClasses> w{};
    for (int c = 0; c < kNumClasses; ++c) {
        w[static_cast<std::size_t>(c)] =
            std::clamp(raw[static_cast<std::size_t>(c)] * kNumClasses / sum, 0.25, 10.0);
    }
    return w;
}

struct LossValue {
    double total = 0.0;
    double focal = 0.0;
    double tversky = 0.0;
};

/// Focal loss over a (B, 4, L) probability tensor with labels in b-major
/// (B*L) layout: mean over positions of -alpha_y (1-p_y)^gamma log(p_y+eps).
/// Accumulates dL/dP into dP when non-null.
template <typename T>
double focal_loss(const Tensor<T>& P, const std::vector<std::uint8_t>& y, const LossConfig& cfg,
                  Tensor<T>* dP = nullptr) {
    require_rank(P, 3, "focal P");
    const std::int64_t B = P.dim(0), L = P.dim(2);
    if (y.size() != static_cast<std::size_t>(B * L)) throw DataError("focal: label length mismatch");
    const double inv_n = 1.0 / static_cast<double>(B * L);
    double loss = 0.0;
    for (std::int64_t n = 0; n < B; ++n)
        for (std::int64_t l = 0; l < L; ++l) {
            const int cls = y[static_cast<std::size_t>(n * L + l)];
            if (cls < 0 || cls >= kNumClasses) throw DataError("focal: label out of range");
            const double a = cfg.alpha[static_cast<std::size_t>(cls)];
            const double p = static_cast<double>(P.at(n, cls, l));
            const double q = 1.0 - p;
            const double lg = std::log(p + cfg.eps);
            loss += -a * std::pow(q, cfg.gamma) * lg * inv_n;
            if (dP) {
                // d/dp [-a (1-p)^g log(p+eps)] = a g (1-p)^(g-1) log(p+eps) - a (1-p)^g / (p+eps)
                const double qg1 = cfg.gamma > 0.0 ? std::pow(q, cfg.gamma - 1.0) : 0.0;
                const double d = a * cfg.gamma * qg1 * lg - a * std::pow(q, cfg.gamma) / (p + cfg.eps);
                dP->at(n, cls, l) += static_cast<T>(d * inv_n);
            }
        }
    return loss;
}

/// Soft Tversky loss with batch-aggregated per-class counts:
/// TI_c = (TP+eps)/(TP + lambda FP + beta FN + eps), loss = 1 - mean_c TI_c.
template <typename T>
double tversky_loss(const Tensor<T>& P, const std::vector<std::uint8_t>& y, const LossConfig& cfg,
                    Tensor<T>* dP = nullptr) {
    require_rank(P, 3, "tversky P");
    const std::int64_t B = P.dim(0), C = P.dim(1), L = P.dim(2);
    if (y.size() != static_cast<std::size_t>(B * L)) throw DataError("tversky: label length mismatch");

    std::array<double, kNumClasses> tp{}, fp{}, fn{};
    for (std::int64_t n = 0; n < B; ++n)
        for (std::int64_t l = 0; l < L; ++l) {
            const int cls = y[static_cast<std::size_t>(n * L + l)];
            if (cls < 0 || cls >= kNumClasses) throw DataError("tversky: label out of range");
            for (std::int64_t c = 0; c < C; ++c) {
                const double p = static_cast<double>(P.at(n, c, l));
                if (c == cls) {
                    tp[static_cast<std::size_t>(c)] += p;
                    fn[static_cast<std::size_t>(c)] += 1.0 - p;
                } else {
                    fp[static_cast<std::size_t>(c)] += p;
                }
            }
        }

    double mean_ti = 0.0;
    std::array<double, kNumClasses> num{}, den{};
    for (int c = 0; c < kNumClasses; ++c) {
        num[static_cast<std::size_t>(c)] = tp[static_cast<std::size_t>(c)] + cfg.eps;
        den[static_cast<std::size_t>(c)] = tp[static_cast<std::size_t>(c)] +
                                           cfg.lambda_fp * fp[static_cast<std::size_t>(c)] +
                                           cfg.beta_fn * fn[static_cast<std::size_t>(c)] + cfg.eps;
        mean_ti += num[static_cast<std::size_t>(c)] / den[static_cast<std::size_t>(c)];
    }
    mean_ti /= kNumClasses;
    const double loss = 1.0 - mean_ti;

    if (dP) {
        for (std::int64_t n = 0; n < B; ++n)
            for (std::int64_t l = 0; l < L; ++l) {
                const int cls = y[static_cast<std::size_t>(n * L + l)];
                for (std::int64_t c = 0; c < C; ++c) {
                    const double Yc = (c == cls) ? 1.0 : 0.0;
                    const double dnum = Yc;
                    const double dden = Yc + cfg.lambda_fp * (1.0 - Yc) - cfg.beta_fn * Yc;
                    const double N = num[static_cast<std::size_t>(c)];
                    const double D = den[static_cast<std::size_t>(c)];
                    const double dti = (dnum * D - N * dden) / (D * D);
                    dP->at(n, c, l) += static_cast<T>(-dti / kNumClasses);
                }
            }
    }
    return loss;
}

/// Combined objective: focal + eta * tversky.
template <typename T>
LossValue combined_loss(const Tensor<T>& P, const std::vector<std::uint8_t>& y, const LossConfig& cfg,
                        Tensor<T>* dP = nullptr) {
    cfg.validate();
    LossValue out;
    out.focal = focal_loss(P, y, cfg, dP);
    if (cfg.eta != 0.0) {
        Tensor<T> dtv;
        Tensor<T>* dtvp = nullptr;
        if (dP) {
            dtv = Tensor<T>(P.shape);
            dtvp = &dtv;
        }
        out.tversky = tversky_loss(P, y, cfg, dtvp);
        if (dP)
            for (std::size_t i = 0; i < dP->v.size(); ++i)
                dP->v[i] += static_cast<T>(cfg.eta) * dtv.v[i];
    }
    out.total = out.focal + cfg.eta * out.tversky;
    return out;
}

}  // namespace roadvib
