#pragma once

#include <cmath>
#include <map>

#include "roadvib/params.hpp"

namespace roadvib {

template <typename T>
struct AdamState {
    std::map<std::string, Tensor<T>> m;  // first moment
    std::map<std::string, Tensor<T>> u;  // second moment
    std::int64_t step = 0;
};

/// One Adam update over all trainable tensors; reads each tensor's .grad.
template <typename T>
void adam_step(ModelParams<T>& params, AdamState<T>& state, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8) {
    state.step += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    for (auto& [name, t] : params.tensors) {
        if (!ModelParams<T>::trainable(name)) continue;
        if (t.grad.size() != t.v.size()) throw DataError("adam_step: missing gradient for " + name);
        auto [mit, inserted_m] = state.m.try_emplace(name, Tensor<T>(t.shape));
        auto [uit, inserted_u] = state.u.try_emplace(name, Tensor<T>(t.shape));
        auto& m = mit->second.v;
        auto& u = uit->second.v;
        for (std::size_t i = 0; i < t.v.size(); ++i) {
            const double g = static_cast<double>(t.grad[i]);
            const double mi = beta1 * static_cast<double>(m[i]) + (1.0 - beta1) * g;
            const double ui = beta2 * static_cast<double>(u[i]) + (1.0 - beta2) * g * g;
            m[i] = static_cast<T>(mi);
            u[i] = static_cast<T>(ui);
            const double mhat = mi / bc1;
            const double uhat = ui / bc2;
            t.v[i] = static_cast<T>(static_cast<double>(t.v[i]) - lr * mhat / (std::sqrt(uhat) + eps));
        }
    }
}

/// Cosine annealing: lr0 * 0.5 * (1 + cos(pi * epoch / total)).
inline double cosine_lr(int epoch, int total, double lr0) {
    if (epoch < 0 || epoch >= total) throw ConfigError("cosine_lr: epoch out of range");
    return lr0 * 0.5 * (1.0 + std::cos(3.14159265358979323846 * static_cast<double>(epoch) /
                                       static_cast<double>(total)));
}

}  // namespace roadvib
