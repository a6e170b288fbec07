#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "roadvib/tensor.hpp"

// 1D neural-network operations. Every op comes as a forward/backward pair;
// backward accumulates into the .grad buffers of its inputs (callers allocate
// with ensure_grad()). All loops write each output element from exactly one
// iteration with a fixed-order inner sum, so results are bitwise independent
// of the OpenMP schedule.

namespace roadvib {

// ---------------------------------------------------------------------------
// conv1d: cross-correlation, odd kernel, "same" replicate padding (edge values
// extend past the bounds, so a constant signal stays constant), output
// ceil(L/stride)
// ---------------------------------------------------------------------------

inline std::int64_t clamp_index(std::int64_t p, std::int64_t L) { return p < 0 ? 0 : (p >= L ? L - 1 : p); }

template <typename T>
Tensor<T> conv1d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias, int stride = 1) {
    require_rank(x, 3, "conv1d x");
    require_rank(w, 3, "conv1d w");
    const std::int64_t B = x.dim(0), Cin = x.dim(1), L = x.dim(2);
    const std::int64_t Cout = w.dim(0), k = w.dim(2);
    if (w.dim(1) != Cin) throw DataError("shape-error: conv1d weight channels " + shape_str(w.shape) +
                                         " vs input " + shape_str(x.shape));
    if (bias.size() != Cout) throw DataError("shape-error: conv1d bias");
    if (k % 2 == 0) throw DataError("shape-error: conv1d kernel must be odd");
    if (stride < 1) throw DataError("shape-error: conv1d stride");
    const std::int64_t pad = (k - 1) / 2;
    const std::int64_t Lo = (L + stride - 1) / stride;

    Tensor<T> y({B, Cout, Lo});
#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t n = 0; n < B; ++n) {
        for (std::int64_t co = 0; co < Cout; ++co) {
            T* yp = &y.v[static_cast<std::size_t>((n * Cout + co) * Lo)];
            for (std::int64_t t = 0; t < Lo; ++t) yp[t] = bias.v[static_cast<std::size_t>(co)];
            for (std::int64_t ci = 0; ci < Cin; ++ci) {
                const T* xp = &x.v[static_cast<std::size_t>((n * Cin + ci) * L)];
                const T* wp = &w.v[static_cast<std::size_t>((co * Cin + ci) * k)];
                for (std::int64_t j = 0; j < k; ++j) {
                    const T wj = wp[j];
                    const std::int64_t off = j - pad;
                    if (stride == 1) {
                        const std::int64_t t0 = std::min<std::int64_t>(Lo, std::max<std::int64_t>(0, -off));
                        const std::int64_t t1 = std::max<std::int64_t>(t0, std::min<std::int64_t>(Lo, L - off));
                        for (std::int64_t t = 0; t < t0; ++t) yp[t] += wj * xp[0];
                        for (std::int64_t t = t0; t < t1; ++t) yp[t] += wj * xp[t + off];
                        for (std::int64_t t = t1; t < Lo; ++t) yp[t] += wj * xp[L - 1];
                    } else {
                        for (std::int64_t t = 0; t < Lo; ++t)
                            yp[t] += wj * xp[clamp_index(t * stride + off, L)];
                    }
                }
            }
        }
    }
    return y;
}

template <typename T>
void conv1d_backward(Tensor<T>& x, Tensor<T>& w, Tensor<T>& bias, const Tensor<T>& gy, int stride = 1) {
    const std::int64_t B = x.dim(0), Cin = x.dim(1), L = x.dim(2);
    const std::int64_t Cout = w.dim(0), k = w.dim(2);
    const std::int64_t pad = (k - 1) / 2;
    const std::int64_t Lo = gy.dim(2);
    x.ensure_grad();
    w.ensure_grad();
    bias.ensure_grad();

    for (std::int64_t co = 0; co < Cout; ++co) {
        T acc = 0;
        for (std::int64_t n = 0; n < B; ++n) {
            const T* gp = &gy.v[static_cast<std::size_t>((n * Cout + co) * Lo)];
            for (std::int64_t t = 0; t < Lo; ++t) acc += gp[t];
        }
        bias.grad[static_cast<std::size_t>(co)] += acc;
    }

#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t co = 0; co < Cout; ++co) {
        for (std::int64_t ci = 0; ci < Cin; ++ci) {
            T* gwp = &w.grad[static_cast<std::size_t>((co * Cin + ci) * k)];
            for (std::int64_t j = 0; j < k; ++j) {
                const std::int64_t off = j - pad;
                T acc = 0;
                for (std::int64_t n = 0; n < B; ++n) {
                    const T* gp = &gy.v[static_cast<std::size_t>((n * Cout + co) * Lo)];
                    const T* xp = &x.v[static_cast<std::size_t>((n * Cin + ci) * L)];
                    if (stride == 1) {
                        const std::int64_t t0 = std::min<std::int64_t>(Lo, std::max<std::int64_t>(0, -off));
                        const std::int64_t t1 = std::max<std::int64_t>(t0, std::min<std::int64_t>(Lo, L - off));
                        T lo_edge = 0, inner = 0, hi_edge = 0;
                        for (std::int64_t t = 0; t < t0; ++t) lo_edge += gp[t];
#pragma omp simd reduction(+ : inner)
                        for (std::int64_t t = t0; t < t1; ++t) inner += gp[t] * xp[t + off];
                        for (std::int64_t t = t1; t < Lo; ++t) hi_edge += gp[t];
                        acc += inner + lo_edge * xp[0] + hi_edge * xp[L - 1];
                    } else {
                        for (std::int64_t t = 0; t < Lo; ++t)
                            acc += gp[t] * xp[clamp_index(t * stride + off, L)];
                    }
                }
                gwp[j] += acc;
            }
        }
    }

#pragma omp parallel for collapse(2) schedule(static)
    for (std::int64_t n = 0; n < B; ++n) {
        for (std::int64_t ci = 0; ci < Cin; ++ci) {
            T* gxp = &x.grad[static_cast<std::size_t>((n * Cin + ci) * L)];
            for (std::int64_t co = 0; co < Cout; ++co) {
                const T* gp = &gy.v[static_cast<std::size_t>((n * Cout + co) * Lo)];
                const T* wp = &w.v[static_cast<std::size_t>((co * Cin + ci) * k)];
                for (std::int64_t j = 0; j < k; ++j) {
                    const T wj = wp[j];
                    const std::int64_t off = j - pad;
                    if (stride == 1) {
                        const std::int64_t t0 = std::min<std::int64_t>(Lo, std::max<std::int64_t>(0, -off));
                        const std::int64_t t1 = std::max<std::int64_t>(t0, std::min<std::int64_t>(Lo, L - off));
                        for (std::int64_t t = 0; t < t0; ++t) gxp[0] += wj * gp[t];
                        for (std::int64_t t = t0; t < t1; ++t) gxp[t + off] += wj * gp[t];
                        for (std::int64_t t = t1; t < Lo; ++t) gxp[L - 1] += wj * gp[t];
                    } else {
                        for (std::int64_t t = 0; t < Lo; ++t)
                            gxp[clamp_index(t * stride + off, L)] += wj * gp[t];
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// batchnorm1d over (batch, length) per channel
// ---------------------------------------------------------------------------

template <typename T>
struct BnCache {
    Tensor<T> xhat;               // normalized input
    std::vector<T> inv_std;       // per channel
    std::vector<T> batch_mean;
    bool train = true;
};

template <typename T>
Tensor<T> batchnorm1d_forward(const Tensor<T>& x, const Tensor<T>& scale, const Tensor<T>& shift,
                              Tensor<T>& running_mean, Tensor<T>& running_var, double momentum, double eps,
                              bool train, BnCache<T>& cache) {
    require_rank(x, 3, "batchnorm1d x");
    const std::int64_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
    if (B < 1) throw DataError("batchnorm1d: empty batch");
    if (scale.size() != C || shift.size() != C) throw DataError("shape-error: batchnorm1d params");
    const std::int64_t N = B * L;

    Tensor<T> y(x.shape);
    cache.xhat = Tensor<T>(x.shape);
    cache.inv_std.assign(static_cast<std::size_t>(C), T(0));
    cache.batch_mean.assign(static_cast<std::size_t>(C), T(0));
    cache.train = train;

#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < C; ++c) {
        T mean, var;
        if (train) {
            T sum = 0;
            for (std::int64_t n = 0; n < B; ++n)
                for (std::int64_t l = 0; l < L; ++l) sum += x.at(n, c, l);
            mean = sum / static_cast<T>(N);
            T sq = 0;
            for (std::int64_t n = 0; n < B; ++n)
                for (std::int64_t l = 0; l < L; ++l) {
                    const T d = x.at(n, c, l) - mean;
                    sq += d * d;
                }
            var = sq / static_cast<T>(N);
            running_mean.v[static_cast<std::size_t>(c)] =
                static_cast<T>(momentum) * running_mean.v[static_cast<std::size_t>(c)] +
                static_cast<T>(1.0 - momentum) * mean;
            running_var.v[static_cast<std::size_t>(c)] =
                static_cast<T>(momentum) * running_var.v[static_cast<std::size_t>(c)] +
                static_cast<T>(1.0 - momentum) * var;
        } else {
            mean = running_mean.v[static_cast<std::size_t>(c)];
            var = running_var.v[static_cast<std::size_t>(c)];
        }
        const T inv = T(1) / std::sqrt(var + static_cast<T>(eps));
        cache.inv_std[static_cast<std::size_t>(c)] = inv;
        cache.batch_mean[static_cast<std::size_t>(c)] = mean;
        const T g = scale.v[static_cast<std::size_t>(c)];
        const T b = shift.v[static_cast<std::size_t>(c)];
        for (std::int64_t n = 0; n < B; ++n)
            for (std::int64_t l = 0; l < L; ++l) {
                const T xh = (x.at(n, c, l) - mean) * inv;
                cache.xhat.at(n, c, l) = xh;
                y.at(n, c, l) = g * xh + b;
            }
    }
    return y;
}

template <typename T>
void batchnorm1d_backward(Tensor<T>& x, Tensor<T>& scale, Tensor<T>& shift, const BnCache<T>& cache,
                          const Tensor<T>& gy) {
    const std::int64_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
    const std::int64_t N = B * L;
    x.ensure_grad();
    scale.ensure_grad();
    shift.ensure_grad();

#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < C; ++c) {
        const T g = scale.v[static_cast<std::size_t>(c)];
        const T inv = cache.inv_std[static_cast<std::size_t>(c)];
        T sum_gy = 0, sum_gy_xhat = 0;
        for (std::int64_t n = 0; n < B; ++n)
            for (std::int64_t l = 0; l < L; ++l) {
                const T go = gy.at(n, c, l);
                sum_gy += go;
                sum_gy_xhat += go * cache.xhat.at(n, c, l);
            }
        scale.grad[static_cast<std::size_t>(c)] += sum_gy_xhat;
        shift.grad[static_cast<std::size_t>(c)] += sum_gy;
        if (cache.train) {
            for (std::int64_t n = 0; n < B; ++n)
                for (std::int64_t l = 0; l < L; ++l) {
                    const T go = gy.at(n, c, l);
                    const T xh = cache.xhat.at(n, c, l);
                    x.gat(n, c, l) += g * inv / static_cast<T>(N) *
                                      (static_cast<T>(N) * go - sum_gy - xh * sum_gy_xhat);
                }
        } else {
            for (std::int64_t n = 0; n < B; ++n)
                for (std::int64_t l = 0; l < L; ++l) x.gat(n, c, l) += gy.at(n, c, l) * g * inv;
        }
    }
}

// ---------------------------------------------------------------------------
// pointwise activations
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
    Tensor<T> y(x.shape);
    for (std::size_t i = 0; i < x.v.size(); ++i) y.v[i] = x.v[i] > T(0) ? x.v[i] : T(0);
    return y;
}

template <typename T>
void relu_backward(Tensor<T>& x, const Tensor<T>& gy) {
    x.ensure_grad();
    for (std::size_t i = 0; i < x.v.size(); ++i)
        if (x.v[i] > T(0)) x.grad[i] += gy.v[i];
}

template <typename T>
Tensor<T> sigmoid_forward(const Tensor<T>& x) {
    Tensor<T> y(x.shape);
    for (std::size_t i = 0; i < x.v.size(); ++i) {
        const T xi = x.v[i];
        y.v[i] = xi >= T(0) ? T(1) / (T(1) + std::exp(-xi)) : std::exp(xi) / (T(1) + std::exp(xi));
    }
    return y;
}

template <typename T>
void sigmoid_backward(Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& gy) {
    x.ensure_grad();
    for (std::size_t i = 0; i < x.v.size(); ++i) x.grad[i] += gy.v[i] * y.v[i] * (T(1) - y.v[i]);
}

// ---------------------------------------------------------------------------
// softmax over the channel dimension at every (batch, position)
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> softmax_channel_forward(const Tensor<T>& x) {
    require_rank(x, 3, "softmax x");
    const std::int64_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
    Tensor<T> y(x.shape);
    for (std::int64_t n = 0; n < B; ++n)
        for (std::int64_t l = 0; l < L; ++l) {
            T mx = x.at(n, 0, l);
            for (std::int64_t c = 1; c < C; ++c) mx = std::max(mx, x.at(n, c, l));
            T sum = 0;
            for (std::int64_t c = 0; c < C; ++c) {
                const T e = std::exp(x.at(n, c, l) - mx);
                y.at(n, c, l) = e;
                sum += e;
            }
            for (std::int64_t c = 0; c < C; ++c) y.at(n, c, l) /= sum;
        }
    return y;
}

template <typename T>
void softmax_channel_backward(Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& gy) {
    const std::int64_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
    x.ensure_grad();
    for (std::int64_t n = 0; n < B; ++n)
        for (std::int64_t l = 0; l < L; ++l) {
            T dot = 0;
            for (std::int64_t c = 0; c < C; ++c) dot += gy.at(n, c, l) * y.at(n, c, l);
            for (std::int64_t c = 0; c < C; ++c)
                x.gat(n, c, l) += y.at(n, c, l) * (gy.at(n, c, l) - dot);
        }
}

// ---------------------------------------------------------------------------
// maxpool width 2 / stride 2 (first index wins ties)
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> maxpool1d_forward(const Tensor<T>& x, std::vector<std::int32_t>& argmax) {
    require_rank(x, 3, "maxpool x");
    const std::int64_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
    if (L % 2 != 0) throw DataError("shape-error: maxpool1d needs even length, got " + std::to_string(L));
    const std::int64_t Lo = L / 2;
    Tensor<T> y({B, C, Lo});
    argmax.assign(static_cast<std::size_t>(B * C * Lo), 0);
    for (std::int64_t n = 0; n < B; ++n)
        for (std::int64_t c = 0; c < C; ++c)
            for (std::int64_t t = 0; t < Lo; ++t) {
                const T a = x.at(n, c, 2 * t), b = x.at(n, c, 2 * t + 1);
                const bool second = b > a;
                y.at(n, c, t) = second ? b : a;
                argmax[static_cast<std::size_t>((n * C + c) * Lo + t)] = second ? 1 : 0;
            }
    return y;
}

template <typename T>
void maxpool1d_backward(Tensor<T>& x, const std::vector<std::int32_t>& argmax, const Tensor<T>& gy) {
    const std::int64_t B = x.dim(0), C = x.dim(1), Lo = gy.dim(2);
    x.ensure_grad();
    for (std::int64_t n = 0; n < B; ++n)
        for (std::int64_t c = 0; c < C; ++c)
            for (std::int64_t t = 0; t < Lo; ++t)
                x.gat(n, c, 2 * t + argmax[static_cast<std::size_t>((n * C + c) * Lo + t)]) += gy.at(n, c, t);
}

// ---------------------------------------------------------------------------
// nearest-neighbor upsample x2
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> upsample_nearest_forward(const Tensor<T>& x) {
    require_rank(x, 3, "upsample x");
    const std::int64_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
    Tensor<T> y({B, C, 2 * L});
    for (std::int64_t n = 0; n < B; ++n)
        for (std::int64_t c = 0; c < C; ++c)
            for (std::int64_t t = 0; t < L; ++t) {
                const T val = x.at(n, c, t);
                y.at(n, c, 2 * t) = val;
                y.at(n, c, 2 * t + 1) = val;
            }
    return y;
}

template <typename T>
void upsample_nearest_backward(Tensor<T>& x, const Tensor<T>& gy) {
    const std::int64_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
    x.ensure_grad();
    for (std::int64_t n = 0; n < B; ++n)
        for (std::int64_t c = 0; c < C; ++c)
            for (std::int64_t t = 0; t < L; ++t)
                x.gat(n, c, t) += gy.at(n, c, 2 * t) + gy.at(n, c, 2 * t + 1);
}

// ---------------------------------------------------------------------------
// channel concatenation
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> concat_channels_forward(const Tensor<T>& a, const Tensor<T>& b) {
    require_rank(a, 3, "concat a");
    require_rank(b, 3, "concat b");
    if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2))
        throw DataError("shape-error: concat " + shape_str(a.shape) + " vs " + shape_str(b.shape));
    const std::int64_t B = a.dim(0), Ca = a.dim(1), Cb = b.dim(1), L = a.dim(2);
    Tensor<T> y({B, Ca + Cb, L});
    for (std::int64_t n = 0; n < B; ++n) {
        for (std::int64_t c = 0; c < Ca; ++c)
            for (std::int64_t l = 0; l < L; ++l) y.at(n, c, l) = a.at(n, c, l);
        for (std::int64_t c = 0; c < Cb; ++c)
            for (std::int64_t l = 0; l < L; ++l) y.at(n, Ca + c, l) = b.at(n, c, l);
    }
    return y;
}

template <typename T>
void concat_channels_backward(Tensor<T>& a, Tensor<T>& b, const Tensor<T>& gy) {
    const std::int64_t B = a.dim(0), Ca = a.dim(1), Cb = b.dim(1), L = a.dim(2);
    a.ensure_grad();
    b.ensure_grad();
    for (std::int64_t n = 0; n < B; ++n) {
        for (std::int64_t c = 0; c < Ca; ++c)
            for (std::int64_t l = 0; l < L; ++l) a.gat(n, c, l) += gy.at(n, c, l);
        for (std::int64_t c = 0; c < Cb; ++c)
            for (std::int64_t l = 0; l < L; ++l) b.gat(n, c, l) += gy.at(n, Ca + c, l);
    }
}

// ---------------------------------------------------------------------------
// temporal global pools: (B, C, L) -> (B, C)
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> global_avgpool_forward(const Tensor<T>& x) {
    require_rank(x, 3, "avgpool x");
    const std::int64_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
    Tensor<T> y({B, C});
    for (std::int64_t n = 0; n < B; ++n)
        for (std::int64_t c = 0; c < C; ++c) {
            T sum = 0;
            for (std::int64_t l = 0; l < L; ++l) sum += x.at(n, c, l);
            y.at2(n, c) = sum / static_cast<T>(L);
        }
    return y;
}

template <typename T>
void global_avgpool_backward(Tensor<T>& x, const Tensor<T>& gy) {
    const std::int64_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
    x.ensure_grad();
    for (std::int64_t n = 0; n < B; ++n)
        for (std::int64_t c = 0; c < C; ++c) {
            const T g = gy.at2(n, c) / static_cast<T>(L);
            for (std::int64_t l = 0; l < L; ++l) x.gat(n, c, l) += g;
        }
}

template <typename T>
Tensor<T> global_maxpool_forward(const Tensor<T>& x, std::vector<std::int32_t>& argmax) {
    require_rank(x, 3, "maxpool x");
    const std::int64_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
    Tensor<T> y({B, C});
    argmax.assign(static_cast<std::size_t>(B * C), 0);
    for (std::int64_t n = 0; n < B; ++n)
        for (std::int64_t c = 0; c < C; ++c) {
            T best = x.at(n, c, 0);
            std::int32_t bi = 0;
            for (std::int64_t l = 1; l < L; ++l)
                if (x.at(n, c, l) > best) {
                    best = x.at(n, c, l);
                    bi = static_cast<std::int32_t>(l);
                }
            y.at2(n, c) = best;
            argmax[static_cast<std::size_t>(n * C + c)] = bi;
        }
    return y;
}

template <typename T>
void global_maxpool_backward(Tensor<T>& x, const std::vector<std::int32_t>& argmax, const Tensor<T>& gy) {
    const std::int64_t B = x.dim(0), C = x.dim(1);
    x.ensure_grad();
    for (std::int64_t n = 0; n < B; ++n)
        for (std::int64_t c = 0; c < C; ++c)
            x.gat(n, c, argmax[static_cast<std::size_t>(n * C + c)]) += gy.at2(n, c);
}

// ---------------------------------------------------------------------------
// dense: (B, In) x (Out, In) + (Out) -> (B, Out)
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias) {
    require_rank(x, 2, "dense x");
    require_rank(w, 2, "dense w");
    const std::int64_t B = x.dim(0), In = x.dim(1), Out = w.dim(0);
    if (w.dim(1) != In || bias.size() != Out)
        throw DataError("shape-error: dense " + shape_str(x.shape) + " x " + shape_str(w.shape));
    Tensor<T> y({B, Out});
    for (std::int64_t n = 0; n < B; ++n)
        for (std::int64_t o = 0; o < Out; ++o) {
            T sum = bias.v[static_cast<std::size_t>(o)];
            for (std::int64_t i = 0; i < In; ++i) sum += x.at2(n, i) * w.at2(o, i);
            y.at2(n, o) = sum;
        }
    return y;
}

template <typename T>
void dense_backward(Tensor<T>& x, Tensor<T>& w, Tensor<T>& bias, const Tensor<T>& gy) {
    const std::int64_t B = x.dim(0), In = x.dim(1), Out = w.dim(0);
    x.ensure_grad();
    w.ensure_grad();
    bias.ensure_grad();
    for (std::int64_t o = 0; o < Out; ++o) {
        T acc = 0;
        for (std::int64_t n = 0; n < B; ++n) acc += gy.at2(n, o);
        bias.grad[static_cast<std::size_t>(o)] += acc;
    }
    for (std::int64_t o = 0; o < Out; ++o)
        for (std::int64_t i = 0; i < In; ++i) {
            T acc = 0;
            for (std::int64_t n = 0; n < B; ++n) acc += gy.at2(n, o) * x.at2(n, i);
            w.gat2(o, i) += acc;
        }
    for (std::int64_t n = 0; n < B; ++n)
        for (std::int64_t i = 0; i < In; ++i) {
            T acc = 0;
            for (std::int64_t o = 0; o < Out; ++o) acc += gy.at2(n, o) * w.at2(o, i);
            x.gat2(n, i) += acc;
        }
}

// ---------------------------------------------------------------------------
// channel-broadcast multiply: (B, C, L) * (B, C) used by attention gating
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> scale_channels_forward(const Tensor<T>& x, const Tensor<T>& wgt) {
    require_rank(x, 3, "scale x");
    require_rank(wgt, 2, "scale w");
    const std::int64_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
    Tensor<T> y(x.shape);
    for (std::int64_t n = 0; n < B; ++n)
        for (std::int64_t c = 0; c < C; ++c) {
            const T g = wgt.at2(n, c);
            for (std::int64_t l = 0; l < L; ++l) y.at(n, c, l) = g * x.at(n, c, l);
        }
    return y;
}

template <typename T>
void scale_channels_backward(Tensor<T>& x, Tensor<T>& wgt, const Tensor<T>& gy) {
    const std::int64_t B = x.dim(0), C = x.dim(1), L = x.dim(2);
    x.ensure_grad();
    wgt.ensure_grad();
    for (std::int64_t n = 0; n < B; ++n)
        for (std::int64_t c = 0; c < C; ++c) {
            const T g = wgt.at2(n, c);
            T acc = 0;
            for (std::int64_t l = 0; l < L; ++l) {
                acc += gy.at(n, c, l) * x.at(n, c, l);
                x.gat(n, c, l) += g * gy.at(n, c, l);
            }
            wgt.gat2(n, c) += acc;
        }
}

}  // namespace roadvib
