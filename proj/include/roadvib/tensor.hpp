#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "roadvib/types.hpp"

namespace roadvib {

/// Dense row-major tensor of rank 1..3 with an optional gradient buffer.
/// Rank-3 tensors are (batch, channels, length); rank-2 (rows, cols).
template <typename T>
struct Tensor {
    std::vector<std::int64_t> shape;
    std::vector<T> v;
    std::vector<T> grad;  // empty until ensure_grad()

    Tensor() = default;
    explicit Tensor(std::vector<std::int64_t> s) : shape(std::move(s)) {
        v.assign(static_cast<std::size_t>(size()), T(0));
    }

    static Tensor zeros(std::initializer_list<std::int64_t> s) { return Tensor(std::vector<std::int64_t>(s)); }

    std::int64_t size() const {
        std::int64_t n = 1;
        for (auto d : shape) n *= d;
        return shape.empty() ? 0 : n;
    }
    int rank() const { return static_cast<int>(shape.size()); }
    std::int64_t dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

    // rank-3 accessors
    T& at(std::int64_t b, std::int64_t c, std::int64_t l) { return v[static_cast<std::size_t>((b * shape[1] + c) * shape[2] + l)]; }
    T at(std::int64_t b, std::int64_t c, std::int64_t l) const { return v[static_cast<std::size_t>((b * shape[1] + c) * shape[2] + l)]; }
    T& gat(std::int64_t b, std::int64_t c, std::int64_t l) { return grad[static_cast<std::size_t>((b * shape[1] + c) * shape[2] + l)]; }

    // rank-2 accessors
    T& at2(std::int64_t r, std::int64_t c) { return v[static_cast<std::size_t>(r * shape[1] + c)]; }
    T at2(std::int64_t r, std::int64_t c) const { return v[static_cast<std::size_t>(r * shape[1] + c)]; }
    T& gat2(std::int64_t r, std::int64_t c) { return grad[static_cast<std::size_t>(r * shape[1] + c)]; }

    void ensure_grad() {
        if (grad.size() != v.size()) grad.assign(v.size(), T(0));
    }
    void zero_grad() { grad.assign(v.size(), T(0)); }

    /// Accumulated gradient viewed as a value tensor (zeros if untouched).
    Tensor grad_tensor() const {
        Tensor out(shape);
        if (grad.size() == v.size()) out.v = grad;
        return out;
    }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(shape);
        for (std::size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
        return out;
    }
};

inline std::string shape_str(const std::vector<std::int64_t>& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

template <typename T>
void require_rank(const Tensor<T>& t, int rank, const char* who) {
    if (t.rank() != rank)
        throw DataError(std::string("shape-error: ") + who + " expected rank " + std::to_string(rank) +
                        ", got " + shape_str(t.shape));
}

}  // namespace roadvib
