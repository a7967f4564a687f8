#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "matepred/errors.hpp"

namespace matepred {

#ifdef MATEPRED_FLOAT32
using Real = float;
#else
using Real = double;
#endif

using Shape = std::vector<std::size_t>;

inline std::string to_string(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
    return out + "]";
}

inline std::size_t numel(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

/// Dense row-major array.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, Real fill = Real(0)) : shape_(std::move(shape)), data_(numel(shape_), fill) {}
    Tensor(Shape shape, std::vector<Real> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (numel(shape_) != data_.size())
            throw ShapeMismatch("shape " + matepred::to_string(shape_) + " vs " +
                                std::to_string(data_.size()) + " values");
    }

    static Tensor scalar(Real v) { return Tensor({1}, std::vector<Real>{v}); }
    static Tensor vector(std::initializer_list<Real> v) { return Tensor({v.size()}, std::vector<Real>(v)); }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t size() const noexcept { return data_.size(); }

    std::span<Real> data() noexcept { return data_; }
    std::span<const Real> data() const noexcept { return data_; }
    std::vector<Real>& storage() noexcept { return data_; }
    const std::vector<Real>& storage() const noexcept { return data_; }

    Real& operator[](std::size_t i) { return data_[i]; }
    Real operator[](std::size_t i) const { return data_[i]; }
    Real& at(std::size_t i, std::size_t j) { return data_[i * shape_.back() + j]; }
    Real at(std::size_t i, std::size_t j) const { return data_[i * shape_.back() + j]; }

    Real item() const {
        if (data_.size() != 1) throw ShapeMismatch("item() on " + matepred::to_string(shape_));
        return data_[0];
    }

    Tensor reshaped(Shape s) const {
        if (numel(s) != data_.size())
            throw ShapeMismatch("reshape " + matepred::to_string(shape_) + " -> " + matepred::to_string(s));
        return Tensor(std::move(s), data_);
    }

    void fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](Real v) { return std::isfinite(v); });
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<Real> data_;
};

namespace kernel {

/// C[n,m] += A[n,k] * B[k,m]
inline void gemm_nn(const Real* a, const Real* b, Real* c, std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        Real* crow = c + i * m;
        const Real* arow = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const Real av = arow[p];
            if (av == Real(0)) continue;
            const Real* brow = b + p * m;
            for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
}

/// C[n,k] += G[n,m] * B[k,m]^T
inline void gemm_nt(const Real* g, const Real* b, Real* c, std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        const Real* grow = g + i * m;
        Real* crow = c + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const Real* brow = b + p * m;
            Real s = 0;
            for (std::size_t j = 0; j < m; ++j) s += grow[j] * brow[j];
            crow[p] += s;
        }
    }
}

/// C[k,m] += A[n,k]^T * G[n,m]
inline void gemm_tn(const Real* a, const Real* g, Real* c, std::size_t n, std::size_t k, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        const Real* arow = a + i * k;
        const Real* grow = g + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const Real av = arow[p];
            if (av == Real(0)) continue;
            Real* crow = c + p * m;
            for (std::size_t j = 0; j < m; ++j) crow[j] += av * grow[j];
        }
    }
}

} // namespace kernel

} // namespace matepred
