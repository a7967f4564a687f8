#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "matepred/errors.hpp"
#include "matepred/rng.hpp"
#include "matepred/sequence.hpp"

namespace matepred {

/// Symmetric, finite, nonnegative l x l matrix of residue-pair estimates.
class ContactMap {
public:
    static constexpr double kSymmetryTolerance = 1e-6;

    /// Validates and symmetrizes (averages mirrored entries) a row-major matrix.
    template <typename T>
    static ContactMap from_matrix(std::size_t rows, std::size_t cols, std::span<const T> values) {
        if (rows != cols)
            throw NonSquare(std::to_string(rows) + "x" + std::to_string(cols));
        if (rows == 0) throw InvalidArgument("empty contact map");
        if (values.size() != rows * cols) throw ShapeMismatch("contact map payload size");
        ContactMap m;
        m.size_ = rows;
        m.values_.assign(values.begin(), values.end());
        double max_dev = 0.0;
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < cols; ++j) {
                const double v = m.values_[i * cols + j];
                if (!std::isfinite(v))
                    throw NonFinite("contact map entry (" + std::to_string(i) + "," +
                                    std::to_string(j) + ")");
                if (v < 0.0) throw InvalidArgument("negative contact map entry");
                max_dev = std::max(max_dev, std::abs(v - static_cast<double>(values[j * cols + i])));
            }
        }
        if (max_dev > kSymmetryTolerance) throw AsymmetricMap(max_dev);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = i + 1; j < cols; ++j) {
                const double avg = 0.5 * (m.values_[i * cols + j] + m.values_[j * cols + i]);
                m.values_[i * cols + j] = avg;
                m.values_[j * cols + i] = avg;
            }
        return m;
    }

    std::size_t size() const noexcept { return size_; }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * size_ + j]; }
    const std::vector<double>& values() const noexcept { return values_; }

    ContactMap transposed() const {
        ContactMap t = *this;
        for (std::size_t i = 0; i < size_; ++i)
            for (std::size_t j = 0; j < size_; ++j) t.values_[i * size_ + j] = values_[j * size_ + i];
        return t;
    }

private:
    std::size_t size_ = 0;
    std::vector<double> values_;
};

inline constexpr std::size_t flat_length(std::size_t canvas) noexcept {
    return canvas * (canvas + 1) / 2;
}

/// Row-major upper triangle (diagonal included) of the zero-padded canvas.
struct FlatContactVector {
    std::vector<double> values;
};

/// Places the map top-left on a canvas x canvas zero matrix (truncating larger
/// maps to the top-left block) and emits entries (i, j), j >= i, row-major.
inline FlatContactVector pad_and_flatten(const ContactMap& map, std::size_t canvas = kDefaultContext) {
    if (canvas == 0) throw InvalidArgument("canvas must be >= 1");
    FlatContactVector out;
    out.values.reserve(flat_length(canvas));
    const std::size_t n = std::min(map.size(), canvas);
    for (std::size_t i = 0; i < canvas; ++i)
        for (std::size_t j = i; j < canvas; ++j)
            out.values.push_back(i < n && j < n ? map(i, j) : 0.0);
    return out;
}

/// Inverse of pad_and_flatten: the full symmetric canvas x canvas matrix.
inline std::vector<double> unflatten(const FlatContactVector& flat, std::size_t canvas) {
    if (flat.values.size() != flat_length(canvas)) throw ShapeMismatch("flat contact vector length");
    std::vector<double> m(canvas * canvas, 0.0);
    std::size_t k = 0;
    for (std::size_t i = 0; i < canvas; ++i)
        for (std::size_t j = i; j < canvas; ++j) {
            m[i * canvas + j] = flat.values[k];
            m[j * canvas + i] = flat.values[k];
            ++k;
        }
    return m;
}

/// Deterministic stand-in for a predicted contact map, used when no map store
/// is available (mock mode). Values lie in [0, 1], decaying with |i - j|.
inline ContactMap mock_contact_map(const AaSequence& seq, std::uint64_t seed) {
    const std::size_t n = seq.size();
    std::vector<double> m(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        m[i * n + i] = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const auto a = static_cast<std::uint64_t>(seq.token(i));
            const auto b = static_cast<std::uint64_t>(seq.token(j));
            const double noise = rng::counter_uniform(seed, 0xC0A7ull, a * 32 + b, j - i);
            const double v = std::exp(-0.35 * static_cast<double>(j - i)) * (0.5 + 0.5 * noise);
            m[i * n + j] = v;
            m[j * n + i] = v;
        }
    }
    return ContactMap::from_matrix(n, n, std::span<const double>(m));
}

} // namespace matepred
