#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "matepred/errors.hpp"

namespace matepred {

inline constexpr double kDecisionThreshold = 0.5;

struct Confusion {
    std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;

    std::uint64_t total() const noexcept { return tp + tn + fp + fn; }

    void add(bool predicted, bool actual) noexcept {
        if (predicted) (actual ? tp : fp) += 1;
        else (actual ? fn : tn) += 1;
    }

    Confusion& operator+=(const Confusion& o) noexcept {
        tp += o.tp;
        tn += o.tn;
        fp += o.fp;
        fn += o.fn;
        return *this;
    }
    friend bool operator==(const Confusion&, const Confusion&) = default;
};

/// Matthews correlation; 0 when any marginal is empty.
inline double mcc(std::uint64_t tp, std::uint64_t tn, std::uint64_t fp, std::uint64_t fn) {
    const double a = static_cast<double>(tp + fp), b = static_cast<double>(tp + fn);
    const double c = static_cast<double>(tn + fp), d = static_cast<double>(tn + fn);
    if (a == 0 || b == 0 || c == 0 || d == 0) return 0.0;
    const double num = static_cast<double>(tp) * static_cast<double>(tn) -
                       static_cast<double>(fp) * static_cast<double>(fn);
    return num / std::sqrt(a * b * c * d);
}

inline double mcc(const Confusion& m) { return mcc(m.tp, m.tn, m.fp, m.fn); }

template <typename Score>
Confusion confusion_at(std::span<const Score> scores, std::span<const int> labels,
                       double threshold = kDecisionThreshold) {
    if (scores.size() != labels.size()) throw ShapeMismatch("scores vs labels length");
    Confusion m;
    for (std::size_t i = 0; i < scores.size(); ++i) m.add(static_cast<double>(scores[i]) >= threshold, labels[i] != 0);
    return m;
}

/// AUC as an exact fraction numerator / denominator, both doubled so tied
/// (half-integer) average ranks stay integral.
struct AucFraction {
    std::uint64_t numerator = 0;
    std::uint64_t denominator = 1;

    double value() const noexcept { return static_cast<double>(numerator) / static_cast<double>(denominator); }
};

/// Mann-Whitney AUC with average ranks for ties.
template <typename Score>
AucFraction auc_fraction(std::span<const Score> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw ShapeMismatch("scores vs labels length");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    std::uint64_t pos = 0;
    std::uint64_t twice_rank_sum = 0;  // sum over positives of 2 * average rank (1-based)
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const std::uint64_t twice_avg = (i + 1) + j;  // 2 * mean of ranks i+1 .. j
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]] != 0) {
                ++pos;
                twice_rank_sum += twice_avg;
            }
        i = j;
    }
    const std::uint64_t neg = n - pos;
    if (pos == 0 || neg == 0) throw SingleClass("AUC needs both labels");
    // 2U = 2 * rank_sum - P (P + 1)
    return {twice_rank_sum - pos * (pos + 1), 2 * pos * neg};
}

template <typename Score>
double auc(std::span<const Score> scores, std::span<const int> labels) {
    return auc_fraction(scores, labels).value();
}

} // namespace matepred
