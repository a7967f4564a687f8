#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "matepred/autodiff.hpp"
#include "matepred/grad_check.hpp"

namespace matepred {

struct AdamConfig {
    double lr = 5e-3;
    double beta1 = 0.9;
    double beta2 = 0.98;
    double eps = 1e-9;
};

struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    std::uint64_t step = 0;
};

/// Bias-corrected Adam on one tensor; `t` is the 1-based step.
inline void adam_update(std::span<Real> param, std::span<const Real> grad, std::span<Real> m, std::span<Real> v,
                        std::uint64_t t, const AdamConfig& c) {
    const double c1 = 1.0 - std::pow(c.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(c.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double g = i < grad.size() ? static_cast<double>(grad[i]) : 0.0;
        const double mi = c.beta1 * m[i] + (1.0 - c.beta1) * g;
        const double vi = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
        m[i] = static_cast<Real>(mi);
        v[i] = static_cast<Real>(vi);
        param[i] -= static_cast<Real>(c.lr * (mi / c1) / (std::sqrt(vi / c2) + c.eps));
    }
}

/// One optimizer step over the gradients left by the last backward().
inline void adam_step(const std::vector<NamedVar>& params, AdamState& s, const AdamConfig& c = {}) {
    if (s.m.empty()) {
        for (const auto& [name, p] : params) {
            s.m.emplace_back(p.shape());
            s.v.emplace_back(p.shape());
        }
    }
    if (s.m.size() != params.size()) throw ShapeMismatch("optimizer state does not match parameter list");
    ++s.step;
    for (std::size_t k = 0; k < params.size(); ++k) {
        Var p = params[k].second;
        const Tensor& g = p.grad();
        adam_update(p.mutable_value().data(), g.data(), s.m[k].data(), s.v[k].data(), s.step, c);
    }
}

} // namespace matepred
