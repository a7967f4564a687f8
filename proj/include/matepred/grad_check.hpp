#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "matepred/autodiff.hpp"
#include "matepred/rng.hpp"

namespace matepred {

struct GradCheckOptions {
    Real step = Real(1e-5);
    Real tolerance = Real(1e-4);
    /// Coordinates per tensor; smaller tensors are checked exhaustively.
    std::size_t samples_per_tensor = 64;
    /// Relative error is |a - n| / max(|a|, |n|, floor): gradients below the
    /// floor are compared on absolute error, where finite differences are noise.
    Real magnitude_floor = Real(1e-6);
    std::uint64_t seed = 0;
};

struct TensorCheck {
    std::string name;
    std::size_t coords = 0;
    Real max_rel_error = 0;
    Real max_abs_error = 0;
};

struct GradCheckReport {
    std::vector<TensorCheck> tensors;
    Real max_rel_error = 0;
    std::size_t coords_checked = 0;
    bool passed = false;
};

using NamedVar = std::pair<std::string, Var>;

/// Compares backward() against central differences of `loss` for each listed
/// tensor. `loss` must rebuild the graph from the current parameter values.
inline GradCheckReport grad_check(const std::function<Var()>& loss, std::vector<NamedVar> params,
                                  const GradCheckOptions& opt = {}) {
    if (!(opt.step > 0)) throw InvalidArgument("grad_check step must be > 0");
    const Var root = loss();
    backward(root);

    GradCheckReport report;
    for (std::size_t t = 0; t < params.size(); ++t) {
        auto& [name, var] = params[t];
        const Tensor analytic = var.grad();
        auto& values = var.mutable_value();
        const std::size_t n = values.size();

        std::vector<std::size_t> coords(n);
        for (std::size_t i = 0; i < n; ++i) coords[i] = i;
        if (n > opt.samples_per_tensor) {
            rng::Generator gen(rng::hash_keys(opt.seed, t, n, 0x6C4Eull));
            gen.shuffle(coords);
            coords.resize(opt.samples_per_tensor);
        }

        TensorCheck check{name, coords.size(), 0, 0};
        for (std::size_t i : coords) {
            const Real saved = values[i];
            values[i] = saved + opt.step;
            const Real plus = loss().value().item();
            values[i] = saved - opt.step;
            const Real minus = loss().value().item();
            values[i] = saved;
            const Real numeric = (plus - minus) / (2 * opt.step);
            const Real a = analytic.size() == n ? analytic[i] : Real(0);
            const Real abs_err = std::abs(a - numeric);
            const Real denom = std::max({std::abs(a), std::abs(numeric), opt.magnitude_floor});
            check.max_abs_error = std::max(check.max_abs_error, abs_err);
            check.max_rel_error = std::max(check.max_rel_error, abs_err / denom);
        }
        report.max_rel_error = std::max(report.max_rel_error, check.max_rel_error);
        report.coords_checked += check.coords;
        report.tensors.push_back(std::move(check));
    }
    report.passed = report.max_rel_error < opt.tolerance;
    return report;
}

} // namespace matepred
