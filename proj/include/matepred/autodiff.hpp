#pragma once

// Reverse-mode differentiation over the closed operator set the predictor
// needs. A Var is a shared handle to a GradNode; ops build the graph eagerly
// and register a backward closure that accumulates into parent gradients.

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "matepred/errors.hpp"
#include "matepred/rng.hpp"
#include "matepred/tensor.hpp"

namespace matepred {

struct GradNode {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<GradNode>> parents;
    std::function<void(const Tensor& grad_out)> backward_fn;
};

class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<GradNode> node) : node_(std::move(node)) {}

    const Tensor& value() const { return node_->value; }
    Tensor& mutable_value() { return node_->value; }
    const Tensor& grad() const { return node_->grad; }
    const Shape& shape() const { return node_->value.shape(); }
    bool requires_grad() const { return node_->requires_grad; }
    const std::shared_ptr<GradNode>& node() const { return node_; }
    explicit operator bool() const noexcept { return static_cast<bool>(node_); }

private:
    std::shared_ptr<GradNode> node_;
};

/// Trainable leaf.
inline Var parameter(Tensor value) {
    auto n = std::make_shared<GradNode>();
    n->value = std::move(value);
    n->requires_grad = true;
    return Var(std::move(n));
}

/// Non-trainable leaf.
inline Var constant(Tensor value) {
    auto n = std::make_shared<GradNode>();
    n->value = std::move(value);
    return Var(std::move(n));
}

namespace detail {

inline void check_finite([[maybe_unused]] const Tensor& t, [[maybe_unused]] const char* op) {
#ifndef NDEBUG
    if (!t.all_finite()) throw NonFinite(std::string("output of ") + op);
#endif
}

/// Wraps an op result; the closure is kept only if some parent needs gradients.
inline Var make_result(Tensor value, std::vector<Var> parents,
                       std::function<void(const Tensor&)> backward, const char* op) {
    check_finite(value, op);
    auto n = std::make_shared<GradNode>();
    n->value = std::move(value);
    for (const auto& p : parents) n->requires_grad = n->requires_grad || p.requires_grad();
    if (n->requires_grad) {
        n->parents.reserve(parents.size());
        for (const auto& p : parents) n->parents.push_back(p.node());
        n->backward_fn = std::move(backward);
    }
    return Var(std::move(n));
}

inline bool is_suffix(const Shape& small, const Shape& big) {
    if (small.size() > big.size()) return false;
    return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

inline void require(bool ok, const std::string& what) {
    if (!ok) throw ShapeMismatch(what);
}

} // namespace detail

/// Reverse sweep from a scalar root. Every gradient in the graph is zeroed
/// first, so leaf gradients afterwards hold exactly d(root)/d(leaf).
inline void backward(const Var& root) {
    if (root.value().size() != 1) throw NonScalarRoot("root shape " + to_string(root.shape()));
    std::vector<GradNode*> order;
    std::unordered_set<GradNode*> seen;
    std::vector<std::pair<GradNode*, std::size_t>> stack{{root.node().get(), 0}};
    seen.insert(root.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            GradNode* p = node->parents[next++].get();
            if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    for (GradNode* n : order) n->grad = Tensor(n->value.shape());
    root.node()->grad.fill(Real(1));
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        GradNode* n = *it;
        if (n->backward_fn) n->backward_fn(n->grad);
    }
}

// ---------------------------------------------------------------------------
// Operators

/// a[..., n, k] x b[k, m] (shared weight) or a[B, n, k] x b[B, k, m] (batched).
inline Var matmul(const Var& a, const Var& b) {
    const auto& as = a.shape();
    const auto& bs = b.shape();
    detail::require(as.size() >= 2 || (as.size() == 1 && bs.size() == 2),
                    "matmul lhs rank " + to_string(as));
    if (bs.size() == 2) {
        const std::size_t k = as.back(), m = bs[1];
        detail::require(bs[0] == k, "matmul " + to_string(as) + " x " + to_string(bs));
        const std::size_t rows = a.value().size() / k;
        Shape os = as;
        os.back() = m;
        Tensor out(os);
        kernel::gemm_nn(a.value().data().data(), b.value().data().data(), out.data().data(), rows, k, m);
        auto an = a.node(), bn = b.node();
        return detail::make_result(std::move(out), {a, b}, [an, bn, rows, k, m](const Tensor& g) {
            if (an->requires_grad)
                kernel::gemm_nt(g.data().data(), bn->value.data().data(), an->grad.data().data(), rows, k, m);
            if (bn->requires_grad)
                kernel::gemm_tn(an->value.data().data(), g.data().data(), bn->grad.data().data(), rows, k, m);
        }, "matmul");
    }
    detail::require(as.size() == 3 && bs.size() == 3 && as[0] == bs[0] && as[2] == bs[1],
                    "batched matmul " + to_string(as) + " x " + to_string(bs));
    const std::size_t batch = as[0], n = as[1], k = as[2], m = bs[2];
    Tensor out({batch, n, m});
    for (std::size_t t = 0; t < batch; ++t)
        kernel::gemm_nn(a.value().data().data() + t * n * k, b.value().data().data() + t * k * m,
                        out.data().data() + t * n * m, n, k, m);
    auto an = a.node(), bn = b.node();
    return detail::make_result(std::move(out), {a, b}, [an, bn, batch, n, k, m](const Tensor& g) {
        for (std::size_t t = 0; t < batch; ++t) {
            const Real* gt = g.data().data() + t * n * m;
            if (an->requires_grad)
                kernel::gemm_nt(gt, bn->value.data().data() + t * k * m, an->grad.data().data() + t * n * k, n, k, m);
            if (bn->requires_grad)
                kernel::gemm_tn(an->value.data().data() + t * n * k, gt, bn->grad.data().data() + t * k * m, n, k, m);
        }
    }, "batched_matmul");
}

namespace detail {

template <typename Fwd, typename BwdA, typename BwdB>
Var broadcast_binary(const Var& a, const Var& b, const char* op, Fwd fwd, BwdA da, BwdB db) {
    detail::require(is_suffix(b.shape(), a.shape()),
                    std::string(op) + " " + to_string(a.shape()) + " with " + to_string(b.shape()));
    const auto& av = a.value();
    const auto& bv = b.value();
    const std::size_t nb = bv.size();
    Tensor out(av.shape());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = fwd(av[i], bv[i % nb]);
    auto an = a.node(), bn = b.node();
    return make_result(std::move(out), {a, b}, [an, bn, nb, da, db](const Tensor& g) {
        const auto& av = an->value;
        const auto& bv = bn->value;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (an->requires_grad) an->grad[i] += da(g[i], av[i], bv[i % nb]);
            if (bn->requires_grad) bn->grad[i % nb] += db(g[i], av[i], bv[i % nb]);
        }
    }, op);
}

template <typename Fwd, typename Bwd>
Var unary(const Var& x, const char* op, Fwd fwd, Bwd dfdx) {
    const auto& xv = x.value();
    Tensor out(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i) out[i] = fwd(xv[i]);
    auto xn = x.node();
    return make_result(std::move(out), {x}, [xn, dfdx](const Tensor& g) {
        for (std::size_t i = 0; i < g.size(); ++i) xn->grad[i] += g[i] * dfdx(xn->value[i]);
    }, op);
}

} // namespace detail

/// a + b where b's shape is a suffix of a's (bias / batch broadcast).
inline Var add(const Var& a, const Var& b) {
    return detail::broadcast_binary(
        a, b, "add", [](Real x, Real y) { return x + y; },
        [](Real g, Real, Real) { return g; }, [](Real g, Real, Real) { return g; });
}

inline Var sub(const Var& a, const Var& b) {
    return detail::broadcast_binary(
        a, b, "sub", [](Real x, Real y) { return x - y; },
        [](Real g, Real, Real) { return g; }, [](Real g, Real, Real) { return -g; });
}

inline Var mul(const Var& a, const Var& b) {
    return detail::broadcast_binary(
        a, b, "mul", [](Real x, Real y) { return x * y; },
        [](Real g, Real, Real y) { return g * y; }, [](Real g, Real x, Real) { return g * x; });
}

/// |u - v| elementwise; the subgradient at u == v is 0.
inline Var abs_diff(const Var& u, const Var& v) {
    detail::require(u.shape() == v.shape(), "abs_diff " + to_string(u.shape()) + " vs " + to_string(v.shape()));
    auto sgn = [](Real d) { return d > 0 ? Real(1) : (d < 0 ? Real(-1) : Real(0)); };
    return detail::broadcast_binary(
        u, v, "abs_diff", [](Real x, Real y) { return std::abs(x - y); },
        [sgn](Real g, Real x, Real y) { return g * sgn(x - y); },
        [sgn](Real g, Real x, Real y) { return -g * sgn(x - y); });
}

inline Var scale(const Var& x, Real c) {
    return detail::unary(x, "scale", [c](Real v) { return v * c; }, [c](Real) { return c; });
}

inline Var relu(const Var& x) {
    return detail::unary(x, "relu", [](Real v) { return v > 0 ? v : Real(0); },
                         [](Real v) { return v > 0 ? Real(1) : Real(0); });
}

inline Real sigmoid_value(Real z) {
    if (z >= 0) return Real(1) / (Real(1) + std::exp(-z));
    const Real e = std::exp(z);
    return e / (Real(1) + e);
}

inline Var sigmoid(const Var& x) {
    return detail::unary(x, "sigmoid", sigmoid_value, [](Real v) {
        const Real s = sigmoid_value(v);
        return s * (Real(1) - s);
    });
}

/// Softmax over the last axis with max subtraction.
inline Var softmax(const Var& x) {
    const auto& xv = x.value();
    const std::size_t d = xv.shape().back();
    const std::size_t rows = xv.size() / d;
    Tensor out(xv.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const Real* in = xv.data().data() + r * d;
        Real* o = out.data().data() + r * d;
        const Real mx = *std::max_element(in, in + d);
        Real s = 0;
        for (std::size_t j = 0; j < d; ++j) s += (o[j] = std::exp(in[j] - mx));
        for (std::size_t j = 0; j < d; ++j) o[j] /= s;
    }
    auto xn = x.node();
    auto y = std::make_shared<Tensor>(out);
    return detail::make_result(std::move(out), {x}, [xn, y, rows, d](const Tensor& g) {
        for (std::size_t r = 0; r < rows; ++r) {
            const Real* yr = y->data().data() + r * d;
            const Real* gr = g.data().data() + r * d;
            Real dot = 0;
            for (std::size_t j = 0; j < d; ++j) dot += gr[j] * yr[j];
            Real* xg = xn->grad.data().data() + r * d;
            for (std::size_t j = 0; j < d; ++j) xg[j] += yr[j] * (gr[j] - dot);
        }
    }, "softmax");
}

/// Swaps the last two axes.
inline Var transpose(const Var& x) {
    const auto& s = x.shape();
    detail::require(s.size() >= 2, "transpose of " + to_string(s));
    const std::size_t n = s[s.size() - 2], m = s.back();
    const std::size_t batch = x.value().size() / (n * m);
    Shape os = s;
    std::swap(os[os.size() - 2], os.back());
    Tensor out(os);
    const auto& xv = x.value();
    for (std::size_t t = 0; t < batch; ++t)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) out[t * n * m + j * n + i] = xv[t * n * m + i * m + j];
    auto xn = x.node();
    return detail::make_result(std::move(out), {x}, [xn, batch, n, m](const Tensor& g) {
        for (std::size_t t = 0; t < batch; ++t)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j) xn->grad[t * n * m + i * m + j] += g[t * n * m + j * n + i];
    }, "transpose");
}

inline Var reshape(const Var& x, Shape shape) {
    Tensor out = x.value().reshaped(std::move(shape));
    auto xn = x.node();
    return detail::make_result(std::move(out), {x}, [xn](const Tensor& g) {
        for (std::size_t i = 0; i < g.size(); ++i) xn->grad[i] += g[i];
    }, "reshape");
}

/// Concatenation along `axis`; every other extent must agree.
inline Var concat(const std::vector<Var>& parts, std::size_t axis) {
    detail::require(!parts.empty(), "concat of nothing");
    const Shape& first = parts.front().shape();
    detail::require(axis < first.size(), "concat axis out of range");
    Shape os = first;
    os[axis] = 0;
    for (const auto& p : parts) {
        const auto& s = p.shape();
        bool ok = s.size() == first.size();
        for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == first[i];
        detail::require(ok, "concat " + to_string(first) + " with " + to_string(s));
        os[axis] += s[axis];
    }
    std::size_t outer = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= first[i];
    std::vector<std::size_t> chunks;
    for (const auto& p : parts) chunks.push_back(p.value().size() / outer);
    const std::size_t out_chunk = numel(os) / outer;
    Tensor out(os);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const auto& v = parts[k].value();
        for (std::size_t o = 0; o < outer; ++o)
            std::copy_n(v.data().data() + o * chunks[k], chunks[k], out.data().data() + o * out_chunk + offset);
        offset += chunks[k];
    }
    std::vector<std::shared_ptr<GradNode>> nodes;
    for (const auto& p : parts) nodes.push_back(p.node());
    return detail::make_result(std::move(out), parts, [nodes, chunks, outer, out_chunk](const Tensor& g) {
        std::size_t offset = 0;
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            if (nodes[k]->requires_grad)
                for (std::size_t o = 0; o < outer; ++o) {
                    const Real* src = g.data().data() + o * out_chunk + offset;
                    Real* dst = nodes[k]->grad.data().data() + o * chunks[k];
                    for (std::size_t i = 0; i < chunks[k]; ++i) dst[i] += src[i];
                }
            offset += chunks[k];
        }
    }, "concat");
}

/// Elements [start, end) along `axis`.
inline Var slice(const Var& x, std::size_t axis, std::size_t start, std::size_t end) {
    const auto& s = x.shape();
    detail::require(axis < s.size() && start < end && end <= s[axis],
                    "slice [" + std::to_string(start) + "," + std::to_string(end) + ") of axis " +
                        std::to_string(axis) + " in " + to_string(s));
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
    for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
    Shape os = s;
    os[axis] = end - start;
    Tensor out(os);
    const std::size_t len = end - start, full = s[axis];
    for (std::size_t o = 0; o < outer; ++o)
        std::copy_n(x.value().data().data() + (o * full + start) * inner, len * inner,
                    out.data().data() + o * len * inner);
    auto xn = x.node();
    return detail::make_result(std::move(out), {x}, [xn, outer, inner, len, full, start](const Tensor& g) {
        for (std::size_t o = 0; o < outer; ++o) {
            const Real* src = g.data().data() + o * len * inner;
            Real* dst = xn->grad.data().data() + (o * full + start) * inner;
            for (std::size_t i = 0; i < len * inner; ++i) dst[i] += src[i];
        }
    }, "slice");
}

/// Mean over `axis`, which is removed from the shape.
inline Var mean(const Var& x, std::size_t axis) {
    const auto& s = x.shape();
    detail::require(axis < s.size(), "mean axis out of range for " + to_string(s));
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
    for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
    const std::size_t len = s[axis];
    Shape os;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (i != axis) os.push_back(s[i]);
    if (os.empty()) os.push_back(1);
    Tensor out(os);
    const auto& xv = x.value();
    const Real inv = Real(1) / static_cast<Real>(len);
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t l = 0; l < len; ++l)
            for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] += xv[(o * len + l) * inner + i] * inv;
    auto xn = x.node();
    return detail::make_result(std::move(out), {x}, [xn, outer, inner, len, inv](const Tensor& g) {
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t l = 0; l < len; ++l)
                for (std::size_t i = 0; i < inner; ++i) xn->grad[(o * len + l) * inner + i] += g[o * inner + i] * inv;
    }, "mean");
}

inline Var sum(const Var& x) {
    Real s = 0;
    for (Real v : x.value().data()) s += v;
    auto xn = x.node();
    return detail::make_result(Tensor::scalar(s), {x}, [xn](const Tensor& g) {
        for (auto& v : xn->grad.storage()) v += g[0];
    }, "sum");
}

/// Rows of `table` [V, d] gathered by id into shape {ids.size() / n, n, d}.
inline Var embedding_lookup(const Var& table, std::span<const std::size_t> ids, std::size_t n) {
    const auto& ts = table.shape();
    detail::require(ts.size() == 2 && n > 0 && ids.size() % n == 0, "embedding_lookup");
    const std::size_t d = ts[1];
    Tensor out({ids.size() / n, n, d});
    for (std::size_t r = 0; r < ids.size(); ++r) {
        detail::require(ids[r] < ts[0], "embedding id out of range");
        std::copy_n(table.value().data().data() + ids[r] * d, d, out.data().data() + r * d);
    }
    auto tn = table.node();
    std::vector<std::size_t> idv(ids.begin(), ids.end());
    return detail::make_result(std::move(out), {table}, [tn, idv, d](const Tensor& g) {
        for (std::size_t r = 0; r < idv.size(); ++r)
            for (std::size_t j = 0; j < d; ++j) tn->grad[idv[r] * d + j] += g[r * d + j];
    }, "embedding_lookup");
}

inline constexpr Real kNormEpsilon = Real(1e-5);

/// Normalization over the last axis with learned scale and shift.
inline Var layer_norm(const Var& x, const Var& gamma, const Var& beta) {
    const auto& xv = x.value();
    const std::size_t d = xv.shape().back();
    detail::require(gamma.value().size() == d && beta.value().size() == d, "layer_norm parameter size");
    const std::size_t rows = xv.size() / d;
    auto xhat = std::make_shared<Tensor>(xv.shape());
    auto rstd = std::make_shared<std::vector<Real>>(rows);
    Tensor out(xv.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const Real* in = xv.data().data() + r * d;
        Real mu = 0;
        for (std::size_t j = 0; j < d; ++j) mu += in[j];
        mu /= static_cast<Real>(d);
        Real var = 0;
        for (std::size_t j = 0; j < d; ++j) var += (in[j] - mu) * (in[j] - mu);
        var /= static_cast<Real>(d);
        const Real rs = Real(1) / std::sqrt(var + kNormEpsilon);
        (*rstd)[r] = rs;
        for (std::size_t j = 0; j < d; ++j) {
            const Real h = (in[j] - mu) * rs;
            (*xhat)[r * d + j] = h;
            out[r * d + j] = h * gamma.value()[j] + beta.value()[j];
        }
    }
    auto xn = x.node(), gn = gamma.node(), bn = beta.node();
    return detail::make_result(std::move(out), {x, gamma, beta}, [xn, gn, bn, xhat, rstd, rows, d](const Tensor& g) {
        std::vector<Real> dh(d);
        for (std::size_t r = 0; r < rows; ++r) {
            Real s1 = 0, s2 = 0;
            for (std::size_t j = 0; j < d; ++j) {
                const Real gv = g[r * d + j];
                const Real h = (*xhat)[r * d + j];
                if (gn->requires_grad) gn->grad[j] += gv * h;
                if (bn->requires_grad) bn->grad[j] += gv;
                dh[j] = gv * gn->value[j];
                s1 += dh[j];
                s2 += dh[j] * h;
            }
            if (!xn->requires_grad) continue;
            const Real inv_d = Real(1) / static_cast<Real>(d);
            for (std::size_t j = 0; j < d; ++j)
                xn->grad[r * d + j] += (*rstd)[r] * (dh[j] - inv_d * s1 - (*xhat)[r * d + j] * inv_d * s2);
        }
    }, "layer_norm");
}

/// Running statistics of a batch-norm layer (not trainable).
struct BatchNormState {
    Tensor running_mean;
    Tensor running_var;
    Real momentum = Real(0.1);

    explicit BatchNormState(std::size_t features = 0)
        : running_mean({features}, Real(0)), running_var({features}, Real(1)) {}
};

/// Per-feature normalization of x [B, F] over the batch axis. Training mode
/// uses batch statistics and updates the running ones (unbiased variance);
/// evaluation mode uses the running statistics.
inline Var batch_norm(const Var& x, const Var& gamma, const Var& beta, BatchNormState& state, bool training) {
    const auto& xs = x.shape();
    detail::require(xs.size() == 2, "batch_norm expects [B, F], got " + to_string(xs));
    const std::size_t batch = xs[0], f = xs[1];
    detail::require(gamma.value().size() == f && beta.value().size() == f &&
                        state.running_mean.size() == f,
                    "batch_norm feature count");
    const auto& xv = x.value();
    auto xhat = std::make_shared<Tensor>(xs);
    auto rstd = std::make_shared<std::vector<Real>>(f);
    Tensor out(xs);
    for (std::size_t j = 0; j < f; ++j) {
        Real mu, var;
        if (training) {
            mu = 0;
            for (std::size_t b = 0; b < batch; ++b) mu += xv[b * f + j];
            mu /= static_cast<Real>(batch);
            var = 0;
            for (std::size_t b = 0; b < batch; ++b) var += (xv[b * f + j] - mu) * (xv[b * f + j] - mu);
            const Real unbiased = batch > 1 ? var / static_cast<Real>(batch - 1) : var;
            var /= static_cast<Real>(batch);
            state.running_mean[j] = (1 - state.momentum) * state.running_mean[j] + state.momentum * mu;
            state.running_var[j] = (1 - state.momentum) * state.running_var[j] + state.momentum * unbiased;
        } else {
            mu = state.running_mean[j];
            var = state.running_var[j];
        }
        const Real rs = Real(1) / std::sqrt(var + kNormEpsilon);
        (*rstd)[j] = rs;
        for (std::size_t b = 0; b < batch; ++b) {
            const Real h = (xv[b * f + j] - mu) * rs;
            (*xhat)[b * f + j] = h;
            out[b * f + j] = h * gamma.value()[j] + beta.value()[j];
        }
    }
    auto xn = x.node(), gn = gamma.node(), bn = beta.node();
    return detail::make_result(std::move(out), {x, gamma, beta},
                               [xn, gn, bn, xhat, rstd, batch, f, training](const Tensor& g) {
        for (std::size_t j = 0; j < f; ++j) {
            Real s1 = 0, s2 = 0;
            for (std::size_t b = 0; b < batch; ++b) {
                const Real gv = g[b * f + j];
                const Real h = (*xhat)[b * f + j];
                if (gn->requires_grad) gn->grad[j] += gv * h;
                if (bn->requires_grad) bn->grad[j] += gv;
                s1 += gv * gn->value[j];
                s2 += gv * gn->value[j] * h;
            }
            if (!xn->requires_grad) continue;
            const Real rs = (*rstd)[j];
            const Real inv_b = Real(1) / static_cast<Real>(batch);
            for (std::size_t b = 0; b < batch; ++b) {
                const Real dh = g[b * f + j] * gn->value[j];
                xn->grad[b * f + j] += training
                    ? rs * (dh - inv_b * s1 - (*xhat)[b * f + j] * inv_b * s2)
                    : rs * dh;
            }
        }
    }, "batch_norm");
}

/// Inverted dropout. The keep mask is a pure function of (seed, index), so a
/// given seed always drops the same elements. Identity when not training.
inline Var dropout(const Var& x, Real p, bool training, std::uint64_t seed) {
    if (!training || p <= 0) return x;
    const auto& xv = x.value();
    const Real keep_scale = Real(1) / (Real(1) - p);
    auto mask = std::make_shared<std::vector<Real>>(xv.size());
    Tensor out(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i) {
        (*mask)[i] = rng::counter_uniform(seed, 0xD50Full, i, 0) >= p ? keep_scale : Real(0);
        out[i] = xv[i] * (*mask)[i];
    }
    auto xn = x.node();
    return detail::make_result(std::move(out), {x}, [xn, mask](const Tensor& g) {
        for (std::size_t i = 0; i < g.size(); ++i) xn->grad[i] += g[i] * (*mask)[i];
    }, "dropout");
}

/// Mean binary cross-entropy from logits, in the stable fused form
/// max(z, 0) - z*y + log(1 + exp(-|z|)); d/dz = sigmoid(z) - y.
inline Var bce_with_logits(const Var& logits, std::span<const Real> labels) {
    const auto& z = logits.value();
    detail::require(z.size() == labels.size() && !labels.empty(),
                    "bce logits " + to_string(z.shape()) + " vs " + std::to_string(labels.size()) + " labels");
    Real loss = 0;
    for (std::size_t i = 0; i < z.size(); ++i)
        loss += std::max(z[i], Real(0)) - z[i] * labels[i] + std::log1p(std::exp(-std::abs(z[i])));
    const Real inv = Real(1) / static_cast<Real>(z.size());
    auto zn = logits.node();
    std::vector<Real> y(labels.begin(), labels.end());
    return detail::make_result(Tensor::scalar(loss * inv), {logits}, [zn, y, inv](const Tensor& g) {
        for (std::size_t i = 0; i < y.size(); ++i)
            zn->grad[i] += g[0] * inv * (sigmoid_value(zn->value[i]) - y[i]);
    }, "bce_with_logits");
}

} // namespace matepred
