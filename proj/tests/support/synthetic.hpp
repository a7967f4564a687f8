#pragma once

// Shared generators for the unit tests and the acceptance binary.

#include <cmath>
#include <functional>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "matepred/matepred.hpp"

namespace matepred::synth {

inline std::string random_residues(rng::Generator& gen, std::size_t min_len, std::size_t max_len) {
    const std::size_t n = min_len + static_cast<std::size_t>(gen.below(max_len - min_len + 1));
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s.push_back(kAlphabet[gen.below(kNumResidues)]);
    return s;
}

inline Tensor random_tensor(Shape shape, rng::Generator& gen, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.storage()) v = static_cast<Real>(gen.uniform(lo, hi));
    return t;
}

/// Entries uniform in +-[lo, hi]: keeps kinks (ReLU, |.|) away from the
/// finite-difference stencil.
inline Tensor away_from_zero(Shape shape, rng::Generator& gen, double lo = 0.1, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.storage()) v = static_cast<Real>((gen.below(2) ? 1 : -1) * gen.uniform(lo, hi));
    return t;
}

/// Small dimensions used for end-to-end gradient checks.
inline ModelConfig tiny_config(const std::string& variant) {
    ModelConfig c;
    c.d_model = 16;
    c.context = 6;
    c.heads = 2;
    c.proj_hidden = 8;
    c.ffn_hidden = 4;
    c.head_hidden = 8;
    c.embedding_mode = EmbeddingMode::Mock;
    return ModelConfig::variant(variant, c);
}

/// Random inputs shaped for `c`; padding follows random lengths.
inline LigandBatch random_ligand_batch(const ModelConfig& c, std::size_t batch, rng::Generator& gen) {
    LigandBatch b;
    b.batch = batch;
    b.tokens = random_tensor({batch, c.context, c.d_model}, gen);
    b.mask = Tensor({batch, c.context});
    for (std::size_t s = 0; s < batch; ++s) {
        const std::size_t len = 1 + static_cast<std::size_t>(gen.below(c.context));
        for (std::size_t i = 0; i < c.context; ++i) {
            b.mask[s * c.context + i] = i < len ? Real(1) : Real(0);
            b.token_ids.push_back(i < len ? static_cast<std::size_t>(gen.below(kNumResidues)) : kPadToken);
        }
    }
    if (c.use_pcf) b.pcf = random_tensor({batch, c.pcf_dims()}, gen);
    if (c.use_cmap) b.cmap = random_tensor({batch, c.cmap_dims()}, gen, 0.0, 1.0);
    return b;
}

/// One operator (or model) gradient-check case.
struct GradCase {
    std::string name;
    std::function<Var()> loss;
    std::vector<NamedVar> params;
};

/// sum(y * R) for a fixed random R: a scalar whose gradient reaches every
/// element of y with a distinct weight.
inline Var weighted_sum(const Var& y, std::uint64_t seed) {
    rng::Generator gen(seed);
    return sum(mul(y, constant(random_tensor(y.shape(), gen))));
}

inline std::vector<GradCase> operator_cases(std::uint64_t seed) {
    rng::Generator gen(seed);
    std::vector<GradCase> cases;
    auto p = [&](Shape s) { return parameter(random_tensor(std::move(s), gen)); };
    auto pz = [&](Shape s) { return parameter(away_from_zero(std::move(s), gen)); };
    const std::uint64_t w = seed + 1;

    {
        auto x = p({2, 3, 4}), m = p({4, 5});
        cases.push_back({"matmul_shared", [=] { return weighted_sum(matmul(x, m), w); }, {{"x", x}, {"w", m}}});
    }
    {
        auto a = p({2, 3, 4}), b = p({2, 4, 5});
        cases.push_back({"matmul_batched", [=] { return weighted_sum(matmul(a, b), w); }, {{"a", a}, {"b", b}}});
    }
    {
        auto a = p({2, 3, 4}), b = p({4});
        cases.push_back({"add_broadcast", [=] { return weighted_sum(add(a, b), w); }, {{"a", a}, {"b", b}}});
        cases.push_back({"sub_broadcast", [=] { return weighted_sum(sub(a, b), w); }, {{"a", a}, {"b", b}}});
        cases.push_back({"mul_broadcast", [=] { return weighted_sum(mul(a, b), w); }, {{"a", a}, {"b", b}}});
    }
    {
        auto u = p({3, 4});
        auto v = parameter(u.value());
        auto shift = away_from_zero({3, 4}, gen, 0.2, 1.0);
        for (std::size_t i = 0; i < shift.size(); ++i) v.mutable_value()[i] += shift[i];
        cases.push_back({"abs_diff", [=] { return weighted_sum(abs_diff(u, v), w); }, {{"u", u}, {"v", v}}});
    }
    {
        auto x = p({3, 4});
        cases.push_back({"scale", [=] { return weighted_sum(scale(x, Real(-2.5)), w); }, {{"x", x}}});
        cases.push_back({"sigmoid", [=] { return weighted_sum(sigmoid(x), w); }, {{"x", x}}});
    }
    {
        auto x = pz({3, 5});
        cases.push_back({"relu", [=] { return weighted_sum(relu(x), w); }, {{"x", x}}});
    }
    {
        auto x = p({2, 3, 5});
        cases.push_back({"softmax", [=] { return weighted_sum(softmax(x), w); }, {{"x", x}}});
        cases.push_back({"transpose", [=] { return weighted_sum(transpose(x), w); }, {{"x", x}}});
        cases.push_back({"reshape", [=] { return weighted_sum(reshape(x, {6, 5}), w); }, {{"x", x}}});
        cases.push_back({"slice", [=] { return weighted_sum(slice(x, 2, 1, 4), w); }, {{"x", x}}});
        cases.push_back({"mean_axis1", [=] { return weighted_sum(mean(x, 1), w); }, {{"x", x}}});
        cases.push_back({"sum", [=] { return scale(sum(x), Real(0.5)); }, {{"x", x}}});
    }
    {
        auto a = p({2, 3, 4}), b = p({2, 2, 4});
        cases.push_back({"concat_tokens", [=] { return weighted_sum(concat({a, b}, 1), w); }, {{"a", a}, {"b", b}}});
        auto c = p({2, 3, 2});
        cases.push_back({"concat_features", [=] { return weighted_sum(concat({a, c}, 2), w); }, {{"a", a}, {"c", c}}});
    }
    {
        auto table = p({kVocabSize, 4});
        const std::vector<std::size_t> ids{0, 5, 20, 5, 19, 3};
        cases.push_back({"embedding_lookup", [=] { return weighted_sum(embedding_lookup(table, ids, 3), w); },
                         {{"table", table}}});
    }
    {
        auto x = p({3, 6}), g = p({6}), b = p({6});
        cases.push_back({"layer_norm", [=] { return weighted_sum(layer_norm(x, g, b), w); },
                         {{"x", x}, {"gamma", g}, {"beta", b}}});
    }
    {
        auto x = p({5, 4}), g = p({4}), b = p({4});
        auto state = std::make_shared<BatchNormState>(4);
        cases.push_back({"batch_norm_train", [=] { return weighted_sum(batch_norm(x, g, b, *state, true), w); },
                         {{"x", x}, {"gamma", g}, {"beta", b}}});
        auto frozen = std::make_shared<BatchNormState>(4);
        for (std::size_t j = 0; j < 4; ++j) {
            frozen->running_mean[j] = static_cast<Real>(gen.uniform(-0.5, 0.5));
            frozen->running_var[j] = static_cast<Real>(gen.uniform(0.5, 2.0));
        }
        cases.push_back({"batch_norm_eval", [=] { return weighted_sum(batch_norm(x, g, b, *frozen, false), w); },
                         {{"x", x}, {"gamma", g}, {"beta", b}}});
    }
    {
        auto x = p({4, 6});
        cases.push_back({"dropout_eval", [=] { return weighted_sum(dropout(x, Real(0.3), false, 7), w); }, {{"x", x}}});
        cases.push_back({"dropout_train", [=] { return weighted_sum(dropout(x, Real(0.3), true, 7), w); }, {{"x", x}}});
    }
    {
        auto z = p({6});
        const std::vector<Real> y{1, 0, 1, 1, 0, 0};
        cases.push_back({"bce_with_logits", [=] { return bce_with_logits(z, y); }, {{"logits", z}}});
    }
    {
        // One node consumed twice plus a three-layer composite.
        auto x = p({4, 5}), w1 = p({5, 6}), w2 = p({6, 3});
        cases.push_back({"composite_mlp",
                         [=] { return weighted_sum(sigmoid(matmul(relu(matmul(add(x, x), w1)), w2)), w); },
                         {{"x", x}, {"w1", w1}, {"w2", w2}}});
    }
    return cases;
}

/// End-to-end case: BCE of a tiny model on a random batch, training mode
/// (batch statistics, fixed dropout mask).
inline GradCase model_case(const ModelConfig& c, std::uint64_t seed, std::size_t batch = 4) {
    rng::Generator gen(seed);
    auto model = std::make_shared<ModelParams>(ModelParams::init(c, seed));
    // Nonzero biases and shifts so every coordinate carries gradient signal.
    for (auto& [name, v] : model->named_parameters()) {
        Var h = v;
        for (auto& x : h.mutable_value().storage()) x += static_cast<Real>(gen.uniform(-0.1, 0.1));
    }
    auto tcr = std::make_shared<LigandBatch>(random_ligand_batch(c, batch, gen));
    auto epi = std::make_shared<LigandBatch>(random_ligand_batch(c, batch, gen));
    std::vector<Real> labels;
    for (std::size_t i = 0; i < batch; ++i) labels.push_back(static_cast<Real>(i % 2));
    auto loss = [model, tcr, epi, labels] {
        return bce_with_logits(forward_logits(*model, *tcr, *epi, {true, 11}), labels);
    };
    return {c.variant_name(), loss, model->named_parameters()};
}

/// Unique random pairs with balanced random labels (memorization target).
inline std::vector<PairExample> random_pairs(std::size_t n, std::uint64_t seed) {
    rng::Generator gen(seed);
    std::vector<PairExample> out;
    std::set<std::string> seen;
    while (out.size() < n) {
        const auto epi = random_residues(gen, 8, 11);
        const auto tcr = "CASS" + random_residues(gen, 6, 10) + "F";
        if (!seen.insert(epi + ":" + tcr).second) continue;
        out.push_back({AaSequence::parse(epi), AaSequence::parse(tcr), static_cast<int>(out.size() % 2), {}});
    }
    return out;
}

/// Pairs whose label is the sign of the epitope's net charge at pH 7
/// (|charge| >= margin), one pair per distinct epitope.
inline std::vector<PairExample> charge_pairs(std::size_t n, std::uint64_t seed, double margin = 0.5) {
    rng::Generator gen(seed);
    std::vector<PairExample> out;
    std::set<std::string> seen;
    std::size_t pos = 0, neg = 0;
    while (out.size() < n) {
        const auto epi = AaSequence::parse(random_residues(gen, 8, 12));
        const double q = physchem::charge(epi, 7.0);
        if (std::abs(q) < margin || !seen.insert(epi.str()).second) continue;
        const int label = q > 0 ? 1 : 0;
        if ((label ? pos : neg) >= n / 2 + n % 2) continue;
        (label ? pos : neg) += 1;
        out.push_back({epi, AaSequence::parse("CASS" + random_residues(gen, 6, 10) + "F"), label, {}});
    }
    return out;
}

/// Store of random matrices keyed by sequence: carries no information about
/// any label beyond sequence identity.
inline std::shared_ptr<const EmbeddingStore> random_text_store(const std::vector<PairExample>& pairs,
                                                               std::size_t rows, std::size_t d,
                                                               std::uint64_t seed) {
    std::vector<StoreRecord> records;
    std::set<std::string> keys;
    auto add = [&](const AaSequence& s) {
        if (!keys.insert(s.str()).second) return;
        rng::Generator gen(rng::hash_keys(seed, rng::hash_string(s.str()), 0, 0));
        StoreRecord r{s.str(), static_cast<std::uint32_t>(rows), static_cast<std::uint32_t>(d), {}};
        for (std::size_t i = 0; i < rows * d; ++i) r.data.push_back(static_cast<float>(gen.normal() / std::sqrt(d)));
        records.push_back(std::move(r));
    };
    for (const auto& p : pairs) {
        add(p.epitope);
        add(p.tcr);
    }
    return std::make_shared<const EmbeddingStore>(StoreKind::Embeddings, std::move(records));
}

} // namespace matepred::synth
