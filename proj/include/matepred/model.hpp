#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "matepred/autodiff.hpp"
#include "matepred/contact_map.hpp"
#include "matepred/grad_check.hpp"
#include "matepred/physchem.hpp"
#include "matepred/rng.hpp"
#include "matepred/sequence.hpp"

namespace matepred {

enum class Fusion { EarlyConcat, LateConcat };
enum class EmbeddingMode { PretrainedStore, Mock, TrainedFromScratch };

NLOHMANN_JSON_SERIALIZE_ENUM(Fusion, {{Fusion::EarlyConcat, "EARLY_CONCAT"}, {Fusion::LateConcat, "LATE_CONCAT"}})
NLOHMANN_JSON_SERIALIZE_ENUM(EmbeddingMode, {{EmbeddingMode::PretrainedStore, "PRETRAINED_STORE"},
                                             {EmbeddingMode::Mock, "MOCK"},
                                             {EmbeddingMode::TrainedFromScratch, "TRAINED_FROM_SCRATCH"}})

/// Architecture hyperparameters. Text is always enabled; PCF and CMAP are
/// optional extra modalities. Defaults are the full-scale PCF-CM model.
struct ModelConfig {
    std::size_t d_model = 1024;
    std::size_t context = kDefaultContext;
    std::size_t heads = 2;
    std::size_t proj_hidden = 512;
    std::size_t ffn_hidden = 32;
    std::size_t head_hidden = 1024;
    Fusion fusion = Fusion::EarlyConcat;
    bool use_pcf = true;
    bool use_cmap = true;
    EmbeddingMode embedding_mode = EmbeddingMode::PretrainedStore;
    double dropout_p = 0.3;
    bool use_attention_mask = false;
    /// Fixed per-feature z-scoring of the 88 physicochemical inputs, fitted on
    /// the training sequences. Statistics are buffers, not parameters.
    bool standardize_pcf = true;
    std::uint64_t mock_seed = 0;

    std::size_t extra_modalities() const noexcept { return std::size_t{use_pcf} + std::size_t{use_cmap}; }
    std::size_t pcf_dims() const noexcept { return physchem::kFeatureDims; }
    std::size_t cmap_dims() const noexcept { return flat_length(context); }
    /// Rows seen by the attention encoder.
    std::size_t encoder_rows() const noexcept {
        return context + (fusion == Fusion::EarlyConcat ? extra_modalities() : 0);
    }
    /// Width of each ligand representation u / v.
    std::size_t d_out() const noexcept {
        return fusion == Fusion::EarlyConcat ? d_model : (1 + extra_modalities()) * d_model;
    }

    void validate() const {
        if (d_model == 0 || context == 0 || heads == 0 || proj_hidden == 0 || ffn_hidden == 0 || head_hidden == 0)
            throw InvalidArgument("model dimensions must be positive");
        if (d_model % heads != 0) throw InvalidArgument("heads must divide d_model");
        if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw InvalidArgument("dropout_p must lie in [0, 1)");
    }

    /// Benchmark variant name, e.g. "PCF-EC".
    std::string variant_name() const {
        if (!use_pcf && !use_cmap)
            return embedding_mode == EmbeddingMode::TrainedFromScratch ? "Text-only-WPE" : "Text-only";
        const char* suffix = fusion == Fusion::EarlyConcat ? "EC" : "LC";
        if (use_pcf && use_cmap) return fusion == Fusion::EarlyConcat ? "PCF-CM" : "PCF-CM-LC";
        return std::string(use_pcf ? "PCF-" : "CM-") + suffix;
    }

    /// Applies a variant name to a base configuration.
    static ModelConfig variant(std::string_view name, ModelConfig base) {
        base.use_pcf = base.use_cmap = false;
        if (name == "Text-only") {
        } else if (name == "Text-only-WPE") {
            base.embedding_mode = EmbeddingMode::TrainedFromScratch;
        } else if (name == "PCF-EC" || name == "PCF-LC") {
            base.use_pcf = true;
            base.fusion = name == "PCF-EC" ? Fusion::EarlyConcat : Fusion::LateConcat;
        } else if (name == "CM-EC" || name == "CM-LC") {
            base.use_cmap = true;
            base.fusion = name == "CM-EC" ? Fusion::EarlyConcat : Fusion::LateConcat;
        } else if (name == "PCF-CM" || name == "PCF-CM-LC") {
            base.use_pcf = base.use_cmap = true;
            base.fusion = name == "PCF-CM" ? Fusion::EarlyConcat : Fusion::LateConcat;
        } else {
            throw InvalidArgument("unknown variant '" + std::string(name) + "'");
        }
        return base;
    }

    static ModelConfig variant(std::string_view name) { return variant(name, ModelConfig{}); }

    static const std::vector<std::string>& benchmark_variants() {
        static const std::vector<std::string> v{"Text-only", "PCF-LC", "PCF-EC", "CM-LC", "CM-EC", "PCF-CM"};
        return v;
    }

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ModelConfig, d_model, context, heads, proj_hidden, ffn_hidden,
                                                head_hidden, fusion, use_pcf, use_cmap, embedding_mode, dropout_p,
                                                use_attention_mask, standardize_pcf, mock_seed)

// ---------------------------------------------------------------------------
// Parameter blocks

/// Affine map x W + b with W stored [in, out].
struct Linear {
    Var weight;
    Var bias;

    Var operator()(const Var& x) const { return add(matmul(x, weight), bias); }
    std::size_t in() const { return weight.shape()[0]; }
    std::size_t out() const { return weight.shape()[1]; }
};

/// Linear -> ReLU -> Linear, projecting one modality vector to d_model.
struct Projection {
    Linear first;
    Linear second;

    Var operator()(const Var& x) const { return second(relu(first(x))); }
};

struct MultiHeadAttention {
    Linear query, key, value, output;
};

/// Two stacked self-attention sublayers with residuals, a learned bias, then
/// the feed-forward sublayer and a single normalization.
struct AttentionEncoder {
    MultiHeadAttention first;
    MultiHeadAttention second;
    Var attention_bias;
    Linear ffn_in;
    Linear ffn_out;
    Var norm_gamma;
    Var norm_beta;
};

struct LigandEncoder {
    std::optional<Projection> pcf;
    std::optional<Projection> cmap;
    AttentionEncoder encoder;
    std::optional<Var> token_embedding;
    Tensor pcf_mean;
    Tensor pcf_scale;
};

struct ProjectionHead {
    Linear hidden;
    Var bn_gamma;
    Var bn_beta;
    BatchNormState bn;
    Linear output;
};

namespace detail {

inline Linear make_linear(std::size_t in, std::size_t out, rng::Generator& gen) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Tensor w({in, out});
    for (auto& v : w.storage()) v = static_cast<Real>(gen.uniform(-bound, bound));
    return {parameter(std::move(w)), parameter(Tensor({out}))};
}

inline Projection make_projection(std::size_t in, std::size_t hidden, std::size_t out, rng::Generator& gen) {
    auto first = make_linear(in, hidden, gen);
    auto second = make_linear(hidden, out, gen);
    return {std::move(first), std::move(second)};
}

inline MultiHeadAttention make_attention(std::size_t d, rng::Generator& gen) {
    auto q = make_linear(d, d, gen);
    auto k = make_linear(d, d, gen);
    auto v = make_linear(d, d, gen);
    auto o = make_linear(d, d, gen);
    return {std::move(q), std::move(k), std::move(v), std::move(o)};
}

inline LigandEncoder make_ligand_encoder(const ModelConfig& c, rng::Generator& gen) {
    LigandEncoder e;
    if (c.use_pcf) e.pcf = make_projection(c.pcf_dims(), c.proj_hidden, c.d_model, gen);
    if (c.use_cmap) e.cmap = make_projection(c.cmap_dims(), c.proj_hidden, c.d_model, gen);
    e.encoder.first = make_attention(c.d_model, gen);
    e.encoder.second = make_attention(c.d_model, gen);
    e.encoder.attention_bias = parameter(Tensor({c.d_model}));
    e.encoder.ffn_in = make_linear(c.d_model, c.ffn_hidden, gen);
    e.encoder.ffn_out = make_linear(c.ffn_hidden, c.d_model, gen);
    e.encoder.norm_gamma = parameter(Tensor({c.d_model}, Real(1)));
    e.encoder.norm_beta = parameter(Tensor({c.d_model}));
    if (c.embedding_mode == EmbeddingMode::TrainedFromScratch) {
        Tensor table({kVocabSize, c.d_model});
        for (auto& v : table.storage()) v = static_cast<Real>(gen.normal());
        e.token_embedding = parameter(std::move(table));
    }
    e.pcf_mean = Tensor({c.pcf_dims()}, Real(0));
    e.pcf_scale = Tensor({c.pcf_dims()}, Real(1));
    return e;
}

inline void push_linear(std::vector<NamedVar>& out, const std::string& prefix, const Linear& l) {
    out.emplace_back(prefix + ".weight", l.weight);
    out.emplace_back(prefix + ".bias", l.bias);
}

inline void push_attention(std::vector<NamedVar>& out, const std::string& prefix, const MultiHeadAttention& a) {
    push_linear(out, prefix + ".query", a.query);
    push_linear(out, prefix + ".key", a.key);
    push_linear(out, prefix + ".value", a.value);
    push_linear(out, prefix + ".output", a.output);
}

inline void push_ligand(std::vector<NamedVar>& out, const std::string& who, const LigandEncoder& e) {
    if (e.pcf) {
        push_linear(out, who + ".pcf_projection.first", e.pcf->first);
        push_linear(out, who + ".pcf_projection.second", e.pcf->second);
    }
    if (e.cmap) {
        push_linear(out, who + ".cmap_projection.first", e.cmap->first);
        push_linear(out, who + ".cmap_projection.second", e.cmap->second);
    }
    push_attention(out, who + ".self_attention.first", e.encoder.first);
    push_attention(out, who + ".self_attention.second", e.encoder.second);
    out.emplace_back(who + ".self_attention.bias", e.encoder.attention_bias);
    push_linear(out, who + ".ffn.in", e.encoder.ffn_in);
    push_linear(out, who + ".ffn.out", e.encoder.ffn_out);
    out.emplace_back(who + ".ffn.norm.gamma", e.encoder.norm_gamma);
    out.emplace_back(who + ".ffn.norm.beta", e.encoder.norm_beta);
    if (e.token_embedding) out.emplace_back(who + ".token_embedding", *e.token_embedding);
}

} // namespace detail

/// The full learnable state: two independent ligand encoders and the shared head.
struct ModelParams {
    ModelConfig config;
    LigandEncoder tcr;
    LigandEncoder epitope;
    ProjectionHead head;

    static ModelParams init(const ModelConfig& c, std::uint64_t seed) {
        c.validate();
        ModelParams p;
        p.config = c;
        rng::Generator tcr_gen(rng::hash_keys(seed, 1, 0, 0));
        rng::Generator epi_gen(rng::hash_keys(seed, 2, 0, 0));
        rng::Generator head_gen(rng::hash_keys(seed, 3, 0, 0));
        p.tcr = detail::make_ligand_encoder(c, tcr_gen);
        p.epitope = detail::make_ligand_encoder(c, epi_gen);
        p.head.hidden = detail::make_linear(3 * c.d_out(), c.head_hidden, head_gen);
        p.head.bn_gamma = parameter(Tensor({c.head_hidden}, Real(1)));
        p.head.bn_beta = parameter(Tensor({c.head_hidden}));
        p.head.bn = BatchNormState(c.head_hidden);
        p.head.output = detail::make_linear(c.head_hidden, 1, head_gen);
        return p;
    }

    /// Trainable tensors in canonical block order (checkpoint order).
    std::vector<NamedVar> named_parameters() const {
        std::vector<NamedVar> out;
        detail::push_ligand(out, "tcr", tcr);
        detail::push_ligand(out, "epitope", epitope);
        detail::push_linear(out, "head.hidden", head.hidden);
        out.emplace_back("head.bn.gamma", head.bn_gamma);
        out.emplace_back("head.bn.beta", head.bn_beta);
        detail::push_linear(out, "head.output", head.output);
        return out;
    }

    /// Non-trainable state that still affects the forward pass.
    std::vector<std::pair<std::string, Tensor*>> named_buffers() {
        return {{"tcr.pcf_standardizer.mean", &tcr.pcf_mean},
                {"tcr.pcf_standardizer.scale", &tcr.pcf_scale},
                {"epitope.pcf_standardizer.mean", &epitope.pcf_mean},
                {"epitope.pcf_standardizer.scale", &epitope.pcf_scale},
                {"head.bn.running_mean", &head.bn.running_mean},
                {"head.bn.running_var", &head.bn.running_var}};
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& [name, v] : named_parameters()) n += v.value().size();
        return n;
    }

    /// Deep copy with fresh graph leaves.
    ModelParams clone() const {
        ModelParams c = init_like();
        const auto src = named_parameters();
        const auto dst = c.named_parameters();
        for (std::size_t i = 0; i < src.size(); ++i) {
            Var d = dst[i].second;
            d.mutable_value() = src[i].second.value();
        }
        auto sb = const_cast<ModelParams*>(this)->named_buffers();
        auto db = c.named_buffers();
        for (std::size_t i = 0; i < sb.size(); ++i) *db[i].second = *sb[i].second;
        return c;
    }

private:
    ModelParams init_like() const { return init(config, 0); }
};

// ---------------------------------------------------------------------------
// Parameter accounting

struct LigandCounts {
    std::size_t pcf_projection = 0;
    std::size_t cmap_projection = 0;
    std::size_t self_attention = 0;
    std::size_t ffn = 0;
    std::size_t token_embedding = 0;

    std::size_t total() const noexcept {
        return pcf_projection + cmap_projection + self_attention + ffn + token_embedding;
    }
    friend bool operator==(const LigandCounts&, const LigandCounts&) = default;
};

struct ParameterCounts {
    LigandCounts tcr;
    LigandCounts epitope;
    std::size_t final_projection = 0;

    std::size_t total() const noexcept { return tcr.total() + epitope.total() + final_projection; }
    friend bool operator==(const ParameterCounts&, const ParameterCounts&) = default;
};

/// Closed-form block counts for a configuration.
inline ParameterCounts count_parameters(const ModelConfig& c) {
    auto affine = [](std::size_t in, std::size_t out) { return in * out + out; };
    LigandCounts l;
    if (c.use_pcf) l.pcf_projection = affine(c.pcf_dims(), c.proj_hidden) + affine(c.proj_hidden, c.d_model);
    if (c.use_cmap) l.cmap_projection = affine(c.cmap_dims(), c.proj_hidden) + affine(c.proj_hidden, c.d_model);
    l.self_attention = 2 * 4 * affine(c.d_model, c.d_model) + c.d_model;
    l.ffn = affine(c.d_model, c.ffn_hidden) + affine(c.ffn_hidden, c.d_model) + 2 * c.d_model;
    if (c.embedding_mode == EmbeddingMode::TrainedFromScratch) l.token_embedding = kVocabSize * c.d_model;
    ParameterCounts p{l, l, 0};
    p.final_projection = affine(3 * c.d_out(), c.head_hidden) + 2 * c.head_hidden + affine(c.head_hidden, 1);
    return p;
}

/// Block counts measured on instantiated tensors, grouped by name.
inline ParameterCounts count_instantiated(const ModelParams& p) {
    ParameterCounts out;
    for (const auto& [name, v] : p.named_parameters()) {
        const std::size_t n = v.value().size();
        if (name.starts_with("head.")) {
            out.final_projection += n;
            continue;
        }
        LigandCounts& l = name.starts_with("tcr.") ? out.tcr : out.epitope;
        const auto block = name.substr(name.find('.') + 1);
        if (block.starts_with("pcf_projection")) l.pcf_projection += n;
        else if (block.starts_with("cmap_projection")) l.cmap_projection += n;
        else if (block.starts_with("self_attention")) l.self_attention += n;
        else if (block.starts_with("ffn")) l.ffn += n;
        else if (block.starts_with("token_embedding")) l.token_embedding += n;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Forward pass

/// Model inputs for one side (TCR or epitope) of a batch.
struct LigandBatch {
    std::size_t batch = 0;
    Tensor tokens;                      // [B, L, d] precomputed text embeddings
    std::vector<std::size_t> token_ids; // B*L ids, trained-embedding mode
    Tensor mask;                        // [B, L], 1 at residues
    Tensor pcf;                         // [B, 88] raw features
    Tensor cmap;                        // [B, L(L+1)/2]
};

struct ForwardOptions {
    bool training = false;
    std::uint64_t dropout_seed = 0;
};

/// Collects attention matrices ([B, n, n] per head and sublayer) when set.
using AttentionTrace = std::vector<Tensor>;

/// Standard sinusoidal table: PE[p, 2i] = sin(p / 10000^(2i/d)), PE[p, 2i+1] = cos(...).
inline Tensor sinusoidal_encoding(std::size_t positions, std::size_t d) {
    Tensor pe({positions, d});
    for (std::size_t p = 0; p < positions; ++p)
        for (std::size_t j = 0; j < d; ++j) {
            const double rate = std::pow(10000.0, -static_cast<double>(j - j % 2) / static_cast<double>(d));
            const double angle = static_cast<double>(p) * rate;
            pe.at(p, j) = static_cast<Real>(j % 2 == 0 ? std::sin(angle) : std::cos(angle));
        }
    return pe;
}

/// Token lookup plus positional encoding: [B, L, d].
inline Var embed_tokens_trained(const Var& table, std::span<const std::size_t> ids, std::size_t context) {
    const auto lookup = embedding_lookup(table, ids, context);
    return add(lookup, constant(sinusoidal_encoding(context, table.shape()[1])));
}

/// Multi-head self-attention over x [B, n, d]; `key_mask` is an additive
/// [B, n, n] mask or empty.
inline Var multi_head_attention(const MultiHeadAttention& a, const Var& x, std::size_t heads,
                                const std::optional<Var>& key_mask, AttentionTrace* trace = nullptr) {
    const std::size_t d = x.shape().back();
    const std::size_t dk = d / heads;
    const Var q = a.query(x), k = a.key(x), v = a.value(x);
    const Real inv_sqrt = Real(1) / std::sqrt(static_cast<Real>(dk));
    std::vector<Var> outs;
    outs.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) {
        const Var qh = slice(q, 2, h * dk, (h + 1) * dk);
        const Var kh = slice(k, 2, h * dk, (h + 1) * dk);
        const Var vh = slice(v, 2, h * dk, (h + 1) * dk);
        Var scores = scale(matmul(qh, transpose(kh)), inv_sqrt);
        if (key_mask) scores = add(scores, *key_mask);
        const Var weights = softmax(scores);
        if (trace) trace->push_back(weights.value());
        outs.push_back(matmul(weights, vh));
    }
    return a.output(heads == 1 ? outs.front() : concat(outs, 2));
}

inline Var attention_encoder(const AttentionEncoder& e, const Var& x, std::size_t heads,
                             const std::optional<Var>& key_mask, AttentionTrace* trace = nullptr) {
    const Var h1 = add(x, multi_head_attention(e.first, x, heads, key_mask, trace));
    const Var h2 = add(add(h1, multi_head_attention(e.second, h1, heads, key_mask, trace)), e.attention_bias);
    const Var f = e.ffn_out(relu(e.ffn_in(h2)));
    return layer_norm(add(h2, f), e.norm_gamma, e.norm_beta);
}

/// Appends each modality vector [B, d] as one token row after the text rows.
inline Var fuse_early(const Var& tokens, const std::vector<Var>& modality_vectors) {
    if (modality_vectors.empty()) return tokens;
    const std::size_t b = tokens.shape()[0], d = tokens.shape()[2];
    std::vector<Var> parts{tokens};
    for (const auto& m : modality_vectors) parts.push_back(reshape(m, {b, 1, d}));
    return concat(parts, 1);
}

namespace detail {

inline Var standardized_pcf(const LigandEncoder& e, const Tensor& raw) {
    Tensor z = raw;
    const std::size_t f = e.pcf_mean.size();
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = (z[i] - e.pcf_mean[i % f]) / e.pcf_scale[i % f];
    return constant(std::move(z));
}

} // namespace detail

/// Ligand representation [B, d_out] (u for the TCR, v for the epitope).
inline Var encode_ligand(const LigandEncoder& e, const ModelConfig& c, const LigandBatch& in,
                         AttentionTrace* trace = nullptr) {
    const std::size_t b = in.batch;
    Var text;
    if (c.embedding_mode == EmbeddingMode::TrainedFromScratch) {
        if (!e.token_embedding) throw MissingModality("token embedding table");
        if (in.token_ids.size() != b * c.context) throw MissingModality("TEXT token ids");
        text = embed_tokens_trained(*e.token_embedding, in.token_ids, c.context);
    } else {
        if (in.tokens.shape() != Shape{b, c.context, c.d_model}) throw MissingModality("TEXT embeddings");
        text = constant(in.tokens);
    }

    std::vector<Var> extras;
    if (c.use_pcf) {
        if (in.pcf.shape() != Shape{b, c.pcf_dims()}) throw MissingModality("PCF");
        extras.push_back((*e.pcf)(detail::standardized_pcf(e, in.pcf)));
    }
    if (c.use_cmap) {
        if (in.cmap.shape() != Shape{b, c.cmap_dims()}) throw MissingModality("CMAP");
        extras.push_back((*e.cmap)(constant(in.cmap)));
    }

    const bool early = c.fusion == Fusion::EarlyConcat;
    const Var x = early ? fuse_early(text, extras) : text;
    const std::size_t n = x.shape()[1];

    // Row weights: 1 for residues and modality tokens, 0 for PAD when masking.
    std::optional<Var> key_mask;
    Tensor keep({b, n}, Real(1));
    if (c.use_attention_mask) {
        if (in.mask.shape() != Shape{b, c.context}) throw MissingModality("attention mask");
        Tensor additive({b, n, n});
        for (std::size_t s = 0; s < b; ++s)
            for (std::size_t j = 0; j < c.context; ++j)
                if (in.mask[s * c.context + j] == Real(0)) {
                    keep[s * n + j] = 0;
                    for (std::size_t i = 0; i < n; ++i) additive[(s * n + i) * n + j] = Real(-1e9);
                }
        key_mask = constant(std::move(additive));
    }

    const Var encoded = attention_encoder(e.encoder, x, c.heads, key_mask, trace);
    Var pooled;
    if (c.use_attention_mask) {
        Tensor w({b, 1, n});
        for (std::size_t s = 0; s < b; ++s) {
            Real count = 0;
            for (std::size_t j = 0; j < n; ++j) count += keep[s * n + j];
            for (std::size_t j = 0; j < n; ++j) w[s * n + j] = keep[s * n + j] / count;
        }
        pooled = reshape(matmul(constant(std::move(w)), encoded), {b, c.d_model});
    } else {
        pooled = mean(encoded, 1);
    }
    if (early || extras.empty()) return pooled;
    std::vector<Var> parts{pooled};
    parts.insert(parts.end(), extras.begin(), extras.end());
    return concat(parts, 1);
}

/// Head logits [B] from h = [u | v | |u - v|].
inline Var head_logits(ProjectionHead& head, const ModelConfig& c, const Var& u, const Var& v,
                       const ForwardOptions& opt) {
    if (u.shape() != v.shape()) throw ShapeMismatch("u " + to_string(u.shape()) + " vs v " + to_string(v.shape()));
    const Var h = concat({u, v, abs_diff(u, v)}, 1);
    Var z = head.hidden(h);
    z = batch_norm(z, head.bn_gamma, head.bn_beta, head.bn, opt.training);
    z = dropout(z, static_cast<Real>(c.dropout_p), opt.training, opt.dropout_seed);
    z = head.output(z);
    return reshape(z, {u.shape()[0]});
}

inline Var forward_logits(ModelParams& p, const LigandBatch& tcr, const LigandBatch& epitope,
                          const ForwardOptions& opt) {
    const Var u = encode_ligand(p.tcr, p.config, tcr);
    const Var v = encode_ligand(p.epitope, p.config, epitope);
    return head_logits(p.head, p.config, u, v, opt);
}

/// Binding probabilities in evaluation mode.
inline std::vector<Real> predict_pair(ModelParams& p, const LigandBatch& tcr, const LigandBatch& epitope) {
    const Var z = forward_logits(p, tcr, epitope, {});
    std::vector<Real> out(z.value().size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid_value(z.value()[i]);
    return out;
}

/// Fits the fixed PCF z-scoring from raw feature rows ([N, 88]).
inline void fit_pcf_standardizer(LigandEncoder& e, const Tensor& rows) {
    const std::size_t f = e.pcf_mean.size();
    const std::size_t n = rows.size() / f;
    if (n == 0) return;
    for (std::size_t j = 0; j < f; ++j) {
        double mu = 0.0;
        for (std::size_t i = 0; i < n; ++i) mu += rows[i * f + j];
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) var += (rows[i * f + j] - mu) * (rows[i * f + j] - mu);
        const double sd = std::sqrt(var / static_cast<double>(n));
        e.pcf_mean[j] = static_cast<Real>(mu);
        e.pcf_scale[j] = static_cast<Real>(sd > 1e-8 ? sd : 1.0);
    }
}

} // namespace matepred
