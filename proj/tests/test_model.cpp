#include <gtest/gtest.h>

#include <cmath>

#include "matepred/model.hpp"
#include "support/synthetic.hpp"

using namespace matepred;

TEST(Model, FullScaleParameterCounts) {
    const ModelConfig full;
    const auto c = count_parameters(full);
    EXPECT_EQ(c.tcr.pcf_projection, 570'880u);
    EXPECT_EQ(c.tcr.cmap_projection, 655'360u);
    EXPECT_EQ(c.tcr.self_attention, 8'397'824u);
    EXPECT_EQ(c.tcr.ffn, 68'640u);
    EXPECT_EQ(c.final_projection, 3'149'825u);
    EXPECT_EQ(c.total(), 22'535'233u);
    EXPECT_EQ(c.tcr, c.epitope);
}

TEST(Model, InstantiatedCountsMatchClosedForm) {
    for (const auto& v : ModelConfig::benchmark_variants()) {
        for (auto c : {synth::tiny_config(v), ModelConfig::variant(v)}) {
            if (c.d_model == 1024 && v != "PCF-CM") continue;  // one full-scale instantiation is enough
            const auto p = ModelParams::init(c, 1);
            EXPECT_EQ(count_instantiated(p), count_parameters(c)) << v;
            EXPECT_EQ(p.parameter_count(), count_parameters(c).total()) << v;
        }
    }
    auto wpe = synth::tiny_config("Text-only-WPE");
    const auto p = ModelParams::init(wpe, 1);
    EXPECT_EQ(count_instantiated(p), count_parameters(wpe));
    EXPECT_EQ(count_parameters(wpe).tcr.token_embedding, kVocabSize * 16);
}

TEST(Model, ConfigValidation) {
    ModelConfig c = synth::tiny_config("PCF-CM");
    c.heads = 3;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = synth::tiny_config("PCF-CM");
    c.dropout_p = 1.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    EXPECT_THROW(ModelConfig::variant("CM-CNN-EC"), InvalidArgument);
}

TEST(Model, VariantNamesRoundTrip) {
    for (const auto& v : ModelConfig::benchmark_variants()) EXPECT_EQ(ModelConfig::variant(v).variant_name(), v);
    EXPECT_EQ(ModelConfig::variant("Text-only-WPE").variant_name(), "Text-only-WPE");
}

TEST(Model, ConfigJsonRoundTrip) {
    auto c = synth::tiny_config("CM-LC");
    c.use_attention_mask = true;
    c.mock_seed = 99;
    const nlohmann::json j = c;
    EXPECT_EQ(j.get<ModelConfig>(), c);
    EXPECT_EQ(j.at("fusion"), "LATE_CONCAT");
}

TEST(Model, OutputWidths) {
    EXPECT_EQ(ModelConfig::variant("Text-only").d_out(), 1024u);
    EXPECT_EQ(ModelConfig::variant("PCF-CM").d_out(), 1024u);
    auto lc = ModelConfig::variant("PCF-CM-LC");
    lc.d_model = 64;
    EXPECT_EQ(lc.d_out(), 192u);
    EXPECT_EQ(ModelConfig::variant("PCF-CM").encoder_rows(), 24u);
    EXPECT_EQ(ModelConfig::variant("CM-EC").encoder_rows(), 23u);
    EXPECT_EQ(ModelConfig::variant("CM-LC").encoder_rows(), 22u);
}

TEST(Model, EncodeLigandShapes) {
    rng::Generator gen(1);
    for (const auto& v : ModelConfig::benchmark_variants()) {
        const auto c = synth::tiny_config(v);
        const auto p = ModelParams::init(c, 2);
        const auto b = synth::random_ligand_batch(c, 3, gen);
        EXPECT_EQ(encode_ligand(p.tcr, c, b).shape(), (Shape{3, c.d_out()})) << v;
    }
}

TEST(Model, FuseEarlyAppendsRows) {
    rng::Generator gen(2);
    const auto text = constant(synth::random_tensor({2, 22, 8}, gen));
    const auto pcf = constant(synth::random_tensor({2, 8}, gen));
    const auto cm = constant(synth::random_tensor({2, 8}, gen));
    const auto both = fuse_early(text, {pcf, cm});
    EXPECT_EQ(both.shape(), (Shape{2, 24, 8}));
    for (std::size_t j = 0; j < 8; ++j) {
        EXPECT_EQ(both.value()[(0 * 24 + 22) * 8 + j], pcf.value()[j]);
        EXPECT_EQ(both.value()[(1 * 24 + 23) * 8 + j], cm.value()[8 + j]);
    }
    EXPECT_EQ(fuse_early(text, {cm}).shape(), (Shape{2, 23, 8}));
    EXPECT_EQ(fuse_early(text, {}).value(), text.value());
}

TEST(Model, ZeroInputProjection) {
    rng::Generator gen(3);
    auto first = detail::make_linear(88, 8, gen);
    auto second = detail::make_linear(8, 16, gen);
    const Projection proj{first, second};
    const auto y = proj(constant(Tensor({1, 88})));
    for (Real v : y.value().data()) EXPECT_EQ(v, 0);
}

TEST(Model, SingleTokenAttentionIsValueProjection) {
    rng::Generator gen(4);
    const auto mha = detail::make_attention(8, gen);
    const auto x = constant(synth::random_tensor({1, 1, 8}, gen));
    const auto got = multi_head_attention(mha, x, 2, std::nullopt);
    const auto want = mha.output(mha.value(x));
    for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(got.value()[i], want.value()[i], 1e-12);
}

TEST(Model, AttentionRowsAreStochastic) {
    rng::Generator gen(5);
    const auto c = synth::tiny_config("PCF-CM");
    const auto p = ModelParams::init(c, 5);
    const auto b = synth::random_ligand_batch(c, 3, gen);
    AttentionTrace trace;
    encode_ligand(p.tcr, c, b, &trace);
    ASSERT_EQ(trace.size(), 4u);  // 2 sublayers x 2 heads
    for (const auto& a : trace) {
        const std::size_t n = a.shape().back();
        for (std::size_t r = 0; r < a.size() / n; ++r) {
            Real s = 0;
            for (std::size_t j = 0; j < n; ++j) s += a[r * n + j];
            ASSERT_NEAR(s, 1.0, 1e-10);
        }
    }
}

TEST(Model, AttentionEncoderIsPermutationEquivariant) {
    rng::Generator gen(6);
    const auto c = synth::tiny_config("Text-only");
    const auto p = ModelParams::init(c, 6);
    const auto x = synth::random_tensor({1, 6, 16}, gen);
    const std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
    Tensor xp(x.shape());
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 16; ++j) xp[i * 16 + j] = x[perm[i] * 16 + j];
    const auto y = attention_encoder(p.tcr.encoder, constant(x), 2, std::nullopt).value();
    const auto yp = attention_encoder(p.tcr.encoder, constant(xp), 2, std::nullopt).value();
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 16; ++j) EXPECT_NEAR(yp[i * 16 + j], y[perm[i] * 16 + j], 1e-12);
}

TEST(Model, EncodersShareNoParameters) {
    rng::Generator gen(7);
    const auto c = synth::tiny_config("PCF-CM");
    auto p = ModelParams::init(c, 7);
    const auto b = synth::random_ligand_batch(c, 2, gen);
    const auto before = encode_ligand(p.epitope, c, b).value();
    for (auto& [name, v] : p.named_parameters()) {
        if (!name.starts_with("tcr.")) continue;
        Var h = v;
        for (auto& x : h.mutable_value().storage()) x += 0.5;
    }
    EXPECT_EQ(encode_ligand(p.epitope, c, b).value(), before);
}

TEST(Model, HeadDifferenceSegmentIsSymmetric) {
    rng::Generator gen(8);
    const auto u = constant(synth::random_tensor({2, 5}, gen));
    const auto v = constant(synth::random_tensor({2, 5}, gen));
    EXPECT_EQ(abs_diff(u, v).value(), abs_diff(v, u).value());
    const auto same = abs_diff(u, u);
    for (Real x : same.value().data()) EXPECT_EQ(x, 0);
}

TEST(Model, ForwardIsDeterministicAndBounded) {
    rng::Generator gen(9);
    const auto c = synth::tiny_config("PCF-CM");
    auto p = ModelParams::init(c, 9);
    const auto t = synth::random_ligand_batch(c, 4, gen);
    const auto e = synth::random_ligand_batch(c, 4, gen);
    const auto a = predict_pair(p, t, e);
    EXPECT_EQ(a, predict_pair(p, t, e));
    for (Real x : a) {
        EXPECT_GT(x, 0);
        EXPECT_LT(x, 1);
    }
}

TEST(Model, MissingModality) {
    rng::Generator gen(10);
    const auto c = synth::tiny_config("PCF-CM");
    const auto p = ModelParams::init(c, 10);
    auto b = synth::random_ligand_batch(c, 2, gen);
    b.cmap = Tensor();
    EXPECT_THROW(encode_ligand(p.tcr, c, b), MissingModality);
}

TEST(Model, SinusoidalEncoding) {
    const auto pe = sinusoidal_encoding(4, 6);
    for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(pe.at(0, j), j % 2 == 0 ? 0.0 : 1.0);
    EXPECT_NEAR(pe.at(1, 0), std::sin(1.0), 1e-15);
    EXPECT_NEAR(pe.at(1, 3), std::cos(1.0 / std::pow(10000.0, 2.0 / 6.0)), 1e-15);

    auto table = parameter(Tensor({kVocabSize, 6}, Real(0.5)));
    const std::vector<std::size_t> ids{4, 4, 4, 4};
    const auto rows = embed_tokens_trained(table, ids, 4).value();
    bool differ = false;
    for (std::size_t j = 0; j < 6; ++j) differ = differ || rows[0 * 6 + j] != rows[1 * 6 + j];
    EXPECT_TRUE(differ);
}

TEST(Model, MaskedPoolingIgnoresPadding) {
    rng::Generator gen(11);
    auto c = synth::tiny_config("Text-only");
    c.use_attention_mask = true;
    const auto p = ModelParams::init(c, 11);
    auto b = synth::random_ligand_batch(c, 1, gen);
    for (std::size_t i = 0; i < c.context; ++i) b.mask[i] = i < 3 ? 1 : 0;
    const auto before = encode_ligand(p.tcr, c, b).value();
    for (std::size_t i = 3 * c.d_model; i < b.tokens.size(); ++i) b.tokens[i] += 10.0;
    const auto after = encode_ligand(p.tcr, c, b).value();
    for (std::size_t i = 0; i < before.size(); ++i) EXPECT_NEAR(after[i], before[i], 1e-9);
}

TEST(Model, EndToEndGradientCheckPerVariant) {
    std::vector<std::string> variants = ModelConfig::benchmark_variants();
    variants.push_back("Text-only-WPE");
    for (const auto& v : variants) {
        auto gc = synth::model_case(synth::tiny_config(v), 21);
        const auto report = grad_check(gc.loss, gc.params);
        EXPECT_TRUE(report.passed) << v << ": " << report.max_rel_error;
    }
}

TEST(Model, CloneIsDeep) {
    const auto c = synth::tiny_config("PCF-EC");
    auto p = ModelParams::init(c, 12);
    auto q = p.clone();
    Var h = p.named_parameters().front().second;
    h.mutable_value()[0] += 1;
    EXPECT_NE(q.named_parameters().front().second.value()[0], h.value()[0]);
}
