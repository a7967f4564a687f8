#include <gtest/gtest.h>

#include <cmath>

#include "matepred/training.hpp"
#include "support/synthetic.hpp"

using namespace matepred;

namespace {

ModelConfig small_mock(const std::string& variant) {
    auto c = synth::tiny_config(variant);
    c.context = 12;
    return c;
}

FoldData tiny_fold(std::uint64_t seed) {
    const auto pairs = synth::random_pairs(40, seed);
    FoldData d;
    for (std::size_t i = 0; i < pairs.size(); ++i) (i < 28 ? d.train : i < 34 ? d.valid : d.test).push_back(pairs[i]);
    return d;
}

} // namespace

TEST(Adam, OneStepIsSignedLearningRate) {
    const AdamConfig c;
    std::vector<Real> p{1.0, -2.0, 0.5}, g{0.3, -7.0, 1e-3}, m(3), v(3);
    const auto before = p;
    adam_update(p, g, m, v, 1, c);
    for (std::size_t i = 0; i < 3; ++i)
        EXPECT_NEAR(p[i] - before[i], -c.lr * g[i] / (std::abs(g[i]) + c.eps), 1e-15);
}

TEST(Adam, ZeroGradientDecaysMoments) {
    const AdamConfig c;
    std::vector<Real> p{1.0}, g{0.0}, m{0.2}, v{0.04};
    adam_update(p, g, m, v, 5, c);
    EXPECT_NEAR(m[0], 0.9 * 0.2, 1e-15);
    EXPECT_NEAR(v[0], 0.98 * 0.04, 1e-15);
    // Decayed first moment still moves the parameter; a fresh state does not.
    std::vector<Real> q{1.0}, m0{0.0}, v0{0.0};
    adam_update(q, g, m0, v0, 1, c);
    EXPECT_EQ(q[0], 1.0);
}

TEST(Adam, StepOverGraph) {
    auto w = parameter(Tensor::vector({1.0, 2.0}));
    AdamState s;
    const std::vector<NamedVar> params{{"w", w}};
    backward(sum(w));
    adam_step(params, s);
    EXPECT_EQ(s.step, 1u);
    EXPECT_NEAR(w.value()[0], 1.0 - 5e-3 / (1.0 + 1e-9), 1e-15);
}

TEST(Training, MinibatchesMergeSingleton) {
    rng::Generator gen(1);
    auto b = make_minibatches(9, 4, gen);
    ASSERT_EQ(b.size(), 2u);
    EXPECT_EQ(b[1].size(), 5u);
    b = make_minibatches(10, 4, gen);
    ASSERT_EQ(b.size(), 3u);
    EXPECT_EQ(b[2].size(), 2u);
    std::set<std::size_t> all;
    for (const auto& x : b) all.insert(x.begin(), x.end());
    EXPECT_EQ(all.size(), 10u);
}

TEST(Training, BitReproducibleReports) {
    const auto c = small_mock("PCF-CM");
    const auto data = tiny_fold(3);
    TrainOptions opt;
    opt.epochs = 3;
    opt.batch_size = 8;
    opt.seed = 5;
    FeatureCache a(c, {}), b(c, {});
    const auto r1 = train(c, data, a, opt);
    const auto r2 = train(c, data, b, opt);
    EXPECT_EQ(r1.report.to_jsonl(), r2.report.to_jsonl());
    opt.seed = 6;
    FeatureCache d(c, {});
    EXPECT_NE(train(c, data, d, opt).report.to_jsonl(), r1.report.to_jsonl());
}

TEST(Training, BestEpochBookkeeping) {
    const auto c = small_mock("PCF-EC");
    TrainOptions opt;
    opt.epochs = 6;
    opt.batch_size = 8;
    FeatureCache cache(c, {});
    const auto r = train(c, tiny_fold(4), cache, opt);
    const auto* best = r.report.best_for("mcc");
    ASSERT_NE(best, nullptr);
    double top = -2;
    std::size_t arg = 0;
    for (std::size_t e = 1; e <= 6; ++e) {
        const auto* v = r.report.find(e, "valid");
        ASSERT_NE(v, nullptr);
        if (v->mcc > top) {
            top = v->mcc;
            arg = e;
        }
    }
    EXPECT_EQ(best->epoch, arg);
    EXPECT_EQ(best->test, r.report.find(arg, "test")->mcc);
    for (const auto& m : r.report.epochs) {
        EXPECT_EQ(m.confusion.total(), m.split == "train" ? 28u : 6u);
        EXPECT_GE(m.mcc, -1.0);
        EXPECT_LE(m.mcc, 1.0);
    }
    // Every epoch contributes one line per split plus three summary lines.
    const auto jsonl = r.report.to_jsonl();
    EXPECT_EQ(std::count(jsonl.begin(), jsonl.end(), '\n'), 6 * 3 + 3);
    ASSERT_TRUE(r.best_model.has_value());
}

TEST(Training, MissingEmbeddingIsReported) {
    auto c = small_mock("Text-only");
    c.embedding_mode = EmbeddingMode::PretrainedStore;
    FeatureCache cache(c, {});
    TrainOptions opt;
    opt.epochs = 1;
    EXPECT_THROW(train(c, tiny_fold(5), cache, opt), MissingEmbedding);

    const auto data = tiny_fold(5);
    std::vector<PairExample> all = data.train;
    auto store = synth::random_text_store(all, 30, c.d_model, 1);  // rows beyond context are dropped
    FeatureCache with_store(c, {store, nullptr});
    FoldData subset{data.train, {}, {}};
    EXPECT_NO_THROW(train(c, subset, with_store, opt));
    auto cm = small_mock("CM-EC");
    cm.embedding_mode = EmbeddingMode::PretrainedStore;
    FeatureCache no_maps(cm, {store, nullptr});
    EXPECT_THROW(train(cm, subset, no_maps, opt), MissingEmbedding);
}

TEST(Training, ExternalPerClassSumsToGlobal) {
    const auto c = small_mock("Text-only");
    FeatureCache cache(c, {});
    auto model = ModelParams::init(c, 1);
    auto pairs = synth::random_pairs(30, 9);
    for (std::size_t i = 0; i < pairs.size(); ++i) pairs[i].group = i % 3 == 0 ? "II" : "I";
    const auto r = evaluate_external(model, cache, pairs);
    Confusion total;
    for (const auto& [g, m] : r.per_group) total += m;
    EXPECT_EQ(total, r.overall.confusion);
    EXPECT_EQ(r.per_group.size(), 2u);
}

TEST(Training, OverfitsSmallSet) {
    auto c = synth::tiny_config("PCF-CM");
    c.d_model = 32;
    c.context = 22;
    c.proj_hidden = 32;
    c.ffn_hidden = 32;
    c.head_hidden = 32;
    FoldData data{synth::random_pairs(64, 21), {}, {}};
    TrainOptions opt;
    opt.epochs = 300;
    opt.seed = 1;
    FeatureCache cache(c, {});
    const auto r = train(c, data, cache, opt);
    const auto* last = r.report.find(300, "train");
    ASSERT_NE(last, nullptr);
    EXPECT_LT(last->loss, 0.05);
    EXPECT_DOUBLE_EQ(last->mcc, 1.0);
}
