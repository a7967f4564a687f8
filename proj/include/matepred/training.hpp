#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "matepred/checkpoint.hpp"
#include "matepred/dataset.hpp"
#include "matepred/features.hpp"
#include "matepred/metrics.hpp"
#include "matepred/model.hpp"
#include "matepred/optim.hpp"

namespace matepred {

/// Scores for one split after one epoch.
struct SplitMetrics {
    std::size_t epoch = 0;
    std::string split;
    double loss = 0.0;
    double mcc = 0.0;
    std::optional<double> auc;  // absent when the split holds one class
    Confusion confusion;
};

/// Best validation epoch for one metric and the test score at that epoch.
struct BestSummary {
    std::string metric;
    std::size_t epoch = 0;
    double valid = 0.0;
    std::optional<double> test;
};

struct MetricsReport {
    std::vector<SplitMetrics> epochs;
    std::vector<BestSummary> best;

    const SplitMetrics* find(std::size_t epoch, const std::string& split) const {
        for (const auto& m : epochs)
            if (m.epoch == epoch && m.split == split) return &m;
        return nullptr;
    }
    const BestSummary* best_for(const std::string& metric) const {
        for (const auto& b : best)
            if (b.metric == metric) return &b;
        return nullptr;
    }
    std::string to_jsonl() const;
};

inline nlohmann::json to_json_object(const SplitMetrics& m) {
    nlohmann::json j = {{"epoch", m.epoch},          {"split", m.split},        {"loss", m.loss},
                        {"mcc", m.mcc},              {"auc", nullptr},          {"tp", m.confusion.tp},
                        {"tn", m.confusion.tn},      {"fp", m.confusion.fp},    {"fn", m.confusion.fn}};
    if (m.auc) j["auc"] = *m.auc;
    return j;
}

inline nlohmann::json to_json_object(const BestSummary& b) {
    nlohmann::json j = {{"summary", b.metric}, {"best_epoch", b.epoch}, {"valid", b.valid}, {"test", nullptr}};
    if (b.test) j["test"] = *b.test;
    return j;
}

inline std::string MetricsReport::to_jsonl() const {
    std::string out;
    for (const auto& m : epochs) out += to_json_object(m).dump() + '\n';
    for (const auto& b : best) out += to_json_object(b).dump() + '\n';
    return out;
}

/// Numerically stable binary cross-entropy of one logit.
inline double bce_term(double z, double y) { return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z))); }

/// Eval-mode logits for every example, in order.
inline std::vector<Real> predict_logits(ModelParams& model, FeatureCache& cache,
                                        const std::vector<PairExample>& examples, std::size_t batch_size = 512) {
    std::vector<Real> out;
    out.reserve(examples.size());
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < examples.size(); start += batch_size) {
        idx.clear();
        for (std::size_t i = start; i < std::min(examples.size(), start + batch_size); ++i) idx.push_back(i);
        const auto b = make_batch(cache, examples, idx);
        const Var z = forward_logits(model, b.tcr, b.epitope, {});
        out.insert(out.end(), z.value().data().begin(), z.value().data().end());
    }
    return out;
}

inline SplitMetrics score_logits(std::span<const Real> logits, std::span<const int> labels, std::size_t epoch,
                                 std::string split) {
    SplitMetrics m;
    m.epoch = epoch;
    m.split = std::move(split);
    std::vector<double> probs(logits.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        loss += bce_term(logits[i], labels[i]);
        probs[i] = sigmoid_value(logits[i]);
    }
    m.loss = logits.empty() ? 0.0 : loss / static_cast<double>(logits.size());
    m.confusion = confusion_at<double>(probs, labels);
    m.mcc = mcc(m.confusion);
    const auto positives = std::count(labels.begin(), labels.end(), 1);
    if (positives > 0 && static_cast<std::size_t>(positives) < labels.size()) m.auc = auc<double>(probs, labels);
    return m;
}

inline std::vector<int> labels_of(const std::vector<PairExample>& examples) {
    std::vector<int> y;
    y.reserve(examples.size());
    for (const auto& e : examples) y.push_back(e.label);
    return y;
}

inline SplitMetrics evaluate(ModelParams& model, FeatureCache& cache, const std::vector<PairExample>& examples,
                             std::size_t epoch, std::string split, std::size_t batch_size = 512) {
    const auto logits = predict_logits(model, cache, examples, batch_size);
    const auto labels = labels_of(examples);
    return score_logits(logits, labels, epoch, std::move(split));
}

/// Shuffled minibatches; the last partial batch is kept, but a single
/// leftover example joins the previous batch (batch-norm needs two rows).
inline std::vector<std::vector<std::size_t>> make_minibatches(std::size_t n, std::size_t batch_size,
                                                              rng::Generator& gen) {
    if (batch_size == 0) throw InvalidArgument("batch_size must be >= 1");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    gen.shuffle(order);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < n; start += batch_size)
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + batch_size)));
    if (batches.size() > 1 && batches.back().size() == 1) {
        batches[batches.size() - 2].push_back(batches.back().front());
        batches.pop_back();
    }
    return batches;
}

struct TrainOptions {
    std::size_t epochs = 200;
    std::size_t batch_size = 512;
    std::uint64_t seed = 0;
    AdamConfig adam;
    bool evaluate_train = true;
    /// Keep a copy of the parameters at the best validation-MCC epoch.
    bool keep_best = true;
    std::function<void(const SplitMetrics&)> on_metrics;
};

struct TrainResult {
    ModelParams model;
    std::optional<ModelParams> best_model;
    MetricsReport report;
};

namespace detail {

inline Tensor pcf_rows(FeatureCache& cache, const std::set<std::string>& seqs) {
    Tensor rows({seqs.size(), physchem::kFeatureDims});
    std::size_t r = 0;
    for (const auto& s : seqs) {
        const auto& f = cache.get(AaSequence::parse(s));
        std::copy(f.pcf.begin(), f.pcf.end(), rows.data().begin() + static_cast<std::ptrdiff_t>(r++ * f.pcf.size()));
    }
    return rows;
}

inline std::vector<BestSummary> summarize(const MetricsReport& report, std::size_t epochs) {
    struct Spec {
        const char* name;
        bool maximize;
        std::function<std::optional<double>(const SplitMetrics&)> get;
    };
    const std::vector<Spec> specs{
        {"loss", false, [](const SplitMetrics& m) { return std::optional<double>(m.loss); }},
        {"mcc", true, [](const SplitMetrics& m) { return std::optional<double>(m.mcc); }},
        {"auc", true, [](const SplitMetrics& m) { return m.auc; }},
    };
    std::vector<BestSummary> out;
    for (const auto& s : specs) {
        std::optional<BestSummary> best;
        for (std::size_t e = 1; e <= epochs; ++e) {
            const auto* v = report.find(e, "valid");
            if (!v) continue;
            const auto score = s.get(*v);
            if (!score) continue;
            const bool better = !best || (s.maximize ? *score > best->valid : *score < best->valid);
            if (!better) continue;
            best = BestSummary{s.name, e, *score, std::nullopt};
            if (const auto* t = report.find(e, "test")) best->test = s.get(*t);
        }
        if (best) out.push_back(*best);
    }
    return out;
}

} // namespace detail

/// Minibatch BCE + Adam with per-epoch evaluation of every non-empty split.
/// Bit-reproducible for a fixed (config, data, options).
inline TrainResult train(const ModelConfig& config, const FoldData& data, FeatureCache& cache,
                         const TrainOptions& opt) {
    if (data.train.size() < 2) throw InvalidArgument("training needs at least two pairs");
    cache.warm(data.train);
    cache.warm(data.valid);
    cache.warm(data.test);

    TrainResult result{ModelParams::init(config, rng::hash_keys(opt.seed, 0x494Eull, 0, 0)), std::nullopt, {}};
    ModelParams& model = result.model;
    if (config.use_pcf && config.standardize_pcf) {
        std::set<std::string> tcrs, epis;
        for (const auto& e : data.train) {
            tcrs.insert(e.tcr.str());
            epis.insert(e.epitope.str());
        }
        fit_pcf_standardizer(model.tcr, detail::pcf_rows(cache, tcrs));
        fit_pcf_standardizer(model.epitope, detail::pcf_rows(cache, epis));
    }

    const auto params = model.named_parameters();
    AdamState adam;
    double best_valid_mcc = -2.0;
    auto record = [&](SplitMetrics m) {
        if (opt.on_metrics) opt.on_metrics(m);
        result.report.epochs.push_back(std::move(m));
    };

    for (std::size_t epoch = 1; epoch <= opt.epochs; ++epoch) {
        rng::Generator gen(rng::hash_keys(opt.seed, 0x5348ull, epoch, 0));
        for (const auto& idx : make_minibatches(data.train.size(), opt.batch_size, gen)) {
            const auto b = make_batch(cache, data.train, idx);
            const ForwardOptions fwd{true, rng::hash_keys(opt.seed, 0x4452ull, adam.step, 0)};
            const Var loss = bce_with_logits(forward_logits(model, b.tcr, b.epitope, fwd), b.labels);
            backward(loss);
            adam_step(params, adam, opt.adam);
        }

        if (opt.evaluate_train) record(evaluate(model, cache, data.train, epoch, "train", opt.batch_size));
        if (!data.valid.empty()) {
            auto v = evaluate(model, cache, data.valid, epoch, "valid", opt.batch_size);
            if (opt.keep_best && v.mcc > best_valid_mcc) {
                best_valid_mcc = v.mcc;
                result.best_model = model.clone();
            }
            record(std::move(v));
        }
        if (!data.test.empty()) record(evaluate(model, cache, data.test, epoch, "test", opt.batch_size));
    }
    result.report.best = detail::summarize(result.report, opt.epochs);
    return result;
}

/// Frozen-model scores on an external pair set with per-group confusion counts.
struct ExternalReport {
    SplitMetrics overall;
    std::map<std::string, Confusion> per_group;

    nlohmann::json to_json() const {
        nlohmann::json j = to_json_object(overall);
        nlohmann::json groups = nlohmann::json::object();
        for (const auto& [g, c] : per_group)
            groups[g] = {{"tp", c.tp}, {"tn", c.tn}, {"fp", c.fp}, {"fn", c.fn}, {"mcc", mcc(c)}};
        j["per_class"] = groups;
        return j;
    }
};

inline ExternalReport evaluate_external(ModelParams& model, FeatureCache& cache,
                                        const std::vector<PairExample>& examples, std::size_t batch_size = 512) {
    const auto logits = predict_logits(model, cache, examples, batch_size);
    const auto labels = labels_of(examples);
    ExternalReport r{score_logits(logits, labels, 0, "external"), {}};
    for (std::size_t i = 0; i < examples.size(); ++i)
        if (!examples[i].group.empty())
            r.per_group[examples[i].group].add(sigmoid_value(logits[i]) >= kDecisionThreshold, labels[i] != 0);
    return r;
}

/// One (variant, fold) cell of the benchmark grid, scored at the best
/// validation epoch of each metric.
struct BenchmarkCell {
    std::string variant;
    std::size_t fold = 0;
    std::optional<double> test_mcc;
    std::optional<double> test_auc;
};

inline std::vector<BenchmarkCell> run_benchmark(const ModelConfig& base, const std::vector<std::string>& variants,
                                                const std::vector<PairExample>& examples, const SplitPlan& plan,
                                                const std::vector<std::size_t>& folds, const FeatureSources& sources,
                                                const TrainOptions& opt) {
    std::vector<BenchmarkCell> cells;
    for (const auto& name : variants) {
        const auto config = ModelConfig::variant(name, base);
        FeatureCache cache(config, sources);
        for (std::size_t fold : folds) {
            const auto data = partition(examples, plan, fold);
            TrainOptions o = opt;
            o.keep_best = false;
            const auto result = train(config, data, cache, o);
            BenchmarkCell cell{name, fold, std::nullopt, std::nullopt};
            if (const auto* b = result.report.best_for("mcc")) cell.test_mcc = b->test;
            if (const auto* b = result.report.best_for("auc")) cell.test_auc = b->test;
            cells.push_back(cell);
        }
    }
    return cells;
}

} // namespace matepred
