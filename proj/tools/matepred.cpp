#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "matepred/csv.hpp"
#include "matepred/matepred.hpp"

namespace fs = std::filesystem;
using namespace matepred;

namespace {

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot write " + path.string());
    out.precision(17);
    return out;
}

// Matrix dumps: headed CSV, one matrix row per line as key,row,v0,v1,...
std::vector<StoreRecord> read_matrix_csv(const fs::path& path) {
    const auto table = csv::read(path);
    std::map<std::string, std::map<long long, std::vector<float>>> rows;
    std::size_t cols = 0;
    for (const auto& line : table.rows) {
        if (line.size() < 3) throw ParseError(path.string() + ": expected key,row,values...");
        const auto key = AaSequence::parse(line[0]).str();
        std::vector<float> v;
        for (std::size_t i = 2; i < line.size(); ++i) v.push_back(static_cast<float>(csv::to_double(line[i])));
        if (cols == 0) cols = v.size();
        if (v.size() != cols) throw ShapeMismatch(path.string() + ": ragged rows for " + key);
        if (!rows[key].emplace(csv::to_int(line[1]), std::move(v)).second)
            throw DuplicateKey(key + " row " + line[1]);
    }
    std::vector<StoreRecord> out;
    for (auto& [key, m] : rows) {
        StoreRecord r{key, static_cast<std::uint32_t>(m.size()), static_cast<std::uint32_t>(cols), {}};
        long long expect = 0;
        for (auto& [idx, v] : m) {
            if (idx != expect++) throw ParseError(key + ": row indices must be 0..n-1");
            r.data.insert(r.data.end(), v.begin(), v.end());
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::shared_ptr<const EmbeddingStore> maybe_store(const std::string& path) {
    if (path.empty()) return nullptr;
    return std::make_shared<const EmbeddingStore>(read_store(path));
}

ModelConfig load_config(const std::string& path, const std::string& variant) {
    ModelConfig c = path.empty() ? ModelConfig{} : read_config(path);
    if (!variant.empty()) c = ModelConfig::variant(variant, c);
    c.validate();
    return c;
}

SplitPlan load_or_make_plan(const std::string& plan_path, const std::vector<PairExample>& pairs,
                            std::size_t folds, std::uint64_t seed) {
    if (!plan_path.empty()) {
        std::ifstream in(plan_path);
        if (!in) throw IoFailure("cannot open " + plan_path);
        return nlohmann::json::parse(in).get<SplitPlan>();
    }
    return make_splits(pairs, folds, seed);
}

void print_epoch(const SplitMetrics& m) {
    std::fprintf(stderr, "epoch %4zu %-5s loss %.5f mcc %+.4f auc %s\n", m.epoch, m.split.c_str(), m.loss, m.mcc,
                 m.auc ? std::to_string(*m.auc).c_str() : "n/a");
}

nlohmann::json counts_json(const LigandCounts& l) {
    return {{"pcf_projection", l.pcf_projection},   {"cmap_projection", l.cmap_projection},
            {"self_attention", l.self_attention},   {"ffn", l.ffn},
            {"token_embedding", l.token_embedding}, {"total", l.total()}};
}

std::string random_residues(rng::Generator& gen, std::size_t lo, std::size_t hi) {
    std::string s(lo + static_cast<std::size_t>(gen.below(hi - lo + 1)), 'A');
    for (auto& ch : s) ch = kAlphabet[static_cast<std::size_t>(gen.below(kNumResidues))];
    return s;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"TCR-epitope binding prediction with multimodal ligand encoders"};
    app.require_subcommand(1);

    // featurize
    std::string seq_in, feat_out;
    auto* featurize = app.add_subcommand("featurize", "88 physicochemical features per sequence as CSV");
    featurize->add_option("input", seq_in, "one sequence per line")->required()->check(CLI::ExistingFile);
    featurize->add_option("-o,--out", feat_out, "output CSV (stdout if omitted)");

    // pack-embeddings / pack-cmaps
    std::string pack_in, pack_out;
    auto* pack_emb = app.add_subcommand("pack-embeddings", "CSV matrix dump (key,row,values...) to MMEB store");
    auto* pack_cm = app.add_subcommand("pack-cmaps", "CSV contact-map dump (key,row,values...) to MMEB store");
    for (auto* sc : {pack_emb, pack_cm}) {
        sc->add_option("input", pack_in)->required()->check(CLI::ExistingFile);
        sc->add_option("-o,--out", pack_out)->required();
    }

    // split
    std::string pairs_path, plan_out;
    std::size_t fold_count = 10;
    std::uint64_t seed = 0;
    double valid_fraction = 0.1;
    auto* split = app.add_subcommand("split", "epitope-disjoint fold plan as JSON");
    split->add_option("pairs", pairs_path)->required()->check(CLI::ExistingFile);
    split->add_option("--folds", fold_count)->capture_default_str();
    split->add_option("--seed", seed)->capture_default_str();
    split->add_option("--valid-fraction", valid_fraction)->capture_default_str();
    split->add_option("-o,--out", plan_out)->required();

    // sample-negatives
    std::string decoys_path, neg_out;
    auto* negs = app.add_subcommand("sample-negatives", "append one decoy-TCR negative per positive pair");
    negs->add_option("positives", pairs_path)->required()->check(CLI::ExistingFile);
    negs->add_option("--decoys", decoys_path, "TCR pool, one per line")->required()->check(CLI::ExistingFile);
    negs->add_option("--seed", seed)->capture_default_str();
    negs->add_option("-o,--out", neg_out)->required();

    // train / benchmark shared options
    std::string config_path, variant, plan_path, emb_path, cmap_path, out_dir;
    std::size_t fold = 0;
    TrainOptions topt;
    auto add_training = [&](CLI::App* sc) {
        sc->add_option("--config", config_path, "model config (length-prefixed or bare JSON)");
        sc->add_option("--variant", variant, "override fusion/modalities by variant name");
        sc->add_option("--pairs", pairs_path)->required()->check(CLI::ExistingFile);
        sc->add_option("--plan", plan_path, "split plan JSON (generated from --seed if omitted)");
        sc->add_option("--folds", fold_count)->capture_default_str();
        sc->add_option("--embeddings", emb_path, "text embedding store");
        sc->add_option("--cmaps", cmap_path, "contact-map store");
        sc->add_option("--seed", seed)->capture_default_str();
        sc->add_option("--epochs", topt.epochs)->capture_default_str();
        sc->add_option("--batch-size", topt.batch_size)->capture_default_str();
        sc->add_option("--lr", topt.adam.lr)->capture_default_str();
        sc->add_option("--out", out_dir)->required();
    };
    auto* trainc = app.add_subcommand("train", "train one fold; writes metrics.jsonl and checkpoints");
    add_training(trainc);
    trainc->add_option("--fold", fold)->capture_default_str();

    std::vector<std::size_t> bench_folds;
    std::vector<std::string> bench_variants;
    auto* bench = app.add_subcommand("benchmark", "variant grid over folds, test scores at best-valid epochs");
    add_training(bench);
    bench->add_option("--fold-ids", bench_folds, "folds to run (all if omitted)");
    bench->add_option("--variants", bench_variants, "variants to run (the six benchmark variants if omitted)");

    // evaluate
    std::string ckpt_path, report_out;
    std::size_t eval_batch = 512;
    auto* evalc = app.add_subcommand("evaluate", "score a checkpoint on a pair file, per class if present");
    evalc->add_option("checkpoint", ckpt_path)->required()->check(CLI::ExistingFile);
    evalc->add_option("--pairs", pairs_path)->required()->check(CLI::ExistingFile);
    evalc->add_option("--embeddings", emb_path);
    evalc->add_option("--cmaps", cmap_path);
    evalc->add_option("--batch-size", eval_batch)->capture_default_str();
    evalc->add_option("-o,--out", report_out, "report JSON (stdout if omitted)");

    // gradcheck
    std::vector<std::string> gc_variants;
    std::size_t gc_d = 16, gc_ctx = 6, gc_batch = 4;
    GradCheckOptions gopt;
    auto* gradc = app.add_subcommand("gradcheck", "finite-difference check of end-to-end model gradients");
    gradc->add_option("--variants", gc_variants);
    gradc->add_option("--d-model", gc_d)->capture_default_str();
    gradc->add_option("--context", gc_ctx)->capture_default_str();
    gradc->add_option("--batch", gc_batch)->capture_default_str();
    gradc->add_option("--step", gopt.step)->capture_default_str();
    gradc->add_option("--tolerance", gopt.tolerance)->capture_default_str();
    gradc->add_option("--samples", gopt.samples_per_tensor)->capture_default_str();
    gradc->add_option("--seed", seed)->capture_default_str();

    // param-count
    auto* pcount = app.add_subcommand("param-count", "per-block parameter counts as JSON");
    pcount->add_option("--config", config_path);
    pcount->add_option("--variant", variant);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*featurize) {
            const auto names = physchem::feature_names();
            std::ofstream file;
            if (!feat_out.empty()) file = open_out(feat_out);
            std::ostream& out = feat_out.empty() ? std::cout : file;
            out.precision(17);
            out << "sequence";
            for (const auto& n : names) out << ',' << n;
            out << '\n';
            for (const auto& seq : read_sequences(seq_in)) {
                const auto f = physchem::featurize(seq);
                if (f.degenerate)
                    std::cerr << "warning: " << seq.str() << " is too short for dipeptide/lag features; set to 0\n";
                out << seq.str();
                for (double v : f.combined()) out << ',' << v;
                out << '\n';
            }
        } else if (*pack_emb || *pack_cm) {
            auto records = read_matrix_csv(pack_in);
            if (*pack_cm)
                for (auto& r : records)
                    r = to_record(r.key, ContactMap::from_matrix(r.rows, r.cols, std::span<const float>(r.data)));
            write_store(*pack_cm ? StoreKind::ContactMaps : StoreKind::Embeddings, records, pack_out);
            std::cerr << "packed " << records.size() << " records into " << pack_out << '\n';
        } else if (*split) {
            const auto plan = make_splits(read_pairs(pairs_path), fold_count, seed, valid_fraction);
            open_out(plan_out) << nlohmann::json(plan).dump(1) << '\n';
            for (std::size_t f = 0; f < plan.folds.size(); ++f)
                std::cerr << "fold " << f << ": " << plan.folds[f].train.size() << " train / "
                          << plan.folds[f].valid.size() << " valid / " << plan.folds[f].test.size()
                          << " test epitopes\n";
        } else if (*negs) {
            const auto all = sample_negatives(read_pairs(pairs_path), read_sequences(decoys_path), seed);
            write_pairs(neg_out, all);
            std::cerr << "wrote " << all.size() << " pairs\n";
        } else if (*trainc) {
            const auto config = load_config(config_path, variant);
            const auto pairs = read_pairs(pairs_path);
            const auto plan = load_or_make_plan(plan_path, pairs, fold_count, seed);
            const auto data = partition(pairs, plan, fold);
            std::cerr << config.variant_name() << " fold " << fold << ": " << data.train.size() << " train / "
                      << data.valid.size() << " valid / " << data.test.size() << " test pairs, "
                      << count_parameters(config).total() << " parameters\n";
            FeatureCache cache(config, {maybe_store(emb_path), maybe_store(cmap_path)});
            topt.seed = seed;
            topt.on_metrics = print_epoch;
            auto result = train(config, data, cache, topt);
            const fs::path dir(out_dir);
            fs::create_directories(dir);
            open_out(dir / "metrics.jsonl") << result.report.to_jsonl();
            write_config(config, dir / "config.bin");
            save_checkpoint(result.model, dir / "final.mmck");
            if (result.best_model) save_checkpoint(*result.best_model, dir / "best.mmck");
            for (const auto& b : result.report.best)
                std::cerr << "best " << b.metric << " at epoch " << b.epoch << ": valid " << b.valid << ", test "
                          << (b.test ? std::to_string(*b.test) : "n/a") << '\n';
        } else if (*bench) {
            const auto base = load_config(config_path, variant);
            const auto pairs = read_pairs(pairs_path);
            const auto plan = load_or_make_plan(plan_path, pairs, fold_count, seed);
            if (bench_folds.empty()) {
                bench_folds.resize(plan.fold_count);
                std::iota(bench_folds.begin(), bench_folds.end(), std::size_t{0});
            }
            if (bench_variants.empty())
                for (const auto& v : ModelConfig::benchmark_variants()) bench_variants.push_back(v);
            topt.seed = seed;
            const auto cells = run_benchmark(base, bench_variants, pairs, plan, bench_folds,
                                             {maybe_store(emb_path), maybe_store(cmap_path)}, topt);
            fs::create_directories(out_dir);
            auto out = open_out(fs::path(out_dir) / "benchmark.jsonl");
            std::map<std::string, std::vector<double>> mccs, aucs;
            for (const auto& c : cells) {
                nlohmann::json j{{"variant", c.variant}, {"fold", c.fold}, {"test_mcc", nullptr}, {"test_auc", nullptr}};
                if (c.test_mcc) {
                    j["test_mcc"] = *c.test_mcc;
                    mccs[c.variant].push_back(*c.test_mcc);
                }
                if (c.test_auc) {
                    j["test_auc"] = *c.test_auc;
                    aucs[c.variant].push_back(*c.test_auc);
                }
                out << j.dump() << '\n';
            }
            auto summary = [](const std::vector<double>& v) {
                if (v.empty()) return std::string("n/a");
                const double m = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
                double ss = 0;
                for (double x : v) ss += (x - m) * (x - m);
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.4f +- %.4f", m, v.size() > 1 ? std::sqrt(ss / double(v.size() - 1)) : 0.0);
                return std::string(buf);
            };
            std::printf("%-14s %-20s %-20s\n", "variant", "test MCC", "test AUC");
            for (const auto& v : bench_variants)
                std::printf("%-14s %-20s %-20s\n", v.c_str(), summary(mccs[v]).c_str(), summary(aucs[v]).c_str());
        } else if (*evalc) {
            auto model = load_checkpoint(ckpt_path);
            FeatureCache cache(model.config, {maybe_store(emb_path), maybe_store(cmap_path)});
            const auto report = evaluate_external(model, cache, read_pairs(pairs_path), eval_batch).to_json();
            if (report_out.empty()) std::cout << report.dump(2) << '\n';
            else open_out(report_out) << report.dump(2) << '\n';
        } else if (*gradc) {
            if (gc_variants.empty())
                for (const auto& v : ModelConfig::benchmark_variants()) gc_variants.push_back(v);
            gopt.seed = seed;
            bool ok = true;
            for (const auto& v : gc_variants) {
                ModelConfig c;
                c.d_model = gc_d;
                c.context = gc_ctx;
                c.proj_hidden = gc_d / 2;
                c.ffn_hidden = std::max<std::size_t>(gc_d / 4, 1);
                c.head_hidden = gc_d / 2;
                c.embedding_mode = EmbeddingMode::Mock;
                c = ModelConfig::variant(v, c);
                c.validate();

                rng::Generator gen(seed);
                std::vector<PairExample> pairs;
                for (std::size_t i = 0; i < gc_batch; ++i)
                    pairs.push_back({AaSequence::parse(random_residues(gen, 2, gc_ctx + 2)),
                                     AaSequence::parse(random_residues(gen, 2, gc_ctx + 2)), int(i % 2), {}});
                FeatureCache cache(c, {});
                std::vector<std::size_t> idx(pairs.size());
                std::iota(idx.begin(), idx.end(), std::size_t{0});
                const auto batch = make_batch(cache, pairs, idx);
                auto model = ModelParams::init(c, seed);
                if (c.use_pcf) {
                    fit_pcf_standardizer(model.tcr, batch.tcr.pcf);
                    fit_pcf_standardizer(model.epitope, batch.epitope.pcf);
                }
                auto loss = [&] { return bce_with_logits(forward_logits(model, batch.tcr, batch.epitope, {true, seed}), batch.labels); };
                const auto r = grad_check(loss, model.named_parameters(), gopt);
                ok = ok && r.passed;
                std::printf("%-14s %s  %zu coords  max rel error %.3e\n", v.c_str(), r.passed ? "ok  " : "FAIL",
                            r.coords_checked, double(r.max_rel_error));
            }
            return ok ? 0 : 1;
        } else if (*pcount) {
            const auto c = load_config(config_path, variant);
            const auto n = count_parameters(c);
            const nlohmann::json j{{"variant", c.variant_name()},
                                   {"tcr", counts_json(n.tcr)},
                                   {"epitope", counts_json(n.epitope)},
                                   {"final_projection", n.final_projection},
                                   {"total", n.total()}};
            std::cout << j.dump(2) << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
