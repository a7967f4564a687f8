#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "matepred/csv.hpp"
#include "matepred/errors.hpp"
#include "matepred/rng.hpp"
#include "matepred/sequence.hpp"

namespace matepred {

struct PairExample {
    AaSequence epitope;
    AaSequence tcr;
    int label = 1;
    /// Optional stratum (e.g. MHC class) used for per-class reporting.
    std::string group;

    friend bool operator==(const PairExample&, const PairExample&) = default;
};

/// Reads `epitope,tcr,label[,class]` with a header row. Column order is free.
inline std::vector<PairExample> read_pairs(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    const int ce = table.column("epitope"), ct = table.column("tcr"), cl = table.column("label");
    int cg = table.column("class");
    if (cg < 0) cg = table.column("mhc_class");
    if (ce < 0 || ct < 0 || cl < 0) throw ParseError(path.string() + ": need epitope, tcr and label columns");
    std::vector<PairExample> out;
    out.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const auto where = path.string() + " row " + std::to_string(r + 2);
        if (row.size() != table.header.size()) throw ParseError(where + ": wrong field count");
        const auto label = csv::to_int(row[cl]);
        if (label != 0 && label != 1) throw ParseError(where + ": label must be 0 or 1");
        out.push_back({AaSequence::parse(row[ce]), AaSequence::parse(row[ct]), static_cast<int>(label),
                       cg >= 0 ? row[cg] : std::string{}});
    }
    return out;
}

inline void write_pairs(const std::filesystem::path& path, const std::vector<PairExample>& pairs) {
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot open " + path.string() + " for writing");
    const bool grouped = std::any_of(pairs.begin(), pairs.end(), [](const auto& p) { return !p.group.empty(); });
    out << "epitope,tcr,label" << (grouped ? ",class" : "") << '\n';
    for (const auto& p : pairs) {
        out << p.epitope.str() << ',' << p.tcr.str() << ',' << p.label;
        if (grouped) out << ',' << p.group;
        out << '\n';
    }
    if (!out) throw IoFailure("write failed: " + path.string());
}

/// One sequence per line; a leading header line (non-residue text) is skipped.
inline std::vector<AaSequence> read_sequences(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open " + path.string());
    std::vector<AaSequence> out;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        const auto field = csv::split_line(line).front();
        if (field.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (first) {
            first = false;
            if (field == "tcr" || field == "sequence" || field == "cdr3") continue;
        }
        out.push_back(AaSequence::parse(field));
    }
    return out;
}

inline constexpr std::size_t kMaxDecoyRedraws = 100;

/// Balances a positive set: each positive gains one negative with the same
/// epitope and a decoy TCR that never forms a known positive pair.
/// Output is the positives followed by their negatives, in input order.
inline std::vector<PairExample> sample_negatives(const std::vector<PairExample>& positives,
                                                 const std::vector<AaSequence>& decoys, std::uint64_t seed) {
    if (decoys.empty()) throw InvalidArgument("decoy pool is empty");
    std::set<std::pair<std::string, std::string>> known;
    for (const auto& p : positives) {
        if (p.label != 1) throw InvalidArgument("sample_negatives expects only positive pairs");
        known.emplace(p.epitope.str(), p.tcr.str());
    }
    rng::Generator gen(rng::hash_keys(seed, 0x4E45ull, 0, 0));
    std::vector<PairExample> out = positives;
    out.reserve(2 * positives.size());
    for (const auto& p : positives) {
        std::size_t redraws = 0;
        while (true) {
            const auto& decoy = decoys[gen.below(decoys.size())];
            if (!known.contains({p.epitope.str(), decoy.str()})) {
                out.push_back({p.epitope, decoy, 0, p.group});
                break;
            }
            if (++redraws > kMaxDecoyRedraws)
                throw ExhaustedDecoys("no non-colliding decoy for epitope " + p.epitope.str());
        }
    }
    return out;
}

struct FoldSets {
    std::vector<std::string> train, valid, test;
};

/// Epitope-level k-fold plan: fold i tests on its own epitopes and trains /
/// validates on a 90/10 split of the rest.
struct SplitPlan {
    std::size_t fold_count = 0;
    std::map<std::string, std::size_t> assignments;
    std::vector<FoldSets> folds;
};

inline void to_json(nlohmann::json& j, const FoldSets& f) {
    j = {{"train", f.train}, {"valid", f.valid}, {"test", f.test}};
}
inline void from_json(const nlohmann::json& j, FoldSets& f) {
    j.at("train").get_to(f.train);
    j.at("valid").get_to(f.valid);
    j.at("test").get_to(f.test);
}
inline void to_json(nlohmann::json& j, const SplitPlan& p) {
    j = {{"fold_count", p.fold_count}, {"assignments", p.assignments}, {"folds", p.folds}};
}
inline void from_json(const nlohmann::json& j, SplitPlan& p) {
    j.at("fold_count").get_to(p.fold_count);
    j.at("assignments").get_to(p.assignments);
    j.at("folds").get_to(p.folds);
}

inline SplitPlan make_splits(const std::vector<PairExample>& examples, std::size_t fold_count, std::uint64_t seed,
                             double valid_fraction = 0.1) {
    if (fold_count == 0) throw InvalidArgument("fold_count must be >= 1");
    if (!(valid_fraction >= 0.0 && valid_fraction < 1.0)) throw InvalidArgument("valid_fraction must lie in [0, 1)");
    std::set<std::string> unique;
    for (const auto& e : examples) unique.insert(e.epitope.str());
    if (unique.size() < fold_count)
        throw TooFewEpitopes(std::to_string(unique.size()) + " epitopes for " + std::to_string(fold_count) +
                             " folds");
    std::vector<std::string> epitopes(unique.begin(), unique.end());
    rng::Generator gen(rng::hash_keys(seed, 0x5350ull, 0, 0));
    gen.shuffle(epitopes);

    SplitPlan plan;
    plan.fold_count = fold_count;
    for (std::size_t k = 0; k < epitopes.size(); ++k) plan.assignments[epitopes[k]] = k % fold_count;
    for (std::size_t f = 0; f < fold_count; ++f) {
        FoldSets sets;
        std::vector<std::string> rest;
        for (std::size_t k = 0; k < epitopes.size(); ++k)
            (k % fold_count == f ? sets.test : rest).push_back(epitopes[k]);
        rng::Generator fold_gen(rng::hash_keys(seed, 0x5350ull, f + 1, 0));
        fold_gen.shuffle(rest);
        std::size_t n_valid = 0;
        if (rest.size() >= 2 && valid_fraction > 0.0)
            n_valid = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                   std::llround(valid_fraction * static_cast<double>(rest.size()))));
        sets.valid.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n_valid));
        sets.train.assign(rest.begin() + static_cast<std::ptrdiff_t>(n_valid), rest.end());
        std::sort(sets.train.begin(), sets.train.end());
        std::sort(sets.valid.begin(), sets.valid.end());
        std::sort(sets.test.begin(), sets.test.end());
        plan.folds.push_back(std::move(sets));
    }
    return plan;
}

struct FoldData {
    std::vector<PairExample> train, valid, test;
};

/// Routes every pair to the part its epitope belongs to in the given fold.
inline FoldData partition(const std::vector<PairExample>& examples, const SplitPlan& plan, std::size_t fold) {
    if (fold >= plan.folds.size()) throw InvalidArgument("fold " + std::to_string(fold) + " out of range");
    const auto& sets = plan.folds[fold];
    auto in = [](const std::vector<std::string>& v, const std::string& s) {
        return std::binary_search(v.begin(), v.end(), s);
    };
    FoldData out;
    for (const auto& e : examples) {
        const auto& key = e.epitope.str();
        if (in(sets.test, key)) out.test.push_back(e);
        else if (in(sets.valid, key)) out.valid.push_back(e);
        else if (in(sets.train, key)) out.train.push_back(e);
    }
    return out;
}

} // namespace matepred
