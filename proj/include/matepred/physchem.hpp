#pragma once

#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "matepred/csv.hpp"
#include "matepred/errors.hpp"
#include "matepred/sequence.hpp"

#ifndef MATEPRED_DATA_DIR
#define MATEPRED_DATA_DIR "data"
#endif

namespace matepred::physchem {

inline constexpr std::size_t kDescriptorDims = 75;
inline constexpr std::size_t kPropertyDims = 13;
inline constexpr std::size_t kFeatureDims = kDescriptorDims + kPropertyDims;

using ResidueScale = std::array<double, kNumResidues>;

/// One per-residue descriptor set (e.g. Kidera factors).
struct DescriptorTable {
    std::string name;
    std::vector<std::string> columns;
    std::array<std::vector<double>, kNumResidues> rows;

    std::size_t dims() const noexcept { return columns.size(); }
    const std::vector<double>& row(char aa) const { return rows[residue_index(aa)]; }
};

struct DescriptorSpec {
    const char* file;
    std::size_t dims;
};

/// Canonical descriptor-set order and widths; widths sum to 75.
inline constexpr std::array<DescriptorSpec, 12> kDescriptorSets{{
    {"blosum", 10}, {"cruciani", 3}, {"fasgai", 6}, {"kidera", 10},
    {"mswhim", 3},  {"pcp", 5},      {"protfp", 8}, {"sneath", 4},
    {"st_scales", 8}, {"t_scales", 5}, {"vhse", 8}, {"z_scales", 5},
}};

inline constexpr std::array<const char*, kPropertyDims> kPropertyNames{
    "aliphatic_index",          "autocorrelation",         "autocovariance",
    "boman",                    "charge",                  "hydrophobic_moment_alpha",
    "hydrophobic_moment_beta",  "hydrophobicity",          "instability_index",
    "isoelectric_point",        "mass_shift",              "molecular_weight",
    "mz",
};

/// Every lookup table the featurizer needs. Immutable after load.
struct Tables {
    std::vector<DescriptorTable> descriptor_sets;
    ResidueScale eisenberg{};
    ResidueScale kyte_doolittle{};
    ResidueScale boman{};
    ResidueScale pka{};
    ResidueScale charge_sign{};
    double pka_n_term = 0.0;
    double pka_c_term = 0.0;
    std::array<ResidueScale, kNumResidues> instability{};
    ResidueScale average_mass{};
    ResidueScale monoisotopic_mass{};
    double water_average = 0.0;
    double water_monoisotopic = 0.0;
    ResidueScale mass_shift{};

    static Tables load(const std::filesystem::path& dir);

    /// Process-wide tables from $MATEPRED_DATA_DIR or the build-time data dir.
    static const Tables& shared() {
        static const Tables t = [] {
            const char* env = std::getenv("MATEPRED_DATA_DIR");
            return load(env && *env ? std::filesystem::path(env)
                                    : std::filesystem::path(MATEPRED_DATA_DIR));
        }();
        return t;
    }
};

namespace detail {

inline int row_residue(const std::vector<std::string>& row, const std::filesystem::path& file) {
    const int idx = row.empty() || row[0].size() != 1 ? -1 : residue_index(row[0][0]);
    if (idx < 0) throw ParseError(file.string() + ": bad residue key");
    return idx;
}

inline ResidueScale load_scale(const std::filesystem::path& file, const char* column) {
    const auto t = csv::read(file);
    const int col = t.column(column);
    if (col < 0) throw ParseError(file.string() + ": missing column " + column);
    ResidueScale out{};
    std::array<bool, kNumResidues> seen{};
    for (const auto& row : t.rows) {
        const int idx = row_residue(row, file);
        out[idx] = csv::to_double(row.at(col));
        seen[idx] = true;
    }
    for (bool s : seen)
        if (!s) throw ParseError(file.string() + ": incomplete residue table");
    return out;
}

} // namespace detail

inline Tables Tables::load(const std::filesystem::path& dir) {
    Tables t;
    for (const auto& spec : kDescriptorSets) {
        const auto file = dir / "descriptors" / (std::string(spec.file) + ".csv");
        const auto csvt = csv::read(file);
        DescriptorTable table;
        table.name = spec.file;
        table.columns.assign(csvt.header.begin() + 1, csvt.header.end());
        if (table.dims() != spec.dims)
            throw ParseError(file.string() + ": expected " + std::to_string(spec.dims) + " dims");
        std::size_t count = 0;
        for (const auto& row : csvt.rows) {
            const int idx = detail::row_residue(row, file);
            if (row.size() != spec.dims + 1) throw ParseError(file.string() + ": ragged row");
            auto& dst = table.rows[idx];
            dst.clear();
            for (std::size_t j = 1; j < row.size(); ++j) dst.push_back(csv::to_double(row[j]));
            ++count;
        }
        for (const auto& r : table.rows)
            if (r.size() != spec.dims || count != kNumResidues)
                throw ParseError(file.string() + ": incomplete residue table");
        t.descriptor_sets.push_back(std::move(table));
    }

    t.eisenberg = detail::load_scale(dir / "hydrophobicity_eisenberg.csv", "value");
    t.kyte_doolittle = detail::load_scale(dir / "hydrophobicity_kyte_doolittle.csv", "value");
    t.boman = detail::load_scale(dir / "boman.csv", "value");
    t.mass_shift = detail::load_scale(dir / "mass_shift_silac_13c.csv", "shift");

    {
        const auto file = dir / "pka_lehninger.csv";
        const auto csvt = csv::read(file);
        for (const auto& row : csvt.rows) {
            const double pka = csv::to_double(row.at(1));
            if (row[0] == "nTer") {
                t.pka_n_term = pka;
            } else if (row[0] == "cTer") {
                t.pka_c_term = pka;
            } else {
                const int idx = detail::row_residue(row, file);
                t.pka[idx] = pka;
                t.charge_sign[idx] = csv::to_double(row.at(2));
            }
        }
    }
    {
        const auto file = dir / "instability_guruprasad.csv";
        const auto csvt = csv::read(file);
        std::array<int, kNumResidues> col_of{};
        for (std::size_t j = 1; j < csvt.header.size(); ++j) {
            const int idx = csvt.header[j].size() == 1 ? residue_index(csvt.header[j][0]) : -1;
            if (idx < 0) throw ParseError(file.string() + ": bad header");
            col_of[idx] = static_cast<int>(j);
        }
        for (const auto& row : csvt.rows) {
            const int a = detail::row_residue(row, file);
            for (std::size_t b = 0; b < kNumResidues; ++b)
                t.instability[a][b] = csv::to_double(row.at(col_of[b]));
        }
    }
    {
        const auto file = dir / "residue_mass.csv";
        const auto csvt = csv::read(file);
        for (const auto& row : csvt.rows) {
            const double avg = csv::to_double(row.at(1));
            const double mono = csv::to_double(row.at(2));
            if (row[0] == "H2O") {
                t.water_average = avg;
                t.water_monoisotopic = mono;
            } else {
                const int idx = detail::row_residue(row, file);
                t.average_mass[idx] = avg;
                t.monoisotopic_mass[idx] = mono;
            }
        }
    }
    return t;
}

/// Per-residue arithmetic mean of the table rows.
inline std::vector<double> descriptor_summary(const AaSequence& seq, const DescriptorTable& table) {
    std::vector<double> sum(table.dims(), 0.0);
    for (char aa : seq) {
        const auto& row = table.row(aa);
        for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += row[j];
    }
    for (auto& v : sum) v /= static_cast<double>(seq.size());
    return sum;
}

/// Net charge by Henderson-Hasselbalch over side chains and both termini.
inline double charge(const AaSequence& seq, double ph, const Tables& t = Tables::shared()) {
    double q = 0.0;
    for (char aa : seq) {
        const int i = residue_index(aa);
        const double sign = t.charge_sign[i];
        if (sign == 0.0) continue;
        q += sign / (1.0 + std::pow(10.0, sign * (ph - t.pka[i])));
    }
    q += 1.0 / (1.0 + std::pow(10.0, ph - t.pka_n_term));
    q -= 1.0 / (1.0 + std::pow(10.0, t.pka_c_term - ph));
    return q;
}

/// Bisection on [0, 14] to 1e-6 absolute, at most 100 halvings.
inline double isoelectric_point(const AaSequence& seq, const Tables& t = Tables::shared()) {
    double lo = 0.0, hi = 14.0, x = 7.0;
    for (int it = 0; it < 100 && hi - lo > 1e-6; ++it) {
        x = 0.5 * (lo + hi);
        const double c = charge(seq, x, t);
        if (c >= 0.0) lo = x;
        if (c <= 0.0) hi = x;
    }
    return x;
}

inline double aliphatic_index(const AaSequence& seq) {
    double a = 0, v = 0, li = 0;
    for (char aa : seq) {
        if (aa == 'A') a += 1;
        else if (aa == 'V') v += 1;
        else if (aa == 'L' || aa == 'I') li += 1;
    }
    const double n = static_cast<double>(seq.size());
    return (a / n + 2.9 * v / n + 3.9 * li / n) * 100.0;
}

namespace detail {

inline ResidueScale standardized(const ResidueScale& s) {
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= kNumResidues;
    double ss = 0.0;
    for (double v : s) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (kNumResidues - 1));
    ResidueScale out{};
    for (std::size_t i = 0; i < kNumResidues; ++i) out[i] = (s[i] - mean) / sd;
    return out;
}

inline double scale_mean(const AaSequence& seq, const ResidueScale& s) {
    double sum = 0.0;
    for (char aa : seq) sum += s[residue_index(aa)];
    return sum / static_cast<double>(seq.size());
}

} // namespace detail

/// Lag-1 Cruciani autocorrelation on the standardized scale; 0 below length 2.
inline double autocorrelation(const AaSequence& seq, const ResidueScale& scale) {
    if (seq.size() < 2) return 0.0;
    const auto z = detail::standardized(scale);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
        const double a = z[residue_index(seq[i])];
        num += a * z[residue_index(seq[i + 1])];
        den += a * a;
    }
    return den == 0.0 ? 0.0 : num / den;
}

inline double autocovariance(const AaSequence& seq, const ResidueScale& scale) {
    if (seq.size() < 2) return 0.0;
    const auto z = detail::standardized(scale);
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < seq.size(); ++i)
        s += z[residue_index(seq[i])] * z[residue_index(seq[i + 1])];
    return s / static_cast<double>(seq.size());
}

/// Maximal windowed hydrophobic moment (Eisenberg) at the given rotation angle.
inline double hydrophobic_moment(const AaSequence& seq, const ResidueScale& scale,
                                 int angle_degrees, std::size_t window = 11) {
    window = std::min(window, seq.size());
    std::vector<double> sn(window), cs(window);
    for (std::size_t i = 0; i < window; ++i) {
        const double theta = static_cast<double>((angle_degrees * static_cast<long>(i)) % 360) *
                             std::numbers::pi / 180.0;
        sn[i] = std::sin(theta);
        cs[i] = std::cos(theta);
    }
    double best = 0.0;
    for (std::size_t start = 0; start + window <= seq.size(); ++start) {
        double s = 0.0, c = 0.0;
        for (std::size_t k = 0; k < window; ++k) {
            const double h = scale[residue_index(seq[start + k])];
            s += h * sn[k];
            c += h * cs[k];
        }
        best = std::max(best, s * s + c * c);
    }
    return std::sqrt(best) / static_cast<double>(window);
}

/// Guruprasad DIWV instability index; 0 for single residues.
inline double instability_index(const AaSequence& seq, const Tables& t = Tables::shared()) {
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < seq.size(); ++i)
        sum += t.instability[residue_index(seq[i])][residue_index(seq[i + 1])];
    return sum * 10.0 / static_cast<double>(seq.size());
}

/// Average molecular weight in Da (residue masses plus one water).
inline double molecular_weight(const AaSequence& seq, const Tables& t = Tables::shared()) {
    double m = t.water_average;
    for (char aa : seq) m += t.average_mass[residue_index(aa)];
    return m;
}

inline double mass_shift(const AaSequence& seq, const Tables& t = Tables::shared()) {
    double m = 0.0;
    for (char aa : seq) m += t.mass_shift[residue_index(aa)];
    return m;
}

/// Monoisotopic m/z at charge 2 with carbamidomethylated cysteines.
inline double mass_over_charge(const AaSequence& seq, const Tables& t = Tables::shared()) {
    constexpr double kCysteineShift = 57.021464;
    constexpr double kProton = 1.007276;
    constexpr int kCharge = 2;
    double m = t.water_monoisotopic;
    for (char aa : seq) {
        m += t.monoisotopic_mass[residue_index(aa)];
        if (aa == 'C') m += kCysteineShift;
    }
    return (m + kCharge * kProton) / kCharge;
}

struct GlobalProperties {
    std::array<double, kPropertyDims> values{};
    /// Set when lag/dipeptide terms were zeroed because the sequence is too short.
    bool degenerate = false;
};

inline GlobalProperties global_properties(const AaSequence& seq, double ph = 7.0,
                                          const Tables& t = Tables::shared()) {
    if (!(ph > 0.0 && ph < 14.0)) throw InvalidArgument("pH must lie in (0, 14)");
    GlobalProperties g;
    g.degenerate = seq.size() < 2;
    g.values = {
        aliphatic_index(seq),
        autocorrelation(seq, t.eisenberg),
        autocovariance(seq, t.eisenberg),
        -detail::scale_mean(seq, t.boman),
        charge(seq, ph, t),
        hydrophobic_moment(seq, t.eisenberg, 100),
        hydrophobic_moment(seq, t.eisenberg, 160),
        detail::scale_mean(seq, t.kyte_doolittle),
        instability_index(seq, t),
        isoelectric_point(seq, t),
        mass_shift(seq, t),
        molecular_weight(seq, t),
        mass_over_charge(seq, t),
    };
    return g;
}

/// 88-component physicochemical modality: 75 descriptor means then 13 properties.
struct LigandFeatures {
    std::array<double, kDescriptorDims> descriptor_part{};
    std::array<double, kPropertyDims> property_part{};
    bool degenerate = false;

    std::array<double, kFeatureDims> combined() const {
        std::array<double, kFeatureDims> out{};
        std::copy(descriptor_part.begin(), descriptor_part.end(), out.begin());
        std::copy(property_part.begin(), property_part.end(), out.begin() + kDescriptorDims);
        return out;
    }
};

inline LigandFeatures featurize(const AaSequence& seq, double ph = 7.0,
                                const Tables& t = Tables::shared()) {
    LigandFeatures f;
    std::size_t k = 0;
    for (const auto& table : t.descriptor_sets)
        for (double v : descriptor_summary(seq, table)) f.descriptor_part[k++] = v;
    const auto g = global_properties(seq, ph, t);
    f.property_part = g.values;
    f.degenerate = g.degenerate;
    return f;
}

/// Column names in output order (descriptor columns as in the table files).
inline std::vector<std::string> feature_names(const Tables& t = Tables::shared()) {
    std::vector<std::string> names;
    for (const auto& table : t.descriptor_sets)
        names.insert(names.end(), table.columns.begin(), table.columns.end());
    for (const char* p : kPropertyNames) names.emplace_back(p);
    return names;
}

} // namespace matepred::physchem
