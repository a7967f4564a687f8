#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "matepred/csv.hpp"
#include "matepred/physchem.hpp"
#include "support/synthetic.hpp"

using namespace matepred;
using namespace matepred::physchem;

namespace {

bool close_rel(double got, double want, double rel) {
    return std::abs(got - want) <= rel * std::max(1.0, std::abs(want));
}

} // namespace

TEST(Physchem, DescriptorDimsMatchTables) {
    const auto& t = Tables::shared();
    ASSERT_EQ(t.descriptor_sets.size(), 12u);
    const std::array<std::size_t, 12> dims{10, 3, 6, 10, 3, 5, 8, 4, 8, 5, 8, 5};
    std::size_t total = 0;
    for (std::size_t k = 0; k < 12; ++k) {
        EXPECT_EQ(t.descriptor_sets[k].dims(), dims[k]) << t.descriptor_sets[k].name;
        total += t.descriptor_sets[k].dims();
    }
    EXPECT_EQ(total, kDescriptorDims);
    EXPECT_EQ(feature_names().size(), kFeatureDims);
}

TEST(Physchem, FixtureMatchesReference) {
    const auto table = csv::read(std::string(MATEPRED_FIXTURE_DIR) + "/physchem_reference.csv");
    ASSERT_EQ(table.rows.size(), 20u);
    ASSERT_EQ(table.header.size(), 1 + kFeatureDims);
    const auto names = feature_names();
    for (std::size_t j = 0; j < kFeatureDims; ++j) EXPECT_EQ(names[j], table.header[j + 1]);
    for (const auto& row : table.rows) {
        const auto f = featurize(parse_sequence(row[0])).combined();
        for (std::size_t j = 0; j < kFeatureDims; ++j) {
            const double want = csv::to_double(row[j + 1]);
            EXPECT_TRUE(close_rel(f[j], want, 1e-6))
                << row[0] << " " << table.header[j + 1] << ": got " << f[j] << " want " << want;
        }
    }
}

TEST(Physchem, HomopolymerAliphaticIndex) {
    EXPECT_DOUBLE_EQ(aliphatic_index(parse_sequence("AAAAA")), 100.0);
}

TEST(Physchem, GlycineMolecularWeight) {
    EXPECT_NEAR(molecular_weight(parse_sequence("G")), 75.07, 0.01);
}

TEST(Physchem, DescriptorMeanOfAllResiduesIsColumnMean) {
    const auto& t = Tables::shared();
    const auto all = parse_sequence(kAlphabet);
    for (const auto& table : t.descriptor_sets) {
        const auto got = descriptor_summary(all, table);
        for (std::size_t d = 0; d < table.dims(); ++d) {
            double mean = 0.0;
            for (std::size_t r = 0; r < kNumResidues; ++r) mean += table.rows[r][d];
            EXPECT_NEAR(got[d], mean / 20.0, 1e-12) << table.name << d;
        }
    }
}

TEST(Physchem, HomopolymerDescriptorEqualsRow) {
    const auto& t = Tables::shared();
    for (std::size_t r = 0; r < kNumResidues; ++r) {
        const char aa = kAlphabet[r];
        for (std::size_t len : {1u, 2u, 7u}) {
            const auto f = featurize(parse_sequence(std::string(len, aa)));
            std::size_t k = 0;
            for (const auto& table : t.descriptor_sets)
                for (std::size_t d = 0; d < table.dims(); ++d, ++k)
                    ASSERT_NEAR(f.descriptor_part[k], table.rows[r][d], 1e-12) << aa << " " << table.name;
        }
    }
}

TEST(Physchem, LengthOneIsDegenerateButFinite) {
    const auto g = global_properties(parse_sequence("W"));
    EXPECT_TRUE(g.degenerate);
    EXPECT_EQ(g.values[1], 0.0);  // autocorrelation
    EXPECT_EQ(g.values[2], 0.0);  // autocovariance
    EXPECT_EQ(g.values[8], 0.0);  // instability
    for (double v : g.values) EXPECT_TRUE(std::isfinite(v));
    EXPECT_FALSE(global_properties(parse_sequence("WY")).degenerate);
}

TEST(Physchem, RejectsOutOfRangePh) {
    EXPECT_THROW(global_properties(parse_sequence("AC"), 0.0), InvalidArgument);
    EXPECT_THROW(global_properties(parse_sequence("AC"), 14.0), InvalidArgument);
}

TEST(PhyschemProperty, IsoelectricPointZeroesCharge) {
    const auto table = csv::read(std::string(MATEPRED_FIXTURE_DIR) + "/physchem_reference.csv");
    for (const auto& row : table.rows) {
        const auto s = parse_sequence(row[0]);
        EXPECT_LT(std::abs(charge(s, isoelectric_point(s))), 1e-4) << row[0];
    }
}

TEST(PhyschemProperty, ChargeNonIncreasingInPh) {
    const auto table = csv::read(std::string(MATEPRED_FIXTURE_DIR) + "/physchem_reference.csv");
    for (const auto& row : table.rows) {
        const auto s = parse_sequence(row[0]);
        double prev = charge(s, 0.05);
        for (double ph = 0.1; ph < 14.0; ph += 0.05) {
            const double q = charge(s, ph);
            ASSERT_LE(q, prev + 1e-12) << row[0] << " at pH " << ph;
            prev = q;
        }
    }
}

TEST(PhyschemProperty, CompositionOnlyPropertiesIgnoreOrder) {
    rng::Generator gen(17);
    for (std::size_t r = 0; r < kNumResidues; ++r) {
        for (int trial = 0; trial < 20; ++trial) {
            std::string s = synth::random_residues(gen, 2, 24) + kAlphabet[r];
            std::vector<char> letters(s.begin(), s.end());
            gen.shuffle(letters);
            const auto a = parse_sequence(s);
            const auto b = parse_sequence(std::string(letters.begin(), letters.end()));
            EXPECT_NEAR(molecular_weight(a), molecular_weight(b), 1e-9);
            EXPECT_NEAR(charge(a, 7.0), charge(b, 7.0), 1e-12);
            EXPECT_NEAR(aliphatic_index(a), aliphatic_index(b), 1e-9);
            EXPECT_NEAR(global_properties(a).values[7], global_properties(b).values[7], 1e-12);  // hydrophobicity
        }
    }
}

TEST(PhyschemProperty, FeaturesFiniteAndSized) {
    rng::Generator gen(5);
    for (int trial = 0; trial < 300; ++trial) {
        const auto f = featurize(parse_sequence(synth::random_residues(gen, 1, 30))).combined();
        ASSERT_EQ(f.size(), kFeatureDims);
        for (double v : f) ASSERT_TRUE(std::isfinite(v));
    }
}
