#!/usr/bin/env python3
"""Freeze reference 88-component feature vectors computed with peptides==0.3.1.

This is the independent oracle for the C++ featurizer. It calls the package
directly and never touches the C++ code. Output: physchem_reference.csv.
"""
import csv
import pathlib
import sys

import peptides

SEQUENCES = [
    "CASSLAPGATNEKLFF",
    "GILGFVFTL",
    "NLVPMVATV",
    "GLCTLVAML",
    "KLGGALQAK",
    "YLQPRTFLL",
    "CASSIRSSYEQYF",
    "CASSPDRGGYTF",
    "CSARDRTGNGYTF",
    "FLPVLAGLTPSIVPKLVCLLTKKC",
    "QWGRRCCGWGPGRRYCVRWC",
    "SDKEVDEVDAALSDLEITLE",
    "EGVNDNECEGFFSAR",
    "KRKRKRHHHDDEEEY",
    "WY",
    "AAAAA",
    "MW",
    "CASSQDRDTQYF",
    "ACDEFGHIKLMNPQRSTVWY",
    "CAWSVGQGNTEAFF",
]

DESCRIPTOR_PREFIXES = [
    ("BLOSUM", 10), ("PP", 3), ("F", 6), ("KF", 10), ("MSWHIM", 3), ("E", 5),
    ("ProtFP", 8), ("SV", 4), ("ST", 8), ("T", 5), ("VHSE", 8), ("Z", 5),
]
PROPERTY_NAMES = [
    "aliphatic_index", "autocorrelation", "autocovariance", "boman", "charge",
    "hydrophobic_moment_alpha", "hydrophobic_moment_beta", "hydrophobicity",
    "instability_index", "isoelectric_point", "mass_shift", "molecular_weight",
    "mz",
]


def features(seq):
    p = peptides.Peptide(seq)
    d = p.descriptors()
    out = [d[f"{pre}{i + 1}"] for pre, n in DESCRIPTOR_PREFIXES for i in range(n)]
    eisenberg = peptides.tables.HYDROPHOBICITY["Eisenberg"]
    out += [
        p.aliphatic_index(),
        p.auto_correlation(eisenberg, lag=1),
        p.auto_covariance(eisenberg, lag=1),
        p.boman(),
        p.charge(pH=7.0, pKscale="Lehninger"),
        p.hydrophobic_moment(window=11, angle=100),
        p.hydrophobic_moment(window=11, angle=160),
        p.hydrophobicity(),
        p.instability_index(),
        p.isoelectric_point(pKscale="Lehninger"),
        p.mass_shift(),
        p.molecular_weight(),
        p.mz(),
    ]
    return [float(x) for x in out]


def main():
    out = pathlib.Path(sys.argv[1] if len(sys.argv) > 1 else
                       pathlib.Path(__file__).with_name("physchem_reference.csv"))
    header = ["sequence"]
    header += [f"{pre}{i + 1}" for pre, n in DESCRIPTOR_PREFIXES for i in range(n)]
    header += PROPERTY_NAMES
    assert len(header) == 89
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for s in SEQUENCES:
            w.writerow([s] + [repr(v) for v in features(s)])


if __name__ == "__main__":
    main()
