#!/usr/bin/env python3
"""Export the residue lookup tables from the `peptides` package into data/.

Requires peptides==0.3.1 on the import path (pip install peptides==0.3.1).
The generated CSVs are committed; rerun only to refresh them.
"""
import argparse
import csv
import pathlib

import peptides

AA = "ACDEFGHIKLMNPQRSTVWY"

# (file stem, table attribute, column prefix, dims), in canonical order.
DESCRIPTOR_SETS = [
    ("blosum", "BLOSUM", "BLOSUM", 10),
    ("cruciani", "CRUCIANI", "PP", 3),
    ("fasgai", "FASGAI", "F", 6),
    ("kidera", "KIDERA", "KF", 10),
    ("mswhim", "MSWHIM", "MSWHIM", 3),
    ("pcp", "PCP_DESCRIPTORS", "E", 5),
    ("protfp", "PROTFP", "ProtFP", 8),
    ("sneath", "SNEATH", "SV", 4),
    ("st_scales", "ST_SCALES", "ST", 8),
    ("t_scales", "T_SCALES", "T", 5),
    ("vhse", "VHSE", "VHSE", 8),
    ("z_scales", "Z_SCALES", "Z", 5),
]


def write(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out", type=pathlib.Path)
    args = ap.parse_args()
    t = peptides.tables
    (args.out / "descriptors").mkdir(parents=True, exist_ok=True)

    for stem, attr, prefix, dims in DESCRIPTOR_SETS:
        table = getattr(t, attr)
        cols = [f"{prefix}{i + 1}" for i in range(dims)]
        assert sorted(cols) == sorted(table.keys()), (stem, table.keys())
        rows = [[aa] + [repr(table[c][aa]) for c in cols] for aa in AA]
        write(args.out / "descriptors" / f"{stem}.csv", ["aa"] + cols, rows)

    for name, stem in [("Eisenberg", "eisenberg"), ("KyteDoolittle", "kyte_doolittle")]:
        h = t.HYDROPHOBICITY[name]
        write(args.out / f"hydrophobicity_{stem}.csv", ["aa", "value"],
              [[aa, repr(h[aa])] for aa in AA])

    # Proline is absent from the package table and counts as 0.0 there.
    write(args.out / "boman.csv", ["aa", "value"],
          [[aa, repr(float(t.BOMAN["Boman"].get(aa, 0.0)))] for aa in AA])

    pk = t.PK["Lehninger"]
    sign = t.CHARGE["sign"]
    rows = [[aa, repr(pk[aa]), repr(sign[aa])] for aa in AA if aa in pk]
    rows.append(["nTer", repr(pk["nTer"]), "1.0"])
    rows.append(["cTer", repr(pk["cTer"]), "-1.0"])
    write(args.out / "pka_lehninger.csv", ["aa", "pka", "sign"], rows)

    # Dipeptides absent from the package table default to 1.0 there too.
    diwv = t.INSTABILITY["Guruprasad"]
    write(args.out / "instability_guruprasad.csv", ["aa"] + list(AA),
          [[a] + [repr(float(diwv.get(a + b, 1.0))) for b in AA] for a in AA])

    avg = t.MOLECULAR_WEIGHT["expasy"]
    mono = t.MOLECULAR_WEIGHT["monoisotopic"]
    rows = [[aa, repr(avg[aa]), repr(mono[aa])] for aa in AA]
    rows.append(["H2O", repr(avg["H2O"]), repr(mono["H2O"])])
    write(args.out / "residue_mass.csv", ["aa", "average", "monoisotopic"], rows)

    shift = t.MASS_SHIFT["silac_13c"]
    write(args.out / "mass_shift_silac_13c.csv", ["aa", "shift"],
          [[aa, repr(float(shift.get(aa, 0.0)))] for aa in AA])


if __name__ == "__main__":
    main()
