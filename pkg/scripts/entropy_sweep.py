"""Block entanglement entropy S(L) at every Fermi level of one family.

    python3 scripts/entropy_sweep.py --family hahn --params a=1.5,b=0.7 --N 16
"""
from __future__ import annotations

import argparse
import csv
import sys

from askey_lattice import families as fam
from askey_lattice import fermion


def parse_params(text: str) -> dict[str, float]:
    out = {}
    for item in filter(None, text.split(",")):
        k, v = item.split("=")
        out[k.strip()] = float(v)
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--family", default="krawtchouk")
    ap.add_argument("--params", default="p=0.5")
    ap.add_argument("--N", type=int, default=16)
    ap.add_argument("--out")
    args = ap.parse_args(argv)

    inst = fam.validate(args.family, parse_params(args.params), args.N)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["K", "mu", "L", "S"])
    for mu in fermion.gap_midpoints(inst):
        K = fermion.fermi_level(inst, mu).K
        for L, S in fermion.entropy_sweep(inst, mu):
            w.writerow([K, "%.17g" % mu, L, "%.17g" % S])
    if args.out:
        fh.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
