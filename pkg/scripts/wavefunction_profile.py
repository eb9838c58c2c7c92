"""Profile of one level: decay slopes, L2 norm and |Psi| on a grid (CSV)."""
import argparse
import csv
import math
import sys

import numpy as np

from mirrorp2.spectral import SpectralConfig, find_levels
from mirrorp2.wavefunction import decay_audit, stitched_profile


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--theta", type=float, default=math.pi / 4)
    ap.add_argument("--index", type=int, default=0)
    ap.add_argument("--out", help="CSV path for x, |Psi| (default: no CSV)")
    args = ap.parse_args()

    p = find_levels(SpectralConfig(theta=args.theta))[args.index]
    rep = decay_audit(p)
    print(f"E = {p.E:.10f}  sigma = {p.sigma:.8f}", file=sys.stderr)
    print(f"slope x<0: {rep.slope_minus:.5f} (expected {rep.expected_minus:.5f}, rel err {rep.rel_err_minus:.1e})", file=sys.stderr)
    print(f"slope x>0: {rep.slope_plus:.5f} (expected {rep.expected_plus:.5f}, rel err {rep.rel_err_plus:.1e})", file=sys.stderr)
    print(f"L2 norm: {rep.l2_norm:.6e}", file=sys.stderr)
    if args.out:
        xs = np.round(np.arange(-8, 8 + 1e-9, 0.05), 10)
        vals = np.abs(stitched_profile(p, xs))
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "abs_psi"])
            w.writerows((float(x), float(v)) for x, v in zip(xs, vals / vals.max()))


if __name__ == "__main__":
    main()
