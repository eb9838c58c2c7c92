"""Scan for levels and print a short table; optionally write the JSON records."""
import argparse
import json
import math

from mirrorp2.cli import point_record
from mirrorp2.spectral import SpectralConfig, find_levels


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--theta", type=float, default=math.pi / 4)
    ap.add_argument("--zeta", type=float, default=0.0)
    ap.add_argument("--e-radius", type=float, default=300.0)
    ap.add_argument("--out")
    args = ap.parse_args()

    levels = find_levels(SpectralConfig(theta=args.theta, zeta=args.zeta, e_radius=args.e_radius))
    print(f"{'k':>2} {'sigma':>12} {'Re E':>14} {'Im E':>14} {'quant':>9} {'schr':>9}")
    for k, p in enumerate(levels):
        r = p.residuals
        print(f"{k:2d} {p.sigma:12.8f} {p.E.real:14.8f} {p.E.imag:14.8f} {r['quantization']:9.1e} {max(r['schrodinger_b'], r['schrodinger_bbar']):9.1e}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump([point_record(p) for p in levels], fh, indent=2, sort_keys=True)


if __name__ == "__main__":
    main()
