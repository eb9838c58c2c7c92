"""Follow the lowest levels across several zeta values and report how far E moves."""
import argparse
import math

from mirrorp2.spectral import SpectralConfig, zeta_independence_audit


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--theta", type=float, default=math.pi / 4)
    ap.add_argument("--zetas", type=float, nargs="+", default=[0.0, 0.1, 0.2, 0.3])
    ap.add_argument("--levels", type=int, default=3)
    args = ap.parse_args()

    cfg = SpectralConfig(theta=args.theta)
    for k in range(args.levels):
        a = zeta_independence_audit(cfg, args.zetas, level_index=k)
        print(f"level {k}: E spread {a.spread:.2e}  tracking {a.tracking_ok}")
        for row in a.per_zeta:
            E = row["E"]
            print(f"    zeta {row['zeta']:+.3f}  sigma {row['sigma']:.8f}  E {E.real:+.10f} {E.imag:+.10f}i")


if __name__ == "__main__":
    main()
