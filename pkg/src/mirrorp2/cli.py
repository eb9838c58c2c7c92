"""Command line: spectrum, wavefunction, verify, series-table.

Exit codes: 0 success, 1 numerical failure, 2 no levels found, 64 usage error.
"""
from __future__ import annotations

import argparse
import cmath
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import __version__
from .errors import MirrorP2Error

SCHEMA = "mirror-p2/1"
EXIT_OK, EXIT_FAIL, EXIT_NO_ROOTS, EXIT_USAGE = 0, 1, 2, 64

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str = "spectrum"
    theta: float = math.pi / 4
    zeta: float = 0.0
    sigma_min: float = -1.0
    sigma_max: float = 3.0
    n_max: int = 512
    tol: float = 1e-16
    tol_E: float = 1e-13
    tol_sigma: float = 1e-8
    e_radius: float = 300.0
    max_levels: int = 8
    complex_mode: bool = False
    verify: bool = True
    out: Optional[str] = None
    format: str = "json"
    seed: int = 0
    # wavefunction
    levels: Optional[str] = None
    index: int = 0
    x_min: float = -6.0
    x_max: float = 6.0
    dx: float = 0.05
    # verify
    suite: str = "identities"
    # series-table
    E: str = "0"
    n: int = 10
    extra: dict = field(default_factory=dict)

    def validate(self):
        if not (0 < self.theta < math.pi / 2):
            raise UsageError("theta must lie in the open interval (0, pi/2)")
        if self.sigma_max <= self.sigma_min:
            raise UsageError("sigma-max must exceed sigma-min")
        if self.n_max < 1 or self.tol <= 0 or self.tol_sigma <= 0 or self.tol_E <= 0:
            raise UsageError("truncation and tolerances must be positive")
        if self.format not in ("json", "csv"):
            raise UsageError("format is json or csv")
        if self.dx <= 0 or self.x_max <= self.x_min:
            raise UsageError("bad x grid")
        if self.n < 0:
            raise UsageError("n must be >= 0")
        if self.max_levels < 1:
            raise UsageError("max-levels must be >= 1")


def parse_complex(text: str) -> complex:
    t = str(text).strip().replace(" ", "").replace("i", "j")
    try:
        return complex(t)
    except ValueError:
        raise UsageError(f"not a complex number: {text!r}")


def cpair(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _common(p):
    p.add_argument("--config", help="TOML file; flags override its values")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--theta", type=float, help="angle in radians, 0 < theta < pi/2")
    g.add_argument("--theta-degrees", type=float, help="angle in degrees")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-max", type=int, dest="n_max", help="series truncation cap")
    p.add_argument("--tol", type=float, help="series tail tolerance")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="mirrorp2", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    sp = sub.add_parser("spectrum", help="find eigenvalues")
    _common(sp)
    sp.add_argument("--zeta", type=float)
    sp.add_argument("--sigma-min", type=float, dest="sigma_min")
    sp.add_argument("--sigma-max", type=float, dest="sigma_max")
    sp.add_argument("--tol-sigma", type=float, dest="tol_sigma")
    sp.add_argument("--tol-E", type=float, dest="tol_E", help="inner E-solve tolerance")
    sp.add_argument("--e-radius", type=float, dest="e_radius", help="largest |E| searched")
    sp.add_argument("--max-levels", type=int, dest="max_levels")
    sp.add_argument("--complex-mode", action="store_const", const=True, dest="complex_mode")
    sp.add_argument("--no-verify", action="store_const", const=False, dest="verify")
    sp.add_argument("--format", choices=["json", "csv"])

    wp = sub.add_parser("wavefunction", help="sample Psi(x) of one level as CSV")
    _common(wp)
    wp.add_argument("--zeta", type=float)
    wp.add_argument("--levels", help="JSON written by `spectrum` (default: solve afresh)")
    wp.add_argument("--index", type=int, help="level index in |E| order")
    wp.add_argument("--x-min", type=float, dest="x_min")
    wp.add_argument("--x-max", type=float, dest="x_max")
    wp.add_argument("--dx", type=float)

    vp = sub.add_parser("verify", help="run a verification suite, JSON report")
    _common(vp)
    vp.add_argument("--suite", choices=["identities", "transfer", "spaces", "all"])
    vp.add_argument("--E", help="complex E used by the suites, e.g. 0.7+0.3i")

    tp = sub.add_parser("series-table", help="p_0..p_n as CSV")
    _common(tp)
    tp.add_argument("--E", help="complex E, e.g. 3.0+0.0i")
    tp.add_argument("--n", type=int)
    return ap


def resolve_config(argv) -> RunConfig:
    ap = build_parser()
    ns = ap.parse_args(argv)
    if ns.command is None:
        ap.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)
    values: dict = {}
    if getattr(ns, "config", None):
        try:
            with open(ns.config, "rb") as fh:
                values.update(tomllib.load(fh))
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}")
    flags = {k: v for k, v in vars(ns).items() if v is not None and k not in ("config", "command")}
    values.update(flags)
    if "theta_degrees" in values:
        values["theta"] = math.radians(values.pop("theta_degrees"))
    known = set(RunConfig.__dataclass_fields__) - {"extra", "command"}
    unknown = set(values) - known
    if unknown:
        raise UsageError(f"unknown settings: {', '.join(sorted(unknown))}")
    if "E" in values:
        values["E"] = str(values["E"])
    try:
        cfg = RunConfig(command=ns.command, **values)
    except TypeError as exc:
        raise UsageError(str(exc))
    cfg.validate()
    _threads()
    return cfg


def _threads() -> int:
    """MIRRORP2_THREADS is validated; the computation itself runs serially."""
    raw = os.environ.get("MIRRORP2_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise UsageError(f"MIRRORP2_THREADS must be a positive integer, got {raw!r}")
    return n


# ---------------------------------------------------------------------------
# commands


def _truncation(cfg):
    from .qseries import Truncation

    return Truncation(n_max=cfg.n_max, tol=cfg.tol)


def _spectral_config(cfg):
    from .spectral import SpectralConfig

    return SpectralConfig(
        theta=cfg.theta,
        zeta=cfg.zeta,
        sigma_window=(cfg.sigma_min, cfg.sigma_max),
        tr=_truncation(cfg),
        tol_E=cfg.tol_E,
        tol_sigma=cfg.tol_sigma,
        max_levels=cfg.max_levels,
        e_radius=cfg.e_radius,
        complex_mode=cfg.complex_mode,
        verify=cfg.verify,
    )


def point_record(p) -> dict:
    r = p.residuals
    return {
        "schema": SCHEMA,
        "theta": p.theta,
        "sigma": cpair(p.sigma),
        "zeta": cpair(p.zeta),
        "E": cpair(p.E),
        "E_bar": cpair(p.E_bar),
        "Xi": cpair(p.Xi),
        "Xi_prime": cpair(p.Xi_prime),
        "alpha": cpair(p.alpha),
        "s": cpair(p.s),
        "residuals": {
            "quantization": float(r.get("quantization", math.nan)),
            "wronskian": float(r.get("wronskian", math.nan)),
            "schrodinger_b": float(r.get("schrodinger_b", math.nan)),
            "schrodinger_bbar": float(r.get("schrodinger_bbar", math.nan)),
            "proportionality": float(r.get("proportionality", math.nan)),
        },
        "branch": p.branch,
        "truncation_used": p.truncation_used,
    }


def point_from_record(rec: dict):
    from .spectral import SpectralConfig, XiEvaluator, build_point
    from .qseries import ModularParams

    P = ModularParams.from_theta(rec["theta"])
    sigma = complex(*rec["sigma"])
    zeta = complex(*rec["zeta"])
    if sigma.imag == 0:
        sigma = sigma.real
    if zeta.imag == 0:
        zeta = zeta.real
    ev = XiEvaluator(P, zeta)
    E = ev.solve(sigma, complex(*rec["E"]))
    return build_point(ev, sigma, E, branch=rec.get("branch", ""))


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def run_spectrum(cfg: RunConfig):
    from .spectral import scan_levels

    rep = scan_levels(_spectral_config(cfg))
    records = [point_record(p) for p in rep.levels]
    if cfg.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "sigma_re", "sigma_im", "E_re", "E_im", "Xi_re", "Xi_im", "quantization", "schrodinger_b", "schrodinger_bbar", "branch"])
        for i, r in enumerate(records):
            w.writerow([i, *map(repr, r["sigma"]), *map(repr, r["E"]), *map(repr, r["Xi"]), repr(r["residuals"]["quantization"]), repr(r["residuals"]["schrodinger_b"]), repr(r["residuals"]["schrodinger_bbar"]), r["branch"]])
        text = buf.getvalue()
    else:
        text = _dumps(records)
    if not records:
        print(json.dumps(rep.diagnostics, sort_keys=True), file=sys.stderr)
    return text, (EXIT_OK if records else EXIT_NO_ROOTS)


def run_wavefunction(cfg: RunConfig):
    from .wavefunction import Envelopes, stitched_profile

    if cfg.levels:
        with open(cfg.levels) as fh:
            recs = json.load(fh)
        if not recs:
            return "", EXIT_NO_ROOTS
        if cfg.index >= len(recs):
            raise UsageError("level index out of range")
        point = point_from_record(recs[cfg.index])
    else:
        from .spectral import find_levels

        levels = find_levels(_spectral_config(cfg))
        if not levels:
            return "", EXIT_NO_ROOTS
        if cfg.index >= len(levels):
            raise UsageError("level index out of range")
        point = levels[cfg.index]
    n = int(round((cfg.x_max - cfg.x_min) / cfg.dx)) + 1
    xs = np.round(np.linspace(cfg.x_min, cfg.x_max, n), 12)
    vals = stitched_profile(point, xs)
    a = np.abs(vals)
    scale = a.max()
    env = Envelopes(point.params)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "re_psi", "im_psi", "abs_psi", "envelope_ratio"])
    for x, v in zip(xs, vals):
        v = v / scale
        w.writerow([repr(float(x)), repr(float(v.real)), repr(float(v.imag)), repr(float(abs(v))), repr(float(abs(v) / env.bound(float(x))))])
    return buf.getvalue(), EXIT_OK


def run_verify(cfg: RunConfig):
    from .verification import run_suite

    E = parse_complex(cfg.E) if cfg.E not in ("0", "") else 0.7 + 0.3j
    report = run_suite(cfg.suite, cfg.theta, E, seed=cfg.seed, tr=_truncation(cfg))
    ok = all(c["pass"] for c in report)
    text = _dumps({"schema": SCHEMA, "command": "verify", "suite": cfg.suite, "theta": cfg.theta, "E": cpair(E), "checks": report, "pass": ok})
    return text, (EXIT_OK if ok else EXIT_FAIL)


def run_series_table(cfg: RunConfig):
    from .qseries import ModularParams, poly_sequence

    P = ModularParams.from_theta(cfg.theta)
    E = parse_complex(cfg.E)
    seq = poly_sequence(P.q, E, max(cfg.n, 1))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "re_p", "im_p", "log_abs_p"])
    for k in range(cfg.n + 1):
        v = seq.value(k)
        w.writerow([k, repr(v.real), repr(v.imag), repr(seq.log_abs(k))])
    return buf.getvalue(), EXIT_OK


COMMANDS = {
    "spectrum": run_spectrum,
    "wavefunction": run_wavefunction,
    "verify": run_verify,
    "series-table": run_series_table,
}


def run(cfg: RunConfig) -> int:
    try:
        text, code = COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"mirrorp2: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MirrorP2Error, ArithmeticError) as exc:
        print(f"mirrorp2: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if code == EXIT_NO_ROOTS:
        print("mirrorp2: no levels found in the window", file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        cfg = resolve_config(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(f"mirrorp2: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(cfg)


if __name__ == "__main__":
    raise SystemExit(main())
