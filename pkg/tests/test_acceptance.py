"""Acceptance criteria 1-10, one test each, every one printing a PASS/FAIL line."""
import cmath
import hashlib
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from mirrorp2.laurent import p_symbolic
from mirrorp2.qseries import ModularParams, p_eval, phi, pochhammer, psi, theta
from mirrorp2.spaces import annulus_samples, chi_V, omega_form, residual_F, residual_G, residual_T, residual_V
from mirrorp2.spectral import SpectralConfig, XiEvaluator, e_roots, find_levels, zeta_independence_audit
from mirrorp2.transfer import L_limit, L_product, adjoint_lattice, det_relative_error, find_s
from mirrorp2.verification import closed_form_error, listed_forms
from mirrorp2.wavefunction import RESIDUAL_SAMPLES, decay_audit, off_lattice, proportionality_check, psi_function, schrodinger_residual

QUARTER = math.pi / 4


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def test_criterion_01_polynomials(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(10):
        q = ModularParams.from_theta(rng.uniform(0.2, 1.35)).q
        E = complex(*rng.uniform(-3, 3, 2))
        for n in range(13):
            worst = max(worst, rel(p_eval(q, E, n), p_symbolic(n)(q, E)))
    mismatches = [n for n, form in enumerate(listed_forms()) if p_symbolic(n) != form]
    dt = time.perf_counter() - t0
    criterion(1, worst < 1e-12 and not mismatches and dt < 5, f"max rel err {worst:.2e}, listed-form mismatches {mismatches}, {dt:.2f} s")


def test_criterion_02_closed_form(criterion):
    errs = {th: max(closed_form_error(ModularParams.from_theta(th).q, m) for m in range(1, 11)) for th in (0.4, QUARTER, 1.1)}
    worst = max(errs.values())
    criterion(2, worst < 1e-10, "max rel err " + ", ".join(f"theta={th:.3f}: {e:.2e}" for th, e in errs.items()))


def test_criterion_03_theta(criterion):
    P = ModularParams.from_theta(QUARTER)
    q, p = P.q, P.q**2
    zero = abs(theta(1.0, p))
    zs = annulus_samples(p, 20, 3)
    quasi = max(abs(theta(p * z, p) + theta(z, p) / z) / max(abs(theta(z, p) / z), 1) for z in zs)
    prod = max(rel(theta(z, q) * theta(-z, q), theta(q, p) * theta(z * z, p)) for z in zs)
    phase = lambda x: cmath.exp(1j * math.pi * (x + math.sin(P.theta)) ** 2 - 1j * P.theta + 1j * math.pi / 4)
    mod = max(
        rel(theta(cmath.exp(2 * math.pi * P.b * x), p), theta(cmath.exp(2 * math.pi * P.b_bar * x), P.q_bar**2) * phase(x))
        for x in np.linspace(-1.5, 1.5, 20)
    )
    ok = zero < 1e-12 and max(quasi, prod, mod) < 1e-9
    criterion(3, ok, f"theta(1) {zero:.1e}, quasi-periodicity {quasi:.1e}, product {prod:.1e}, modularity {mod:.1e}")


def test_criterion_04_transfer(criterion):
    q = ModularParams.from_theta(QUARTER).q
    E = 1.3 - 0.2j
    zs = [complex(z) for z in annulus_samples(q * q, 10, 4)]
    det = max(det_relative_error(z, q, E, n, dps="auto") for z in zs[:3] for n in range(1, 31))
    lim = 0.0
    for z in zs:
        a, c = L_limit(z, q, E)
        lim = max(lim, abs(a - phi(q, E, z / q**2)) / max(1, abs(a)) + abs(c - phi(q, E, z)) / max(1, abs(c)))
    assoc = 0.0
    for z in zs[:4]:
        for m, n in ((1, 5), (3, 4), (6, 2)):
            A = L_product(z, q, E, m + n).entries()
            B = (L_product(z, q, E, m) @ L_product(z * q ** (2 * m), q, E, n)).entries()
            assoc = max(assoc, float(np.max(np.abs(A - B)) / np.max(np.abs(A))))
        A, B = L_product(z, q, E, 9, order="left").entries(), L_product(z, q, E, 9, order="right").entries()
        assoc = max(assoc, float(np.max(np.abs(A - B)) / np.max(np.abs(A))))
    criterion(4, det < 1e-9 and lim < 1e-9 and assoc < 1e-10, f"det {det:.1e}, limit column {lim:.1e}, association {assoc:.1e}")


def test_criterion_05_spaces(criterion):
    P = ModularParams.from_theta(QUARTER)
    q, E = P.q, 0.9 + 0.6j
    alpha = q * cmath.exp(-2 * math.pi * P.b * 0.1)
    zs = [complex(z) for z in annulus_samples(q, 20, 5)]
    ch = lambda u: chi_V(q, alpha, E, u)
    res = {
        "phi in F": max(abs(residual_F(lambda u: phi(q, E, u), q, E, z, True)) for z in zs),
        "psi in G": max(abs(residual_G(lambda u: psi(q, E, u), q, E, z, True)) for z in zs),
        "theta in T1": max(abs(residual_T(lambda u: theta(u, q), q, -1, 1, z, True)) for z in zs),
        "chi in V": max(abs(residual_V(ch, q, alpha, E, z, True)) for z in zs),
        "chi theta in F": max(abs(residual_F(lambda u: ch(u) * theta(-q * q * alpha * u, q * q), q, E, z, True)) for z in zs),
    }
    om = omega_form(lambda u: psi(q, E, u), q, zs, tol=math.inf)
    ok = max(res.values()) < 1e-10 and abs(om.value - 2) < 1e-9 and om.spread < 1e-9
    detail = ", ".join(f"{k} {v:.1e}" for k, v in res.items()) + f", omega {om.value.real:.12f} spread {om.spread:.1e}"
    criterion(5, ok, detail)


def test_criterion_06_adjoint_limit(criterion):
    P = ModularParams.from_theta(QUARTER)
    q = P.q
    rng = np.random.default_rng(6)
    worst, rows = 0.0, []
    for _ in range(2):
        zeta, sigma = rng.uniform(-0.3, 0.3), rng.uniform(0.05, 0.65)
        ev = XiEvaluator(P, zeta)
        s, _ = ev.s_of(sigma)
        E = e_roots(q, ev.alpha, s, 40.0)[0]
        d = find_s(q, ev.alpha, E)
        f = lambda u: chi_V(q, ev.alpha, E, u)
        zs = [complex(z) for z in annulus_samples(q * q, 40, 7)]
        zs = [z for z in zs if min(abs(z / w - 1) for w in d.zeros) > 0.1][:5]
        assert len(zs) == 5
        err = max(abs(adjoint_lattice(f, q, ev.alpha, E, z, n) - 1) for z in zs for n in (40, 50, 60))
        worst = max(worst, err)
        rows.append(f"(zeta {zeta:+.3f}, sigma {sigma:.3f}) {err:.1e}")
    criterion(6, worst < 1e-8, "max |f~ - 1| " + "; ".join(rows))


def test_criterion_07_quantization(criterion, golden):
    t0 = time.perf_counter()
    levels = find_levels(SpectralConfig(theta=QUARTER, zeta=0.0))
    found = time.perf_counter() - t0
    bad = []
    for k, p in enumerate(levels):
        r = p.residuals
        dec = decay_audit(p)
        prop = proportionality_check(p).spread
        checks = {
            "quantization": r["quantization"] < 1e-8,
            "|Xi|": abs(abs(p.Xi) - 1) < 1e-8,
            "schrodinger": max(r["schrodinger_b"], r["schrodinger_bbar"]) < 1e-6,
            "decay": dec.rel_err_minus < 0.05 and dec.rel_err_plus < 0.05,
            "proportionality": prop < 1e-6,
        }
        if k < len(golden["levels"]):
            gE = complex(*golden["levels"][k]["E"])
            checks["golden"] = abs(p.E - gE) < 1e-9 * abs(gE)
        bad += [f"level {k} {name}" for name, ok in checks.items() if not ok]
    dt = time.perf_counter() - t0
    ok = len(levels) >= 3 and not bad and dt < 300
    criterion(7, ok, f"{len(levels)} levels in {found:.1f} s (oracles {dt:.1f} s total), failures {bad}")


def test_criterion_08_zeta_independence(criterion):
    t0 = time.perf_counter()
    audit = zeta_independence_audit(SpectralConfig(theta=QUARTER), [0.0, 0.1, 0.2])
    dt = time.perf_counter() - t0
    dsig = max(audit.sigmas) - min(audit.sigmas)
    ok = audit.spread < 1e-6 and dsig > 1e-3 and audit.tracking_ok and dt < 600
    criterion(8, ok, f"E spread {audit.spread:.1e}, sigma range {dsig:.4f}, tracking {audit.tracking_ok}, {dt:.1f} s")


def test_criterion_09_negative_controls(criterion, levels):
    ratios = []
    for p in levels[:3]:
        base = proportionality_check(p).spread
        moved = proportionality_check(p, E=p.E + 1e-2).spread
        fn = psi_function(p)
        xs = off_lattice(RESIDUAL_SAMPLES, p)
        good = max(schrodinger_residual(fn, p.params, p.E, x, "b") for x in xs)
        bad = max(schrodinger_residual(fn, p.params, p.E + 1e-2, x, "b") for x in xs)
        ratios.append((moved / base, bad / good))
    worst = min(min(r) for r in ratios)
    criterion(9, worst >= 1e3, "smallest break ratio " + f"{worst:.1e} over (proportionality, residual) pairs " + str([(f"{a:.0e}", f"{b:.0e}") for a, b in ratios]))


def test_criterion_10_determinism(criterion, tmp_path):
    argv = ["spectrum", "--theta", "0.7853981633974483", "--zeta", "0", "--sigma-min", "-1", "--sigma-max", "3", "--seed", "0"]
    digests = []
    for k in range(2):
        out = tmp_path / f"levels{k}.json"
        subprocess.run([sys.executable, "-m", "mirrorp2", *argv, "--out", str(out)], check=True, capture_output=True)
        digests.append(hashlib.sha256(out.read_bytes()).hexdigest())
    same = (tmp_path / "levels0.json").read_bytes() == (tmp_path / "levels1.json").read_bytes()
    criterion(10, same, f"sha256 {digests[0][:16]} vs {digests[1][:16]}")
