"""Nested root-finding for the spectrum.

Inner problem: for given alpha and s, find E with W_E(s) = 0, where
W_E = [phi_{q,E}, chi_V] is the V-Wronskian. Outer problem: find sigma with
Xi(sigma) = Xi(zeta - sigma), where

    alpha = q e^{-2 pi b zeta},  s = e^{-2 pi b sigma}   (barred side likewise)
    Xi = -e^{pi i sigma (sigma + 2 zeta)} fcheck(s) s_bar / (fcheck_bar(s_bar) s)

and fcheck = chi_V / phi. The point zeta - sigma corresponds to the companion
zero alpha/(q s) of the same Wronskian, so it shares E.
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .errors import BranchError, ConvergenceError, DomainError, NearPoleError
from .qseries import DEFAULT_TRUNCATION, ModularParams, Truncation
from .spaces import chi_V
from .transfer import (
    W_V,
    f_check_lattice,
    normalization_constant,
    reduce_to_annulus,
    wronskian_terms,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SpectralConfig:
    theta: float = math.pi / 4
    zeta: complex = 0.0
    sigma_window: tuple = (-1.0, 3.0)
    tr: Truncation = DEFAULT_TRUNCATION
    tol_E: float = 1e-13
    tol_sigma: float = 1e-8
    max_levels: int = 8
    e_radius: float = 300.0  # seeds are all E-roots with |E| below this
    e_max: Optional[float] = None  # report only |E| <= e_max (default: e_radius)
    n_seeds: int = 4
    step: float = 0.004  # largest continuation step in sigma
    margin: float = 0.004  # distance kept from the symmetric points of the reflection
    complex_mode: bool = False
    verify: bool = True

    def __post_init__(self):
        if not (self.tol_E > 0 and self.tol_sigma > 0):
            raise DomainError("tolerances must be positive")
        lo, hi = self.sigma_window
        if not hi > lo:
            raise DomainError("empty sigma window")
        if self.max_levels < 1 or self.n_seeds < 1 or self.step <= 0:
            raise DomainError("bad scan settings")

    @property
    def params(self) -> ModularParams:
        return ModularParams.from_theta(self.theta)


@dataclass(frozen=True)
class SpectralPoint:
    theta: float
    sigma: complex
    zeta: complex
    alpha: complex
    alpha_bar: complex
    s: complex
    s_bar: complex
    E: complex
    E_bar: complex
    Xi: complex  # with f normalised so that W = theta(z/s) theta(zsq/alpha)
    Xi_prime: complex
    C: complex  # W(z) / (theta(z/s; q^2) theta(zsq/alpha; q^2))
    C_bar: complex
    branch: str = ""
    residuals: dict = field(default_factory=dict)
    truncation_used: int = DEFAULT_TRUNCATION.n_max

    @property
    def params(self) -> ModularParams:
        return ModularParams.from_theta(self.theta)


# ---------------------------------------------------------------------------
# inner problem


def _w_rel(q, alpha, E, s, tr):
    a, b = wronskian_terms(q, alpha, E, s, tr)
    return abs(a - b) / max(abs(a), abs(b))


def solve_E(
    q: complex,
    alpha: complex,
    s: complex,
    E_guess: complex,
    tol: float = 1e-13,
    tr: Truncation = DEFAULT_TRUNCATION,
    max_step: Optional[float] = None,
    maxit: int = 100,
) -> complex:
    """E with W_E(s) = 0, by complex Newton with a central-difference slope.

    ``max_step`` caps each Newton step (relative to max(1, |E|)), which keeps
    continuation on its branch.
    """
    s, _ = reduce_to_annulus(s, q * q)
    E = complex(E_guess)
    best = (math.inf, E)
    for _ in range(maxit):
        h = 1e-6 * max(1.0, abs(E))
        Es = np.array([E, E + h, E - h])
        w = W_V(q, alpha, Es, s, tr)
        if not np.all(np.isfinite(w)):
            raise ConvergenceError("Wronskian overflowed during the E solve", best[1])
        if abs(w[0]) < best[0]:
            best = (abs(w[0]), E)
        d = (w[1] - w[2]) / (2 * h)
        if d == 0 or not cmath.isfinite(d):
            E = _local_grid_restart(q, alpha, s, E, tr)
            continue
        dE = w[0] / d
        if max_step is not None:
            cap = max_step * max(1.0, abs(E))
            if abs(dE) > cap:
                dE *= cap / abs(dE)
        E -= dE
        if abs(dE) <= tol * max(1.0, abs(E)):
            return E
    raise ConvergenceError("E solve did not converge", best[1])


def _local_grid_restart(q, alpha, s, E, tr):
    r = 0.1 * max(1.0, abs(E))
    g = np.linspace(-r, r, 9)
    Es = E + g[:, None] + 1j * g[None, :]
    w = np.abs(W_V(q, alpha, Es, s, tr))
    i, j = np.unravel_index(np.argmin(w), w.shape)
    return complex(Es[i, j])


def e_roots(
    q: complex,
    alpha: complex,
    s: complex,
    radius: float,
    tr: Truncation = DEFAULT_TRUNCATION,
    grid: tuple = (48, 96),
    r_min: float = 0.2,
) -> list:
    """All E with |E| <= radius and W_E(s) = 0, from a log-polar scan of |W_E(s)|.

    W_E(s) is entire in E, so every local minimum of its modulus on a fine
    enough grid sits next to a zero.
    """
    s, _ = reduce_to_annulus(s, q * q)
    nr, na = grid
    radii = np.exp(np.linspace(math.log(r_min), math.log(1.5 * radius), nr))
    ang = np.linspace(-np.pi, np.pi, na, endpoint=False)
    Es = radii[:, None] * np.exp(1j * ang)[None, :]
    a, b = wronskian_terms(q, alpha, Es, s, tr)
    A = np.log(np.abs(a - b) + 1e-300)
    cands = [0j]
    for i in range(nr):
        for j in range(na):
            rows = slice(max(i - 1, 0), min(i + 2, nr))
            nb = A[rows][:, [(j - 1) % na, j, (j + 1) % na]]
            if A[i, j] <= nb.min():
                cands.append(complex(Es[i, j]))
    roots: list = []
    for E0 in cands:
        try:
            E = solve_E(q, alpha, s, E0, tr=tr, max_step=0.2)
        except ConvergenceError:
            continue
        if abs(E) > radius:
            continue
        if _w_rel(q, alpha, E, s, tr) > 1e-8:
            continue
        if all(abs(E - r) > 1e-7 * max(1.0, abs(E)) for r in roots):
            roots.append(E)
    roots.sort(key=abs)
    return roots


# ---------------------------------------------------------------------------
# Xi


@dataclass(frozen=True)
class XiData:
    sigma: complex
    E: complex
    E_bar: complex
    Xi_u: complex  # Xi with the unnormalised chi_V; the quantization ratio does not care
    s: complex
    s_bar: complex


class XiEvaluator:
    """Evaluates Xi along sigma for fixed theta and zeta."""

    def __init__(
        self,
        params: ModularParams,
        zeta: complex,
        tr: Truncation = DEFAULT_TRUNCATION,
        independent_bar: Optional[bool] = None,
        tol_E: float = 1e-13,
    ):
        self.params = params
        self.tol_E = tol_E
        self.zeta = zeta
        self.tr = tr
        self.alpha = params.q * cmath.exp(-2 * math.pi * params.b * zeta)
        self.alpha_bar = params.q_bar * cmath.exp(-2 * math.pi * params.b_bar * zeta)
        self.independent_bar = independent_bar

    def s_of(self, sigma):
        return cmath.exp(-2 * math.pi * self.params.b * sigma), cmath.exp(-2 * math.pi * self.params.b_bar * sigma)

    def _real(self, sigma) -> bool:
        return complex(sigma).imag == 0 and complex(self.zeta).imag == 0

    def solve(self, sigma, E_guess, max_step=None) -> complex:
        s, _ = self.s_of(sigma)
        return solve_E(self.params.q, self.alpha, s, E_guess, tol=self.tol_E, tr=self.tr, max_step=max_step)

    def bar_E(self, sigma, E) -> complex:
        indep = self.independent_bar if self.independent_bar is not None else not self._real(sigma)
        if not indep:
            return E.conjugate()
        _, sb = self.s_of(sigma)
        return solve_E(self.params.q_bar, self.alpha_bar, sb, E.conjugate(), tol=self.tol_E, tr=self.tr, max_step=0.05)

    def xi_at(self, sigma, E, E_bar) -> XiData:
        """Xi at sigma with E already solved there (or at the reflected point)."""
        P = self.params
        s, sb = self.s_of(sigma)
        f = lambda u: chi_V(P.q, self.alpha, E, u, self.tr)
        fb = lambda u: chi_V(P.q_bar, self.alpha_bar, E_bar, u, self.tr)
        fc = f_check_lattice(f, P.q, self.alpha, E, s, self.tr)
        fcb = f_check_lattice(fb, P.q_bar, self.alpha_bar, E_bar, sb, self.tr)
        if fcb == 0 or not cmath.isfinite(fc) or not cmath.isfinite(fcb):
            raise NearPoleError("fcheck is singular at this sigma")
        xi = -cmath.exp(1j * math.pi * sigma * (sigma + 2 * self.zeta)) * fc * sb / (fcb * s)
        return XiData(sigma, E, E_bar, xi, s, sb)

    def pair(self, sigma, E_guess, max_step=None):
        """(Xi(sigma), Xi(zeta - sigma)) sharing one solved E."""
        E = self.solve(sigma, E_guess, max_step)
        Eb = self.bar_E(sigma, E)
        return self.xi_at(sigma, E, Eb), self.xi_at(self.zeta - sigma, E, Eb)

    def phase_residual(self, sigma, E_guess, max_step=None):
        a, b = self.pair(sigma, E_guess, max_step)
        return cmath.phase(a.Xi_u / b.Xi_u), a.E


def xi_prime_factor(params: ModularParams, zeta, sigma) -> complex:
    """Xi = Xi' * this factor."""
    st = math.sin(params.theta)
    return 1j * cmath.exp(2j * math.pi * ((st + zeta / 2) ** 2 + (sigma - zeta / 2) ** 2) - 2j * params.theta)


def xi_value(params: ModularParams, zeta, sigma, E_guess, tr: Truncation = DEFAULT_TRUNCATION, independent_bar=None):
    """(Xi, E) at sigma, with f normalised so that W = theta(z/s) theta(zsq/alpha)."""
    ev = XiEvaluator(params, zeta, tr, independent_bar)
    E = ev.solve(sigma, E_guess)
    Eb = ev.bar_E(sigma, E)
    d = ev.xi_at(sigma, E, Eb)
    C, Cb = _norms(ev, d.s, d.s_bar, E, Eb)
    return d.Xi_u * Cb / C, E


def quantization_residual(params: ModularParams, zeta, sigma, E_guess, tr: Truncation = DEFAULT_TRUNCATION, independent_bar=None) -> complex:
    """Xi(zeta, sigma) - Xi(zeta, zeta - sigma), both with the same E."""
    ev = XiEvaluator(params, zeta, tr, independent_bar)
    a, b = ev.pair(sigma, E_guess)
    C, Cb = _norms(ev, a.s, a.s_bar, a.E, a.E_bar)
    return (a.Xi_u - b.Xi_u) * Cb / C


def _norms(ev: XiEvaluator, s, sb, E, Eb):
    P = ev.params
    C = normalization_constant(P.q, ev.alpha, E, s, tr=ev.tr)
    Cb = normalization_constant(P.q_bar, ev.alpha_bar, Eb, sb, tr=ev.tr)
    return C, Cb


# ---------------------------------------------------------------------------
# outer problem


@dataclass
class Track:
    """One E-branch followed along a sigma grid."""

    sigma: np.ndarray
    E: np.ndarray
    g: np.ndarray  # phase residual arg(Xi(sigma)/Xi(zeta - sigma)); nan where lost
    tag: str = ""


@dataclass
class ScanReport:
    levels: list
    rejected: list
    tracks: list
    domain: tuple
    seeds: list

    @property
    def diagnostics(self) -> dict:
        return {
            "domain": list(self.domain),
            "n_tracks": len(self.tracks),
            "seed_roots": [[float(sg), len(r)] for sg, r in self.seeds],
            "rejected": [_brief(p) for p in self.rejected],
        }


def _brief(p):
    return {"sigma": complex(p[0]).real, "E": [p[1].real, p[1].imag], "reason": p[2]}


def fundamental_domain(params: ModularParams, zeta) -> tuple:
    """Open interval (zeta/2, zeta/2 + P/2) of real parts; P is the sigma period."""
    z = complex(zeta).real
    return z / 2, z / 2 + params.period / 2


def _continue(ev: XiEvaluator, sg_from, E_from, sg_to, depth=0, E_prev=None, sg_prev=None):
    """E at sg_to by Newton from a (linearly extrapolated) prediction; bisects on jumps."""
    if E_prev is not None and sg_prev is not None and sg_from != sg_prev:
        pred = E_from + (E_from - E_prev) * (sg_to - sg_from) / (sg_from - sg_prev)
    else:
        pred = E_from
    try:
        E = ev.solve(sg_to, pred, max_step=0.1)
        jump = abs(E - pred)
        ok = jump <= 0.02 * max(1.0, abs(pred)) + 0.5 * abs(pred - E_from)
    except ConvergenceError:
        ok = False
    if ok:
        return E
    if depth >= 8:
        raise BranchError(f"lost the E-branch near sigma = {sg_to}")
    mid = 0.5 * (sg_from + sg_to)
    E_mid = _continue(ev, sg_from, E_from, mid, depth + 1, E_prev, sg_prev)
    return _continue(ev, mid, E_mid, sg_to, depth + 1, E_from, sg_from)


def track_branch(ev: XiEvaluator, grid: np.ndarray, i0: int, E0: complex, tag: str = "") -> Track:
    n = len(grid)
    E = np.full(n, np.nan, dtype=complex)
    g = np.full(n, np.nan)
    E[i0] = E0
    for direction in (1, -1):
        i = i0
        prev = None
        while 0 <= i + direction < n:
            j = i + direction
            try:
                E[j] = _continue(ev, grid[i], E[i], grid[j], 0, None if prev is None else E[prev], None if prev is None else grid[prev])
            except (BranchError, ConvergenceError, NearPoleError, OverflowError, ZeroDivisionError):
                break
            prev, i = i, j
    for k in range(n):
        if np.isfinite(E[k]):
            try:
                a, b = ev.pair(grid[k], E[k], max_step=0.05)
                g[k] = cmath.phase(a.Xi_u / b.Xi_u)
                E[k] = a.E
            except (ConvergenceError, NearPoleError, OverflowError, ZeroDivisionError):
                pass
    return Track(grid.copy(), E, g, tag)


def _refine_root(ev: XiEvaluator, a, b, Ea, tol_sigma):
    box = [Ea]

    def fun(sg):
        r, box[0] = ev.phase_residual(sg, box[0], max_step=0.05)
        return r

    sg = brentq(fun, a, b, xtol=1e-15, rtol=1e-15, maxiter=200)
    _, E = ev.phase_residual(sg, box[0], max_step=0.05)
    return sg, E


def build_point(ev: XiEvaluator, sigma, E, branch="", tr_used=None) -> SpectralPoint:
    P = ev.params
    Eb = ev.bar_E(sigma, E)
    a = ev.xi_at(sigma, E, Eb)
    b = ev.xi_at(ev.zeta - sigma, E, Eb)
    C, Cb = _norms(ev, a.s, a.s_bar, E, Eb)
    Xi = a.Xi_u * Cb / C
    Xi_ref = b.Xi_u * Cb / C
    s_red, _ = reduce_to_annulus(a.s, P.q * P.q)
    residuals = {
        "quantization": abs(Xi - Xi_ref),
        "wronskian": _w_rel(P.q, ev.alpha, E, s_red, ev.tr),
        "xi_modulus": abs(abs(Xi) - 1.0),
    }
    return SpectralPoint(
        theta=P.theta,
        sigma=sigma,
        zeta=ev.zeta,
        alpha=ev.alpha,
        alpha_bar=ev.alpha_bar,
        s=a.s,
        s_bar=a.s_bar,
        E=E,
        E_bar=Eb,
        Xi=Xi,
        Xi_prime=Xi / xi_prime_factor(P, ev.zeta, sigma),
        C=C,
        C_bar=Cb,
        branch=branch,
        residuals=residuals,
        truncation_used=(tr_used or ev.tr).n_max,
    )


def _same_level(E1, E2, rel=1e-7):
    return abs(E1 - E2) <= rel * max(1.0, abs(E1))


def scan_levels(config: SpectralConfig) -> ScanReport:
    """Real-sigma scan of the fundamental domain; see find_levels."""
    P = config.params
    zeta = config.zeta
    ev = XiEvaluator(P, zeta, config.tr, tol_E=config.tol_E)
    lo, hi = fundamental_domain(P, zeta)
    w_lo, w_hi = config.sigma_window
    if w_hi - w_lo < P.period:
        # the window does not cover a full period: scan it as given
        lo, hi = w_lo, w_hi
    a, b = lo + config.margin, hi - config.margin
    n = max(2, int(math.ceil((b - a) / config.step))) + 1
    grid = np.linspace(a, b, n)
    e_max = config.e_max if config.e_max is not None else config.e_radius
    if complex(zeta).imag:
        grid = grid + 1j * complex(zeta).imag / 2

    tracks: list = []
    seeds = []
    for j in range(config.n_seeds):
        i0 = int(round((j + 0.5) / config.n_seeds * (n - 1)))
        s, _ = ev.s_of(grid[i0])
        roots = e_roots(P.q, ev.alpha, s, config.e_radius, config.tr)
        seeds.append((grid[i0].real, roots))
        for E0 in roots:
            if any(np.isfinite(t.E[i0]) and _same_level(t.E[i0], E0, 1e-6) for t in tracks):
                continue
            tracks.append(track_branch(ev, grid, i0, E0, tag=f"t{len(tracks)}"))

    levels: list = []
    rejected: list = []
    for t in tracks:
        g = t.g
        for k in range(n - 1):
            if not (np.isfinite(g[k]) and np.isfinite(g[k + 1])):
                continue
            if g[k] == 0 or np.sign(g[k]) == np.sign(g[k + 1]) or abs(g[k] - g[k + 1]) > 1.0:
                continue
            if complex(zeta).imag:
                continue  # handled by the complex path below
            try:
                sg, E = _refine_root(ev, grid[k].real, grid[k + 1].real, t.E[k], config.tol_sigma)
            except (ValueError, ConvergenceError, NearPoleError):
                continue
            if abs(E) > e_max:
                continue
            if any(_same_level(E, p.E) for p in levels):
                continue
            pt = build_point(ev, sg, E, branch=t.tag, tr_used=config.tr)
            if pt.residuals["quantization"] > config.tol_sigma:
                rejected.append((sg, E, "quantization residual"))
                continue
            levels.append(pt)
    if config.complex_mode or complex(zeta).imag:
        levels = _complex_path_levels(config, ev, tracks, levels, e_max)

    if config.verify:
        from .wavefunction import verify_point

        kept = []
        for p in levels:
            ok, why = verify_point(p)
            if ok:
                kept.append(replace(p, residuals={**p.residuals, **why}))
            else:
                rejected.append((p.sigma, p.E, why.get("reason", "oracle failed")))
        levels = kept
    levels.sort(key=lambda p: (abs(p.E), complex(p.sigma).real))
    return ScanReport(levels[: config.max_levels], rejected, tracks, (lo, hi), seeds)


def find_levels(config: SpectralConfig) -> list:
    """Levels in the sigma window, sorted by |E|.

    Each E-branch found at a few seed values of sigma is continued across the
    fundamental domain of sigma -> sigma + P and sigma -> zeta - sigma, the
    phase residual arg(Xi(sigma) / Xi(zeta - sigma)) is followed along it, and
    each sign change (not a 2 pi wrap) is polished by Brent's method. The
    symmetric points zeta/2 and zeta/2 + P/2, where the residual vanishes
    trivially, are excluded by a margin. Levels are deduplicated by E, which is
    the same for every lattice image and for the reflected point.
    """
    return scan_levels(config).levels


# ---------------------------------------------------------------------------
# complex sigma


def complex_residual(ev: XiEvaluator, sigma: complex, E_guess: complex):
    """Xi(sigma) - Xi(zeta - sigma) with the barred side solved independently."""
    E = ev.solve(sigma, E_guess, max_step=0.05)
    Eb = ev.bar_E(sigma, E)
    a = ev.xi_at(sigma, E, Eb)
    b = ev.xi_at(ev.zeta - sigma, E, Eb)
    return a.Xi_u - b.Xi_u, E


def refine_complex(params: ModularParams, zeta, sigma0: complex, E0: complex, tr: Truncation = DEFAULT_TRUNCATION, tol: float = 1e-13, maxit: int = 60):
    """Complex Newton on sigma for Xi(sigma) = Xi(zeta - sigma); returns (sigma, E)."""
    ev = XiEvaluator(params, zeta, tr, independent_bar=True)
    sg = complex(sigma0)
    E = E0
    for _ in range(maxit):
        F, E = complex_residual(ev, sg, E)
        h = 1e-7
        Fp, _ = complex_residual(ev, sg + h, E)
        Fm, _ = complex_residual(ev, sg - h, E)
        d = (Fp - Fm) / (2 * h)
        if d == 0:
            raise ConvergenceError("flat residual in the complex sigma solve", (sg, E))
        step = F / d
        if abs(step) > 0.01:
            step *= 0.01 / abs(step)
        sg -= step
        if abs(step) < tol:
            _, E = complex_residual(ev, sg, E)
            return sg, E
    raise ConvergenceError("complex sigma solve did not converge", (sg, E))


def _complex_path_levels(config, ev, tracks, levels, e_max):
    """Minima of |Xi(sigma) - Xi(zeta - sigma)| along each track, polished in complex sigma."""
    P = config.params
    out = list(levels)
    for t in tracks:
        vals = np.full(len(t.sigma), np.nan)
        for k, (sg, E) in enumerate(zip(t.sigma, t.E)):
            if np.isfinite(E):
                try:
                    F, _ = complex_residual(XiEvaluator(P, config.zeta, config.tr, True, config.tol_E), sg, E)
                    vals[k] = abs(F)
                except (ConvergenceError, NearPoleError, OverflowError, ZeroDivisionError):
                    pass
        for k in range(1, len(vals) - 1):
            if np.isfinite(vals[k - 1 : k + 2]).all() and vals[k] <= min(vals[k - 1], vals[k + 1]) and vals[k] < 0.2:
                try:
                    sg, E = refine_complex(P, config.zeta, t.sigma[k], t.E[k], config.tr)
                except (ConvergenceError, NearPoleError):
                    continue
                if abs(E) > e_max or any(_same_level(E, p.E, 1e-6) for p in out):
                    continue
                ev_c = XiEvaluator(P, config.zeta, config.tr, True, config.tol_E)
                pt = build_point(ev_c, sg, E, branch=t.tag + "c", tr_used=config.tr)
                if pt.residuals["quantization"] <= config.tol_sigma:
                    out.append(pt)
    return out


# ---------------------------------------------------------------------------
# zeta independence


@dataclass
class ZetaAudit:
    zetas: list
    sigmas: list
    energies: list
    spread: float
    tracking_ok: bool
    per_zeta: list = field(default_factory=list)


def zeta_independence_audit(config: SpectralConfig, zeta_list, level_index: int = 0) -> ZetaAudit:
    """Follow one level across zeta: it is found afresh at each zeta and matched
    to the previous one by its E (the nearest level)."""
    if len(zeta_list) < 1:
        raise DomainError("need at least one zeta")
    sigmas, energies, per = [], [], []
    ok = True
    ref = None
    for z in zeta_list:
        levels = find_levels(replace(config, zeta=z))
        if not levels:
            raise BranchError(f"no levels found at zeta = {z}")
        if ref is None:
            if level_index >= len(levels):
                raise BranchError("level index out of range")
            pt = levels[level_index]
        else:
            pt = min(levels, key=lambda p: abs(p.E - ref))
            if abs(pt.E - ref) > 1e-3 * max(1.0, abs(ref)):
                ok = False
        ref = pt.E
        sigmas.append(pt.sigma)
        energies.append(pt.E)
        per.append({"zeta": z, "sigma": pt.sigma, "E": pt.E, "n_levels": len(levels)})
    spread = max((abs(a - b) for a in energies for b in energies), default=0.0)
    return ZetaAudit(list(zeta_list), sigmas, energies, spread, ok, per)
