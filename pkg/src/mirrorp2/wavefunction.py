"""Eigenfunctions: the two-term Ansatz built from a solved level, the entire
solution built from psi-series, and the checks that tie them together.

Representations and where they are numerically reliable:
  * Ansatz (ratio of products of q-series and theta functions): x >~ -1; for
    x -> -infinity its two terms cancel against each other.
  * entire solution psi_0(x) phi_0(x): x <~ 1; for larger x the four-term sum
    in phi_0 cancels.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid

from .errors import NearPoleError
from .qseries import DEFAULT_TRUNCATION, ModularParams, Truncation, phi, psi, theta
from .spaces import chi_V

RESIDUAL_SAMPLES = (-2.0, -1.0, -0.3, 0.4, 1.1, 2.2)
# both representations are accurate here, also for |E| of a few hundred
OVERLAP_SAMPLES = (-1.6, -1.2, -0.9, -0.6, -0.3, 0.0, 0.3)


@dataclass(frozen=True)
class WavefunctionSample:
    x: complex
    psi: complex
    psi1: complex  # first Ansatz term
    psi2: complex  # second Ansatz term without its Xi factor: psi = psi1 + Xi psi2
    envelope_ratio: float


@dataclass(frozen=True)
class Envelopes:
    """The three plane-wave-like behaviours at x -> -inf (psi0) and x -> +inf."""

    params: ModularParams

    def psi0(self, x):
        return np.exp(-1j * np.pi * x * x / 2 - 1j * np.pi * self.params.c_b * x)

    def psi1_env(self, x):
        return np.exp(1j * np.pi * x * x + 2j * np.pi * self.params.c_b * x)

    def psi2_env(self, x):
        return np.exp(-2j * np.pi * x * x + 2j * np.pi * self.params.c_b * x)

    def bound(self, x: float) -> float:
        """e^{pi cos(theta) x} for x < 0 and e^{-2 pi cos(theta) x} otherwise."""
        c = math.cos(self.params.theta)
        return math.exp(math.pi * c * x) if x < 0 else math.exp(-2 * math.pi * c * x)


# ---------------------------------------------------------------------------
# Ansatz


def ansatz_parts(point, x: complex, tr: Truncation = DEFAULT_TRUNCATION):
    """(first term, second term without Xi, denominator) of the Ansatz at x."""
    P = point.params
    z = cmath.exp(-2 * math.pi * P.b * x)
    zb = cmath.exp(-2 * math.pi * P.b_bar * x)
    f = chi_V(P.q, point.alpha, point.E, z, tr) / point.C
    fb = chi_V(P.q_bar, point.alpha_bar, point.E_bar, zb, tr) / point.C_bar
    pre = cmath.exp(2j * math.pi * P.c_b * x)
    t1 = pre * cmath.exp(1j * math.pi * x * x) * f * phi(P.q_bar, point.E_bar, zb, tr)
    t2 = pre * cmath.exp(-2j * math.pi * (point.zeta + 2 * math.sin(P.theta)) * x) * fb * phi(P.q, point.E, z, tr)
    p2 = P.q * P.q
    den = theta(z / point.s, p2) * theta(z * point.s * P.q / point.alpha, p2)
    return t1, t2, den


def _psi_raw(point, x, tr):
    t1, t2, den = ansatz_parts(point, x, tr)
    num = t1 + point.Xi * t2
    return num / den, t1 / den, t2 / den, abs(den), abs(num)


def assemble_psi(point, x: complex, tr: Truncation = DEFAULT_TRUNCATION, eps: float = 1e-3) -> WavefunctionSample:
    """Psi(x) from the Ansatz.

    Near a (removable) pole both numerator and denominator are small; the
    value is then taken as a fourth-order symmetric Richardson limit from
    x +- eps and x +- 2 eps.
    """
    val, p1, p2, den, num = _psi_raw(point, x, tr)
    _, _, _, den_ref, num_ref = _psi_raw(point, x + 0.137, tr)
    if den < 1e-8 * den_ref:
        if num > 1e-6 * num_ref:
            raise NearPoleError(f"uncancelled pole of Psi at x = {x}")
        near = [_psi_raw(point, x + d, tr) for d in (eps, -eps, 2 * eps, -2 * eps)]
        val = (4 * (near[0][0] + near[1][0]) - (near[2][0] + near[3][0])) / 6
        p1 = (4 * (near[0][1] + near[1][1]) - (near[2][1] + near[3][1])) / 6
        p2 = (4 * (near[0][2] + near[1][2]) - (near[2][2] + near[3][2])) / 6
    env = Envelopes(point.params).bound(complex(x).real)
    return WavefunctionSample(x, complex(val), complex(p1), complex(p2), abs(val) / env)


def psi_function(point, tr: Truncation = DEFAULT_TRUNCATION) -> Callable[[complex], complex]:
    return lambda x: _psi_raw(point, x, tr)[0]


# ---------------------------------------------------------------------------
# entire solution


def phi0(params: ModularParams, E: complex, x: complex, E_bar: Optional[complex] = None, tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """(1/2) sum_{s,t in {0,1}} (-1)^{st} chi0((-1)^s e^{pi b x}) chi0bar((-1)^t e^{pi bbar x})

    with chi0(z) = psi_{q,E}(-iz) and chi0bar(z) = psi_{qbar,Ebar}(iz).
    """
    Eb = E.conjugate() if E_bar is None else E_bar
    z0 = cmath.exp(math.pi * params.b * x)
    zb = cmath.exp(math.pi * params.b_bar * x)
    a = [psi(params.q, E, -1j * z0, tr), psi(params.q, E, 1j * z0, tr)]
    c = [psi(params.q_bar, Eb, 1j * zb, tr), psi(params.q_bar, Eb, -1j * zb, tr)]
    return 0.5 * (a[0] * c[0] + a[0] * c[1] + a[1] * c[0] - a[1] * c[1])


def assemble_entire_branch(params: ModularParams, E: complex, x: complex, tr: Truncation = DEFAULT_TRUNCATION, E_bar: Optional[complex] = None) -> complex:
    """psi_0(x) phi_0(x): solves both difference equations for every E."""
    return complex(Envelopes(params).psi0(x)) * phi0(params, E, x, E_bar, tr)


# ---------------------------------------------------------------------------
# difference equations


def schrodinger_residual(psi_fn: Callable, params: ModularParams, E: complex, x: complex, side: str = "b", E_bar: Optional[complex] = None) -> float:
    """Relative residual of the eigenvalue equation on the given side.

    b side:     Psi(x - ib) + q^{-1} e^{-2 pi b x} Psi(x + ib) = (E - e^{2 pi b x}) Psi(x)
    b_bar side: Psi(x - ib~) + q~ e^{-2 pi b~ x} Psi(x + ib~) = (E~ - e^{2 pi b~ x}) Psi(x)
    """
    if side == "b":
        b, k, e = params.b, 1 / params.q, E
    elif side == "b_bar":
        b, k, e = params.b_bar, params.q_bar, E.conjugate() if E_bar is None else E_bar
    else:
        raise ValueError(side)
    terms = (
        psi_fn(x - 1j * b),
        k * cmath.exp(-2 * math.pi * b * x) * psi_fn(x + 1j * b),
        -(e - cmath.exp(2 * math.pi * b * x)) * psi_fn(x),
    )
    scale = max(abs(t) for t in terms)
    return abs(sum(terms)) / scale if scale > 0 else 0.0


def off_lattice(xs: Sequence[float], point, gap: float = 0.05) -> list:
    """Shift samples away from sigma + P Z and (zeta - sigma) + P Z, where the
    Ansatz has (cancelled) poles on the real line and on the lines x +- ib."""
    P = point.params.period
    centres = [complex(point.sigma).real, complex(point.zeta - point.sigma).real]
    out = []
    for x in xs:
        for _ in range(20):
            d = min(abs(math.remainder(x - c, P)) for c in centres)
            if d >= gap:
                break
            x += gap
        out.append(x)
    return out


def level_residuals(point, xs=RESIDUAL_SAMPLES, tr: Truncation = DEFAULT_TRUNCATION) -> dict:
    fn = psi_function(point, tr)
    xs = off_lattice(xs, point)
    rb = [schrodinger_residual(fn, point.params, point.E, x, "b") for x in xs]
    rbb = [schrodinger_residual(fn, point.params, point.E, x, "b_bar", point.E_bar) for x in xs]
    return {"schrodinger_b": float(max(rb)), "schrodinger_bbar": float(max(rbb)), "x": xs}


# ---------------------------------------------------------------------------
# proportionality and decay


@dataclass(frozen=True)
class ProportionalityReport:
    ratio: complex
    spread: float
    ratios: tuple
    x: tuple


def proportionality_check(point, E: Optional[complex] = None, x_samples=OVERLAP_SAMPLES, tr: Truncation = DEFAULT_TRUNCATION) -> ProportionalityReport:
    """Psi(x) / Psi_ent(x) over samples where both representations are accurate.

    ``E`` is the energy given to the entire solution (default: the level's).
    """
    E_ent = point.E if E is None else E
    xs = off_lattice(x_samples, point)
    fn = psi_function(point, tr)
    r = []
    for x in xs:
        ent = assemble_entire_branch(point.params, E_ent, x, tr)
        if ent == 0:
            raise NearPoleError("entire solution vanishes at a sample")
        r.append(fn(x) / ent)
    r = np.array(r)
    mean = complex(np.mean(r))
    spread = float(np.max(np.abs(r - mean)) / abs(mean))
    return ProportionalityReport(mean, spread, tuple(complex(v) for v in r), tuple(xs))


@dataclass
class DecayReport:
    slope_minus: float
    slope_plus: float
    expected_minus: float
    expected_plus: float
    rel_err_minus: float
    rel_err_plus: float
    l2_norm: float
    ok: bool
    x: np.ndarray = field(repr=False, default=None)
    abs_psi: np.ndarray = field(repr=False, default=None)


def stitched_profile(point, x_grid, split: float = 0.0, tr: Truncation = DEFAULT_TRUNCATION):
    """Psi on a real grid: Ansatz for x >= split, the proportional entire
    solution for x < split."""
    K = proportionality_check(point, tr=tr).ratio
    vals = []
    for x in x_grid:
        if x >= split:
            vals.append(assemble_psi(point, float(x), tr).psi)
        else:
            vals.append(K * assemble_entire_branch(point.params, point.E, float(x), tr))
    return np.array(vals)


def _envelope_slope(x, a, lo, hi, window):
    """Least-squares slope of log(max |Psi| over consecutive windows)."""
    m = (x >= lo) & (x <= hi)
    xs, ls = x[m], np.log(a[m])
    centres, peaks = [], []
    edges = np.arange(lo, hi + 1e-12, window)
    for e0, e1 in zip(edges[:-1], edges[1:]):
        k = (xs >= e0) & (xs < e1)
        if k.any():
            j = np.argmax(ls[k])
            centres.append(xs[k][j])
            peaks.append(ls[k][j])
    return float(np.polyfit(centres, peaks, 1)[0])


def decay_audit(
    point,
    x_grid: Optional[np.ndarray] = None,
    fit_minus=(-10.0, -4.0),
    fit_plus=(4.0, 10.0),
    window: float = 1.0,
    tol: float = 0.05,
    tr: Truncation = DEFAULT_TRUNCATION,
) -> DecayReport:
    """Fitted exponential rates of |Psi| at both ends against pi cos(theta) and
    -2 pi cos(theta), and a trapezoid L^2 norm on the grid."""
    if x_grid is None:
        x_grid = np.round(np.arange(-12.0, 12.0 + 1e-9, 0.05), 10)
    x_grid = np.asarray(x_grid, dtype=float)
    vals = stitched_profile(point, x_grid, tr=tr)
    a = np.abs(vals)
    c = math.cos(point.params.theta)
    em, ep = math.pi * c, -2 * math.pi * c
    sm = _envelope_slope(x_grid, a, *fit_minus, window)
    sp = _envelope_slope(x_grid, a, *fit_plus, window)
    rm, rp = abs(sm / em - 1), abs(sp / ep - 1)
    l2 = float(np.sqrt(trapezoid(a * a, x_grid)))
    return DecayReport(sm, sp, em, ep, rm, rp, l2, rm < tol and rp < tol and math.isfinite(l2), x_grid, a)


def verify_point(point, tol: float = 1e-6, tr: Truncation = DEFAULT_TRUNCATION):
    """(ok, diagnostics): Schrodinger residuals on both sides and
    proportionality to the entire solution."""
    try:
        res = level_residuals(point, tr=tr)
        prop = proportionality_check(point, tr=tr)
    except (NearPoleError, ArithmeticError) as exc:
        return False, {"reason": f"evaluation failed: {exc}"}
    diag = {
        "schrodinger_b": res["schrodinger_b"],
        "schrodinger_bbar": res["schrodinger_bbar"],
        "proportionality": prop.spread,
    }
    bad = [k for k, v in diag.items() if not v < tol]
    if bad:
        diag["reason"] = "oracle failed: " + ", ".join(bad)
    return not bad, diag
