"""q-objects: modular parameters, q-Pochhammer symbols, theta, p_n and the
two generating series phi_{q,E}, psi_{q,E}.

All series are evaluated through normalised coefficient recurrences, so that
neither p_n (which grows like |q|^{-n^2/3}) nor the q-Pochhammer denominators
(which grow like |q|^{-n^2}) are ever formed separately.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Union

import numpy as np

from .errors import (
    ConvergenceError,
    DegenerateParameterError,
    DivergenceError,
    DomainError,
)

ComplexLike = Union[complex, float, np.ndarray]

# sin(2 theta) below this makes |q| > e^{-0.02 pi} ~ 0.939 and is rejected
MIN_SIN_2THETA = 0.02


@dataclass(frozen=True)
class ModularParams:
    """All constants derived from the angle theta in (0, pi/2)."""

    theta: float
    b: complex
    b_bar: complex
    q: complex
    q_bar: complex
    c_b: complex
    hbar: complex

    @classmethod
    def from_theta(cls, theta: float) -> "ModularParams":
        theta = float(theta)
        if not (0.0 < theta < math.pi / 2):
            raise DomainError(f"theta must lie in (0, pi/2), got {theta!r}")
        if math.sin(2 * theta) < MIN_SIN_2THETA:
            raise DegenerateParameterError(
                f"theta={theta!r} is too close to an endpoint: |q| -> 1"
            )
        b = cmath.exp(1j * theta)
        b_bar = 1 / b
        q = cmath.exp(1j * math.pi * b * b)
        q_bar = cmath.exp(-1j * math.pi * b_bar * b_bar)
        return cls(
            theta=theta,
            b=b,
            b_bar=b_bar,
            q=q,
            q_bar=q_bar,
            c_b=1j * math.cos(theta),
            hbar=2 * math.pi * cmath.exp(2j * theta),
        )

    @property
    def period(self) -> float:
        """Real shift of sigma that multiplies s = e^{-2 pi b sigma} by q^2."""
        return 2.0 * math.sin(self.theta)

    def side(self, bar: bool = False) -> tuple[complex, complex]:
        """(b, q) on the unbarred side, (b_bar, q_bar) on the barred one."""
        return (self.b_bar, self.q_bar) if bar else (self.b, self.q)


@dataclass(frozen=True)
class Truncation:
    n_max: int = 512
    tol: float = 1e-16
    adaptive: bool = True
    n_start: int = 32

    def __post_init__(self):
        if self.n_max < 1:
            raise DomainError("n_max must be >= 1")
        if not self.tol > 0:
            raise DomainError("tol must be positive")
        if self.n_start < 1:
            raise DomainError("n_start must be >= 1")


DEFAULT_TRUNCATION = Truncation()


@dataclass(frozen=True)
class SeriesValue:
    """A series value with an estimate of the modulus of the discarded tail."""

    value: complex
    tail_bound: float
    terms_used: int

    def __complex__(self):
        return complex(self.value)


# ---------------------------------------------------------------------------
# elementary q-objects


def q_n(q: complex, n: int) -> complex:
    """q^n - q^{-n}."""
    if q == 0:
        raise DomainError("q_n is undefined at q = 0")
    return q**n - q ** (-n)


def pochhammer(x: complex, q: complex, n) -> complex:
    """(x; q)_n = prod_{k<n} (1 - x q^k); ``n`` may be ``math.inf``."""
    if n == math.inf:
        if abs(q) >= 1:
            raise DivergenceError("(x;q)_inf requires |q| < 1")
        out = 1.0 + 0j
        xk = complex(x)
        for _ in range(100_000):
            if abs(xk) < 1e-18:
                return out
            out *= 1 - xk
            xk *= q
        raise ConvergenceError("infinite q-Pochhammer product did not settle", out)
    n = int(n)
    if n < 0:
        raise DomainError("negative Pochhammer index")
    out = 1.0 + 0j
    xk = complex(x)
    for _ in range(n):
        out *= 1 - xk
        xk *= q
    return out


def theta(z: ComplexLike, p: complex) -> ComplexLike:
    """theta(z; p) = sum_n p^{n(n-1)/2} (-z)^n = (z, p/z, p; p)_inf.

    z is first moved into |p| < |w| <= 1 with theta(p w) = -theta(w)/w.
    Accepts scalars or arrays.
    """
    if abs(p) >= 1:
        raise DivergenceError("theta(z; p) needs |p| < 1")
    scalar = np.ndim(z) == 0
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise DomainError("theta(z; p) is undefined at z = 0")
    log_p = math.log(abs(p))
    k = np.floor(np.log(np.abs(z)) / log_p)
    w = z / p**k
    m = int(math.ceil(math.sqrt(2 * 40.0 / -log_p))) + 3
    n = np.arange(-m, m + 1)
    coef = p ** (n * (n - 1) / 2.0)
    total = np.zeros_like(w)
    for nn, cc in zip(n, coef):
        total = total + cc * (-w) ** int(nn)
    # theta(p^k w) = (-1)^k w^{-k} p^{-k(k-1)/2} theta(w)
    out = (-1.0) ** k * w ** (-k) * p ** (-k * (k - 1) / 2.0) * total
    return complex(out) if scalar else out


# ---------------------------------------------------------------------------
# the polynomials p_n(q, E)


@dataclass
class PolySequence:
    """p_0..p_N for one (q, E), stored as mantissa * exp(log_scale).

    log_scale stays 0 while |p_n| is moderate, so small-n entries are the
    plain recurrence values (p_1 = E and p_2 = E^2 exactly).
    """

    q: complex
    E: complex
    mantissa: np.ndarray = field(repr=False)
    log_scale: np.ndarray = field(repr=False)

    @property
    def n_max(self) -> int:
        return len(self.mantissa) - 1

    @property
    def values(self) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore"):
            return self.mantissa * np.exp(self.log_scale)

    def value(self, n: int) -> complex:
        with np.errstate(over="ignore", invalid="ignore"):
            return complex(self.mantissa[n] * np.exp(self.log_scale[n]))

    def log_abs(self, n: int) -> float:
        m = abs(self.mantissa[n])
        return -math.inf if m == 0 else math.log(m) + float(self.log_scale[n])

    def log(self, n: int) -> complex:
        """Complex logarithm (principal argument) of p_n."""
        m = complex(self.mantissa[n])
        if m == 0:
            return complex(-math.inf, 0.0)
        return cmath.log(m) + float(self.log_scale[n])

    @classmethod
    def build(cls, q: complex, E: complex, n: int) -> "PolySequence":
        q = complex(q)
        E = complex(E)
        if q == 0:
            raise DomainError("p_n(q, E) needs q != 0")
        if n < 0:
            raise DomainError("p_n needs n >= 0")
        log_q = cmath.log(q)
        m = np.zeros(n + 3, dtype=complex)  # offset 2: index k+2 holds p_k
        ls = np.zeros(n + 3)
        m[2] = 1.0
        for k in range(n):
            # p_{k+1} = E p_k + q_k q_{k-1} p_{k-2}, both terms scaled by e^{-top}
            Lk = ls[k + 2]
            if k < 2 or m[k] == 0:
                top = Lk
                raw = E * m[k + 2]
            else:
                lqq = _log_qq(q, log_q, k) + ls[k]
                top = max(Lk, lqq.real)
                raw = E * m[k + 2] * math.exp(Lk - top) + m[k] * cmath.exp(lqq - top)
            mag = abs(raw)
            if mag == 0:
                m[k + 3], ls[k + 3] = 0, 0.0
            elif mag > 1e100 or mag < 1e-100:
                e = math.frexp(mag)[1]
                h = e // 2  # two exact power-of-two steps, each within range
                m[k + 3] = raw * 2.0 ** (-h) * 2.0 ** (h - e)
                ls[k + 3] = top + e * math.log(2)
            else:
                m[k + 3] = raw
                ls[k + 3] = top
        return cls(q, E, m[2:].copy(), ls[2:].copy())


def _log_qq(q: complex, log_q: complex, k: int) -> complex:
    """log(q_k q_{k-1}) without forming q^{-k}."""
    if k * abs(log_q.real) < 300:
        return cmath.log((q**k - q ** (-k)) * (q ** (k - 1) - q ** (1 - k)))
    # q_k q_{k-1} = q^{1-2k} (1 - q^{2k}) (1 - q^{2k-2})
    return (1 - 2 * k) * log_q + cmath.log((1 - q ** (2 * k)) * (1 - q ** (2 * k - 2)))


@lru_cache(maxsize=1024)
def _poly_sequence(q: complex, E: complex, n_cap: int) -> PolySequence:
    return PolySequence.build(q, E, n_cap)


def poly_sequence(q: complex, E: complex, n: int) -> PolySequence:
    """Memoised PolySequence covering at least p_0..p_n."""
    cap = 16
    while cap < n:
        cap *= 2
    return _poly_sequence(complex(q), complex(E), cap)


def p_eval(q: complex, E: complex, n: int) -> complex:
    """p_n(q, E) (may overflow to inf for very large n; see PolySequence)."""
    if n < 0:
        raise DomainError("p_n needs n >= 0")
    return poly_sequence(q, E, n).value(n)


# ---------------------------------------------------------------------------
# series coefficients
#   phi: c_n = p_n / (q^{-2}; q^{-2})_n
#   psi: d_n = p_n q^{-n(n+1)/2} / (q^{-2}; q^{-2})_n


def _coefficients(kind: str, q: complex, E, n: int) -> np.ndarray:
    E = np.asarray(E, dtype=complex)
    out = np.zeros((n + 3,) + E.shape, dtype=complex)
    out[2] = 1.0
    for k in range(n):
        q2k2 = q ** (2 * k + 2)
        if kind == "phi":
            num = E * out[k + 2] + q ** (2 * k - 1) * out[k]
            out[k + 3] = -q2k2 * num / (1 - q2k2)
        else:
            num = E * out[k + 2] + out[k]
            out[k + 3] = -(q ** (k + 1)) * num / (1 - q2k2)
    return out[2:]


@lru_cache(maxsize=8192)
def _cached_coefficients(kind: str, q: complex, E: complex, n: int) -> np.ndarray:
    c = _coefficients(kind, q, E, n)
    c.setflags(write=False)
    return c


def series_coefficients(kind: str, q: complex, E, n: int) -> np.ndarray:
    """Coefficients 0..n of phi (kind='phi') or psi (kind='psi').

    Scalar E is memoised; array E broadcasts (leading axis is the index).
    """
    if kind not in ("phi", "psi"):
        raise ValueError(kind)
    if np.ndim(E) == 0:
        return _cached_coefficients(kind, complex(q), complex(E), int(n))
    return _coefficients(kind, complex(q), E, int(n))


def _horner(c: np.ndarray, z):
    acc = np.zeros(np.broadcast_shapes(c.shape[1:], np.shape(z)), dtype=complex)
    for ck in c[::-1]:
        acc = acc * z + ck
    return acc


def _tail_estimate(c: np.ndarray, z):
    """(tail bound, largest term) from log-magnitudes of the last terms.

    Uses blocks of three terms, since p_n(q, 0) vanishes unless 3 | n.
    """
    n = c.shape[0] - 1
    out_ndim = len(np.broadcast_shapes(c.shape[1:], np.shape(z)))
    idx = np.arange(n + 1).reshape((-1,) + (1,) * out_ndim)
    with np.errstate(divide="ignore", invalid="ignore"):
        logc = np.log(np.abs(c)).reshape((n + 1,) + (1,) * (out_ndim - c.ndim + 1) + c.shape[1:])
        la = np.where(idx == 0, logc, logc + idx * np.log(np.abs(z)))
    big = np.max(la, axis=0)
    if n < 6:
        return np.full(np.shape(big), np.inf), np.exp(big)
    last = np.max(la[n - 2 :], axis=0)
    prev = np.max(la[n - 5 : n - 2], axis=0)
    with np.errstate(invalid="ignore", over="ignore"):
        log_r = np.where(np.isneginf(last), -np.inf, last - prev)
        r = np.exp(np.minimum(log_r, 0.0))
        tail = np.where(
            np.isneginf(last),
            0.0,
            np.where(log_r < math.log(0.5), 3.0 * np.exp(last) * r / (1 - r), np.inf),
        )
    return tail, np.exp(big)


def _sum(kind: str, q: complex, E, z, tr: Truncation):
    n = min(tr.n_start, tr.n_max)
    while True:
        c = series_coefficients(kind, q, E, n)
        value = _horner(c, z)
        tail, scale = _tail_estimate(c, z)
        ok = np.all(tail <= tr.tol * np.maximum(scale, 1e-300))
        if ok or not tr.adaptive or n >= tr.n_max:
            return value, tail, n, bool(ok)
        n = min(2 * n, tr.n_max)


def _check_base(base: complex, strict: bool):
    if strict and abs(base) >= 1:
        raise DivergenceError(f"phi_{{q,E}} diverges for |q| = {abs(base):.6g} >= 1")
    if not strict and abs(abs(base) - 1) < 1e-14:
        raise DomainError("psi_{q,E} is undefined for |q| = 1")


def phi_series(base: complex, E: complex, z: complex, tr: Truncation = DEFAULT_TRUNCATION) -> SeriesValue:
    """phi_{q,E}(z) = sum_n p_n(q,E) z^n / (q^{-2}; q^{-2})_n for |q| < 1."""
    _check_base(base, strict=True)
    value, tail, n, _ = _sum("phi", complex(base), complex(E), complex(z), tr)
    return SeriesValue(complex(value), float(tail), n + 1)


def psi_series(base: complex, E: complex, z: complex, tr: Truncation = DEFAULT_TRUNCATION) -> SeriesValue:
    """psi_{q,E}(z) = sum_n p_n(q,E) q^{-n(n+1)/2} z^n / (q^{-2}; q^{-2})_n.

    Satisfies psi_{q,E}(z) = psi_{1/q,E}(-z), which is how |q| > 1 is handled.
    """
    _check_base(base, strict=False)
    base = complex(base)
    z = complex(z)
    if abs(base) > 1:
        base, z = 1 / base, -z
    value, tail, n, _ = _sum("psi", base, complex(E), z, tr)
    return SeriesValue(complex(value), float(tail), n + 1)


def _fast(kind: str, base: complex, E, z, tr: Truncation):
    scalar = np.ndim(z) == 0 and np.ndim(E) == 0
    value, tail, n, ok = _sum(kind, base, E, z, tr)
    if not ok:
        raise ConvergenceError(
            f"{kind} series not converged with {n} terms (tail {np.max(tail):.3g})"
        )
    return complex(value) if scalar else value


def phi(base: complex, E, z, tr: Truncation = DEFAULT_TRUNCATION):
    """Plain value of phi_{q,E}(z); broadcasts over arrays of E and z."""
    _check_base(base, strict=True)
    return _fast("phi", complex(base), E, z, tr)


def psi(base: complex, E, z, tr: Truncation = DEFAULT_TRUNCATION):
    """Plain value of psi_{q,E}(z); broadcasts over arrays of E and z."""
    _check_base(base, strict=False)
    base = complex(base)
    if abs(base) > 1:
        return _fast("psi", 1 / base, E, -np.asarray(z) if np.ndim(z) else -z, tr)
    return _fast("psi", base, E, z, tr)
