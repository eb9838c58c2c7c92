"""Membership in the functional-equation spaces F, G, T^m and V as residuals,
plus the basis element of V and the quadratic form omega on G.

Each residual is returned as a complex number. With ``relative=True`` it is
divided by the modulus of the largest term of the defining relation, which is
the meaningful scale when theta values span many orders of magnitude.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, NonMembershipError
from .qseries import DEFAULT_TRUNCATION, Truncation, psi, theta

Fn = Callable[[complex], complex]


def _combine(terms, relative: bool) -> complex:
    total = complex(sum(terms))
    if not relative:
        return total
    scale = max(abs(t) for t in terms)
    return total / scale if scale > 0 else 0j


def residual_F(f: Fn, p: complex, c: complex, z: complex, relative: bool = False) -> complex:
    """f(z/p^2) + (zp)^3 f(zp^2) - (1 - cz) f(z)."""
    if z == 0:
        raise DomainError("residuals are evaluated at z != 0")
    terms = (f(z / p**2), (z * p) ** 3 * f(z * p**2), -(1 - c * z) * f(z))
    return _combine(terms, relative)


def residual_G(g: Fn, p: complex, c: complex, z: complex, relative: bool = False) -> complex:
    """g(zp) - g(z/p) - z(z^2 + c) g(z)."""
    if z == 0:
        raise DomainError("residuals are evaluated at z != 0")
    terms = (g(z * p), -g(z / p), -z * (z * z + c) * g(z))
    return _combine(terms, relative)


def residual_T(f: Fn, p: complex, r: complex, m: int, z: complex, relative: bool = False) -> complex:
    """r z^m f(zp) - f(z)."""
    if z == 0:
        raise DomainError("residuals are evaluated at z != 0")
    terms = (r * z**m * f(z * p), -f(z))
    return _combine(terms, relative)


def residual_V(f: Fn, q: complex, alpha: complex, E: complex, z: complex, relative: bool = False) -> complex:
    """alpha z f(z/q^2) + z^2 q alpha^{-1} f(zq^2) - (1 - Ez) f(z)."""
    if z == 0:
        raise DomainError("residuals are evaluated at z != 0")
    terms = (
        alpha * z * f(z / q**2),
        z * z * q / alpha * f(z * q**2),
        -(1 - E * z) * f(z),
    )
    return _combine(terms, relative)


def chi_even(q: complex, alpha: complex, E, w, tr: Truncation = DEFAULT_TRUNCATION):
    """theta(alpha w; q) psi_{q,E}(w) + theta(-alpha w; q) psi_{q,E}(-w).

    Even in w, and an element of G_{q,E} times a theta factor in w.
    """
    w = np.asarray(w, dtype=complex) if np.ndim(w) else complex(w)
    return theta(alpha * w, q) * psi(q, E, w, tr) + theta(-alpha * w, q) * psi(q, E, -w, tr)


def chi_V(q: complex, alpha: complex, E, z, tr: Truncation = DEFAULT_TRUNCATION):
    """Basis element of V_{q,alpha,E}.

    The even combination is taken in the variable w with z = -1/w^2, so the
    branch of the square root is irrelevant.
    """
    if alpha == 0:
        raise DomainError("alpha must be nonzero")
    if np.any(np.asarray(z) == 0):
        raise DomainError("chi_V is evaluated at z != 0")
    if np.ndim(z):
        w = 1 / np.sqrt(-np.asarray(z, dtype=complex))
    else:
        w = 1 / cmath.sqrt(-complex(z))
    return chi_even(q, alpha, E, w, tr)


@dataclass(frozen=True)
class OmegaValue:
    value: complex
    spread: float


def omega_form(g: Fn, p: complex, z_samples: Sequence[complex], tol: float = 1e-9) -> OmegaValue:
    """Common value of g(z)g(-zp) + g(-z)g(zp) over the samples.

    The spread is measured relative to max(1, |value|); a spread above ``tol``
    means g is not in G (or precision has run out).
    """
    vals = np.array([g(z) * g(-z * p) + g(-z) * g(z * p) for z in z_samples], dtype=complex)
    value = complex(np.mean(vals))
    spread = float(np.max(np.abs(vals - value)) / max(1.0, abs(value)))
    if spread > tol:
        raise NonMembershipError(f"omega is not constant: spread {spread:.3g}")
    return OmegaValue(value, spread)


def annulus_samples(p: complex, n: int = 20, seed: int = 0, inner=None, outer: float = 1.0) -> np.ndarray:
    """Reproducible points with log-uniform modulus in [|p|, outer] and uniform angle."""
    rng = np.random.default_rng(seed)
    lo = np.log(abs(p) if inner is None else inner)
    hi = np.log(outer)
    r = np.exp(rng.uniform(lo, hi, n))
    a = rng.uniform(-np.pi, np.pi, n)
    return r * np.exp(1j * a)
