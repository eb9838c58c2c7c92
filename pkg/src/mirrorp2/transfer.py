"""First-order matrix form of the F relation, its convergent infinite product,
Wronskian pairings, zeros of the V-Wronskian and adjoint functions.

The F relation f(z/q^2) + (zq)^3 f(zq^2) = (1 - Ez) f(z) reads
(f(z/q^2), f(z)) = L(z) (f(z), f(zq^2)) with L(z) = [[1 - Ez, -z^3 q^3], [1, 0]].
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import BranchError, ConvergenceError, DegenerateError, DomainError, NearPoleError
from .qseries import DEFAULT_TRUNCATION, Truncation, phi, pochhammer, poly_sequence, theta
from .spaces import chi_V

Fn = Callable[[complex], complex]

Z_REF = 0.5 * cmath.exp(0.3j)  # generic point used to fix the Wronskian normalisation


@dataclass(frozen=True)
class TransferMatrix:
    """[[a, b], [c, d]] * exp(log_scale). Entries may be complex or mpmath.mpc."""

    a: object
    b: object
    c: object
    d: object
    log_scale: float = 0.0

    def __matmul__(self, other: "TransferMatrix") -> "TransferMatrix":
        return TransferMatrix(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
            self.log_scale + other.log_scale,
        )

    def rescaled(self) -> "TransferMatrix":
        """Move the entry magnitude into log_scale (double entries only)."""
        m = max(abs(self.a), abs(self.b), abs(self.c), abs(self.d))
        if isinstance(m, float) and m > 0 and (m > 1e100 or m < 1e-100):
            return TransferMatrix(self.a / m, self.b / m, self.c / m, self.d / m, self.log_scale + math.log(m))
        return self

    def entries(self) -> np.ndarray:
        s = math.exp(self.log_scale)
        return np.array([[complex(self.a), complex(self.b)], [complex(self.c), complex(self.d)]]) * s

    def det(self):
        """ad - bc, including the scale factor (may under/overflow in doubles)."""
        raw = self.a * self.d - self.b * self.c
        return raw * math.exp(2 * self.log_scale) if self.log_scale else raw

    def log_det(self) -> complex:
        raw = complex(self.a * self.d - self.b * self.c)
        return cmath.log(raw) + 2 * self.log_scale


def L_single(z, q, E) -> TransferMatrix:
    if z == 0:
        raise DomainError("L(z) is used at z != 0")
    return TransferMatrix(1 - E * z, -(z**3) * q**3, 1, 0)


def _mp_inputs(z, q, E, dps):
    import mpmath

    ctx = mpmath.mp.clone()
    ctx.dps = dps
    return ctx, ctx.mpc(z), ctx.mpc(q), ctx.mpc(E)


def L_product(z: complex, q: complex, E: complex, n: int, order: str = "left", dps: Optional[int] = None) -> TransferMatrix:
    """L_n(z) = L(z) L(zq^2) ... L(zq^{2n-2}).

    order='left' accumulates L_{k+1} = L_k(z) L(zq^{2k}); order='right'
    accumulates L_{k+1}(z) = L(z) L_k(zq^2). With ``dps`` the product is formed
    in mpmath at that many digits, otherwise in doubles with rescaling.
    """
    if n < 1:
        raise DomainError("L_n needs n >= 1")
    if dps is not None:
        _, z, q, E = _mp_inputs(z, q, E, dps)
    q2 = q * q
    points = [z * q2**k for k in range(n)]
    mats = [L_single(w, q, E) for w in points]
    if order == "left":
        out = mats[0]
        for m in mats[1:]:
            out = (out @ m) if dps else (out @ m).rescaled()
    elif order == "right":
        out = mats[-1]
        for m in reversed(mats[:-1]):
            out = (m @ out) if dps else (m @ out).rescaled()
    else:
        raise ValueError(order)
    return out


def det_relative_error(z: complex, q: complex, E: complex, n: int, dps: Optional[int] = None) -> float:
    """|det L_n(z) / (z^{3n} q^{3n^2}) - 1| with the product formed numerically.

    The determinant of a long product is far smaller than its entries, so in
    doubles the check is limited by cancellation; ``dps='auto'`` picks enough
    digits to resolve it.
    """
    if dps == "auto":
        digits = 3 * n * n * abs(math.log10(abs(q))) + 6 * n * abs(math.log10(abs(z))) + 10 * n
        dps = 30 + int(digits)
    M = L_product(z, q, E, n, dps=dps)
    if dps:
        ctx, zz, qq, _ = _mp_inputs(z, q, E, dps)
        target = zz ** (3 * n) * qq ** (3 * n * n)
        return float(abs(M.det() / target - 1))
    diff = M.log_det() - (3 * n * cmath.log(z) + 3 * n * n * cmath.log(q))
    diff = complex(diff.real, math.remainder(diff.imag, 2 * math.pi))
    if diff.real > 700:
        return math.inf
    return abs(cmath.exp(diff) - 1)


def L_limit(z: complex, q: complex, E: complex, tol: float = 1e-15, cap: int = 400, info: bool = False):
    """First column of L_inf(z), which is (phi(z/q^2), phi(z)).

    Stops once the first column moves by less than tol and the second column
    is below tol (both relative to the column size).
    """
    if abs(q) >= 1:
        raise DomainError("the infinite product needs |q| < 1")
    if z == 0:
        raise DomainError("L(z) is used at z != 0")
    M = L_single(z, q, E)
    q2 = q * q
    w = z
    prev = (M.a, M.c)
    for k in range(1, cap + 1):
        w = w * q2
        M = M @ L_single(w, q, E)
        col = (M.a, M.c)
        size = max(1.0, abs(col[0]), abs(col[1]))
        if not all(map(cmath.isfinite, col)):
            raise ConvergenceError("transfer product overflowed", prev)
        moved = max(abs(col[0] - prev[0]), abs(col[1] - prev[1]))
        second = max(abs(M.b), abs(M.d))
        if moved <= tol * size and second <= tol * size:
            out = (complex(col[0]), complex(col[1]))
            return (out, {"iterations": k + 1, "second_column": second / size}) if info else out
        prev = col
    raise ConvergenceError(f"L_inf column not settled after {cap} factors", prev)


# ---------------------------------------------------------------------------
# Wronskians


def wronskian_FF(f: Fn, g: Fn, q: complex, z: complex) -> complex:
    """[f, g](z) = f(z/q^2) g(z) - g(z/q^2) f(z); lands in T^3_{q^2, q^3}."""
    if z == 0:
        raise DomainError("Wronskian is evaluated at z != 0")
    return f(z / q**2) * g(z) - g(z / q**2) * f(z)


def wronskian_FV(e: Fn, f: Fn, q: complex, alpha: complex, z: complex) -> complex:
    """[e, f](z) = e(z/q^2) f(z) - alpha z f(z/q^2) e(z) for e in F, f in V."""
    if z == 0:
        raise DomainError("Wronskian is evaluated at z != 0")
    if alpha == 0:
        raise DomainError("alpha must be nonzero")
    return e(z / q**2) * f(z) - alpha * z * f(z / q**2) * e(z)


def wronskian_terms(q: complex, alpha: complex, E, z, tr: Truncation = DEFAULT_TRUNCATION):
    """The two products whose difference is W(z) = [phi_{q,E}, chi_V](z).

    Broadcasts over arrays of z or of E.
    """
    zs = z / q**2
    t1 = phi(q, E, zs, tr) * chi_V(q, alpha, E, z, tr)
    t2 = alpha * z * chi_V(q, alpha, E, zs, tr) * phi(q, E, z, tr)
    return t1, t2


def W_V(q: complex, alpha: complex, E, z, tr: Truncation = DEFAULT_TRUNCATION):
    t1, t2 = wronskian_terms(q, alpha, E, z, tr)
    return t1 - t2


def reduce_to_annulus(z, p: complex):
    """(w, k) with z = w p^k and |p| < |w| <= 1."""
    k = math.floor(math.log(abs(z)) / math.log(abs(p)))
    return z / p**k, k


@dataclass(frozen=True)
class WronskianData:
    alpha: complex
    E: complex
    s: complex
    companion: complex
    annulus_zero_count: int
    zeros: tuple = field(default=())  # both zeros reduced into the annulus
    residual: float = 0.0  # |W(s)| over the scale of its two terms
    double_zero: bool = False


def _newton_z(fun, z0, tol=1e-14, maxit=60):
    z = complex(z0)
    for _ in range(maxit):
        h = 1e-6 * abs(z)
        d = (fun(z + h) - fun(z - h)) / (2 * h)
        if d == 0 or not cmath.isfinite(d):
            raise ConvergenceError("zero derivative in Newton polish", z)
        dz = fun(z) / d
        z -= dz
        if abs(dz) < tol * abs(z):
            return z
    raise ConvergenceError("Newton polish did not converge", z)


def winding_number(fun_vec, radius: float, n0: int = 1024, n_cap: int = 1 << 15) -> int:
    """Winding of fun around 0 along |z| = radius (fun takes arrays)."""
    n = n0
    while True:
        t = np.linspace(0, 2 * np.pi, n, endpoint=False)
        v = fun_vec(radius * np.exp(1j * t))
        steps = np.angle(np.roll(v, -1) / v)
        if np.max(np.abs(steps)) < 1.0 or n >= n_cap:
            return int(round(np.sum(steps) / (2 * np.pi)))
        n *= 2


def annulus_zero_count(q: complex, alpha: complex, E: complex, tr: Truncation = DEFAULT_TRUNCATION) -> int:
    """Zeros of W in rho |q^2| < |z| <= rho by the argument principle."""
    fun = lambda z: W_V(q, alpha, E, z, tr)
    p = abs(q * q)
    for rho in (1.0, p**0.37, p**0.71):
        r = np.exp(1j * np.linspace(0, 2 * np.pi, 256, endpoint=False))
        edge = np.concatenate([np.abs(fun(rho * r)), np.abs(fun(rho * p * r))])
        if np.min(edge) > 1e-6 * np.median(edge):
            return winding_number(fun, rho) - winding_number(fun, rho * p)
    return winding_number(fun, 1.0) - winding_number(fun, p)


def find_s(
    q: complex,
    alpha: complex,
    E: complex,
    grid: tuple = (64, 64),
    prefer: Optional[complex] = None,
    tr: Truncation = DEFAULT_TRUNCATION,
    count: bool = True,
) -> WronskianData:
    """Locate the zeros of W(z) = [phi_{q,E}, chi_V](z) in |q^2| < |z| <= 1.

    A log-polar scan of |W| (slightly overlapping the annulus) is polished by
    Newton. The second zero is alpha/(q s) up to the q^2 lattice. ``prefer``
    selects the zero closest to a previous one; otherwise the larger |s| wins.
    """
    p = q * q
    lp = math.log(abs(p))
    nr, na = grid
    t = np.linspace(-0.08, 1.08, nr)
    radii = np.exp(t * lp)
    angles = np.linspace(-np.pi, np.pi, na, endpoint=False)
    Z = radii[:, None] * np.exp(1j * angles)[None, :]
    t1, t2 = wronskian_terms(q, alpha, E, Z, tr)
    scale = np.maximum(np.abs(t1), np.abs(t2))
    if np.all(np.abs(t1 - t2) <= 1e-13 * scale):
        raise DegenerateError("W vanishes identically on the scan grid")
    A = np.log(np.abs(t1 - t2) + 1e-300)
    cands = []
    for i in range(1, nr - 1):
        for j in range(na):
            nb = A[i - 1 : i + 2][:, [(j - 1) % na, j, (j + 1) % na]]
            if A[i, j] <= nb.min():
                cands.append((A[i, j] - np.log(scale[i, j]), Z[i, j]))
    cands.sort(key=lambda c: c[0])
    fun = lambda z: W_V(q, alpha, E, z, tr)
    zeros: list = []
    for _, z0 in cands[:8]:
        try:
            z = _newton_z(fun, z0)
        except ConvergenceError:
            continue
        w, _ = reduce_to_annulus(z, p)
        if not any(abs(w - u) < 1e-8 for u in zeros):
            zeros.append(w)
        if len(zeros) >= 2:
            break
    if not zeros:
        raise BranchError("no zero of W found in the fundamental annulus")
    comp0, _ = reduce_to_annulus(alpha / (q * zeros[0]), p)
    if len(zeros) == 1 or abs(comp0 - zeros[0]) < 1e-6:
        zeros = [zeros[0], comp0]
    double = abs(zeros[0] - zeros[1]) < 1e-6
    if prefer is not None:
        pr, _ = reduce_to_annulus(prefer, p)
        s = min(zeros, key=lambda u: abs(u - pr))
    else:
        s = max(zeros, key=abs)
    nz = annulus_zero_count(q, alpha, E, tr) if count else 2
    if nz != 2:
        raise BranchError(f"argument principle counts {nz} zeros in the annulus, expected 2")
    a, b = wronskian_terms(q, alpha, E, s, tr)
    res = abs(a - b) / max(abs(a), abs(b))
    return WronskianData(alpha, E, s, alpha / (q * s), nz, tuple(zeros), res, double)


def normalization_constant(q: complex, alpha: complex, E: complex, s: complex, z_ref: complex = Z_REF, tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """C with W(z) = C theta(z/s; q^2) theta(z s q/alpha; q^2).

    Depends on which lattice representative s is used, not on s versus its
    companion.
    """
    p = q * q
    return W_V(q, alpha, E, z_ref, tr) / (theta(z_ref / s, p) * theta(z_ref * s * q / alpha, p))


# ---------------------------------------------------------------------------
# adjoint functions


def adjoint_eval(f: Fn, q: complex, alpha: complex, E: complex, z: complex, guard: float = 1e-12, tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """f~(z) = f(z) / [phi_{q,E}, f](z) for f in V_{q,alpha,E}."""
    ph = lambda u: phi(q, E, u, tr)
    t1 = ph(z / q**2) * f(z)
    t2 = alpha * z * f(z / q**2) * ph(z)
    W = t1 - t2
    if abs(W) < guard * max(abs(t1), abs(t2)):
        raise NearPoleError(f"z = {z} is numerically on the zero set of the Wronskian")
    return f(z) / W


def adjoint_lattice(f: Fn, q: complex, alpha: complex, E: complex, z: complex, n: int, guard: float = 1e-12, tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """f~(z q^{2n}) evaluated from data at z only.

    With (a_n, c_n) the first column of L_n(z),
    f~(z q^{2n}) = (a_n f(z) - alpha z c_n f(z/q^2)) / [phi_{q,E}, f](z),
    which avoids evaluating anything at the tiny point z q^{2n}.
    """
    ph = lambda u: phi(q, E, u, tr)
    fz, fzs = f(z), f(z / q**2)
    t1 = ph(z / q**2) * fz
    t2 = alpha * z * fzs * ph(z)
    W = t1 - t2
    if abs(W) < guard * max(abs(t1), abs(t2)):
        raise NearPoleError(f"z = {z} is numerically on the zero set of the Wronskian")
    if n == 0:
        return fz / W
    M = L_product(z, q, E, n)
    s = math.exp(M.log_scale)
    return (M.a * s * fz - alpha * z * M.c * s * fzs) / W


def adjoint_expansion(q: complex, E: complex, k: int) -> np.ndarray:
    """Predicted small-z coefficients p_n / (q^2; q^2)_n, n = 0..k-1."""
    seq = poly_sequence(q, E, k)
    return np.array([seq.value(n) / pochhammer(q * q, q * q, n) for n in range(k)])


@dataclass(frozen=True)
class RootLawReport:
    n_values: tuple
    errors: tuple  # relative error of the lattice law at each n
    max_error: float


def f_check(f: Fn, q: complex, E: complex, z: complex, tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """f(z) / phi_{q,E}(z)."""
    den = phi(q, E, z, tr)
    if den == 0:
        raise NearPoleError("phi_{q,E} vanishes at this point")
    return f(z) / den


def f_check_lattice(f: Fn, q: complex, alpha: complex, E: complex, s: complex, tr: Truncation = DEFAULT_TRUNCATION) -> complex:
    """f(s)/phi(s) at a zero s of W, via the lattice law from the reduced zero."""
    w, n = reduce_to_annulus(s, q * q)
    # at zeros of W: fcheck(w q^{2n}) = q^{n^2} (alpha q w)^n fcheck(w)
    return q ** (n * n) * (alpha * q * w) ** n * f_check(f, q, E, w, tr)


def check_f_at_roots(f: Fn, q: complex, alpha: complex, E: complex, s: complex, n_range: int = 1, tol: float = 1e-9, tr: Truncation = DEFAULT_TRUNCATION) -> RootLawReport:
    """Compare f_check(s q^{2n}) with q^{n^2} (alpha q s)^n f_check(s).

    Direct evaluation of f at s q^{2n} for n >= 2 loses digits to cancellation
    (f_check is tiny there), so the default range stays at |n| <= 1.
    """
    base = f_check(f, q, E, s, tr)
    ns, errs = [], []
    for n in range(-n_range, n_range + 1):
        lhs = f_check(f, q, E, s * q ** (2 * n), tr)
        rhs = q ** (n * n) * (alpha * q * s) ** n * base
        ns.append(n)
        errs.append(abs(lhs - rhs) / max(abs(rhs), 1e-300))
    worst = max(errs)
    if worst > tol:
        raise BranchError(f"lattice law at the zero fails: relative error {worst:.3g}")
    return RootLawReport(tuple(ns), tuple(errs), worst)
