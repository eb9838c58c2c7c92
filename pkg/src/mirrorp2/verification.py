"""Self-checking identity suites behind `mirrorp2 verify`.

Each check is a dict {name, value, tol, pass}; value is the worst residual.
"""
from __future__ import annotations

import cmath
import math

import numpy as np

from .laurent import EPoly, LaurentPoly, p_symbolic
from .qseries import DEFAULT_TRUNCATION, ModularParams, Truncation, p_eval, phi, pochhammer, poly_sequence, psi, theta
from .spaces import annulus_samples, chi_V, omega_form, residual_F, residual_G, residual_T, residual_V
from .transfer import (
    L_limit,
    L_product,
    W_V,
    adjoint_lattice,
    det_relative_error,
    find_s,
    wronskian_FF,
    wronskian_terms,
)

SUITES = ("identities", "transfer", "spaces")


def _check(name, value, tol):
    value = float(value)
    return {"name": name, "value": value, "tol": tol, "pass": bool(value < tol)}


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def listed_forms() -> list:
    """p_0..p_6 written with q_n = q^n - q^{-n}, built independently of the recurrence."""
    Q = {k: LaurentPoly.q_n(k) for k in range(1, 6)}
    one = LaurentPoly.const(1)
    mono = lambda terms: EPoly.from_dict(terms)
    return [
        mono({0: one}),
        mono({1: one}),
        mono({2: one}),
        mono({3: one, 0: Q[1] * Q[2]}),
        mono({4: one, 1: (Q[2] ** 3).exact_div(Q[1])}),
        mono({5: one, 2: ((Q[1] ** 2 + Q[3] ** 2) * Q[2]).exact_div(Q[1])}),
        mono({6: one, 3: ((Q[2] ** 2 + 5) * Q[2] ** 3).exact_div(Q[1]), 0: Q[1] * Q[2] * Q[4] * Q[5]}),
    ]


def closed_form_error(q: complex, m: int) -> float:
    """Relative gap between p_{3m}(q, 0) and q^{-3m^2} (q^2;q^6)_m (q^4;q^6)_m.

    Compared through logarithms: both sides exceed the double range for
    m of about 10 once |q| is small.
    """
    lhs = poly_sequence(q, 0, 3 * m).log(3 * m)
    rhs = -3 * m * m * cmath.log(q) + cmath.log(pochhammer(q**2, q**6, m)) + cmath.log(pochhammer(q**4, q**6, m))
    return abs(cmath.exp(lhs - rhs) - 1)


def _alpha(P: ModularParams, zeta: float):
    return P.q * cmath.exp(-2 * math.pi * P.b * zeta)


def identities(P: ModularParams, E: complex, seed: int = 0, tr: Truncation = DEFAULT_TRUNCATION) -> list:
    rng = np.random.default_rng(seed)
    q = P.q
    out = []
    worst = 0.0
    for _ in range(10):
        Er = complex(*rng.uniform(-3, 3, 2))
        for n in range(13):
            sym = p_symbolic(n)(q, Er)
            worst = max(worst, _rel(p_eval(q, Er, n), sym) if sym != 0 else abs(p_eval(q, Er, n)))
    out.append(_check("p_eval vs exact expansion, n <= 12", worst, 1e-12))
    sym_bad = sum(p_symbolic(n).invert_q() != p_symbolic(n) for n in range(13))
    out.append(_check("p_n invariant under q -> 1/q (coefficient mismatches)", sym_bad, 0.5))
    bad = sum(p_symbolic(n) != form for n, form in enumerate(listed_forms()))
    out.append(_check("p_0..p_6 vs the closed forms (mismatches)", bad, 0.5))
    worst = max(closed_form_error(q, m) for m in range(1, 11))
    out.append(_check("p_3m(q,0) closed form, m <= 10", worst, 1e-10))

    p = q * q
    zs = annulus_samples(p, 20, seed)
    out.append(_check("theta(1;p) = 0", abs(theta(1.0, p)), 1e-12))
    qp = max(abs(theta(p * z, p) + theta(z, p) / z) / max(abs(theta(z, p) / z), 1) for z in zs)
    out.append(_check("theta quasi-periodicity", qp, 1e-10))
    inv = max(_rel(theta(1 / z, p), theta(p * z, p)) for z in zs)
    out.append(_check("theta(1/z) = theta(pz)", inv, 1e-10))
    prod = max(_rel(theta(z, q) * theta(-z, q), theta(q, q * q) * theta(z * z, q * q)) for z in zs)
    out.append(_check("theta product identity", prod, 1e-10))
    poch = max(_rel(theta(z, p), pochhammer(z, p, math.inf) * pochhammer(p / z, p, math.inf) * pochhammer(p, p, math.inf)) for z in zs)
    out.append(_check("theta as triple product", poch, 1e-10))
    xs = np.linspace(-1, 1, 20)
    phase = lambda x: cmath.exp(1j * math.pi * (x + math.sin(P.theta)) ** 2 - 1j * P.theta + 1j * math.pi / 4)
    mod = max(
        _rel(theta(cmath.exp(2 * math.pi * P.b * x), q * q), theta(cmath.exp(2 * math.pi * P.b_bar * x), P.q_bar**2) * phase(x))
        for x in xs
    )
    out.append(_check("theta modularity on the real line", mod, 1e-9))
    sym = max(_rel(psi(1 / q, E, -z, tr), psi(q, E, z, tr)) for z in zs)
    out.append(_check("psi_{1/q}(-z) = psi_q(z)", sym, 1e-10))
    return out


def transfer(P: ModularParams, E: complex, seed: int = 0, tr: Truncation = DEFAULT_TRUNCATION) -> list:
    rng = np.random.default_rng(seed)
    q = P.q
    out = []
    zs = annulus_samples(q * q, 10, seed)
    det = max(det_relative_error(complex(zs[0]), q, E, n, dps="auto") for n in range(1, 31))
    out.append(_check("det L_n = z^{3n} q^{3n^2}, n <= 30", det, 1e-9))
    worst = 0.0
    for z in zs[:4]:
        for m, n in ((1, 5), (3, 4), (6, 2)):
            A = L_product(z, q, E, m + n).entries()
            B = (L_product(z, q, E, m) @ L_product(z * q ** (2 * m), q, E, n)).entries()
            worst = max(worst, float(np.max(np.abs(A - B)) / np.max(np.abs(A))))
        A = L_product(z, q, E, 7, order="left").entries()
        B = L_product(z, q, E, 7, order="right").entries()
        worst = max(worst, float(np.max(np.abs(A - B)) / np.max(np.abs(A))))
    out.append(_check("association order of L_n", worst, 1e-10))
    worst = 0.0
    for z in zs:
        a, c = L_limit(z, q, E)
        worst = max(worst, abs(a - phi(q, E, z / q**2, tr)) / max(1, abs(a)) + abs(c - phi(q, E, z, tr)) / max(1, abs(c)))
    out.append(_check("L_limit column vs phi", worst, 1e-9))

    zeta = rng.uniform(-0.3, 0.3)
    alpha = _alpha(P, zeta)
    d = find_s(q, alpha, E, tr=tr)
    out.append(_check("argument-principle zero count - 2", abs(d.annulus_zero_count - 2), 0.5))
    res = 0.0
    for z0 in d.zeros:
        for n in (-2, -1, 0):
            a, b = wronskian_terms(q, alpha, E, z0 * q ** (2 * n), tr)
            res = max(res, abs(a - b) / max(abs(a), abs(b)))
    out.append(_check("W vanishes on both zeros times q^{-2n}, n = 0..2", res, 1e-9))
    t2 = max(abs(residual_T(lambda u: W_V(q, alpha, E, u, tr), q * q, q / alpha, 2, z, True)) for z in zs)
    out.append(_check("W in T^2_{q^2, q/alpha}", t2, 1e-10))

    f = lambda u: chi_V(q, alpha, E, u, tr)
    worst = 0.0
    for z in zs[:5]:
        if min(abs(z - d.s), abs(z - d.companion)) < 0.05:
            continue
        worst = max(worst, abs(adjoint_lattice(f, q, alpha, E, complex(z), 40, tr=tr) - 1))
    out.append(_check("adjoint function -> 1 along z q^{2n}, n = 40", worst, 1e-8))
    return out


def spaces(P: ModularParams, E: complex, seed: int = 0, tr: Truncation = DEFAULT_TRUNCATION) -> list:
    q = P.q
    zs = annulus_samples(q, 20, seed)
    alpha = _alpha(P, 0.1)
    ph = lambda u: phi(q, E, u, tr)
    ps = lambda u: psi(q, E, u, tr)
    ch = lambda u: chi_V(q, alpha, E, u, tr)
    g = lambda u: theta(-q * q * alpha * u, q * q)
    prod = lambda u: ch(u) * g(u)
    out = [
        _check("phi in F", max(abs(residual_F(ph, q, E, z, True)) for z in zs), 1e-10),
        _check("psi in G", max(abs(residual_G(ps, q, E, z, True)) for z in zs), 1e-10),
        _check(
            "barred psi in G",
            max(abs(residual_G(lambda u: psi(P.q_bar, E.conjugate(), u, tr), P.q_bar, E.conjugate(), z, True)) for z in zs),
            1e-10,
        ),
        _check("theta in T^1_{p,-1}", max(abs(residual_T(lambda u: theta(u, q), q, -1, 1, z, True)) for z in zs), 1e-10),
        _check("theta in T^2_{p^2,p}", max(abs(residual_T(lambda u: theta(u, q), q * q, q, 2, z, True)) for z in zs), 1e-10),
        _check("theta(alpha z) in T^1_{q,-alpha}", max(abs(residual_T(lambda u: theta(alpha * u, q), q, -alpha, 1, z, True)) for z in zs), 1e-10),
        _check("chi in V", max(abs(residual_V(ch, q, alpha, E, z, True)) for z in zs), 1e-10),
        _check("chi times theta in F", max(abs(residual_F(prod, q, E, z, True)) for z in zs), 1e-10),
        _check(
            "[phi, chi theta] in T^3_{q^2,q^3}",
            max(abs(residual_T(lambda u: wronskian_FF(ph, prod, q, u), q * q, q**3, 3, z, True)) for z in zs),
            1e-10,
        ),
    ]
    om = omega_form(ps, q, zs[:10], tol=math.inf)
    out.append(_check("omega(psi) = 2", abs(om.value - 2), 1e-9))
    out.append(_check("omega(psi) spread", om.spread, 1e-9))
    return out


def run_suite(name: str, theta_: float, E: complex, seed: int = 0, tr: Truncation = DEFAULT_TRUNCATION) -> list:
    P = ModularParams.from_theta(theta_)
    names = SUITES if name == "all" else (name,)
    table = {"identities": identities, "transfer": transfer, "spaces": spaces}
    out = []
    for n in names:
        for c in table[n](P, E, seed, tr):
            out.append({"suite": n, **c})
    return out
