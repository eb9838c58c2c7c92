import cmath
import math
from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mirrorp2.errors import DomainError
from mirrorp2.qseries import ModularParams, Truncation
from mirrorp2.spectral import (
    SpectralConfig,
    XiEvaluator,
    e_roots,
    find_levels,
    fundamental_domain,
    quantization_residual,
    refine_complex,
    solve_E,
    xi_prime_factor,
    xi_value,
    zeta_independence_audit,
)
from mirrorp2.transfer import find_s, reduce_to_annulus


def golden_point(golden, k):
    lv = golden["levels"][k]
    return lv["sigma"], complex(*lv["E"])


def ground_branch(P, zeta, sigma):
    ev = XiEvaluator(P, zeta)
    s, _ = ev.s_of(sigma)
    return ev, s, e_roots(P.q, ev.alpha, s, 40.0)


# ---------------------------------------------------------------- inner solve


def test_solve_is_idempotent(P, golden):
    sigma, E = golden_point(golden, 0)
    ev = XiEvaluator(P, 0.0)
    s, _ = ev.s_of(sigma)
    E1 = solve_E(P.q, ev.alpha, s, E)
    assert abs(E1 - E) < 1e-11
    assert solve_E(P.q, ev.alpha, s, E1) == pytest.approx(E1, abs=1e-12)


@given(st.floats(0.05, 0.65), st.floats(-0.2, 0.2))
def test_solve_then_locate_zero_round_trip(sigma, zeta):
    P = ModularParams.from_theta(math.pi / 4)
    ev, s, roots = ground_branch(P, zeta, sigma)
    assert roots
    E = roots[0]
    d = find_s(P.q, ev.alpha, E)
    s_red, _ = reduce_to_annulus(s, P.q**2)
    assert min(abs(s_red - u) for u in d.zeros) < 1e-8


def test_energy_is_continuous_in_sigma(P):
    ev, s, roots = ground_branch(P, 0.0, 0.3)
    E0 = roots[0]
    slopes = []
    for d in (1e-4, 2e-4, 4e-4):
        slopes.append(abs(ev.solve(0.3 + d, E0, max_step=0.05) - E0) / d)
    assert max(slopes) / min(slopes) < 1.01


def test_e_roots_are_zeros(P):
    ev, s, roots = ground_branch(P, 0.1, 0.45)
    assert len(roots) >= 2
    assert [abs(r) for r in roots] == sorted(abs(r) for r in roots)
    for E in roots:
        assert solve_E(P.q, ev.alpha, s, E) == pytest.approx(E, abs=1e-10 * max(1, abs(E)))


# ---------------------------------------------------------------- Xi


@given(st.floats(0.02, 0.68), st.floats(-0.3, 0.3))
def test_xi_has_unit_modulus_for_real_arguments(sigma, zeta):
    P = ModularParams.from_theta(math.pi / 4)
    _, _, roots = ground_branch(P, zeta, sigma)
    for E in roots[:2]:
        xi, _ = xi_value(P, zeta, sigma, E)
        assert abs(abs(xi) - 1) < 1e-8
        assert abs(abs(xi / xi_prime_factor(P, zeta, sigma)) - 1) < 1e-8


@pytest.mark.parametrize("th", [0.6, math.pi / 4, 1.0])
def test_barred_twin_is_conjugate(th):
    P = ModularParams.from_theta(th)
    sigma, zeta = 0.27, 0.08
    _, _, roots = ground_branch(P, zeta, sigma)
    E = roots[0]
    indep = XiEvaluator(P, zeta, independent_bar=True)
    assert indep.bar_E(sigma, E) == pytest.approx(E.conjugate(), abs=1e-10 * max(1, abs(E)))
    a, _ = xi_value(P, zeta, sigma, E, independent_bar=True)
    b, _ = xi_value(P, zeta, sigma, E, independent_bar=False)
    assert a == pytest.approx(b, abs=1e-9)


def test_quantization_residual_vanishes_at_symmetric_point(P):
    for zeta in (0.0, 0.1):
        _, _, roots = ground_branch(P, zeta, zeta / 2)
        assert quantization_residual(P, zeta, zeta / 2, roots[0]) == 0


def test_phase_residual_is_odd_under_reflection(P):
    zeta, sigma = 0.1, 0.31
    ev, _, roots = ground_branch(P, zeta, sigma)
    r1, E = ev.phase_residual(sigma, roots[0])
    r2, E2 = ev.phase_residual(zeta - sigma, E)
    assert E2 == pytest.approx(E, abs=1e-9)
    assert r2 == pytest.approx(-r1, abs=1e-9)


# ---------------------------------------------------------------- levels


def test_levels_self_consistent(levels, P):
    assert len(levels) >= 3
    assert [abs(p.E) for p in levels] == sorted(abs(p.E) for p in levels)
    lo, hi = fundamental_domain(P, 0.0)
    for p in levels:
        assert lo < p.sigma < hi
        assert p.residuals["quantization"] < 1e-8
        assert p.residuals["wronskian"] < 1e-9
        assert abs(abs(p.Xi) - 1) < 1e-8
        assert abs(abs(p.Xi_prime) - 1) < 1e-8
        assert p.E_bar == p.E.conjugate()
        assert p.branch


def test_levels_match_golden(levels, golden):
    for p, lv in zip(levels, golden["levels"]):
        E = complex(*lv["E"])
        assert abs(p.E - E) < 1e-9 * abs(E)
        assert p.sigma == pytest.approx(lv["sigma"], abs=1e-9)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_level_stable_under_refinement(golden, k):
    sigma, E = golden_point(golden, k)
    fine = SpectralConfig(
        sigma_window=(sigma - 0.01, sigma + 0.01),
        tr=Truncation(n_max=1024, tol=1e-17),
        tol_E=5e-14,
        e_radius=1.2 * abs(E) + 5,
        verify=False,
    )
    (p,) = [p for p in find_levels(fine) if abs(p.E - E) < 1e-6 * abs(E)]
    assert abs(p.E - E) / abs(E) < 10 * max(p.residuals["quantization"], 1e-14)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_complex_path_reaches_real_levels(P, golden, k):
    sigma, E = golden_point(golden, k)
    sg, E2 = refine_complex(P, 0.0, sigma + 0.002 + 0.001j, E)
    assert abs(sg - sigma) < 1e-9
    assert abs(E2 - E) < 1e-9 * abs(E)


def test_complex_mode_scan_agrees(golden):
    sigma, E = golden_point(golden, 0)
    cfg = SpectralConfig(sigma_window=(sigma - 0.02, sigma + 0.02), e_radius=10.0, complex_mode=True, verify=False)
    found = find_levels(cfg)
    assert any(abs(p.E - E) < 1e-9 * abs(E) for p in found)


def test_empty_window_reports_no_levels():
    cfg = SpectralConfig(e_radius=1.0)
    assert find_levels(cfg) == []


def test_single_zeta_audit_has_zero_spread(golden):
    cfg = SpectralConfig(e_radius=10.0, max_levels=1)
    audit = zeta_independence_audit(cfg, [0.0])
    assert audit.spread == 0
    assert audit.tracking_ok
    assert audit.energies[0] == pytest.approx(complex(*golden["levels"][0]["E"]), rel=1e-9)


def test_config_validation():
    with pytest.raises(DomainError):
        SpectralConfig(tol_E=0)
    with pytest.raises(DomainError):
        SpectralConfig(sigma_window=(1.0, 1.0))
    with pytest.raises(DomainError):
        replace(SpectralConfig(), max_levels=0)


def test_fundamental_domain_and_prime_factor(P):
    lo, hi = fundamental_domain(P, 0.2)
    assert lo == pytest.approx(0.1)
    assert hi - lo == pytest.approx(P.period / 2)
    assert cmath.isclose(xi_prime_factor(P, 0.0, 0.0), 1j * cmath.exp(2j * math.pi * 0.5 - 2j * math.pi / 4))
