import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mirrorp2.errors import NearPoleError
from mirrorp2.qseries import ModularParams, psi
from mirrorp2.wavefunction import (
    RESIDUAL_SAMPLES,
    Envelopes,
    assemble_entire_branch,
    assemble_psi,
    decay_audit,
    level_residuals,
    off_lattice,
    phi0,
    proportionality_check,
    psi_function,
    schrodinger_residual,
    stitched_profile,
    verify_point,
)

thetas = st.floats(0.4, 1.2)
coords = st.floats(-5, 5)
energies = st.builds(complex, coords, coords)
GENERIC_X = (-2.3, -1.7, -1.1, -0.6, -0.2, 0.15, 0.35, 0.55, 0.8, 1.0)


# ---------------------------------------------------------------- envelopes


@given(thetas, st.floats(-6, 6))
def test_envelope_moduli(th, x):
    env = Envelopes(ModularParams.from_theta(th))
    c = math.cos(th)
    assert abs(env.psi0(x)) == pytest.approx(math.exp(math.pi * c * x), rel=1e-12)
    assert abs(env.psi1_env(x)) == pytest.approx(math.exp(-2 * math.pi * c * x), rel=1e-12)
    assert abs(env.psi2_env(x)) == pytest.approx(math.exp(-2 * math.pi * c * x), rel=1e-12)


# ---------------------------------------------------------------- entire solution


@given(thetas, energies)
def test_entire_branch_solves_both_equations(th, E):
    P = ModularParams.from_theta(th)
    fn = lambda x: assemble_entire_branch(P, E, x)
    for x in GENERIC_X:
        assert schrodinger_residual(fn, P, E, x, "b") < 1e-8
        assert schrodinger_residual(fn, P, E, x, "b_bar") < 1e-8


@given(thetas, energies)
def test_chi0_equation(th, E):
    q = ModularParams.from_theta(th).q
    chi0 = lambda z: psi(q, E, -1j * z)
    for z in (0.3 + 0.2j, -0.7j, 1.1):
        terms = (chi0(z / q), -chi0(z * q), -1j * (E - z * z) * z * chi0(z))
        assert abs(sum(terms)) <= 1e-10 * max(map(abs, terms))


@given(thetas, energies)
def test_phi0_equation(th, E):
    P = ModularParams.from_theta(th)
    b = P.b
    for x in (-1.5, -0.4, 0.2, 0.7):
        terms = (
            phi0(P, E, x - 1j * b),
            -phi0(P, E, x + 1j * b),
            -1j * (E - cmath.exp(2 * math.pi * b * x)) * cmath.exp(math.pi * b * x) * phi0(P, E, x),
        )
        assert abs(sum(terms)) <= 1e-9 * max(map(abs, terms))


@pytest.mark.parametrize("E", [0.0, 3.0 - 1.0j, -20.0 + 5.0j])
def test_phi0_tends_to_one_on_the_left(E):
    P = ModularParams.from_theta(0.8)
    errs = [abs(phi0(P, E, x) - 1) for x in (-2.0, -4.0, -8.0)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-6


# ---------------------------------------------------------------- Ansatz at solved levels


def test_level_residuals_both_sides(levels):
    for p in levels:
        r = level_residuals(p)
        assert r["schrodinger_b"] < 1e-6
        assert r["schrodinger_bbar"] < 1e-6


def test_sample_components(levels):
    p = levels[0]
    s = assemble_psi(p, 0.41)
    assert s.psi == pytest.approx(s.psi1 + p.Xi * s.psi2, rel=1e-14)
    assert s.envelope_ratio == pytest.approx(abs(s.psi) / Envelopes(p.params).bound(0.41))


def test_conjugation_identity(levels):
    for p in levels[:3]:
        assert abs(abs(p.Xi_prime) - 1) < 1e-8
        fn = psi_function(p)
        for x in off_lattice((-0.7, 0.1, 0.6, 1.3), p):
            lhs = p.Xi_prime * fn(x).conjugate()
            rhs = cmath.exp(1j * math.pi * x * x) * fn(x)
            assert abs(lhs - rhs) <= 1e-8 * abs(rhs)


def test_pole_at_sigma_is_removable(levels):
    p = levels[0]
    # sigma and its lattice image sigma + P are zeros of the denominator
    for x0 in (p.sigma, p.sigma + p.params.period):
        v = assemble_psi(p, x0).psi
        assert math.isfinite(abs(v)) and v != 0
        for d in (1e-4, -1e-4):
            assert abs(assemble_psi(p, x0 + d).psi - v) < 1e-2 * abs(v)


def test_pole_guard_rejects_uncancelled_pole(levels):
    from dataclasses import replace

    p = levels[0]
    wrong = replace(p, Xi=p.Xi * cmath.exp(0.3j))
    with pytest.raises(NearPoleError):
        assemble_psi(wrong, p.sigma)


def test_proportionality_at_levels(levels):
    for p in levels:
        rep = proportionality_check(p)
        assert rep.spread < 1e-6
        assert len(rep.ratios) == len(rep.x)


def test_decay_audit_at_levels(levels):
    for p in levels[:3]:
        rep = decay_audit(p)
        assert rep.ok
        assert rep.rel_err_minus < 0.05 and rep.rel_err_plus < 0.05
        assert 0 < rep.l2_norm < math.inf


def test_l2_norm_grid_converged(levels):
    p = levels[0]
    coarse = decay_audit(p, np.round(np.arange(-12, 12 + 1e-9, 0.1), 10))
    fine = decay_audit(p)
    assert coarse.l2_norm == pytest.approx(fine.l2_norm, rel=1e-3)


def test_stitched_profile_continuous(levels):
    p = levels[0]
    left, right = stitched_profile(p, [-1e-6, 1e-6])
    assert abs(left - right) < 1e-4 * abs(right)


def test_verify_point_accepts_levels(levels):
    ok, diag = verify_point(levels[0])
    assert ok, diag


# ---------------------------------------------------------------- negative controls


def test_perturbed_energy_breaks_oracles(levels):
    for p in levels[:3]:
        base = proportionality_check(p).spread
        moved = proportionality_check(p, E=p.E + 1e-2).spread
        assert moved > 1e3 * base
        fn = psi_function(p)
        xs = off_lattice(RESIDUAL_SAMPLES, p)
        good = max(schrodinger_residual(fn, p.params, p.E, x, "b") for x in xs)
        bad = max(schrodinger_residual(fn, p.params, p.E + 1e-2, x, "b") for x in xs)
        assert bad > 1e3 * max(good, 1e-16)


def test_off_lattice_moves_samples(levels):
    p = levels[0]
    xs = off_lattice([p.sigma, 0.0], p)
    assert abs(xs[0] - p.sigma) >= 0.05
