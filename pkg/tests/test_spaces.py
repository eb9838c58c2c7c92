import cmath
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mirrorp2.errors import DomainError, NonMembershipError
from mirrorp2.qseries import ModularParams, Truncation, phi, psi, psi_series, theta
from mirrorp2.spaces import (
    annulus_samples,
    chi_even,
    chi_V,
    omega_form,
    residual_F,
    residual_G,
    residual_T,
    residual_V,
)

thetas = st.floats(0.25, 1.3)
coords = st.floats(-4, 4)
energies = st.builds(complex, coords, coords)
zetas = st.floats(-0.5, 0.5)
seeds = st.integers(0, 2**16)


def setup(th, zeta):
    P = ModularParams.from_theta(th)
    return P, P.q, P.q * cmath.exp(-2 * math.pi * P.b * zeta)


def worst(res, zs):
    return max(abs(res(complex(z))) for z in zs)


@given(thetas, energies, seeds)
def test_phi_in_F(th, E, seed):
    P, q, _ = setup(th, 0)
    zs = annulus_samples(q, 20, seed)
    assert worst(lambda z: residual_F(lambda u: phi(q, E, u), q, E, z, True), zs) < 1e-10


@given(thetas, energies, seeds, st.booleans())
def test_psi_in_G(th, E, seed, bar):
    P = ModularParams.from_theta(th)
    q, e = (P.q_bar, E.conjugate()) if bar else (P.q, E)
    zs = annulus_samples(q, 20, seed)
    assert worst(lambda z: residual_G(lambda u: psi(q, e, u), q, e, z, True), zs) < 1e-10
    # the same relation holds with the inverted base
    assert worst(lambda z: residual_G(lambda u: psi(1 / q, e, u), 1 / q, e, z, True), zs) < 1e-10


@given(thetas, zetas, seeds)
def test_theta_memberships(th, zeta, seed):
    _, q, alpha = setup(th, zeta)
    zs = annulus_samples(q, 20, seed)
    t = lambda u: theta(u, q)
    assert worst(lambda z: residual_T(t, q, -1, 1, z, True), zs) < 1e-10
    assert worst(lambda z: residual_T(lambda u: theta(alpha * u, q), q, -alpha, 1, z, True), zs) < 1e-10
    # T^1_{p,r} sits inside T^2_{p^2, r^2 p}
    assert worst(lambda z: residual_T(t, q * q, q, 2, z, True), zs) < 1e-10


@given(thetas, zetas, energies, seeds)
def test_chi_in_V(th, zeta, E, seed):
    _, q, alpha = setup(th, zeta)
    zs = annulus_samples(q, 20, seed)
    assert worst(lambda z: residual_V(lambda u: chi_V(q, alpha, E, u), q, alpha, E, z, True), zs) < 1e-10


@given(thetas, zetas, energies, seeds)
def test_chi_times_theta_in_F(th, zeta, E, seed):
    _, q, alpha = setup(th, zeta)
    zs = annulus_samples(q, 20, seed)
    f = lambda u: chi_V(q, alpha, E, u) * theta(-q * q * alpha * u, q * q)
    assert worst(lambda z: residual_F(f, q, E, z, True), zs) < 1e-10


def test_chi_even_symmetry():
    _, q, alpha = setup(0.7, 0.2)
    for w in (0.4 + 0.3j, -1.2j, 2.0):
        assert chi_even(q, alpha, 1.5, -w) == pytest.approx(chi_even(q, alpha, 1.5, w), rel=1e-14)


def test_chi_against_long_summation():
    _, q, alpha = setup(0.9, -0.1)
    E = 2.0 - 1.0j
    long = Truncation(n_max=1024, n_start=1024, adaptive=False)
    for z in annulus_samples(q, 10, 3):
        w = 1 / cmath.sqrt(-complex(z))
        ref = theta(alpha * w, q) * psi_series(q, E, w, long).value + theta(-alpha * w, q) * psi_series(q, E, -w, long).value
        assert chi_V(q, alpha, E, complex(z)) == pytest.approx(ref, rel=1e-12)


def test_chi_vectorised():
    _, q, alpha = setup(0.6, 0.1)
    zs = annulus_samples(q, 6, 1)
    assert np.allclose(chi_V(q, alpha, 0.3, zs), [chi_V(q, alpha, 0.3, complex(z)) for z in zs], rtol=1e-13)


def test_trivial_residuals():
    q, E, z = 0.2 + 0.1j, 1.3, 0.7 - 0.2j
    one = lambda u: 1.0
    assert residual_F(one, q, E, z) == pytest.approx(1 + (z * q) ** 3 - (1 - E * z))
    assert residual_G(lambda u: 0.0, q, E, z) == 0
    assert residual_T(one, q, 1, 0, z) == 0
    with pytest.raises(DomainError):
        residual_F(one, q, E, 0)
    with pytest.raises(DomainError):
        chi_V(q, 0, E, z)


@given(thetas, energies, seeds)
def test_omega_of_psi_is_two(th, E, seed):
    P = ModularParams.from_theta(th)
    zs = annulus_samples(P.q, 10, seed)
    om = omega_form(lambda u: psi(P.q, E, u), P.q, zs)
    assert om.value == pytest.approx(2.0, abs=1e-9)
    assert om.spread < 1e-9


def test_omega_edge_cases():
    P = ModularParams.from_theta(0.8)
    zs = annulus_samples(P.q, 10, 0)
    assert omega_form(lambda u: 0.0, P.q, zs).value == 0
    with pytest.raises(NonMembershipError):
        omega_form(lambda u: phi(P.q, 1.0, u), P.q, zs)


def test_annulus_samples_reproducible():
    p = 0.1 + 0.05j
    a, b = annulus_samples(p, 20, 7), annulus_samples(p, 20, 7)
    assert np.array_equal(a, b)
    assert np.all((np.abs(a) >= abs(p)) & (np.abs(a) <= 1))
