import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mourrelab import diagnostics as dg
from mourrelab import scenarios as sc
from mourrelab.linalg import unitary_eig

from conftest import random_hermitian, random_unitary


# k_vector

def test_k_vector_zero_generator_is_identity(rng):
    phi = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    assert np.array_equal(dg.k_vector(np.zeros((6, 6)), phi, 0.3), phi)


def test_k_vector_diagonal(rng):
    a = rng.standard_normal(7)
    phi = rng.standard_normal(7) + 1j * rng.standard_normal(7)
    out = dg.k_vector(np.diag(a), phi, 0.4)
    assert np.allclose(out, phi / (1 + 0.4j * a), atol=1e-14)


def test_k_vector_small_epsilon(rng):
    A = random_hermitian(rng, 8)
    phi = rng.standard_normal(8) + 0j
    out = dg.k_vector(A, phi, 1e-8)
    assert np.linalg.norm(out - phi) <= 1e-6 * np.linalg.norm(A, 2) * np.linalg.norm(phi)


def test_k_vector_rejects_nonpositive_epsilon():
    with pytest.raises(ValueError):
        dg.k_vector(np.eye(2), np.ones(2), 0.0)


# boundary traces

def test_boundary_trace_identity_at_pi():
    U = np.eye(3, dtype=complex)
    e1 = np.array([1.0, 0, 0])
    rs = np.array([0.5, 0.9, 0.99])
    tr = dg.boundary_trace(U, e1, e1, [np.pi], rs)
    assert np.allclose(tr.values_inside[0], 1 / (1 + rs), atol=1e-14)
    assert abs(tr.values_inside[0, -1] - 0.5) < 0.01


def test_boundary_trace_identity_pole_at_zero():
    U = np.eye(3, dtype=complex)
    e1 = np.array([1.0, 0, 0])
    rs = 1 - np.geomspace(0.5, 1e-6, 12)
    tr = dg.boundary_trace(U, e1, e1, [0.0], rs)
    assert np.allclose(tr.values_inside[0], 1 / (1 - rs), rtol=1e-8)
    assert np.all(np.diff(tr.cauchy_gaps[0]) > 0)


def test_boundary_trace_rejects_radius_one():
    with pytest.raises(ValueError):
        dg.boundary_trace(np.eye(2), np.ones(2), np.ones(2), [0.0], [1.0])


def test_shift_trace_gaps_reach_a_floor():
    n = 128
    U = sc.shift_matrix(n)
    ph = np.sort(np.angle(np.linalg.eigvals(U)))
    phi = np.zeros(n); phi[n // 2] = 1
    psi = np.zeros(n); psi[n // 2 + 1] = 1.0
    i = np.searchsorted(ph, 0.9)
    theta = ph[i] + 0.25 * (ph[i + 1] - ph[i])
    rs = 1 - 2.0 ** (-np.arange(4, 60) / 4)
    tr = dg.boundary_trace(U, phi, psi, [theta], rs)
    floor, k = dg.gap_floor(tr.cauchy_gaps[0])
    assert k > 5
    assert floor < 0.2 * tr.cauchy_gaps[0, 0]
    assert np.all(np.isfinite(tr.values_inside))


def test_inside_minus_outside_is_poisson_form(rng):
    U = random_unitary(rng, 10)
    phi = rng.standard_normal(10) + 1j * rng.standard_normal(10)
    th = np.array([-2.0, 0.3, 1.7])
    tr = dg.boundary_trace(U, phi, phi, th, [0.9])
    d = dg.poisson_density(U, phi, th, 0.9, method="solve")
    assert np.allclose((tr.values_inside[:, 0] - tr.values_outside[:, 0]) / (2 * np.pi), d, atol=1e-12)


def test_gap_floor():
    assert dg.gap_floor([5, 3, 1, 2, 0.5]) == (1.0, 2)
    assert dg.gap_floor([1.0]) == (1.0, 0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.complex_numbers(max_magnitude=0.95), st.complex_numbers(max_magnitude=0.95))
def test_resolvent_identity(seed, z1, z2):
    r = np.random.default_rng(seed)
    U = random_unitary(r, 6)
    Uh = U.conj().T
    I = np.eye(6)
    R1 = np.linalg.inv(I - z1 * Uh)
    R2 = np.linalg.inv(I - z2 * Uh)
    assert np.linalg.norm(R1 - R2 - (z1 - z2) * Uh @ R1 @ R2) <= 1e-10 * max(1, np.linalg.norm(R1) * np.linalg.norm(R2))


# Poisson density

def test_density_of_identity_is_poisson_kernel():
    r = 0.8
    th = np.array([0.0, 1.0, np.pi])
    d = dg.poisson_density(np.eye(1, dtype=complex), np.ones(1), th, r, method="solve")
    kernel = (1 - r ** 2) / (1 - 2 * r * np.cos(th) + r ** 2) / (2 * np.pi)
    assert np.allclose(d, kernel, atol=1e-14)
    assert d[0].real == pytest.approx((1 + r) / (1 - r) / (2 * np.pi))


def test_density_routes_agree(rng):
    U = random_unitary(rng, 12)
    phi = rng.standard_normal(12) + 1j * rng.standard_normal(12)
    th = np.linspace(-np.pi, np.pi, 40, endpoint=False)
    a = dg.poisson_density(U, phi, th, 0.95, method="solve")
    b = dg.poisson_density(U, phi, th, 0.95, method="spectral")
    assert np.allclose(a, b, atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.floats(0.1, 0.99))
def test_density_real_positive_with_full_mass(seed, r):
    g = np.random.default_rng(seed)
    U = random_unitary(g, 8)
    phi = g.standard_normal(8) + 1j * g.standard_normal(8)
    th = np.linspace(-np.pi, np.pi, 2048, endpoint=False)
    d = dg.poisson_density(U, phi, th, r)
    assert np.max(np.abs(d.imag)) <= 1e-10 * max(1, np.max(np.abs(d)))
    assert np.min(d.real) >= -1e-10
    if r <= 0.9:
        assert dg.trapezoid_periodic(d, th) == pytest.approx(np.vdot(phi, phi).real, rel=1e-6)


def test_density_concentrates_on_occupied_momenta():
    n = 64
    U = sc.shift_matrix(n)
    k = 2 * np.pi * 5 / n
    phi = np.exp(1j * k * np.arange(n)) / np.sqrt(n)
    th = np.linspace(-np.pi, np.pi, 4096, endpoint=False)
    d = dg.poisson_density(U, phi, th, 0.99)
    assert dg.trapezoid_periodic(d, th) == pytest.approx(1.0, abs=1e-3)
    # the plane wave is an eigenvector of the shift with phase -k
    assert abs(th[np.argmax(d.real)] - (-k)) < 2 * np.pi / len(th) + 1e-12


def test_density_rejects_bad_radius():
    with pytest.raises(ValueError):
        dg.poisson_density(np.eye(2), np.ones(2), [0.0], 1.0)


# U-smoothness constants

def test_usmooth_zero_operator():
    _, U, _ = sc.translation_model(32, 0.5, 2.0)
    rep = dg.usmooth_constants(U, np.zeros((32, 32)), n_max=16)
    assert (rep.C1, rep.C2, rep.C3, rep.C4, rep.C5) == (0.0, 0.0, 0.0, 0.0, 0.0)


def test_usmooth_identity_on_point_spectrum_grows(rng):
    ph = np.sort(rng.uniform(-np.pi, np.pi, 10))
    U = np.diag(np.exp(1j * ph))
    rep = dg.usmooth_constants(U, np.eye(10), n_max=64)
    assert rep.c1_growth
    assert rep.C1 == pytest.approx((2 * 64 + 1) / (2 * np.pi))


def test_usmooth_sampled_sup_is_lower_bound(rng):
    _, U, B = sc.translation_model(32, 0.5, 2.0)
    exact = dg.usmooth_constants(U, B, n_max=32)
    v = rng.standard_normal((32, 5)) + 1j * rng.standard_normal((32, 5))
    v /= np.linalg.norm(v, axis=0)
    sampled = dg.usmooth_constants(U, B, phi_samples=v, n_max=32)
    for name in ("C1", "C2", "C3", "C4", "C5"):
        assert getattr(sampled, name) <= getattr(exact, name) * (1 + 1e-9)


def test_usmooth_rejects_short_sum():
    with pytest.raises(ValueError):
        dg.usmooth_constants(np.eye(2), np.eye(2), n_max=8)


def test_dyadic_arcs_lengths():
    arcs = dg.dyadic_arcs(n=64)
    lengths = sorted({round(ell, 12) for _, ell in arcs})
    assert lengths == sorted(round(2 * np.pi / 2 ** k, 12) for k in range(2, 6))
    assert all(ell > 0 for _, ell in arcs)


# return probability

def test_return_probability_identity():
    a, mean = dg.return_probability(np.eye(4), np.ones(4), 10)
    assert np.allclose(a, 1.0) and mean == pytest.approx(1.0)


def test_return_probability_eigenvector(rng):
    U = random_unitary(rng, 6)
    dec = unitary_eig(U)
    a, _ = dg.return_probability(U, dec.vectors[:, 2], 50)
    assert np.allclose(a, 1.0, atol=1e-10)


def test_return_probability_translation_spreads():
    # unit-width Gaussian on a unit lattice, M = 2N
    basis, U, _ = sc.translation_model(128, 0.5, 2.0)
    psi = dg.coherent_state(basis)
    _, mean = dg.return_probability(U, psi, 256)
    assert mean <= 0.05


def test_return_probability_limit():
    with pytest.raises(ValueError):
        dg.return_probability(np.eye(2), np.ones(2), 5000)


def test_coherent_state_normalized(small_basis):
    v = dg.coherent_state(small_basis, 0.5, 0.3)
    assert np.linalg.norm(v) == pytest.approx(1.0)
