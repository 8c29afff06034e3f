import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mourrelab import lattice
from mourrelab import propagator as prop
from mourrelab.functions import Func, cosine

TWO_PI = 2 * np.pi


def field(drive, period=TWO_PI):
    return prop.FieldSpec(drive, period)


def test_adaptive_simpson_polynomial_and_oscillatory():
    v, err = prop.adaptive_simpson(lambda s: s ** 3, 0.0, 2.0, 1e-12)
    assert v == pytest.approx(4.0, abs=1e-12)
    v, _ = prop.adaptive_simpson(lambda s: np.sin(7 * s) ** 2, 0.0, np.pi, 1e-11)
    assert v == pytest.approx(np.pi / 2, abs=1e-10)


def test_field_must_be_periodic():
    with pytest.raises(ValueError):
        prop.FieldSpec(Func("sin", (1.0, 1.3)), TWO_PI)


def test_phases_zero_drive():
    ph = prop.phase_functions(field(Func("zero")), 1.0, TWO_PI)
    assert (ph.phi1, ph.phi2, ph.psi) == pytest.approx((0, 0, 0), abs=1e-14)


@pytest.mark.parametrize("t", [0.7, np.pi / 2, np.pi, 4.0, TWO_PI])
def test_phases_sine_closed_form(t):
    # phi1 = t sin(t)/2, phi2 = -(t cos t / 2 - sin t / 2) for omega = 1
    ph = prop.phase_functions(field(Func("sin", (1.0, 1.0))), 1.0, t)
    assert ph.phi1 == pytest.approx(0.5 * t * np.sin(t), abs=1e-10)
    assert ph.phi2 == pytest.approx(-(0.5 * t * np.cos(t) - 0.5 * np.sin(t)), abs=1e-10)


def test_phases_at_period():
    s = prop.phase_functions(field(Func("sin", (1.0, 1.0))), 1.0, TWO_PI)
    assert (s.phi1, s.phi2, s.psi) == pytest.approx((0.0, -np.pi, 3 * np.pi / 8), abs=1e-9)
    c = prop.phase_functions(field(cosine(1.0, 1.0)), 1.0, TWO_PI)
    assert (c.phi1, c.phi2, c.psi) == pytest.approx((np.pi, 0.0, -np.pi / 8), abs=1e-9)
    n = prop.phase_functions(field(Func("sin", (1.0, 2.0))), 1.0, TWO_PI)
    assert (n.phi1, n.phi2, n.psi) == pytest.approx((0.0, 0.0, -np.pi / 6), abs=1e-9)


def test_phases_reject_bad_arguments():
    f = field(Func("sin", (1.0, 1.0)))
    with pytest.raises(ValueError):
        prop.phase_functions(f, 1.0, -1.0)
    with pytest.raises(ValueError):
        prop.phase_functions(f, 1.0, 1.0, tol=0.0)


def test_scenario_rejects_odd_steps(small_basis):
    with pytest.raises(ValueError):
        prop.FloquetScenario(small_basis, field(Func("zero")), time_steps=7)


def test_free_propagator_zero_drive_is_minus_identity(small_basis):
    sc = prop.FloquetScenario(small_basis, field(Func("zero")))
    U = prop.free_propagator(sc, TWO_PI)
    Q = lattice.interior_basis(sc.interior)
    assert np.linalg.norm(Q.conj().T @ (U + np.eye(small_basis.n_points)) @ Q, 2) <= 1e-8
    assert np.allclose(prop.free_propagator(sc, 0.0), np.eye(small_basis.n_points))


def test_free_propagator_sine_is_translation(small_basis):
    b = small_basis
    sc = prop.FloquetScenario(b, field(Func("sin", (1.0, 1.0))))
    ph = prop.phase_functions(sc.field, 1.0, TWO_PI)
    U = prop.free_propagator(sc, TWO_PI)
    g = np.exp(-(b.x + 2.0) ** 2)
    shifted = np.exp(-(b.x + 2.0 - np.pi) ** 2)
    expected = -np.exp(1j * ph.psi) * shifted
    assert np.max(np.abs(U @ g - expected)) <= 1e-6


@pytest.mark.parametrize("which", ["x", "p"])
@pytest.mark.parametrize("drive", [Func("sin", (1.0, 1.0)), cosine(1.0, 1.0)])
def test_heisenberg_identity(small_basis, which, drive):
    sc = prop.FloquetScenario(small_basis, field(drive))
    assert prop.heisenberg_residual(sc, 0.0, which) == 0.0
    for t in (TWO_PI / 4, TWO_PI / 2, TWO_PI):
        assert prop.heisenberg_residual(sc, t, which) <= 1e-5


def test_cocycle_two_half_periods(small_basis):
    # the second half period sees the drive shifted by T/2: sin -> -sin
    first = prop.FloquetScenario(small_basis, field(Func("sin", (1.0, 1.0))))
    second = prop.FloquetScenario(small_basis, field(Func("sin", (-1.0, 1.0))))
    whole = prop.free_propagator(first, TWO_PI)
    composed = prop.free_propagator(second, TWO_PI / 2) @ prop.free_propagator(first, TWO_PI / 2)
    Q = lattice.interior_basis(first.interior)
    assert np.linalg.norm(Q.conj().T @ (whole - composed) @ Q, 2) <= 1e-7


@pytest.mark.slow
def test_heisenberg_position_halves_with_n():
    res = {}
    for n in (512, 1024):
        sc = prop.FloquetScenario(lattice.GridBasis(n, 12.0), field(Func("sin", (1.0, 1.0))))
        res[n] = prop.heisenberg_residual(sc, TWO_PI / 2, "x")
    assert res[512] <= 1e-5
    # fails honestly: both values are roundoff, not truncation error
    assert res[1024] <= 0.5 * res[512]


def test_unperturbed_floquet_needs_potential(small_basis):
    sc = prop.FloquetScenario(small_basis, field(Func("sin", (1.0, 1.0))))
    with pytest.raises(prop.NoPotential):
        prop.perturbed_floquet(sc)


def test_zero_potential_gives_identity_interaction(small_basis):
    sc = prop.FloquetScenario(small_basis, field(Func("sin", (1.0, 1.0))), Func("zero"), time_steps=16)
    U, Om = prop.perturbed_floquet(sc)
    assert np.allclose(Om, np.eye(small_basis.n_points), atol=1e-12)
    assert np.allclose(U, prop.free_propagator(sc, TWO_PI), atol=1e-12)


def test_interaction_unitary_and_majorized(small_basis):
    sc = prop.FloquetScenario(small_basis, field(Func("sin", (1.0, 1.0))), Func("gaussian", (0.1, 1.0)), time_steps=64)
    U, Om = prop.perturbed_floquet(sc)
    n = small_basis.n_points
    assert np.linalg.norm(Om.conj().T @ Om - np.eye(n), 2) <= 1e-11
    assert np.linalg.norm(Om - np.eye(n), 2) <= np.expm1(TWO_PI * 0.1)


def test_constant_potential_is_scalar_phase(small_basis):
    c = 0.03
    sc = prop.FloquetScenario(small_basis, field(Func("sin", (1.0, 1.0))), Func("constant", (c,)), time_steps=16)
    _, Om = prop.perturbed_floquet(sc)
    assert np.allclose(Om, np.exp(-1j * c * TWO_PI) * np.eye(small_basis.n_points), atol=1e-11)
    D1 = prop.dyson_series(sc, order=1, time_steps=16)
    assert np.allclose(D1, (1 - 1j * c * TWO_PI) * np.eye(small_basis.n_points), atol=1e-11)
    D0 = prop.dyson_series(sc, order=0)
    assert np.allclose(D0, np.eye(small_basis.n_points))


def test_dyson_matches_stepping_small_potential(small_basis):
    sc = prop.FloquetScenario(small_basis, field(Func("sin", (1.0, 1.0))), Func("gaussian", (0.05, 1.0)),
                              time_steps=128)
    D = prop.dyson_series(sc, order=6)
    _, Om = prop.perturbed_floquet(sc)
    _, Om2 = prop.perturbed_floquet(sc, time_steps=256)
    Q = lattice.interior_basis(sc.interior)
    gap = np.linalg.norm(Q.conj().T @ (D - Om) @ Q, 2)
    integ = np.linalg.norm(Q.conj().T @ (Om - Om2) @ Q, 2)
    assert gap <= prop.dyson_remainder_bound(sc, 6) + 10 * integ + 1e-10


@settings(max_examples=15, deadline=None)
@given(st.floats(0.1, 6.0), st.floats(-2.0, 2.0))
def test_property_phases_linear_in_amplitude(t, a):
    f1 = field(Func("sin", (1.0, 1.0)))
    fa = field(Func("sin", (a, 1.0)))
    p1 = prop.phase_functions(f1, 1.0, t)
    pa = prop.phase_functions(fa, 1.0, t)
    assert pa.phi1 == pytest.approx(a * p1.phi1, abs=1e-9)
    assert pa.phi2 == pytest.approx(a * p1.phi2, abs=1e-9)
    assert pa.psi == pytest.approx(a * a * p1.psi, abs=1e-9)
