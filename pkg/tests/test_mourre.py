import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mourrelab import lattice, linalg
from mourrelab import mourre as mo
from mourrelab import propagator as prop
from mourrelab import scenarios as sc
from mourrelab.functions import Func
from conftest import random_hermitian, random_unitary


def test_arc_basics():
    a = mo.Arc(3.0, -3.0)
    assert a.wraps and a.length == pytest.approx(2 * np.pi - 6.0)
    assert a.contains(np.pi) and not a.contains(0.0)
    assert mo.Arc.circle().contains_arc(a)
    assert mo.parse_arc("full").full
    with pytest.raises(ValueError):
        mo.parse_arc("nonsense")


def test_spectral_projector_examples():
    U = np.diag([1, 1j, -1])
    dec = linalg.unitary_eig(U)
    assert np.allclose(mo.spectral_projector(dec, mo.Arc.circle()), np.eye(3))
    assert np.allclose(mo.spectral_projector(dec, mo.Arc(0.1, 0.2)), 0)
    assert np.allclose(mo.spectral_projector(dec, mo.Arc(np.pi / 4, 3 * np.pi / 4)), np.diag([0, 1, 0]))


def test_endpoint_warning():
    dec = linalg.unitary_eig(np.diag([1, 1j]))
    with pytest.warns(mo.EndpointWarning):
        mo.arc_indices(dec, mo.Arc(0.0, 1.0))


def test_mourre_identity_conjugate_gives_zero(rng):
    U = random_unitary(rng, 8)
    rep = mo.mourre_report(U, np.eye(8), use_interior=False)
    assert rep.strict_c == pytest.approx(0.0, abs=1e-12)


def test_mourre_free_resonant(small_basis):
    named = sc.get_scenario("RES_SIN", small_basis)
    U = sc.floquet(named)
    A = sc.conjugate_operator(named.scenario, "A2")
    rep = mo.mourre_report(U, A, interior=named.scenario.interior)
    assert rep.strict_c == pytest.approx(1.0, abs=1e-5)
    assert rep.first_k_reaching(0.5) == 0
    assert np.allclose(rep.remainder_svals, 0)
    d = rep.to_dict()
    assert d["dim_range"] == rep.dim_range and len(d["deviation_svals"]) == rep.dim_range


def test_mourre_on_arc_restricts_to_eigenvectors(rng):
    U = random_unitary(rng, 10)
    A = random_hermitian(rng, 10)
    dec = linalg.unitary_eig(U)
    arc = mo.Arc(-1.0, 1.5)
    rep = mo.mourre_report(U, A, arc, use_interior=False, dec=dec)
    V = dec.vectors[:, mo.arc_indices(dec, arc)]
    M = V.conj().T @ (U.conj().T @ A @ U - A) @ V
    assert np.allclose(rep.compressed_spectrum, np.linalg.eigvalsh(0.5 * (M + M.conj().T)), atol=1e-12)


def test_translation_arc_has_no_interior_range(small_basis):
    # plane-wave eigenvectors never lie inside a localized window
    named = sc.get_scenario("RES_SIN", small_basis)
    U = sc.floquet(named)
    A = sc.conjugate_operator(named.scenario, "A2")
    with pytest.raises(mo.EmptyArc):
        mo.mourre_report(U, A, mo.Arc(-1.0, 1.0), interior=named.scenario.interior)


def test_mourre_needs_window(rng):
    with pytest.raises(ValueError):
        mo.mourre_report(random_unitary(rng, 4), np.eye(4))


def test_remainder_is_below_threshold_part():
    U = np.eye(4, dtype=complex)
    # U^dagger A U - A vanishes, so every eigenvalue sits 0.5 below threshold
    rep = mo.mourre_report(U, np.diag([1.0, 2, 3, 4]), use_interior=False)
    assert np.allclose(rep.remainder_svals, 0.5)
    assert np.allclose(rep.extra["deviation_svals"], 1.0)


def test_virial_diagonal_exact(rng):
    U = np.diag(np.exp(1j * np.array([0.1, 0.5, 2.0, -1.0])))
    A = random_hermitian(rng, 4)
    dec = linalg.unitary_eig(U)
    for ci in range(len(dec.clusters)):
        block, scalars, _ = mo.virial_residual(U, A, dec, ci)
        assert block <= 1e-14 and np.all(scalars <= 1e-14)


def test_virial_random(rng):
    U = random_unitary(rng, 20)
    A = random_hermitian(rng, 20)
    dec = linalg.unitary_eig(U)
    for ci in range(len(dec.clusters)):
        _, scalars, bound = mo.virial_residual(U, A, dec, ci)
        assert np.all(scalars <= 1e-10)
        assert np.all(scalars <= bound + 1e-12)


def test_virial_nonresonant_interior(small_basis):
    named = sc.get_scenario("NONRES", small_basis)
    U = sc.floquet(named)
    _, P = prop._x_p(small_basis)
    dec = linalg.unitary_eig(U)
    Q = lattice.interior_basis(named.scenario.interior)
    worst = 0.0
    for ci, c in enumerate(dec.clusters):
        w = np.linalg.norm(Q.conj().T @ dec.vectors[:, c], axis=0) ** 2
        if np.max(w) < 0.99:
            continue
        _, scalars, _ = mo.virial_residual(U, P, dec, ci)
        worst = max(worst, float(np.max(scalars)))
    assert worst <= 1e-6


def test_eigen_count_examples():
    n = 5
    dec = linalg.unitary_eig(np.eye(n))
    full = np.eye(n)
    count, mult, _ = mo.eigen_count(dec, mo.Arc.circle(), full)
    assert count == 1 and mult == [n]
    dec = linalg.unitary_eig(np.diag([1, 1, 1j]))
    count, mult, _ = mo.eigen_count(dec, mo.Arc(-0.5, 0.5), np.eye(3))
    assert count == 1 and mult == [2]


def test_theorem_a_zero_potential(small_basis):
    named = sc.get_scenario("RES_SIN", small_basis)
    scen = named.scenario.with_(potential=Func("zero"))
    crit = mo.theorem_a_criteria(scen)
    assert crit.strict_bound_1 == pytest.approx(-abs(crit.phi1))
    assert crit.strict_bound_2 == pytest.approx(-np.pi, abs=1e-9)
    assert crit.vanishing_derivative and crit.hypothesis_c11 == 0.0


@pytest.mark.parametrize("a", [0.05, 0.2, 0.5])
def test_theorem_a_gaussian_threshold(small_basis, a):
    named = sc.get_scenario("RES_SIN", small_basis)
    scen = named.scenario.with_(potential=Func("gaussian", (a, 1.0)))
    crit = mo.theorem_a_criteria(scen)
    sup = a * np.sqrt(2 / np.e)
    # grid sampling of the sup, spacing 0.13
    assert crit.sup_derivative == pytest.approx(sup, rel=1e-2)
    assert crit.strict_bound_2 == pytest.approx(2 * np.pi * crit.sup_derivative - np.pi, abs=1e-9)
    # strict iff a < (1/2) sqrt(e/2)
    assert (crit.strict_bound_2 < 0) == (a < 0.5 * np.sqrt(np.e / 2))


def test_theorem_a_non_decaying_derivative(small_basis):
    named = sc.get_scenario("RES_SIN", small_basis)
    scen = named.scenario.with_(potential=Func("sin", (0.1, 1.0)))
    assert not mo.theorem_a_criteria(scen).vanishing_derivative


def test_regularized_family_closed_form(small_basis):
    named = sc.get_scenario("RES_SIN", small_basis)
    A = sc.conjugate_operator(named.scenario, "A2")
    eps = np.array([0.05, 0.2])
    zs = np.array([0.0, 0.5, 0.9j, -0.99])
    rep = mo.regularized_family(named.scenario, A, eps, zs)
    assert np.allclose(rep.norms_G_plus[:, 0], 1.0)
    # B(eps) = I up to the window, so G = (1 - z e^{-eps} U^dagger)^{-1} and U is normal
    th = linalg.unitary_eig(sc.floquet(named)).phases
    dist = np.abs(1 - zs[None, None, :] * np.exp(-eps)[:, None, None] * np.exp(-1j * th)[None, :, None])
    assert np.allclose(rep.norms_G_plus, 1.0 / dist.min(axis=1), rtol=1e-6)
    # full-circle closed form as the upper envelope
    assert np.all(rep.norms_G_plus <= 1.0 / (1.0 - np.abs(zs)[None, :] * np.exp(-eps)[:, None]) * (1 + 1e-9))
    assert np.all(np.isfinite(rep.lem1_margins)) and np.all(rep.lem1_margins <= 1.0 + 1e-9)
    assert not rep.failures


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.integers(2, 12))
def test_property_virial_exact_in_finite_dimension(seed, n):
    r = np.random.default_rng(seed)
    U = random_unitary(r, n)
    A = random_hermitian(r, n)
    dec = linalg.unitary_eig(U)
    for ci in range(len(dec.clusters)):
        _, scalars, bound = mo.virial_residual(U, A, dec, ci)
        assert np.all(scalars <= bound + 1e-12)


@settings(max_examples=20, deadline=None)
@given(st.floats(-np.pi, np.pi), st.floats(0.01, 3.0), st.floats(-np.pi, np.pi))
def test_property_arc_contains_consistent(center, half, theta):
    a = mo.Arc.around(center, half)
    inside = bool(a.contains(theta))
    d = abs(linalg.wrap_phase(theta - center))
    if d < half - 1e-9:
        assert inside
    if d > half + 1e-9:
        assert not inside
