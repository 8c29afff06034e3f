import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mourrelab import lattice, linalg


def test_position_tiny_grid():
    b = lattice.GridBasis(2, 1.0)
    assert np.allclose(lattice.position_op(b), np.diag([-1.0, 0.0]))


def test_position_norm(small_basis):
    X = lattice.position_op(small_basis)
    assert linalg.is_hermitian(X)
    assert linalg.op_norm(X) == pytest.approx(np.max(np.abs(small_basis.x)), rel=1e-8)


def test_bad_grid():
    with pytest.raises(lattice.BadGrid):
        lattice.GridBasis(0, 1.0)
    with pytest.raises(lattice.BadGrid):
        lattice.momentum_op(lattice.GridBasis(6, 1.0))


def test_momentum_constant_and_harmonic(small_basis):
    b = small_basis
    P = lattice.momentum_op(b)
    assert np.linalg.norm(P @ np.ones(b.n_points)) <= 1e-12
    v = np.exp(1j * np.pi * b.x / b.half_width)
    assert np.linalg.norm(P @ v - (np.pi / b.half_width) * v) <= 1e-10 * np.linalg.norm(v)


def test_momentum_routes_agree():
    b = lattice.GridBasis(32, 4.0)
    assert np.allclose(lattice.momentum_op(b, "fft"), lattice.momentum_op(b, "dense"), atol=1e-12)


def test_oscillator_spectrum_reference():
    b = lattice.GridBasis(512, 12.0, 1.0)
    lam = np.linalg.eigvalsh(lattice.hamiltonian_op(b))
    assert np.max(np.abs(lam[:10] - (np.arange(10) + 0.5))) <= 1e-6


def test_oscillator_ground_state(small_basis):
    b = small_basis
    lam, V = np.linalg.eigh(lattice.hamiltonian_op(b))
    g = np.exp(-b.omega * b.x ** 2 / 2)
    g /= np.linalg.norm(g)
    v = V[:, 0] * np.exp(-1j * np.angle(np.vdot(g, V[:, 0])))
    assert np.linalg.norm(v - g) <= 1e-5


def test_oscillator_frequency_scaling():
    b = lattice.GridBasis(256, 8.5, 2.0)
    lam = np.linalg.eigvalsh(lattice.hamiltonian_op(b))
    assert np.max(np.abs(lam[:6] - 2.0 * (np.arange(6) + 0.5))) <= 1e-5


def test_multiplication_examples(small_basis):
    b = small_basis
    assert np.allclose(lattice.multiplication_op(b, "zero"), 0)
    assert np.allclose(lattice.multiplication_op(b, "constant(1)"), np.eye(b.n_points))
    assert linalg.op_norm(lattice.multiplication_op(b, "gaussian(1, 1)")) == pytest.approx(1.0, rel=1e-8)


def test_interior_full_window_is_identity(small_basis):
    w = lattice.InteriorWeight(small_basis, 1.0, 1.0)
    assert np.allclose(lattice.interior_projector(w), np.eye(small_basis.n_points))


def test_interior_tiny_grid_position_cut():
    b = lattice.GridBasis(4, 1.0)
    w = lattice.InteriorWeight(b, 0.5, 1.0)
    P = lattice.interior_projector(w)
    assert np.allclose(P, np.diag((np.abs(b.x) <= 0.5).astype(float)))


def test_interior_projector_idempotent(small_basis):
    P = lattice.interior_projector(lattice.default_interior(small_basis))
    assert np.linalg.norm(P @ P - P, 2) <= 1e-10
    assert np.linalg.norm(P - P.conj().T, 2) <= 1e-12


def test_canonical_commutation_on_interior():
    # the residual is already at roundoff on the reference grid
    b = lattice.GridBasis(512, 12.0)
    Q = lattice.interior_basis(lattice.default_interior(b))
    X, P = lattice.position_op(b), lattice.momentum_op(b)
    R = Q.conj().T @ (X @ P - P @ X - 1j * np.eye(b.n_points)) @ Q
    assert np.linalg.norm(R, 2) <= 1e-6


def _ccr_residual(n):
    b = lattice.GridBasis(n, 16.0)
    Q = lattice.interior_basis(lattice.InteriorWeight(b, 0.5, 0.5))
    X, P = lattice.position_op(b), lattice.momentum_op(b)
    return np.linalg.norm(Q.conj().T @ (X @ P - P @ X - 1j * np.eye(n)) @ Q, 2)


@pytest.mark.slow
def test_canonical_commutation_stated_window():
    assert _ccr_residual(1024) <= 1e-6


@pytest.mark.slow
def test_canonical_commutation_decreases_with_n():
    # both residuals sit at roundoff (about 1e-11), so doubling N cannot shrink them
    assert _ccr_residual(1024) < _ccr_residual(512)


def test_translation_is_exact_shift_for_whole_sites(small_basis):
    b = small_basis
    T = lattice.translation_unitary(b, 3 * b.spacing)
    v = np.exp(-(b.x) ** 2)
    assert np.allclose(T @ v, np.roll(v, 3), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 8), st.floats(1.0, 20.0), st.floats(0.2, 3.0))
def test_property_grid_operators_hermitian(k, L, w):
    b = lattice.GridBasis(2 ** k, L, w)
    for M in (lattice.position_op(b), lattice.momentum_op(b), lattice.hamiltonian_op(b)):
        assert linalg.is_hermitian(M, 1e-12)
    assert b.spacing == pytest.approx(2 * L / 2 ** k)
