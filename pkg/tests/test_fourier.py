import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mourrelab import fourier


@pytest.mark.parametrize("n", [1, 2, 8, 64])
def test_fft_matches_dense_dft(rng, n):
    a = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    assert np.allclose(fourier.fft(a), fourier.dft_matrix(n) @ a, atol=1e-12)
    # unitary normalization of numpy's convention
    assert np.allclose(fourier.fft(a), np.fft.fft(a) / np.sqrt(n), atol=1e-12)


def test_dft_matrix_unitary_and_read_only():
    F = fourier.dft_matrix(16)
    assert np.allclose(F.conj().T @ F, np.eye(16), atol=1e-13)
    with pytest.raises(ValueError):
        F[0, 0] = 0


def test_fft_rejects_non_power_of_two():
    with pytest.raises(ValueError):
        fourier.fft(np.ones(6))


def test_multiplier_routes_agree(rng):
    sym = rng.standard_normal(32)
    A = fourier.fourier_multiplier(sym, "fft")
    B = fourier.fourier_multiplier(sym, "dense")
    assert np.allclose(A, B, atol=1e-12)
    v = rng.standard_normal(32) + 0j
    assert np.allclose(fourier.apply_multiplier(sym, v), A @ v, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 7), st.integers(0, 2 ** 31 - 1))
def test_property_round_trip_and_parseval(k, seed):
    n = 2 ** k
    r = np.random.default_rng(seed)
    a = r.standard_normal(n) + 1j * r.standard_normal(n)
    b = fourier.fft(a)
    assert np.allclose(fourier.ifft(b), a, atol=1e-12)
    assert np.linalg.norm(b) == pytest.approx(np.linalg.norm(a), rel=1e-12)
