"""Unitary discrete Fourier transform: dense reference and radix-2 fast path.

Both use the convention F[m, k] = exp(-2 pi i m k / N) / sqrt(N) and act
along the first axis.
"""
from functools import lru_cache

import numpy as np


def is_power_of_two(n):
    return isinstance(n, (int, np.integer)) and n >= 1 and (n & (n - 1)) == 0


@lru_cache(maxsize=16)
def _dft_matrix(n):
    k = np.arange(n)
    F = np.exp(-2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)
    F.setflags(write=False)
    return F


def dft_matrix(n):
    """Dense unitary DFT matrix (read-only, cached)."""
    return _dft_matrix(int(n))


@lru_cache(maxsize=16)
def _bit_reverse(n):
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=int)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    rev.setflags(write=False)
    return rev


def fft(a, inverse=False):
    """Iterative radix-2 Cooley-Tukey transform along axis 0 (unitary)."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    if not is_power_of_two(n):
        raise ValueError("radix-2 transform needs a power-of-two length, got %d" % n)
    out = a[_bit_reverse(n)].copy()
    sign = 1.0 if inverse else -1.0
    tail = out.shape[1:]
    size = 2
    while size <= n:
        half = size // 2
        tw = np.exp(sign * 2j * np.pi * np.arange(half) / size)
        tw = tw.reshape((1, half) + (1,) * len(tail))
        blocks = out.reshape((n // size, size) + tail)
        even = blocks[:, :half].copy()
        odd = blocks[:, half:] * tw
        blocks[:, :half] = even + odd
        blocks[:, half:] = even - odd
        out = blocks.reshape((n,) + tail)
        size *= 2
    return out / np.sqrt(n)


def ifft(a):
    return fft(a, inverse=True)


def dft(a):
    """Reference transform through the dense matrix."""
    a = np.asarray(a, dtype=complex)
    return dft_matrix(a.shape[0]) @ a


def idft(a):
    a = np.asarray(a, dtype=complex)
    return dft_matrix(a.shape[0]).conj().T @ a


def fourier_multiplier(symbol, method="fft"):
    """Matrix F^dagger diag(symbol) F."""
    symbol = np.asarray(symbol)
    n = symbol.shape[0]
    if method == "dense":
        F = dft_matrix(n)
        return F.conj().T @ (symbol[:, None] * F)
    if method != "fft":
        raise ValueError("unknown method %r" % method)
    # columns of F are fft(e_k); apply the symbol and transform back
    cols = fft(np.eye(n, dtype=complex))
    return ifft(symbol[:, None] * cols)


def apply_multiplier(symbol, v):
    """F^dagger diag(symbol) F v without building the matrix."""
    v = np.asarray(v, dtype=complex)
    s = np.asarray(symbol).reshape((-1,) + (1,) * (v.ndim - 1))
    return ifft(s * fft(v))
