"""Periodic position grid for L^2(R) observables.

Position is diagonal, momentum is diagonal after the unitary DFT. The
interior projector picks out states that sit well inside both the position
window and the momentum window, where grid operators behave like their
continuum counterparts.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import fourier
from .functions import parse_function

# eigenvalue cut used when rounding the compressed window to a projector
INTERIOR_KEEP = 1.0 - 1e-10


class BadGrid(ValueError):
    pass


class NonFinite(ValueError):
    pass


@dataclass(frozen=True)
class GridBasis:
    n_points: int = 512
    half_width: float = 12.0
    omega: float = 1.0

    def __post_init__(self):
        if not isinstance(self.n_points, (int, np.integer)) or self.n_points < 1:
            raise BadGrid("n_points must be a positive integer")
        if not fourier.is_power_of_two(int(self.n_points)):
            raise BadGrid("n_points must be a power of two, got %s" % self.n_points)
        if not self.half_width > 0:
            raise BadGrid("half_width must be positive")
        if not self.omega > 0:
            raise BadGrid("omega must be positive")

    @property
    def spacing(self):
        return 2.0 * self.half_width / self.n_points

    @property
    def x(self):
        return -self.half_width + self.spacing * np.arange(self.n_points)

    @property
    def p(self):
        """Signed lattice momenta in DFT order (0, 1, ..., -N/2, ..., -1)."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, self.spacing)

    @property
    def p_max(self):
        return np.pi / self.spacing


@dataclass(frozen=True)
class InteriorWeight:
    basis: GridBasis
    fraction: float = 0.5
    # None means the phase-space matched cutoff omega * fraction * L
    momentum_fraction: float = None

    def __post_init__(self):
        if not 0 < self.fraction <= 1:
            raise ValueError("fraction must lie in (0, 1]")
        if self.momentum_fraction is not None and not 0 < self.momentum_fraction <= 1:
            raise ValueError("momentum_fraction must lie in (0, 1]")

    @property
    def momentum_cutoff(self):
        b = self.basis
        if self.momentum_fraction is None:
            return min(b.omega * self.fraction * b.half_width, b.p_max)
        return self.momentum_fraction * b.p_max

    @property
    def effective_momentum_fraction(self):
        return self.momentum_cutoff / self.basis.p_max


def position_op(basis):
    return np.diag(basis.x).astype(complex)


def momentum_symbol_op(basis, symbol, method="fft"):
    return fourier.fourier_multiplier(symbol, method=method)


def momentum_op(basis, method="fft"):
    if not fourier.is_power_of_two(int(basis.n_points)):
        raise BadGrid("n_points must be a power of two")
    P = fourier.fourier_multiplier(basis.p, method=method)
    return 0.5 * (P + P.conj().T)


def hamiltonian_op(basis, method="fft"):
    """H = p^2/2 + omega^2 x^2 / 2 with the kinetic term diagonal in momentum."""
    K = fourier.fourier_multiplier(0.5 * basis.p ** 2, method=method)
    H = K + np.diag(0.5 * basis.omega ** 2 * basis.x ** 2)
    return 0.5 * (H + H.conj().T)


def sample(basis, f):
    f = parse_function(f)
    vals = np.asarray(f(basis.x), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NonFinite("function %s is not finite on the grid" % f)
    return vals


def multiplication_op(basis, f):
    return np.diag(sample(basis, f)).astype(complex)


def interior_basis(w, keep=INTERIOR_KEEP):
    """Orthonormal columns spanning the range of the interior projector.

    The compressed window Q_x Q_p Q_x is diagonalized on the support of
    Q_x and eigenvalues above ``keep`` are retained.
    """
    b = w.basis
    xs = b.x
    inside = np.nonzero(np.abs(xs) <= w.fraction * b.half_width + 1e-12 * b.half_width)[0]
    pmask = (np.abs(b.p) <= w.momentum_cutoff + 1e-12 * b.p_max).astype(float)
    if inside.size == b.n_points and pmask.all():
        return np.eye(b.n_points, dtype=complex)
    Qp = fourier.fourier_multiplier(pmask)
    M = Qp[np.ix_(inside, inside)]
    lam, V = sla.eigh(0.5 * (M + M.conj().T))
    cols = V[:, lam >= keep]
    out = np.zeros((b.n_points, cols.shape[1]), dtype=complex)
    out[inside] = cols
    return out


def interior_projector(w, keep=INTERIOR_KEEP):
    Q = interior_basis(w, keep)
    P = Q @ Q.conj().T
    return 0.5 * (P + P.conj().T)


def default_interior(basis):
    return InteriorWeight(basis)


def compress(P, M):
    return P @ M @ P


def translation_unitary(basis, shift):
    """exp(-i shift p): translates wavefunctions by +shift on the periodic grid."""
    return fourier.fourier_multiplier(np.exp(-1j * shift * basis.p))
