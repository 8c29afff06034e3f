"""Spectral-type diagnostics for a unitary matrix.

Resolvent matrix elements approached from inside and outside the unit
disk, the Poisson-smoothed spectral density, the five U-smoothness
constants and return probabilities.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .linalg import unitary_eig


class SolveFailure(RuntimeError):
    pass


def k_vector(A, phi, epsilon):
    """Regularized vector (I + i eps A)^{-1} phi."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    A = np.asarray(A, dtype=complex)
    M = np.eye(A.shape[0]) + 1j * epsilon * A
    try:
        return np.linalg.solve(M, np.asarray(phi, dtype=complex))
    except np.linalg.LinAlgError as exc:
        raise SolveFailure(str(exc)) from None


def _resolvent_element(Uh, z, phi, psi):
    n = Uh.shape[0]
    x = np.linalg.solve(np.eye(n) - z * Uh, psi)
    return np.vdot(phi, x)


@dataclass
class BoundaryTrace:
    theta_grid: np.ndarray
    r_sequence: np.ndarray
    values_inside: np.ndarray   # shape (len(theta), len(r))
    values_outside: np.ndarray
    cauchy_gaps: np.ndarray     # inside branch, shape (len(theta), len(r) - 1)
    cauchy_gaps_outside: np.ndarray
    failures: list = field(default_factory=list)

    def rows(self):
        for i, th in enumerate(self.theta_grid):
            for k, r in enumerate(self.r_sequence):
                yield th, r, self.values_inside[i, k], self.values_outside[i, k]


def boundary_trace(U, phi, psi, theta_grid, r_sequence):
    """F+(theta, r) = <phi, (1 - r e^{i theta} U^dagger)^{-1} psi> and
    F-(theta, r) = <phi, (1 - r^{-1} e^{i theta} U^dagger)^{-1} psi> by dense solves."""
    U = np.asarray(U, dtype=complex)
    Uh = U.conj().T
    phi = np.asarray(phi, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    th = np.asarray(theta_grid, dtype=float)
    rs = np.asarray(r_sequence, dtype=float)
    if np.any((rs <= 0) | (rs >= 1)):
        raise ValueError("radii must lie in (0, 1)")
    Fin = np.full((len(th), len(rs)), np.nan + 0j)
    Fout = np.full((len(th), len(rs)), np.nan + 0j)
    failures = []
    for i, t in enumerate(th):
        for k, r in enumerate(rs):
            try:
                Fin[i, k] = _resolvent_element(Uh, r * np.exp(1j * t), phi, psi)
                Fout[i, k] = _resolvent_element(Uh, np.exp(1j * t) / r, phi, psi)
            except np.linalg.LinAlgError:
                failures.append((float(t), float(r)))
    gaps = np.abs(np.diff(Fin, axis=1))
    gaps_out = np.abs(np.diff(Fout, axis=1))
    return BoundaryTrace(th, rs, Fin, Fout, gaps, gaps_out, failures)


def gap_floor(gaps):
    """Last value of the initial monotonically decreasing run of a gap sequence."""
    g = np.asarray(gaps, dtype=float)
    k = 0
    while k + 1 < len(g) and g[k + 1] < g[k]:
        k += 1
    return float(g[k]), k


def poisson_density(U, phi, theta_grid, r, method="auto", dec=None):
    """d(theta) = (1/2pi) <phi, [(1 - zU^dagger)^{-1} - (1 - conj(z)^{-1} U^dagger)^{-1}] phi>.

    method="solve" uses dense solves at every angle, "spectral" sums over
    the eigen decomposition of U; "auto" picks the spectral route for long
    angle grids.
    """
    if not 0 < r < 1:
        raise ValueError("r must lie in (0, 1)")
    U = np.asarray(U, dtype=complex)
    phi = np.asarray(phi, dtype=complex)
    th = np.asarray(theta_grid, dtype=float)
    if method == "auto":
        method = "spectral" if len(th) > 64 else "solve"
    if method == "solve":
        Uh = U.conj().T
        out = np.empty(len(th), dtype=complex)
        for i, t in enumerate(th):
            z = r * np.exp(1j * t)
            out[i] = _resolvent_element(Uh, z, phi, phi) - _resolvent_element(Uh, 1.0 / np.conj(z), phi, phi)
        out /= 2 * np.pi
    elif method == "spectral":
        dec = dec or unitary_eig(U)
        w = np.abs(dec.vectors.conj().T @ phi) ** 2
        z = r * np.exp(1j * th)[:, None]
        e = np.exp(-1j * dec.phases)[None, :]
        out = (1.0 / (1 - z * e) - 1.0 / (1 - e / np.conj(z))) @ w / (2 * np.pi)
    else:
        raise ValueError("unknown method %r" % method)
    return out


def trapezoid_periodic(values, theta_grid):
    """Trapezoid rule for a periodic function sampled on a uniform full-circle grid."""
    th = np.asarray(theta_grid)
    return float(np.sum(values).real * (2 * np.pi / len(th)))


def dyadic_arcs(k_min=2, k_max=None, n=None, offsets_per_arc=4, shift=1e-3):
    """Arcs of length 2pi/2^k, k = k_min..k_max, with offsets on a coarse grid.

    The default k_max is log2(n) - 1. A small irrational offset keeps the
    endpoints away from lattice eigenphases.
    """
    if k_max is None:
        k_max = int(np.log2(n)) - 1
    arcs = []
    for k in range(k_min, k_max + 1):
        ell = 2 * np.pi / 2 ** k
        step = ell / offsets_per_arc
        for lo in np.arange(-np.pi, np.pi, step) + shift * np.sqrt(2):
            arcs.append((lo, ell))
    return arcs


@dataclass
class SmoothnessReport:
    C1: float
    C2: float
    C3: float
    C4: float
    C5: float
    n_max: int
    z_grid_size: int
    agreement_spread: float
    c1_growth: bool
    c1_half: float
    n_arcs: int

    def to_dict(self):
        return dict(self.__dict__)


def usmooth_constants(U, B, phi_samples=None, n_max=64, z_grid=None, arcs=None, dec=None):
    """The five U-smoothness constants of B.

    Without phi_samples each sup over unit vectors is the exact top
    eigenvalue of the relevant positive matrix; with samples the sup runs
    over the given vectors only (a lower bound).
    """
    if n_max < 16:
        raise ValueError("n_max must be >= 16")
    U = np.asarray(U, dtype=complex)
    B = np.asarray(B, dtype=complex)
    n = U.shape[0]
    dec = dec or unitary_eig(U)
    V, th = dec.vectors, dec.phases
    samples = None if phi_samples is None else np.asarray(phi_samples, dtype=complex)

    def top(M):
        M = 0.5 * (M + M.conj().T)
        if samples is None:
            return float(np.linalg.eigvalsh(M)[-1])
        return float(np.max(np.real(np.einsum("ij,ik,kj->j", samples.conj(), M, samples))))

    # C1: sum_{|m|<=n_max} U^-m B^dagger B U^m is a Dirichlet-weighted
    # Hadamard product in the eigenbasis
    K = V.conj().T @ (B.conj().T @ B) @ V
    alpha = th[None, :] - th[:, None]

    def dirichlet(m):
        s = np.sin(alpha / 2)
        with np.errstate(invalid="ignore", divide="ignore"):
            d = np.sin((m + 0.5) * alpha) / s
        return np.where(np.abs(s) < 1e-12, 2.0 * m + 1.0, d)

    def c1_at(m):
        S = V @ (K * dirichlet(m)) @ V.conj().T
        return top(S) / (2 * np.pi)

    C1 = c1_at(n_max)
    C1_half = c1_at(n_max // 2)
    growth = C1 > 1.5 * C1_half

    # C3, C4 over arcs
    arcs = arcs if arcs is not None else dyadic_arcs(n=n)
    C3 = C4 = 0.0
    BV = B @ V
    for lo, ell in arcs:
        d = (th - lo) % (2 * np.pi)
        idx = np.nonzero((d > 0) & (d < ell))[0]
        if idx.size == 0:
            continue
        Bv = BV[:, idx]
        Ev = V[:, idx]
        if samples is None:
            # nonzero spectra of E B^dagger B E and B E B^dagger agree with these
            C3 = max(C3, top(Bv.conj().T @ Bv) / ell)
            C4 = max(C4, top(Bv @ Bv.conj().T) / ell if Bv.shape[0] <= Bv.shape[1]
                     else top(Bv.conj().T @ Bv) / ell)
        else:
            C3 = max(C3, top(Ev @ (Bv.conj().T @ Bv) @ Ev.conj().T) / ell)
            C4 = max(C4, top(B @ Ev @ Ev.conj().T @ B.conj().T) / ell)

    # C2 and C5 by dense solves on the z grid
    zs = np.asarray(z_grid if z_grid is not None else
                    (1 - np.geomspace(0.3, 8.0 / n, 12))[:, None] * np.exp(1j * np.linspace(-np.pi, np.pi, 64, endpoint=False))[None, :],
                    dtype=complex).ravel()
    Uh = U.conj().T
    I = np.eye(n)
    C2 = C5 = 0.0
    Bh = B.conj().T
    for z in zs:
        lu = sla.lu_factor(I - z * Uh)
        R_Bh = sla.lu_solve(lu, Bh)
        C5 = max(C5, (1 - abs(z) ** 2) * top(R_Bh.conj().T @ R_Bh) / (2 * np.pi))
        X = sla.lu_solve(lu, I + z * Uh)
        ReX = 0.5 * (X + X.conj().T)
        C2 = max(C2, abs(top(B @ ReX @ Bh)) / (2 * np.pi))
    vals = [C1, C3, C4, C5]
    spread = (max(vals) - min(vals)) / max(max(vals), 1e-300)
    return SmoothnessReport(C1, C2, C3, C4, C5, n_max, len(zs), float(spread), bool(growth),
                            C1_half, len(arcs))


def return_probability(U, psi, M):
    """a_n = |<psi, U^n psi>|^2 for n = 1..M and their Cesaro mean."""
    if M > 4096:
        raise ValueError("M must be <= 4096")
    U = np.asarray(U, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    a = np.empty(M)
    v = psi.copy()
    for k in range(M):
        v = U @ v
        a[k] = abs(np.vdot(psi, v)) ** 2
    return a, float(np.mean(a))


def coherent_state(basis, x0=0.0, p0=0.0):
    """Normalized Gaussian centred at (x0, p0) with the oscillator width."""
    x = basis.x
    w = basis.omega
    v = np.exp(-0.5 * w * (x - x0) ** 2 + 1j * p0 * x)
    return v / np.linalg.norm(v)
