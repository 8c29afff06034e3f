"""Positive-commutator diagnostics for unitary operators.

Spectral projectors on arcs of the circle, compressed commutator spectra
E (U^dagger A U - A) E, Virial residuals on eigenvectors, the smallness
criteria for a perturbing potential, and the regularized resolvent family
T(z) = 1 - z U_eps^dagger exp(-eps B(eps)) with its norm bounds.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import commutator as cm
from . import lattice
from . import propagator as prop
from .linalg import SpectralDecomposition, circular_distance, unitary_eig, wrap_phase


class EmptyArc(ValueError):
    pass


class NotAnEigenvalue(ValueError):
    pass


class EndpointWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Arc:
    """Open arc from lo to hi going counterclockwise; ``full`` is the circle."""
    lo: float = -np.pi
    hi: float = np.pi
    full: bool = False

    @classmethod
    def circle(cls):
        return cls(-np.pi, np.pi, True)

    @classmethod
    def around(cls, center, half_width):
        if half_width >= np.pi:
            return cls.circle()
        return cls(float(wrap_phase(center - half_width)), float(wrap_phase(center + half_width)))

    def __post_init__(self):
        if not self.full and not 0 < self.length <= 2 * np.pi:
            raise ValueError("arc length must lie in (0, 2pi]")

    @property
    def wraps(self):
        return (not self.full) and wrap_phase(self.hi) < wrap_phase(self.lo)

    @property
    def length(self):
        if self.full:
            return 2 * np.pi
        d = (self.hi - self.lo) % (2 * np.pi)
        return d if d > 0 else 2 * np.pi

    def contains(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.full:
            return np.ones(theta.shape, dtype=bool)
        d = (theta - self.lo) % (2 * np.pi)
        return (d > 0) & (d < self.length)

    def contains_arc(self, other):
        if self.full:
            return True
        if other.full:
            return False
        d = (other.lo - self.lo) % (2 * np.pi)
        return d + other.length <= self.length + 1e-15

    def to_dict(self):
        return {"lo": float(self.lo), "hi": float(self.hi), "full": self.full, "wraps": bool(self.wraps)}


def parse_arc(text):
    """'full' or 'lo,hi' in radians."""
    text = str(text).strip()
    if text == "full":
        return Arc.circle()
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise ValueError("arc must be 'full' or 'lo,hi', got %r" % text) from None
    return Arc(lo, hi)


def arc_indices(dec, arc):
    idx = np.nonzero(arc.contains(dec.phases))[0]
    if not arc.full:
        near = np.minimum(circular_distance(dec.phases, arc.lo), circular_distance(dec.phases, arc.hi))
        if np.any(near <= dec.cluster_tol):
            warnings.warn("eigenphase within cluster_tol of an arc endpoint", EndpointWarning)
    return idx


def spectral_projector(dec, arc):
    V = dec.vectors[:, arc_indices(dec, arc)]
    return V @ V.conj().T


@dataclass
class MourreReport:
    arc: Arc
    compressed_spectrum: np.ndarray
    strict_c: float
    compact_rank_k_c: list
    remainder_svals: np.ndarray
    dim_range: int
    reference_c: float = 1.0
    extra: dict = field(default_factory=dict)

    def c_at(self, k):
        return float(self.compressed_spectrum[min(k, self.dim_range - 1)])

    def first_k_reaching(self, level):
        """Smallest k with the (k+1)-th eigenvalue at least ``level``; None if never."""
        hits = np.nonzero(self.compressed_spectrum >= level)[0]
        return int(hits[0]) if hits.size else None

    def to_dict(self):
        return {"arc": self.arc.to_dict(),
                "dim_range": self.dim_range,
                "strict_c": self.strict_c,
                "reference_c": self.reference_c,
                "compressed_spectrum": [float(v) for v in self.compressed_spectrum],
                "compact_rank_k_c": [[int(k), float(c)] for k, c in self.compact_rank_k_c],
                "remainder_svals": [float(v) for v in self.remainder_svals],
                **self.extra}


def _interior_columns(interior, n):
    if interior is None:
        return None
    if isinstance(interior, lattice.InteriorWeight):
        if interior.basis.n_points != n:
            raise ValueError("interior window does not match the operator dimension")
        return lattice.interior_basis(interior)
    Q = np.asarray(interior, dtype=complex)
    if Q.shape[0] != n:
        raise ValueError("interior columns do not match the operator dimension")
    return Q


def range_basis(dec, arc, Q=None, keep=lattice.INTERIOR_KEEP):
    """Orthonormal basis of ran E_arc, or of the part of it inside ran Q."""
    V = dec.vectors[:, arc_indices(dec, arc)]
    if Q is None:
        return V
    if arc.full:
        return Q
    K = V.conj().T @ Q
    lam, W = np.linalg.eigh(K @ K.conj().T)
    return V @ W[:, lam >= keep]


def mourre_report(U, A, arc=None, use_interior=True, interior=None, dec=None,
                  reference_c=1.0, max_k=None, keep=lattice.INTERIOR_KEEP, threshold=None):
    """Spectrum of E (U^dagger A U - A) E restricted to ran E.

    With use_interior the range is cut down to its intersection with the
    interior window, where A = x or p is faithfully represented.
    ``remainder_svals`` are the singular values of the part of the
    compressed commutator lying below ``threshold`` (default half of
    reference_c): a compact term K with E C E >= threshold E + K needs at
    least these singular values. The deviations |lambda - reference_c|
    are kept in ``extra["deviation_svals"]``.
    """
    U = np.asarray(U, dtype=complex)
    A = np.asarray(A, dtype=complex)
    if U.shape != A.shape:
        raise ValueError("U and A dimensions differ")
    arc = arc or Arc.circle()
    n = U.shape[0]
    Q = _interior_columns(interior, n) if use_interior else None
    if use_interior and Q is None:
        raise ValueError("use_interior needs an interior window")
    if dec is None and not arc.full:
        dec = unitary_eig(U)
    if arc.full:
        R = Q if Q is not None else np.eye(n, dtype=complex)
    else:
        R = range_basis(dec, arc, Q, keep)
    if R.shape[1] == 0:
        raise EmptyArc("the arc carries no (interior) spectral subspace")
    C = U.conj().T @ A @ U - A
    M = R.conj().T @ C @ R
    M = 0.5 * (M + M.conj().T)
    spec = np.linalg.eigvalsh(M)
    d = len(spec)
    kmax = d if max_k is None else min(d, max_k)
    ranks = [(k, float(spec[k])) for k in range(kmax)]
    thr = 0.5 * reference_c if threshold is None else threshold
    svals = np.sort(np.clip(thr - spec, 0.0, None))[::-1]
    dev = np.sort(np.abs(spec - reference_c))[::-1]
    return MourreReport(arc, spec, float(spec[0]), ranks, svals, d, reference_c,
                        {"threshold": float(thr), "deviation_svals": [float(v) for v in dev]})


def virial_residual(U, A, dec, cluster_index, tol=1e-8, commutator=None):
    """Norm of P (U^dagger A U - A) P on an eigen-cluster plus per-vector scalars.

    Returns (cluster_norm, scalars, bound) with bound = 2 ||A|| max eigen residual.
    Pass ``commutator`` (and ``A`` as its norm) to reuse U^dagger A U - A
    across clusters.
    """
    idx = dec.clusters[cluster_index]
    V = dec.vectors[:, idx]
    lam = np.exp(1j * dec.phases[idx])
    res = np.linalg.norm(U @ V - V * lam, axis=0)
    if np.max(res) > tol:
        raise NotAnEigenvalue("cluster %d has eigen residual %.3g" % (cluster_index, np.max(res)))
    if commutator is None:
        C = U.conj().T @ A @ U - A
        a_norm = np.linalg.norm(A, 2)
    else:
        C = commutator
        a_norm = float(A) if np.ndim(A) == 0 else np.linalg.norm(A, 2)
    block = V.conj().T @ C @ V
    scalars = np.abs(np.einsum("ij,ij->j", V.conj(), C @ V))
    bound = 2.0 * a_norm * res
    return float(np.linalg.norm(block, 2)), scalars, bound


def eigen_count(dec, arc, localization, threshold=0.5):
    """Clusters inside the arc whose vectors carry interior weight >= threshold.

    ``localization`` is an InteriorWeight, a projector, or orthonormal columns.
    Returns (count, multiplicities, weights of all clusters in the arc).
    """
    n = dec.vectors.shape[0]
    if isinstance(localization, lattice.InteriorWeight):
        Q = lattice.interior_basis(localization)
    else:
        L = np.asarray(localization)
        Q = L if L.shape[1] != n or not np.allclose(L, L.conj().T) else None
        P = L if Q is None else None
    inside = set(arc_indices(dec, arc).tolist())
    count, mult, weights = 0, [], []
    for c in dec.clusters:
        if not any(i in inside for i in c):
            continue
        V = dec.vectors[:, c]
        if Q is not None:
            w = np.linalg.norm(Q.conj().T @ V, axis=0) ** 2
        else:
            w = np.real(np.einsum("ij,ij->j", V.conj(), P @ V))
        weights.append(float(np.max(w)))
        if np.max(w) >= threshold:
            count += 1
            mult.append(len(c))
    return count, mult, weights


@dataclass
class TheoremACriteria:
    hypothesis_c11: float
    c11_converged: bool
    vanishing_derivative: bool
    strict_bound_1: float
    strict_bound_2: float
    sup_derivative: float
    tail_derivative: float
    phi1: float
    phi2: float

    def to_dict(self):
        return {k: (float(v) if isinstance(v, (float, np.floating)) else v)
                for k, v in self.__dict__.items()}


def theorem_a_criteria(scenario, tail_fraction=0.1, tail_tol=1e-6):
    """Numerical check of the smallness hypotheses on V.

    strict_bound_1 = T sup|V'| - |phi1(T)|, strict_bound_2 = T sup|V'| - |phi2(T)|;
    a negative margin means the strict hypothesis holds. For omega = 1 the
    second equals 2 pi sup|V'| - |phi2(T)|.
    """
    if scenario.potential is None:
        raise prop.NoPotential("scenario has no potential")
    b = scenario.basis
    dV = np.abs(cm.potential_derivative(scenario))
    sup = float(np.max(dV))
    tail = np.abs(b.x) >= (1 - tail_fraction) * b.half_width
    tail_max = float(np.max(dV[tail]))
    ph = prop.phase_functions(scenario.field, b.omega, scenario.period)
    sem = cm.c11_seminorm(scenario.potential, basis=b)
    T = scenario.period
    return TheoremACriteria(sem.value, sem.converged, tail_max <= tail_tol * max(sup, 1.0),
                            T * sup - abs(ph.phi1), T * sup - abs(ph.phi2), sup, tail_max,
                            ph.phi1, ph.phi2)


@dataclass
class RegularizedFamilyReport:
    epsilon_grid: np.ndarray
    z_grid: np.ndarray
    norms_G_plus: np.ndarray
    norms_G_minus: np.ndarray
    fitted_C_eps: float
    fitted_C_z: float
    lem1_margins: np.ndarray
    limit_C: float
    condition: np.ndarray
    failures: list = field(default_factory=list)

    def to_dict(self):
        return {"epsilon_grid": [float(e) for e in self.epsilon_grid],
                "z_grid": [[float(z.real), float(z.imag)] for z in self.z_grid],
                "fitted_C_eps": self.fitted_C_eps, "fitted_C_z": self.fitted_C_z,
                "lem1_margins": [float(v) for v in self.lem1_margins],
                "limit_C": self.limit_C, "failures": self.failures}

    def rows(self):
        for i, e in enumerate(self.epsilon_grid):
            for j, z in enumerate(self.z_grid):
                yield e, z, self.norms_G_plus[i, j], self.norms_G_minus[i, j]


def default_z_grid(arc=None, radii=8, angles=16):
    arc = arc or Arc.circle()
    rs = 1.0 - np.geomspace(1e-1, 1e-4, radii)
    if arc.full:
        th = np.linspace(-np.pi, np.pi, angles, endpoint=False)
    else:
        th = arc.lo + arc.length * (np.arange(angles) + 0.5) / angles
    return (rs[:, None] * np.exp(1j * th)[None, :]).ravel()


def regularized_operator(U_eps, A, Q, exterior_value=1.0):
    """B(eps) = Q Q^dagger (A - U A U^dagger) Q Q^dagger + c (1 - Q Q^dagger).

    The interior block is the commutator itself; the exterior block, where
    the grid cannot represent A, is set to the free-model constant c.
    """
    n = U_eps.shape[0]
    inner = Q.conj().T @ (A - U_eps @ A @ U_eps.conj().T) @ Q
    inner = 0.5 * (inner + inner.conj().T)
    P = Q @ Q.conj().T
    return Q @ inner @ Q.conj().T + exterior_value * (np.eye(n) - P)


def regularized_family(scenario, A, epsilon_grid, z_grid=None, U=None, exterior_value=1.0,
                       interior=None):
    """Norms of G(z) = T(z)^{-1} for T+(z) = 1 - z U_eps^dagger exp(-eps B(eps))
    and T-(z) = 1 - conj(z)^{-1} U_eps^dagger exp(eps B(eps))^dagger.

    U_eps is the Floquet operator of the mollified potential (the free one
    when the scenario has no potential). Norms come from singular values of
    T, so ||G|| = 1 / sigma_min(T).
    """
    eps = np.asarray(epsilon_grid, dtype=float)
    zs = np.asarray(default_z_grid() if z_grid is None else z_grid, dtype=complex)
    Q = lattice.interior_basis(interior or scenario.interior)
    n = scenario.basis.n_points
    A = np.asarray(A, dtype=complex)
    if U is None:
        if scenario.potential is None:
            U = prop.free_propagator(scenario, scenario.period)
        else:
            U = prop.perturbed_floquet(scenario)[0]
    Gp = np.full((len(eps), len(zs)), np.nan)
    Gm = np.full((len(eps), len(zs)), np.nan)
    cond = np.full((len(eps), len(zs)), np.nan)
    margins = np.zeros(len(eps))
    limit = np.zeros(len(eps))
    failures = []
    I = np.eye(n)
    for i, e in enumerate(eps):
        if scenario.potential is None:
            Ue = U
        else:
            Ve = cm.mollify(scenario.potential, e)(scenario.basis.x)
            Om = prop.propagate_interaction(scenario, potential_values=Ve)
            Ue = prop.free_propagator(scenario, scenario.period) @ Om
        B = regularized_operator(Ue, A, Q, exterior_value)
        lamB, VB = np.linalg.eigh(B)
        em = (VB * np.exp(-e * lamB)) @ VB.conj().T
        ep = (VB * np.exp(e * lamB)) @ VB.conj().T
        Xp = Ue.conj().T @ em
        Xm = Ue.conj().T @ ep.conj().T
        margins[i] = np.linalg.norm(Xp - U.conj().T, 2) / e
        lim = 0.0
        for j, z in enumerate(zs):
            try:
                Tp = I - z * Xp
                s = sla.svdvals(Tp)
                if s[-1] <= 1e-14 * s[0]:
                    raise np.linalg.LinAlgError("singular T")
                Gp[i, j] = 1.0 / s[-1]
                cond[i, j] = s[0] / s[-1]
                lim = max(lim, np.linalg.norm(Tp - (I - z * U.conj().T), 2) / e)
                if z != 0:
                    Tm = I - Xm / np.conj(z)
                    sm = sla.svdvals(Tm)
                    Gm[i, j] = 1.0 / sm[-1]
            except np.linalg.LinAlgError:
                failures.append((float(e), complex(z)))
        limit[i] = lim
    r = np.abs(zs)
    ok = np.isfinite(Gp)
    c_eps = float(np.nanmax(np.where(ok, eps[:, None] * Gp, np.nan)))
    inside = (r < 1)[None, :] & ok
    c_z = float(np.nanmax(np.where(inside, (1 - r ** 2)[None, :] * Gp, np.nan))) if inside.any() else float("nan")
    return RegularizedFamilyReport(eps, zs, Gp, Gm, c_eps, c_z, margins, float(np.max(limit)), cond, failures)
