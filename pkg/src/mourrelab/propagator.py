"""Free AC-Stark propagator in closed form and the perturbed Floquet operator.

The free dynamics H0(t) = p^2/2 + omega^2 x^2/2 + E(t) x is solved by

    U0(t) = exp(-i phi1 x) exp(i phi2 p / omega) exp(-i H_omega t) exp(i psi)

with phi1, phi2, psi quadratures of the drive. A bounded potential V is
added in the interaction picture, W(t) = U0(t)^dagger V U0(t), and the
full propagator is U(t) = U0(t) Omega(t).
"""
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.integrate import cumulative_simpson

from . import fourier, lattice
from .functions import Func, parse_function


class QuadratureFailure(RuntimeError):
    pass


class NoPotential(ValueError):
    pass


def adaptive_simpson(f, a, b, tol=1e-10, max_depth=40, min_depth=3):
    """Adaptive composite Simpson rule; returns (value, error estimate).

    Panels are refined breadth first so that f is called once per level on
    an array of abscissae; f may be complex valued. A panel is accepted once
    its two halves agree with the parent to 15 times its share of tol.
    Raises QuadratureFailure when panels remain open at max_depth.
    """
    if b == a:
        return 0.0, 0.0
    lo = np.array([a], dtype=float)
    hi = np.array([b], dtype=float)
    ends = f(np.array([a, 0.5 * (a + b), b]))
    flo, fmid, fhi = ends[:1], ends[1:2], ends[2:]
    whole = (hi - lo) * (flo + 4 * fmid + fhi) / 6.0
    total, err = 0.0, 0.0
    for depth in range(max_depth + 1):
        mid = 0.5 * (lo + hi)
        vals = f(np.concatenate([0.5 * (lo + mid), 0.5 * (mid + hi)]))
        fl, fr = vals[: lo.size], vals[lo.size:]
        left = (mid - lo) * (flo + 4 * fl + fmid) / 6.0
        right = (hi - mid) * (fmid + 4 * fr + fhi) / 6.0
        delta = left + right - whole
        eps = tol / 2.0 ** depth
        done = (np.abs(delta) <= 15 * eps) if depth >= min_depth else np.zeros(lo.size, bool)
        total = total + np.sum((left + right + delta / 15.0)[done])
        err += float(np.sum(np.abs(delta[done]))) / 15.0
        keep = ~done
        if not keep.any():
            return total, err
        if depth == max_depth:
            break
        lo, mid, hi = lo[keep], mid[keep], hi[keep]
        flo, fl, fmid, fr, fhi = flo[keep], fl[keep], fmid[keep], fr[keep], fhi[keep]
        left, right = left[keep], right[keep]
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
        flo, fmid, fhi = np.concatenate([flo, fmid]), np.concatenate([fl, fr]), np.concatenate([fmid, fhi])
        whole = np.concatenate([left, right])
    raise QuadratureFailure("adaptive Simpson left %d panels open at depth %d" % (lo.size, max_depth))


@dataclass(frozen=True)
class FieldSpec:
    drive: Func
    period: float

    def __post_init__(self):
        object.__setattr__(self, "drive", parse_function(self.drive))
        if not self.period > 0:
            raise ValueError("period must be positive")
        probe = np.linspace(0.0, self.period, 97)
        gap = np.max(np.abs(self.drive(probe + self.period) - self.drive(probe)))
        if gap > 1e-12 * max(1.0, np.max(np.abs(self.drive(probe)))):
            raise ValueError("drive %s is not %g-periodic (gap %.3g)" % (self.drive, self.period, gap))

    def __call__(self, t):
        return self.drive(np.asarray(t, dtype=float))


@dataclass(frozen=True)
class PhaseTriple:
    phi1: float
    phi2: float
    psi: float
    t: float
    quadrature_error: float


def _phi_complex(field, omega, t, tol):
    # phi1 + i phi2 = int_0^t E(tau) exp(-i omega (tau - t)) dtau
    return adaptive_simpson(lambda s: field(s) * np.exp(-1j * omega * (s - t)), 0.0, t, tol)


def phi_pair(field, omega, t, tol=1e-10):
    val, err = _phi_complex(field, omega, t, tol)
    return float(val.real), float(val.imag), err


@lru_cache(maxsize=256)
def phase_functions(field, omega, t, tol=1e-10):
    """phi1(t), phi2(t) and the global phase psi(t) = -1/2 int (phi1^2 - phi2^2).

    The psi integral is nested: its integrand evaluates phi1, phi2 by an
    inner adaptive rule at tol/10.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if tol <= 0:
        raise ValueError("tol must be positive")
    phi1, phi2, err = phi_pair(field, omega, t, tol)
    inner = tol / 10.0
    inner_err = [0.0]

    def integrand(ss):
        out = np.empty(len(ss))
        for i, s in enumerate(ss):
            v, e = _phi_complex(field, omega, s, inner)
            inner_err[0] = max(inner_err[0], e)
            out[i] = v.real ** 2 - v.imag ** 2
        return out

    val, perr = adaptive_simpson(integrand, 0.0, t, tol / 2.0)
    total_err = max(err, perr + inner_err[0])
    if total_err > tol:
        raise QuadratureFailure("phase quadrature error %.3g above tolerance" % total_err)
    return PhaseTriple(phi1, phi2, -0.5 * float(val), float(t), float(total_err))


@dataclass(frozen=True)
class FloquetScenario:
    basis: lattice.GridBasis
    field: FieldSpec
    potential: Func = None
    time_steps: int = 256
    dyson_order: int = 6
    interior_fraction: float = 0.5

    def __post_init__(self):
        if self.potential is not None:
            object.__setattr__(self, "potential", parse_function(self.potential))
        if self.time_steps < 2 or self.time_steps % 2:
            raise ValueError("time_steps must be an even integer >= 2")
        if self.dyson_order < 0:
            raise ValueError("dyson_order must be nonnegative")

    @property
    def omega(self):
        return self.basis.omega

    @property
    def period(self):
        return self.field.period

    @property
    def omega0(self):
        return 2.0 * np.pi / self.field.period

    @property
    def resonant(self):
        return abs(self.omega - self.omega0) <= 1e-12

    @property
    def interior(self):
        return lattice.InteriorWeight(self.basis, self.interior_fraction)

    def with_(self, **kw):
        return replace(self, **kw)


@lru_cache(maxsize=8)
def _oscillator_eig(basis):
    lam, E = np.linalg.eigh(lattice.hamiltonian_op(basis))
    lam.setflags(write=False)
    E.setflags(write=False)
    return lam, E


@lru_cache(maxsize=8)
def _x_p(basis):
    X = lattice.position_op(basis)
    P = lattice.momentum_op(basis)
    X.setflags(write=False)
    P.setflags(write=False)
    return X, P


def oscillator_evolution(basis, t):
    """exp(-i H_omega t) from the cached eigendecomposition."""
    lam, E = _oscillator_eig(basis)
    return (E * np.exp(-1j * lam * t)) @ E.conj().T


def momentum_shift(basis, a):
    """exp(i a p) as a dense matrix."""
    return fourier.fourier_multiplier(np.exp(1j * a * basis.p))


def free_propagator(scenario, t, phases=None):
    if t < 0:
        raise ValueError("t must be nonnegative")
    b = scenario.basis
    if t == 0:
        return np.eye(b.n_points, dtype=complex)
    ph = phases or phase_functions(scenario.field, b.omega, t)
    left = np.exp(-1j * ph.phi1 * b.x)[:, None]
    S = momentum_shift(b, ph.phi2 / b.omega)
    return np.exp(1j * ph.psi) * (left * (S @ oscillator_evolution(b, t)))


def heisenberg_rhs(scenario, t, which, phases=None):
    """Affine right-hand side of the free Heisenberg evolution of x or p."""
    b = scenario.basis
    w = b.omega
    X, P = _x_p(b)
    ph = phases or phase_functions(scenario.field, w, t)
    I = np.eye(b.n_points)
    c, s = np.cos(w * t), np.sin(w * t)
    if which == "x":
        return X * c + P * (s / w) - (ph.phi2 / w) * I
    if which == "p":
        return -X * (w * s) + P * c - ph.phi1 * I
    raise ValueError("which must be 'x' or 'p'")


def heisenberg_residual(scenario, t, which, interior=None):
    b = scenario.basis
    X, P = _x_p(b)
    O = X if which == "x" else P
    if which not in ("x", "p"):
        raise ValueError("which must be 'x' or 'p'")
    ph = phase_functions(scenario.field, b.omega, t) if t > 0 else PhaseTriple(0.0, 0.0, 0.0, 0.0, 0.0)
    U = free_propagator(scenario, t, ph) if t > 0 else np.eye(b.n_points, dtype=complex)
    R = U.conj().T @ O @ U - heisenberg_rhs(scenario, t, which, ph)
    Q = lattice.interior_basis(interior or scenario.interior)
    return float(np.linalg.norm(Q.conj().T @ R @ Q, 2))


class _Frame:
    """Interaction-picture data in the oscillator eigenbasis.

    For a diagonal multiplier f(x), U0(t)^dagger f U0(t) equals
    exp(iHt) S^dagger f S exp(-iHt) with S = exp(i phi2 p / omega); in the
    eigenbasis of H this is D G^dagger diag(f) G D^dagger with
    G = S E and D = diag(exp(i lam t)).
    """

    def __init__(self, scenario):
        self.scenario = scenario
        self.basis = scenario.basis
        self.lam, self.E = _oscillator_eig(self.basis)

    def at(self, t):
        b = self.basis
        phi1, phi2, _ = phi_pair(self.scenario.field, b.omega, t, 1e-11)
        G = fourier.apply_multiplier(np.exp(1j * (phi2 / b.omega) * b.p), self.E)
        D = np.exp(1j * self.lam * t)
        return G, D

    def conjugated(self, t, values):
        G, D = self.at(t)
        Wt = G.conj().T @ (values[:, None] * G)
        return D[:, None] * Wt * D.conj()[None, :]

    def to_grid(self, M):
        return self.E @ M @ self.E.conj().T

    def from_grid(self, M):
        return self.E.conj().T @ M @ self.E


def _potential_values(scenario):
    if scenario.potential is None:
        raise NoPotential("scenario has no potential")
    return lattice.sample(scenario.basis, scenario.potential)


def propagate_interaction(scenario, time_steps=None, potential_values=None, visit=None):
    """Midpoint-exponential stepping of Omega in the oscillator eigenbasis.

    Each step multiplies by exp(-i dt W(t_mid)), which equals
    U0^dagger exp(-i dt V) U0 exactly, so unitarity is kept to roundoff.
    ``visit(k, t_k, Omega_eig)`` is called at every node. Returns Omega(T)
    in the grid basis.
    """
    n = time_steps or scenario.time_steps
    vals = _potential_values(scenario) if potential_values is None else np.asarray(potential_values)
    frame = _Frame(scenario)
    T = scenario.period
    dt = T / n
    phase = np.exp(-1j * dt * vals)
    Om = np.eye(scenario.basis.n_points, dtype=complex)
    if visit is not None:
        visit(0, 0.0, Om)
    for k in range(n):
        tm = (k + 0.5) * dt
        G, D = frame.at(tm)
        M = G.conj().T @ (phase[:, None] * G)
        Om = D[:, None] * (M @ (D.conj()[:, None] * Om))
        if visit is not None:
            visit(k + 1, (k + 1) * dt, Om)
    return frame.to_grid(Om)


def perturbed_floquet(scenario, time_steps=None):
    """(U(T), Omega(T)) with U(T) = U0(T) Omega(T)."""
    Om = propagate_interaction(scenario, time_steps)
    U0 = free_propagator(scenario, scenario.period)
    return U0 @ Om, Om


def dyson_series(scenario, order=None, time_steps=None, potential_values=None):
    """Truncated Dyson series for Omega(T).

    Iterates Omega_j(t) = -i int_0^t W(tau) Omega_{j-1}(tau) dtau with a
    cumulative composite Simpson rule on the stepping nodes. The truncation
    remainder is bounded by (T ||V||)^(J+1) / (J+1)!.
    """
    J = scenario.dyson_order if order is None else order
    if J < 0:
        raise ValueError("order must be nonnegative")
    n = time_steps or scenario.time_steps
    vals = _potential_values(scenario) if potential_values is None else np.asarray(potential_values)
    N = scenario.basis.n_points
    if J == 0:
        return np.eye(N, dtype=complex)
    frame = _Frame(scenario)
    ts = np.linspace(0.0, scenario.period, n + 1)
    W = np.empty((n + 1, N, N), dtype=complex)
    for k, t in enumerate(ts):
        W[k] = frame.conjugated(t, vals)
    term = np.broadcast_to(np.eye(N, dtype=complex), (n + 1, N, N))
    total = np.eye(N, dtype=complex)
    for _ in range(J):
        integrand = np.matmul(W, term)
        # scipy's cumulative rule is real-only, so split the parts
        cum = (cumulative_simpson(integrand.real, x=ts, axis=0, initial=0.0)
               + 1j * cumulative_simpson(integrand.imag, x=ts, axis=0, initial=0.0))
        term = -1j * cum
        total = total + term[-1]
    return frame.to_grid(total)


def dyson_remainder_bound(scenario, order=None):
    J = scenario.dyson_order if order is None else order
    vnorm = float(np.max(np.abs(_potential_values(scenario))))
    x = scenario.period * vnorm
    return x ** (J + 1) / float(np.prod(np.arange(1, J + 2)))


def integrated_conjugate(scenario, weight, values, time_steps=None, potential_values=None):
    """int_0^T weight(tau) U(tau)^dagger f U(tau) dtau by composite Simpson.

    ``values`` samples the multiplier f on the grid. Returns the integral
    together with U(T) and Omega(T).
    """
    n = time_steps or scenario.time_steps
    frame = _Frame(scenario)
    f = np.asarray(values)
    dt = scenario.period / n
    acc = np.zeros((scenario.basis.n_points,) * 2, dtype=complex)

    def visit(k, t, Om):
        # composite Simpson weights 1, 4, 2, ..., 4, 1 times dt/3
        c = 1.0 if k in (0, n) else (4.0 if k % 2 else 2.0)
        G, D = frame.at(t)
        X = G @ (D.conj()[:, None] * Om)
        acc[...] += (c * dt / 3.0 * weight(t)) * (X.conj().T @ (f[:, None] * X))

    Om_grid = propagate_interaction(scenario, n, potential_values, visit)
    integral = frame.to_grid(acc)
    U0 = free_propagator(scenario, scenario.period)
    return integral, U0 @ Om_grid, Om_grid
