"""Commutator calculus for a fixed conjugate operator A.

Iterated commutators ad_A^k, the momentum commutator of the Floquet
operator computed two ways, mollification of potentials, the C^{1,1}
second-difference seminorm, BCH series checks, power growth of
ad_A^j U^m and the Fourier functional calculus.
"""
from dataclasses import dataclass, field

import numpy as np

from . import lattice
from . import propagator as prop
from .functions import Func, parse_function
from .linalg import expm, op_norm


class DimensionMismatch(ValueError):
    pass


class NotConverged(RuntimeError):
    pass


def ad(A, B):
    return A @ B - B @ A


def ad_k(A, B, k):
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape or A.ndim != 2:
        raise DimensionMismatch("shapes %s and %s do not match" % (A.shape, B.shape))
    if k < 0:
        raise ValueError("k must be nonnegative")
    out = B
    for _ in range(k):
        out = A @ out - out @ A
    return out


def _norm(M):
    return op_norm(M, method="svd")


def _interior(Q, M):
    return Q.conj().T @ M @ Q


# momentum commutator of the Floquet operator

@dataclass
class BTResult:
    direct: np.ndarray
    integral: np.ndarray
    interior_gap: float
    phi1: float
    bound_lhs: float
    bound_rhs: float
    time_steps: int


def potential_derivative(scenario):
    """Grid samples of dV/dx; spectral differentiation windowed to the interior
    when the descriptor has no analytic derivative."""
    V = scenario.potential
    b = scenario.basis
    if V.has_derivative:
        return V.derivative(b.x)
    from . import fourier
    d = fourier.apply_multiplier(1j * b.p, V(b.x).astype(complex)).real
    mask = np.abs(b.x) <= scenario.interior_fraction * b.half_width
    return np.where(mask, d, 0.0)


def commutator_BT(scenario, time_steps=None, interior=None):
    """U(T)^dagger p U(T) - p computed directly and from the integral identity

        U(T)^dagger p U(T) - p = -phi1(T) - int_0^T cos(omega tau) U(tau)^dagger V' U(tau) dtau.
    """
    if scenario.potential is None:
        raise prop.NoPotential("scenario has no potential")
    b = scenario.basis
    n = time_steps or scenario.time_steps
    w = b.omega
    dV = potential_derivative(scenario)
    ph = prop.phase_functions(scenario.field, w, scenario.period)
    I_int, U, _ = prop.integrated_conjugate(scenario.with_(time_steps=n), lambda t: np.cos(w * t), dV, n)
    _, P = prop._x_p(b)
    direct = U.conj().T @ P @ U - P
    integral = -ph.phi1 * np.eye(b.n_points) - I_int
    Q = lattice.interior_basis(interior or scenario.interior)
    gap = _norm(_interior(Q, direct - integral))
    lhs = _norm(_interior(Q, direct + ph.phi1 * np.eye(b.n_points)))
    rhs = scenario.period * float(np.max(np.abs(dV)))
    return BTResult(direct, integral, gap, ph.phi1, lhs, rhs, n)


# mollifier

def mollify(V, epsilon, nodes=64, tol=1e-10):
    """V_eps(x) = int V(x - eps tau) exp(-tau^2/4) dtau / sqrt(4 pi).

    With tau = 2s the kernel becomes exp(-s^2)/sqrt(pi), so Gauss-Hermite
    nodes apply directly. Returns a callable descriptor-like object; use
    ``.tabulate(basis)`` for a tabulated Func on a grid.
    """
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must lie in (0, 1]")
    return Mollified(parse_function(V), float(epsilon), nodes, tol)


@dataclass(frozen=True)
class Mollified:
    base: Func
    epsilon: float
    nodes: int = 64
    tol: float = 1e-10

    def _rule(self, n):
        s, w = np.polynomial.hermite.hermgauss(n)
        return 2.0 * self.epsilon * s, w / np.sqrt(np.pi)

    def _apply(self, g, x, n):
        shifts, w = self._rule(n)
        x = np.asarray(x, dtype=float)
        return np.tensordot(w, g(x[None, ...] - shifts.reshape((-1,) + (1,) * x.ndim)), axes=1)

    def _converged_nodes(self, g, x):
        """Double the rule until two successive sizes agree to tol."""
        n = self.nodes
        coarse = self._apply(g, x, n)
        while n <= 1024:
            fine = self._apply(g, x, 2 * n)
            scale = max(1.0, float(np.max(np.abs(fine))) if np.size(fine) else 1.0)
            if not np.size(fine) or np.max(np.abs(coarse - fine)) <= self.tol * scale:
                return fine
            n, coarse = 2 * n, fine
        raise prop.QuadratureFailure("Gauss-Hermite rule not converged for %s" % self.base)

    def __call__(self, x):
        return self._converged_nodes(self.base, x)

    @property
    def has_derivative(self):
        return self.base.has_derivative

    def derivative(self, x):
        return self._converged_nodes(self.base.derivative, x)

    def tabulate(self, basis):
        from .functions import tabulate
        return tabulate(self, basis.x[0], basis.spacing, basis.n_points)

    def __str__(self):
        return "mollified(%s, %r)" % (self.base, self.epsilon)


# C^{1,1} seminorm

@dataclass
class RegularitySeminorm:
    value: float
    t_min: float
    converged: bool
    t_grid: np.ndarray = field(repr=False)
    inner_grid: dict = field(default_factory=dict)
    halved_value: float = float("nan")

    def to_dict(self):
        return {"value": self.value, "t_min": self.t_min, "converged": self.converged,
                "halved_value": self.halved_value,
                "grid": {"t_nodes": int(len(self.t_grid)), **self.inner_grid}}


def _second_difference_l1(V, xs, dx, t):
    """int |V(x - t) + V(x + t) - 2 V(x)| dx by the rectangle rule on xs."""
    return np.sum(np.abs(V(xs - t) + V(xs + t) - 2.0 * V(xs)), axis=-1) * dx


def _seminorm_on(V, xs, dx, t_min, per_decade):
    n = max(2, int(np.ceil(per_decade * np.log10(1.0 / t_min))) + 1)
    ts = np.geomspace(t_min, 1.0, n)
    g = np.array([_second_difference_l1(V, xs, dx, t) for t in ts])
    # int g(t)/t^2 dt = int g(t)/t d(log t)
    return float(np.trapezoid(g / ts, np.log(ts))), ts


def c11_seminorm(V, t_min=0.01, basis=None, per_decade=40, rtol=0.05, raise_on_fail=False):
    """Truncated C^{1,1} seminorm int_{t_min}^1 (int |V(x-t)+V(x+t)-2V(x)| dx) dt/t^2.

    Analytic descriptors are evaluated at the shifted points directly;
    tabulated data goes through linear interpolation. The spatial integral
    runs over the grid window. Convergence is judged by halving t_min.
    """
    if not 0 < t_min <= 0.1:
        raise ValueError("t_min must lie in (0, 0.1]")
    if not isinstance(V, Mollified):
        V = parse_function(V)
    basis = basis or lattice.GridBasis()
    xs, dx = basis.x, basis.spacing
    value, ts = _seminorm_on(V, xs, dx, t_min, per_decade)
    halved, _ = _seminorm_on(V, xs, dx, t_min / 2, per_decade)
    scale = max(abs(value), abs(halved))
    converged = scale == 0.0 or abs(halved - value) <= rtol * scale
    if not converged and raise_on_fail:
        raise NotConverged("seminorm changed by more than %g%% when t_min was halved" % (100 * rtol))
    return RegularitySeminorm(value, t_min, bool(converged), ts,
                              {"n_points": basis.n_points, "half_width": basis.half_width},
                              halved)


def c11_bruteforce(V, t_min=0.01, basis=None, refine=4, t_nodes=4000):
    """Independent double midpoint sum at refined x resolution, uniform in t."""
    basis = basis or lattice.GridBasis()
    V = parse_function(V) if not isinstance(V, Mollified) else V
    n = basis.n_points * refine
    dx = 2 * basis.half_width / n
    xs = -basis.half_width + dx * (np.arange(n) + 0.5)
    edges = np.linspace(t_min, 1.0, t_nodes + 1)
    ts = 0.5 * (edges[1:] + edges[:-1])
    dt = edges[1] - edges[0]
    total = 0.0
    for t in ts:
        total += _second_difference_l1(V, xs, dx, t) / t ** 2
    return float(total * dt)


# BCH

@dataclass
class BCHResult:
    series_gap: float
    bound_margins: tuple
    lhs_norm: float
    tail_estimate: float


def bch_check(A, B, terms=12):
    """Compare exp(-B) A exp(B) - A with its commutator series.

    The series is sum_{k>=1} (-1)^(k-1)/k! ad_B^(k-1)(ad_A B). The margins
    are e^||B|| ||ad_A B|| - ||lhs|| and e^||B|| ||ad_A B|| - ||ad_A e^{iB}||;
    both are nonnegative when the displayed inequalities hold.
    """
    if terms < 1:
        raise ValueError("terms must be >= 1")
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    lhs = expm(-B) @ A @ expm(B) - A
    adAB = ad(A, B)
    partial = np.zeros_like(A)
    term = adAB
    fact = 1.0
    for k in range(1, terms + 1):
        fact *= k
        partial = partial + ((-1) ** (k - 1) / fact) * term
        term = ad(B, term)
    gap = _norm(lhs - partial)
    nB = _norm(B)
    nad = _norm(adAB)
    bound = np.exp(nB) * nad
    m1 = bound - _norm(lhs)
    m2 = bound - _norm(ad(A, expm(1j * B)))
    tail = nad * sum((2 * nB) ** (k - 1) / np.prod(np.arange(1, k + 1, dtype=float))
                     for k in range(terms + 1, terms + 40))
    return BCHResult(gap, (float(m1), float(m2)), _norm(lhs), float(tail))


# powers

@dataclass
class PowerGrowth:
    j: int
    C: float
    rows: list  # (m, measured, bound)
    violations: list


def power_growth(A, U, j, m_max, interior=None):
    """||ad_A^j U^m|| for m = 1..m_max against the bound C^j m^j.

    C = sqrt(sum_{i<=j} ||ad_A^i U||^2). With ``interior`` (orthonormal
    columns) every norm is taken on the compressed block.
    """
    if j > 3 or m_max > 64:
        raise ValueError("power_growth supports j <= 3 and m_max <= 64")
    A = np.asarray(A, dtype=complex)
    U = np.asarray(U, dtype=complex)

    def nrm(M):
        return _norm(_interior(interior, M)) if interior is not None else _norm(M)

    C = np.sqrt(sum(nrm(ad_k(A, U, i)) ** 2 for i in range(j + 1)))
    rows, bad = [], []
    Um = np.eye(U.shape[0], dtype=complex)
    for m in range(1, m_max + 1):
        Um = Um @ U
        val = nrm(ad_k(A, Um, j))
        bound = C ** j * m ** j
        rows.append((m, float(val), float(bound)))
        if val > bound + 1e-9:
            bad.append(m)
    return PowerGrowth(j, float(C), rows, bad)


# Fourier functional calculus

def fourier_calculus(U, coefficients, A, j):
    """Phi(U) = sum c_m U^m and the termwise commutator sum_m c_m ad_A^j U^m."""
    if j > 2:
        raise ValueError("fourier_calculus supports j <= 2")
    U = np.asarray(U, dtype=complex)
    n = U.shape[0]
    Uinv = U.conj().T
    Phi = np.zeros((n, n), dtype=complex)
    adj = np.zeros((n, n), dtype=complex)
    for m, c in coefficients:
        base = U if m >= 0 else Uinv
        Um = np.linalg.matrix_power(base, abs(int(m)))
        Phi += c * Um
        adj += c * ad_k(A, Um, j)
    gap = _norm(ad_k(A, Phi, j) - adj)
    return Phi, adj, float(gap)


def smoothed_arc_coefficients(center, half_width, modes=15, sigma=None):
    """Fourier coefficients of a smoothed indicator of an arc (Fejer-damped)."""
    m = np.arange(-modes, modes + 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        c = np.where(m == 0, half_width / np.pi, np.sin(m * half_width) / (np.pi * np.where(m == 0, 1, m)))
    damp = 1.0 - np.abs(m) / (modes + 1.0)
    c = c * damp * np.exp(-1j * m * center)
    return list(zip(m.tolist(), c.tolist()))


def lipschitz_constant_fit(V, epsilons, basis=None):
    """Fit c in ||V_eps - V||_inf <= c eps over an epsilon grid."""
    basis = basis or lattice.GridBasis()
    V = parse_function(V)
    xs = basis.x
    errs = np.array([np.max(np.abs(mollify(V, e)(xs) - V(xs))) for e in epsilons])
    return float(np.max(errs / np.asarray(epsilons))), errs
