"""Named model configurations and the Heisenberg-couple check.

Each scenario fixes the drive, the perturbation and the grid; the
reference grid is N = 512 points on [-12, 12) with omega = 1.
"""
from dataclasses import dataclass, field

import numpy as np

from . import lattice
from . import propagator as prop
from .functions import Func, cosine, parse_function
from .diagnostics import dyadic_arcs
from .linalg import unitary_eig

EXPECTATIONS = ("pure_point", "ac_translation", "perturbed_strict", "perturbed_compact")

REFERENCE_BASIS = lattice.GridBasis(512, 12.0, 1.0)

# interior window used for the Mourre checks; wide enough for a rank
# count, narrow enough to keep boundary eigenvalues out
MOURRE_FRACTION = 0.7

# golden-ratio convergent used for the non-resonant drive period
NONRES_RATIO = 89.0 / 55.0


@dataclass(frozen=True)
class NamedScenario:
    name: str
    scenario: prop.FloquetScenario
    expected: dict = field(default_factory=dict)
    conjugate: str = None  # which generator the Mourre checks use: "A1", "A2" or None
    note: str = ""

    def __post_init__(self):
        for v in self.expected.values():
            if v not in EXPECTATIONS:
                raise ValueError("unknown expectation %r" % v)


def resonant_field(drive, omega=1.0):
    return prop.FieldSpec(parse_function(drive), 2 * np.pi / omega)


def builtin_scenarios(basis=None):
    b = basis or REFERENCE_BASIS
    w = b.omega
    T = 2 * np.pi / w
    T_nonres = NONRES_RATIO * T
    w0 = 2 * np.pi / T_nonres
    sin_drive = Func("sin", (1.0, w))
    out = [
        NamedScenario("NONRES", prop.FloquetScenario(b, prop.FieldSpec(Func("sin", (1.0, w0)), T_nonres)),
                      {"spectrum": "pure_point"}, None,
                      "omega T / 2pi = 89/55, a stand-in for an irrational ratio"),
        NamedScenario("RES_NULL", prop.FloquetScenario(b, prop.FieldSpec(Func("sin", (1.0, 2 * w)), T)),
                      {"spectrum": "pure_point"}, None,
                      "second harmonic drive: both phases vanish at T"),
        NamedScenario("RES_SIN", prop.FloquetScenario(b, prop.FieldSpec(sin_drive, T)),
                      {"spectrum": "ac_translation"}, "A2"),
        NamedScenario("RES_COS", prop.FloquetScenario(b, prop.FieldSpec(cosine(1.0, w), T)),
                      {"spectrum": "ac_translation"}, "A1"),
        NamedScenario("PERT_STRICT", prop.FloquetScenario(b, prop.FieldSpec(sin_drive, T), Func("gaussian", (0.1, 1.0))),
                      {"spectrum": "perturbed_strict"}, "A2"),
        NamedScenario("PERT_COMPACT", prop.FloquetScenario(b, prop.FieldSpec(sin_drive, T), Func("gaussian", (2.0, 1.0))),
                      {"spectrum": "perturbed_compact"}, "A2",
                      "sup|V'| exceeds the strict bound while V' decays at infinity"),
    ]
    return out


def get_scenario(name, basis=None):
    for s in builtin_scenarios(basis):
        if s.name == name:
            return s
    raise KeyError("unknown scenario %r" % name)


def conjugate_operator(scenario, which):
    """A1 = -p / phi1(T) or A2 = -omega x / phi2(T).

    The signs make U0(T)^dagger A U0(T) - A = +I for the free model.
    """
    b = scenario.basis
    ph = prop.phase_functions(scenario.field, b.omega, scenario.period)
    X, P = prop._x_p(b)
    if which == "A1":
        if abs(ph.phi1) < 1e-9:
            raise ValueError("phi1(T) vanishes; A1 undefined")
        return -P / ph.phi1
    if which == "A2":
        if abs(ph.phi2) < 1e-9:
            raise ValueError("phi2(T) vanishes; A2 undefined")
        return -b.omega * X / ph.phi2
    raise ValueError("which must be 'A1' or 'A2'")


def floquet(named_or_scenario):
    sc = getattr(named_or_scenario, "scenario", named_or_scenario)
    if sc.potential is None:
        return prop.free_propagator(sc, sc.period)
    return prop.perturbed_floquet(sc)[0]


def shift_matrix(n):
    """Cyclic shift S e_k = e_{k+1}."""
    return np.roll(np.eye(n, dtype=complex), 1, axis=0)


@dataclass
class CoupleCheck:
    max_residual: float
    power_residuals: dict
    ad_residuals: dict
    generator_scale: float


def heisenberg_couple_check(T_unitary, A, t_grid, interior=None, scale=1.0, powers=(1, 2, 3)):
    """Residuals of exp(itA) T exp(-itA) = exp(it) T and T^-n A T^n - A = n I.

    ``interior`` (orthonormal columns) compresses every residual. ``scale``
    is s in ad_A T = s T; for a Heisenberg couple s = 1 and ad_A^k T = T.
    """
    T = np.asarray(T_unitary, dtype=complex)
    A = np.asarray(A, dtype=complex)
    n = T.shape[0]
    Q = np.eye(n, dtype=complex) if interior is None else np.asarray(interior)

    def cmp(M):
        return float(np.linalg.norm(Q.conj().T @ M @ Q, 2))

    lam, V = np.linalg.eigh(0.5 * (A + A.conj().T))
    worst = 0.0
    for t in t_grid:
        E = (V * np.exp(1j * t * lam)) @ V.conj().T
        worst = max(worst, cmp(E @ T @ E.conj().T - np.exp(1j * t) * T))
    pres = {}
    Tn = np.eye(n, dtype=complex)
    for k in range(1, max(powers) + 1):
        Tn = Tn @ T
        if k in powers:
            pres[k] = cmp(Tn.conj().T @ A @ Tn - A - k * np.eye(n))
    ares = {}
    adk = T
    for k in (1, 2):
        adk = A @ adk - adk @ A
        ares[k] = cmp(adk - scale ** k * T)
    return CoupleCheck(worst, pres, ares, scale)


def index_position(n):
    """Diagonal position-index operator centred on the grid."""
    return np.diag(np.arange(n) - n // 2).astype(complex)


def ks_uniform_distance(phases):
    """Kolmogorov-Smirnov distance of angles in (-pi, pi] to the uniform law."""
    u = np.sort((np.asarray(phases) + np.pi) / (2 * np.pi))
    n = len(u)
    k = np.arange(1, n + 1)
    return float(max(np.max(k / n - u), np.max(u - (k - 1) / n)))


def translation_model(n, shift, bump_width):
    """Unit-spacing lattice, U = translation by ``shift`` sites, B = bump multiplier."""
    basis = lattice.GridBasis(n, n / 2.0, 1.0)
    U = lattice.translation_unitary(basis, shift)
    B = lattice.multiplication_op(basis, "bump(1, %r)" % float(bump_width))
    return basis, U, B


def translation_z_grid(n, shift, radii=10):
    """Radii down to one eigenphase spacing, angles at half that spacing, on the spectral arc."""
    h = 2 * np.pi * shift / n
    ang = np.arange(-np.pi * shift, np.pi * shift, h / 2) + h / 7
    return (1 - np.geomspace(0.1, h, radii))[:, None] * np.exp(1j * ang)[None, :]


def translation_arcs(n):
    return dyadic_arcs(k_max=int(np.log2(4 * n)))
