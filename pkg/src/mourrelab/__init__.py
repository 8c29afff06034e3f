"""Positive-commutator spectral analysis of driven oscillator Floquet operators.

Modules:
    linalg       eigensolvers, unitary spectral decomposition, norms
    functions    closed vocabulary of drive and potential descriptors
    fourier      unitary DFT and Fourier multipliers
    lattice      position grid, x, p, H and interior windows
    propagator   phase functions, free and perturbed Floquet operators
    commutator   commutator identities, C^{1,1} seminorm, mollifier
    mourre       compressed commutators on arcs, Virial, regularized family
    diagnostics  boundary traces, spectral density, U-smoothness constants
    scenarios    named model configurations, Heisenberg couple check
    cli          batch front end
"""

__version__ = "0.1.0"

from .functions import Func, parse_function
from .lattice import GridBasis, InteriorWeight
from .linalg import herm_eig, unitary_eig
from .mourre import Arc, mourre_report
from .propagator import FieldSpec, FloquetScenario, free_propagator, perturbed_floquet
from .scenarios import builtin_scenarios, get_scenario

__all__ = [
    "Arc", "FieldSpec", "FloquetScenario", "Func", "GridBasis", "InteriorWeight",
    "builtin_scenarios", "free_propagator", "get_scenario", "herm_eig", "mourre_report",
    "parse_function", "perturbed_floquet", "unitary_eig",
]
