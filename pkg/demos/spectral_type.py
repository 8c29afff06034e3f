"""Telling point spectrum from continuous spectrum at finite size.

Three indicators, each compared between a non-resonant drive (pure point)
and the resonant sine drive (translation, continuous):
return probabilities, resolvent boundary traces and the Poisson-smoothed
spectral density.

    python3 demos/spectral_type.py
"""
import numpy as np

from mourrelab import diagnostics, lattice, scenarios

basis = lattice.GridBasis(128, 8.5, 1.0)
psi = diagnostics.coherent_state(basis, 1.0, 0.0)

for name in ("NONRES", "RES_SIN"):
    U = scenarios.floquet(scenarios.get_scenario(name, basis))
    _, mean = diagnostics.return_probability(U, psi, 256)
    th = np.linspace(-np.pi, np.pi, 2048, endpoint=False)
    d = diagnostics.poisson_density(U, psi, th, 0.99).real
    print("%-8s mean return probability %.3f; density peak %.1f, mass %.4f"
          % (name, mean, d.max(), diagnostics.trapezoid_periodic(d, th)))

# boundary traces on the exact lattice shift: gaps shrink until the level spacing takes over
print("\nshift model, Cauchy-gap floor along r -> 1 between two eigenphases:")
for n in (128, 256, 512):
    U = scenarios.shift_matrix(n)
    ph = np.sort(np.angle(np.linalg.eigvals(U)))
    phi = np.zeros(n); phi[n // 2] = 1
    chi = np.zeros(n); chi[n // 2 + 1] = 1
    i = np.searchsorted(ph, 0.9)
    theta = ph[i] + 0.25 * (ph[i + 1] - ph[i])
    tr = diagnostics.boundary_trace(U, phi, chi, [theta], 1 - 2.0 ** (-np.arange(4, 60) / 4))
    floor, k = diagnostics.gap_floor(tr.cauchy_gaps[0])
    print("  N = %4d: floor %.2e after %d steps" % (n, floor, k))

e1 = np.zeros(4); e1[0] = 1
tr = diagnostics.boundary_trace(np.eye(4, dtype=complex), e1, e1, [0.0], [0.9, 0.99, 0.999])
print("identity at theta = 0 (an eigenvalue): |F| =", np.round(np.abs(tr.values_inside[0]), 1))
