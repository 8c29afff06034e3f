"""Dense complex linear algebra kernel.

Hermitian and unitary eigensolvers, skew exponentials, operator norms and
singular values. Everything works on plain ``numpy`` arrays.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla


class NotHermitian(ValueError):
    pass


class NotUnitary(ValueError):
    pass


class NoConvergence(RuntimeError):
    pass


class DegenerateClustering(ValueError):
    pass


# largest matrix the pure Jacobi sweep accepts; bigger inputs go to LAPACK
JACOBI_MAX_DIM = 128


def as_matrix(M):
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] < 1:
        raise ValueError("expected a non-empty square matrix, got shape %s" % (M.shape,))
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    return M


def is_hermitian(M, tol=1e-12):
    M = np.asarray(M)
    return bool(np.linalg.norm(M - M.conj().T, 2) <= tol)


def is_unitary(M, tol=1e-10):
    M = np.asarray(M)
    return bool(np.linalg.norm(M.conj().T @ M - np.eye(M.shape[0]), 2) <= tol)


def _symmetry_gap(H):
    return np.max(np.abs(H - H.conj().T))


def _check_hermitian(H, rtol=1e-12):
    scale = max(np.max(np.abs(H)), 1.0)
    if _symmetry_gap(H) > rtol * scale * np.sqrt(H.shape[0]):
        raise NotHermitian("matrix is not Hermitian (gap %.3g)" % _symmetry_gap(H))


def jacobi_eigh(H, tol=1e-14, max_sweeps=50):
    """Cyclic Jacobi for a complex Hermitian matrix.

    Each rotation first removes the phase of the pivot entry and then
    applies the classical real rotation to annihilate it.
    """
    A = np.array(H, dtype=complex)
    n = A.shape[0]
    V = np.eye(n, dtype=complex)
    if n == 1:
        return A.real.diagonal().copy(), V
    scale = np.linalg.norm(A)
    for sweep in range(max_sweeps):
        # direct sum; subtracting the diagonal from the total cancels badly
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol * max(scale, 1e-300):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                mag = abs(apq)
                if mag <= 1e-300 or mag <= 1e-18 * scale:
                    continue
                phase = apq / mag
                theta = (A[q, q].real - A[p, p].real) / (2.0 * mag)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # G = diag(1, conj(phase)) @ [[c, s], [-s, c]]
                g_pp, g_pq = c, s
                g_qp, g_qq = -s * np.conj(phase), c * np.conj(phase)
                cp, cq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = cp * g_pp + cq * g_qp
                A[:, q] = cp * g_pq + cq * g_qq
                rp, rq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = np.conj(g_pp) * rp + np.conj(g_qp) * rq
                A[q, :] = np.conj(g_pq) * rp + np.conj(g_qq) * rq
                A[p, q] = 0.0
                A[q, p] = 0.0
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = vp * g_pp + vq * g_qp
                V[:, q] = vp * g_pq + vq * g_qq
    else:
        raise NoConvergence("Jacobi sweep budget exhausted")
    lam = A.diagonal().real
    order = np.argsort(lam, kind="stable")
    return lam[order], V[:, order]


def herm_eig(H, tol=1e-12, method="auto"):
    """Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.

    method="jacobi" runs the cyclic Jacobi sweep (dim <= JACOBI_MAX_DIM),
    "lapack" calls scipy's eigh, "auto" picks Jacobi for small inputs.
    """
    H = as_matrix(H)
    _check_hermitian(H)
    n = H.shape[0]
    if method == "auto":
        method = "jacobi" if n <= 32 else "lapack"
    if method not in ("jacobi", "lapack"):
        raise ValueError("unknown method %r" % method)
    if method == "jacobi" and n > JACOBI_MAX_DIM:
        raise ValueError("jacobi path is capped at dim %d" % JACOBI_MAX_DIM)
    # work at unit scale so squared entries neither underflow nor overflow
    scale = float(np.max(np.abs(H))) if n else 0.0
    if scale == 0.0:
        return np.zeros(n), np.eye(n, dtype=complex)
    # power-of-two scaling is exact, subnormal inputs included
    e = int(np.frexp(scale)[1])
    Hs = np.ldexp(H.real, -e) + 1j * np.ldexp(H.imag, -e)
    Hs = 0.5 * (Hs + Hs.conj().T)
    lam, V = jacobi_eigh(Hs) if method == "jacobi" else sla.eigh(Hs)
    if np.linalg.norm(Hs @ V - V * lam, 2) > max(tol, 1e-13) * np.linalg.norm(Hs, 2) * 10:
        raise NoConvergence("eigen residual above tolerance")
    return np.ldexp(lam, e), V


@dataclass
class SpectralDecomposition:
    phases: np.ndarray
    vectors: np.ndarray
    clusters: list
    cluster_tol: float
    residual: float = 0.0
    extra: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.phases)

    def cluster_phase(self, index):
        idx = self.clusters[index]
        return float(np.angle(np.mean(np.exp(1j * self.phases[idx]))))

    def cluster_projector(self, index):
        Vc = self.vectors[:, self.clusters[index]]
        return Vc @ Vc.conj().T


def wrap_phase(theta):
    """Map angles into (-pi, pi]."""
    t = np.angle(np.exp(1j * np.asarray(theta, dtype=float)))
    return np.where(t <= -np.pi, np.pi, t)


def circular_distance(a, b):
    return np.abs(wrap_phase(np.asarray(a) - np.asarray(b)))


def cluster_phases(phases, cluster_tol):
    """Single-linkage clustering of angles on the circle."""
    n = len(phases)
    if n == 0:
        return []
    order = np.argsort(phases, kind="stable")
    srt = np.asarray(phases)[order]
    gaps = np.diff(srt)
    groups = [[order[0]]]
    for k in range(1, n):
        if gaps[k - 1] <= cluster_tol:
            groups[-1].append(order[k])
        else:
            groups.append([order[k]])
    # close the seam between +pi and -pi
    if len(groups) > 1 and (srt[0] + 2 * np.pi - srt[-1]) <= cluster_tol:
        groups[0] = groups.pop() + groups[0]
    return [np.array(sorted(g)) for g in groups]


def _group_by_gap(values, tol):
    """Split sorted reals into runs separated by gaps larger than tol."""
    cuts = np.nonzero(np.diff(values) > tol)[0] + 1
    return np.split(np.arange(len(values)), cuts)


def unitary_eig(U, cluster_tol=1e-7, block_tol=1e-5, unitary_tol=1e-10):
    """Spectral decomposition of a unitary matrix.

    Diagonalizes the Hermitian part Re(U) and then, inside each group of
    nearly equal eigenvalues, the skew part Im(U). The pair commutes, so
    the resulting columns are eigenvectors of U.
    """
    U = as_matrix(U)
    n = U.shape[0]
    if not is_unitary(U, unitary_tol * max(1.0, np.sqrt(n))):
        raise NotUnitary("matrix is not unitary within %g" % unitary_tol)
    ReU = 0.5 * (U + U.conj().T)
    ImU = (U - U.conj().T) / 2j
    lam, V = herm_eig(ReU, method="lapack" if n > 32 else "auto")
    for blk in _group_by_gap(lam, block_tol):
        if len(blk) < 2:
            continue
        Vb = V[:, blk]
        Ib = Vb.conj().T @ ImU @ Vb
        Ib = 0.5 * (Ib + Ib.conj().T)
        # the block norm can be tiny, so the relative check in herm_eig does
        # not apply; the residual against U below validates the result
        _, W = sla.eigh(Ib)
        V[:, blk] = Vb @ W
    re = np.einsum("ij,ij->j", V.conj(), ReU @ V).real
    im = np.einsum("ij,ij->j", V.conj(), ImU @ V).real
    phases = wrap_phase(np.arctan2(im, re))
    residual = float(np.max(np.linalg.norm(U @ V - V * np.exp(1j * phases), axis=0)))
    residual = max(residual, float(np.linalg.norm(V.conj().T @ V - np.eye(n), 2)))
    if cluster_tol < 10 * residual:
        raise DegenerateClustering(
            "cluster_tol %.3g below 10x eigen residual %.3g" % (cluster_tol, residual))
    clusters = cluster_phases(phases, cluster_tol)
    return SpectralDecomposition(phases, V, clusters, cluster_tol, residual)


def expm_skew(H, s=1.0):
    """exp(i s H) for Hermitian H through its eigendecomposition."""
    H = as_matrix(H)
    lam, V = herm_eig(H)
    return (V * np.exp(1j * s * lam)) @ V.conj().T


def expm(M, tol=1e-14):
    """General matrix exponential by Taylor scaling and squaring.

    Meant for modest norms; the Taylor core runs until the term drops
    below tol relative to the partial sum.
    """
    M = as_matrix(M)
    nrm = np.linalg.norm(M, 1)
    squarings = max(0, int(np.ceil(np.log2(nrm / 0.5))) if nrm > 0.5 else 0)
    X = M / 2.0 ** squarings
    n = M.shape[0]
    out = np.eye(n, dtype=complex)
    term = np.eye(n, dtype=complex)
    for k in range(1, 40):
        term = term @ X / k
        out = out + term
        if np.linalg.norm(term, 1) <= tol * np.linalg.norm(out, 1):
            break
    for _ in range(squarings):
        out = out @ out
    return out


def singular_values(B):
    """Singular values, descending, as square roots of eig(B^dagger B)."""
    B = np.asarray(B, dtype=complex)
    if B.shape[0] > 32:
        # LAPACK svd is the better-conditioned route at scale
        return np.linalg.svd(B, compute_uv=False)
    lam, _ = herm_eig(B.conj().T @ B)
    return np.sqrt(np.clip(lam[::-1], 0.0, None))


def op_norm(B, method="power", rtol=1e-8, seed=0, max_iter=20000, restarts=3):
    """Largest singular value.

    The default is power iteration on B^dagger B from a seeded start with
    restarts when the Rayleigh quotient stagnates; method="svd" asks LAPACK.
    """
    B = np.asarray(B, dtype=complex)
    if method == "svd":
        return float(np.linalg.norm(B, 2)) if B.size else 0.0
    if method != "power":
        raise ValueError("unknown method %r" % method)
    if not np.any(B):
        return 0.0
    rng = np.random.default_rng(seed)
    n = B.shape[1]
    best = 0.0
    for attempt in range(restarts + 1):
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        v /= np.linalg.norm(v)
        lam_old = 0.0
        for it in range(max_iter):
            w = B.conj().T @ (B @ v)
            lam = np.vdot(v, w).real
            nw = np.linalg.norm(w)
            if nw == 0.0:
                break
            resid = np.linalg.norm(w - lam * v)
            v = w / nw
            if resid <= 1e-3 * rtol * lam or (it > 50 and abs(lam - lam_old) <= 1e-4 * rtol * lam):
                best = max(best, lam)
                break
            lam_old = lam
        else:
            continue
        if best > 0:
            return float(np.sqrt(best))
    raise NoConvergence("power iteration did not settle")
