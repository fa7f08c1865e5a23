"""Environment algebra of a gauge operator: generators, commutant, center.

The environment algebra of a unitary ``S`` on H (x) K is generated by the
``d x d`` matrices ``S^{kl}`` (block entries ``(k, l)`` of every noise block)
and their analogues for ``S^*``.  It is commutative exactly when ``S`` is
block diagonal in some orthonormal basis of K.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .model import QleCoefficients, apply_noise_change


@dataclass(frozen=True)
class Direction:
    S: np.ndarray
    is_wiener: bool
    identity_residual: float = 0.0


@dataclass(frozen=True)
class EnvAlgebraReport:
    generators: list
    commutative: bool
    W_diag: np.ndarray | None
    directions: list = field(default_factory=list)
    commutant_basis: list = field(default_factory=list)
    commutator_residual: float = 0.0
    offdiag_residual: float = 0.0

    @property
    def wiener_indices(self):
        return [i for i, r in enumerate(self.directions) if r.is_wiener]

    @property
    def poisson_indices(self):
        return [i for i, r in enumerate(self.directions) if not r.is_wiener]


def generators(S, n, d):
    """All ``S^{kl}`` followed by all ``(S^*)^{kl}``, ``(k, l)`` in row-major order."""
    S = la.as_square(S, "S")
    B = la.noise_blocks(S, n, d)
    Bs = la.noise_blocks(S.conj().T, n, d)
    gens = [B[:, :, k, l].copy() for k in range(n) for l in range(n)]
    gens += [Bs[:, :, k, l].copy() for k in range(n) for l in range(n)]
    return gens


def max_commutator(gens):
    """Largest relative commutator norm over all pairs, ``||[A,B]|| / max(1, ||A|| ||B||)``."""
    worst = 0.0
    norms = [la.fro(G) for G in gens]
    for a in range(len(gens)):
        for b in range(a + 1, len(gens)):
            A, B = gens[a], gens[b]
            r = la.fro(A @ B - B @ A) / max(1.0, norms[a] * norms[b])
            worst = max(worst, r)
    return worst


def is_commutative(gens, tol=la.DEFAULT_TOL):
    return max_commutator(gens) <= tol


def _commutant_map(S, n, d):
    Ss = S.conj().T
    cols = []
    for a in range(d):
        for b in range(d):
            E = np.zeros((d, d), dtype=complex)
            E[a, b] = 1.0
            Y = la.lift_noise(E, n)
            cols.append(np.concatenate([(Y @ S - S @ Y).ravel(), (Y @ Ss - Ss @ Y).ravel()]))
    return np.column_stack(cols)


def commutant(S, n, d, tol=la.DEFAULT_TOL):
    """Hilbert-Schmidt orthonormal basis of ``{Y : [I (x) Y, S] = [I (x) Y, S^*] = 0}``."""
    S = la.as_square(S, "S")
    if S.shape != (n * d, n * d):
        raise la.ShapeError(f"S must be {(n * d, n * d)}")
    N = la.nullspace(_commutant_map(S, n, d), tol)
    return [N[:, j].reshape(d, d) for j in range(N.shape[1])]


def center(basis, tol=la.DEFAULT_TOL):
    """Elements of ``span(basis)`` commuting with every basis element."""
    m = len(basis)
    if m == 0:
        return []
    cols = []
    for Ya in basis:
        cols.append(np.concatenate([(Ya @ Yb - Yb @ Ya).ravel() for Yb in basis]))
    N = la.nullspace(np.column_stack(cols), tol)
    return [sum(x[a] * basis[a] for a in range(m)) for x in N.T]


def central_blocks(S, n, d, tol=la.DEFAULT_TOL):
    """Ranges of the minimal central projections of the commutant of ``S``.

    Returns a list of ``(F, p)`` pairs: ``F`` has orthonormal columns spanning
    one block and ``p**2`` is the dimension of the commutant compressed to that
    block (``p >= 2`` means the gauge is degenerate inside the block).
    """
    comm = commutant(S, n, d, tol)
    cent = center(comm, tol)
    family = []
    for Z in cent:
        family += [Z, Z.conj().T]
    U, sizes = la.simultaneous_diagonalize(family, tol, return_groups=True)
    out = []
    start = 0
    for size in sizes:
        F = U[:, start : start + size]
        start += size
        compressed = np.column_stack([(F.conj().T @ Y @ F).ravel() for Y in comm])
        s = np.linalg.svd(compressed, compute_uv=False)
        dim = int(np.sum(s > 1e-6 * max(1.0, s.max())))
        out.append((F, max(1, int(round(np.sqrt(dim))))))
    return out


def diagonalize_environment(c: QleCoefficients, tol=la.DEFAULT_TOL) -> EnvAlgebraReport:
    """Decide commutativity of the environment algebra and block-diagonalize the gauge.

    When the generators commute, the returned ``W_diag`` makes the gauge
    block diagonal with the Wiener directions (blocks equal to the identity
    within ``tol * sqrt(n)``) first.
    """
    n, d = c.n, c.d
    gens = generators(c.S, n, d)
    worst = max_commutator(gens)
    comm = commutant(c.S, n, d, tol)
    if worst > tol:
        return EnvAlgebraReport(gens, False, None, [], comm, worst)
    U = la.simultaneous_diagonalize(gens, tol)
    B = la.noise_blocks(la.lift_noise(U, n).conj().T @ c.S @ la.lift_noise(U, n), n, d)
    eye = np.eye(n)
    res = [la.fro(B[i, i] - eye) for i in range(d)]
    wiener = [r <= tol * np.sqrt(n) for r in res]
    perm = [i for i in range(d) if wiener[i]] + [i for i in range(d) if not wiener[i]]
    W = U[:, perm]
    B = B[np.ix_(perm, perm)]
    off = la.fro(B - np.einsum("ij,ijkl->ijkl", np.eye(d), B))
    dirs = [Direction(B[i, i].copy(), wiener[perm[i]], res[perm[i]]) for i in range(d)]
    return EnvAlgebraReport(gens, True, W, dirs, comm, worst, off)


def commutant_dimension_invariant(c: QleCoefficients, W, tol=la.DEFAULT_TOL):
    """``(dim commutant(S), dim commutant(S~))`` for the noise change ``W``."""
    c2 = apply_noise_change(c, W, tol)
    return len(commutant(c.S, c.n, c.d, tol)), len(commutant(c2.S, c2.n, c2.d, tol))
