"""Dense complex linear algebra used throughout the package.

Matrices are plain ``numpy`` complex arrays.  Every routine takes an explicit
tolerance ``tol`` (default :data:`DEFAULT_TOL`) and scales it by the norms of
its inputs as documented per function.

Operators on the composite space H (x) K are stored *noise-major*: a matrix of
shape ``(n*d, n*d)`` is a ``d x d`` grid of ``n x n`` blocks, block ``(i, j)``
holding the system operator attached to ``|i><j|`` on the noise space.  Under
this layout ``I_H (x) Y`` is ``np.kron(Y, I_n)``.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg

from .exceptions import (
    DegeneracyUnresolved,
    NotCommuting,
    NotNormal,
    NotSymmetric,
    NotUnitary,
    ShapeError,
)

DEFAULT_TOL = 1e-9

# Fixed seed for the random linear combinations in simultaneous_diagonalize.
_SIMDIAG_SEED = 0x5EED
_MAX_RERANDOMIZE = 3


def as_matrix(A, name="matrix"):
    """Return ``A`` as a finite 2-D complex array (a copy is made only if needed)."""
    M = np.asarray(A, dtype=complex)
    if M.ndim == 0:
        M = M.reshape(1, 1)
    if M.ndim != 2 or 0 in M.shape:
        raise ShapeError(f"{name} must be a non-empty 2-D array, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return M


def as_square(A, name="matrix"):
    M = as_matrix(A, name)
    if M.shape[0] != M.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {M.shape}")
    return M


def fro(A):
    return float(np.linalg.norm(A))


def adjoint(A):
    return as_matrix(A).conj().T


def commutator(A, B):
    A = as_square(A, "A")
    B = as_square(B, "B")
    if A.shape != B.shape:
        raise ShapeError(f"commutator of {A.shape} and {B.shape} matrices")
    return A @ B - B @ A


def frobenius_distance(A, B):
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    if A.shape != B.shape:
        raise ShapeError(f"shape mismatch {A.shape} vs {B.shape}")
    return fro(A - B)


def is_unitary(U, tol=DEFAULT_TOL):
    U = as_square(U)
    eye = np.eye(U.shape[0])
    return fro(U.conj().T @ U - eye) <= tol * max(1.0, U.shape[0]) and fro(U @ U.conj().T - eye) <= tol * max(
        1.0, U.shape[0]
    )


def is_hermitian(A, tol=DEFAULT_TOL):
    A = as_square(A)
    return fro(A - A.conj().T) <= tol * max(1.0, fro(A))


def _eig_key(z, tol):
    # Lexicographic on the rounded real then imaginary part.
    return (round(z.real / tol), round(z.imag / tol))


def _fix_phase(v, thresh=1e-8):
    """Make the first significant component of ``v`` real and positive."""
    idx = np.flatnonzero(np.abs(v) > thresh)
    if idx.size == 0:
        return v
    z = v[idx[0]]
    return v * (abs(z) / z)


def canonical_basis(Q):
    """Deterministic orthonormal basis of ``span(Q)``.

    Gram-Schmidt on the columns of the projector ``Q Q^*`` taken in index
    order, so a coordinate subspace yields coordinate vectors.  The result
    depends only on the subspace, not on the particular ``Q``.
    """
    Q = np.asarray(Q, dtype=complex)
    d, m = Q.shape
    if m == 0:
        return Q
    P = Q @ Q.conj().T
    R = P.copy()
    chosen = []
    for _ in range(m):
        norms = np.linalg.norm(R, axis=0)
        j = int(np.flatnonzero(norms >= 0.5 * norms.max())[0])
        v = R[:, j] / norms[j]
        v = _fix_phase(v)
        chosen.append(v)
        R = R - np.outer(v, v.conj() @ R)
    return np.column_stack(chosen)


def _cluster_sorted(values, gap):
    """Split indices of an ascending real sequence where consecutive gaps exceed ``gap``."""
    groups = [[0]]
    for i in range(1, len(values)):
        if values[i] - values[i - 1] > gap:
            groups.append([i])
        else:
            groups[-1].append(i)
    return groups


def eig_normal(A, tol=DEFAULT_TOL):
    """Eigen-decomposition of a normal matrix with a unitary eigenbasis.

    Uses the complex Schur form, which is diagonal for normal input, so
    degenerate eigenspaces still get orthonormal bases.  Eigenvalues are
    sorted by ``(round(re/tol), round(im/tol))``; inside an eigenspace the
    basis is :func:`canonical_basis`, and every column has its first
    significant entry real positive.

    Returns
    -------
    eigenvalues : ndarray
    U : ndarray
        Unitary with ``A = U diag(eigenvalues) U^*``.
    """
    A = as_square(A, "A")
    scale = fro(A)
    if fro(A @ A.conj().T - A.conj().T @ A) > tol * max(1.0, scale**2):
        raise NotNormal("matrix is not normal within tolerance")
    T, Z = scipy.linalg.schur(A, output="complex")
    w = np.diag(T).copy()
    order = sorted(range(len(w)), key=lambda i: _eig_key(w[i], tol))
    w = w[order]
    Z = Z[:, order]
    # Re-canonicalize inside clusters of (numerically) equal eigenvalues.
    cols = []
    i = 0
    near = max(tol, 1e-12) * max(1.0, scale)
    while i < len(w):
        j = i + 1
        while j < len(w) and abs(w[j] - w[i]) <= near:
            j += 1
        block = Z[:, i:j]
        if j - i > 1:
            block = canonical_basis(block)
        else:
            block = _fix_phase(block[:, 0])[:, None]
        cols.append(block)
        i = j
    return w, np.hstack(cols)


def _hermitian_parts(family):
    parts = []
    for M in family:
        Hp = (M + M.conj().T) / 2
        Ap = (M - M.conj().T) / 2j
        for P in (Hp, Ap):
            if fro(P) > 0:
                parts.append(P)
    return parts


def _is_scalar(M, tol):
    if M.shape[0] == 1:
        return True
    mu = np.trace(M) / M.shape[0]
    return fro(M - mu * np.eye(M.shape[0])) <= tol


def simultaneous_diagonalize(family, tol=DEFAULT_TOL, seed=_SIMDIAG_SEED, return_groups=False):
    """Common unitary eigenbasis of a commuting family of normal matrices.

    Each member is split into Hermitian and anti-Hermitian parts; a seeded
    random real combination of those parts is diagonalized and the procedure
    recurses into every eigenspace on which the family is not yet scalar.
    A subspace that survives ``3`` fresh combinations unsplit raises
    :class:`DegeneracyUnresolved`.

    Columns are grouped by joint eigenspace, the groups ordered by the rounded
    tuple of joint eigenvalues, and each group given its canonical basis, so
    an already diagonal family yields a permutation matrix.  With
    ``return_groups`` the sizes of the joint eigenspaces (in column order)
    are returned as well.
    """
    mats = [as_square(M, "family member") for M in family]
    if not mats:
        raise ShapeError("empty family")
    d = mats[0].shape[0]
    if any(M.shape != (d, d) for M in mats):
        raise ShapeError("family members have different dimensions")
    for a in range(len(mats)):
        for b in range(a + 1, len(mats)):
            A, B = mats[a], mats[b]
            if fro(A @ B - B @ A) > tol * max(1.0, fro(A) * fro(B)):
                raise NotCommuting(f"members {a} and {b} do not commute")

    herm = _hermitian_parts(mats)
    scale = max([fro(P) for P in herm], default=1.0)
    scalar_tol = 10 * max(tol, 1e-12) * max(1.0, scale)
    rng = np.random.default_rng(seed)
    spaces = []

    def refine(Q, attempts):
        restricted = [Q.conj().T @ P @ Q for P in herm]
        if all(_is_scalar(R, scalar_tol) for R in restricted):
            spaces.append(Q)
            return
        if attempts >= _MAX_RERANDOMIZE:
            raise DegeneracyUnresolved(f"could not split a {Q.shape[1]}-dimensional joint eigenspace")
        coeffs = rng.standard_normal(len(restricted))
        C = sum(c * R for c, R in zip(coeffs, restricted))
        C = (C + C.conj().T) / 2
        vals, vecs = np.linalg.eigh(C)
        gap = 1e-6 * max(1.0, fro(C))
        groups = _cluster_sorted(vals, gap)
        if len(groups) == 1:
            refine(Q, attempts + 1)
            return
        for g in groups:
            refine(Q @ vecs[:, g], 0)

    refine(np.eye(d, dtype=complex), 0)

    def key(Q):
        diag = [np.trace(Q.conj().T @ M @ Q) / Q.shape[1] for M in mats]
        return tuple(k for z in diag for k in _eig_key(z, tol))

    spaces = [canonical_basis(Q) for Q in spaces]
    spaces.sort(key=key)
    U = np.hstack(spaces)
    for M in mats:
        D = U.conj().T @ M @ U
        off = fro(D - np.diag(np.diag(D)))
        if off > 10 * tol * max(1.0, fro(M)):
            raise DegeneracyUnresolved(f"off-diagonal residual {off:.3e} after refinement")
    if return_groups:
        return U, [Q.shape[1] for Q in spaces]
    return U


def svd(A):
    """Full SVD ``A = U diag(s) Vh``; returns ``(U, s, V)`` with ``V = Vh^*``."""
    U, s, Vh = np.linalg.svd(as_matrix(A))
    return U, s, Vh.conj().T


def polar(A):
    """Right polar decomposition ``A = U P`` with ``U`` unitary and ``P >= 0``."""
    U, P = scipy.linalg.polar(as_matrix(A), side="right")
    return U, P


def nullspace(A, tol=DEFAULT_TOL):
    """Orthonormal basis (as columns) of ``ker A``.

    Singular values below ``tol * max(1, s_max)`` count as zero.  The zero
    matrix returns the identity basis.
    """
    A = as_matrix(A)
    k = A.shape[1]
    _, s, Vh = np.linalg.svd(A, full_matrices=True)
    smax = s.max() if s.size else 0.0
    if smax <= tol:
        return np.eye(k, dtype=complex)
    rank = int(np.sum(s > tol * max(1.0, smax)))
    return Vh[rank:].conj().T


def matrix_exp(A):
    """Matrix exponential by Pade scaling-and-squaring."""
    return scipy.linalg.expm(as_square(A))


def _sqrt_unitary(Z, tol):
    """Square root of a normal unimodular matrix with the branch cut in the widest spectral gap."""
    w, Q = eig_normal(Z, tol=max(tol, 1e-12))
    ang = np.sort(np.angle(w))
    if len(ang) == 1:
        cut = ang[0] + math.pi
    else:
        gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * math.pi]]))
        i = int(np.argmax(gaps))
        cut = ang[i] + gaps[i] / 2
    # Principal root after rotating the cut onto the negative real axis.
    rot = np.exp(1j * (cut - math.pi))
    roots = np.sqrt(rot) * np.sqrt(w / rot)
    return Q @ np.diag(roots) @ Q.conj().T


def takagi_symmetric_unitary(A, tol=DEFAULT_TOL):
    """Factor a symmetric unitary ``A`` as ``A = V^t V`` with ``V`` unitary.

    From the SVD ``A = U S W^*`` the matrix ``Z = U^* conj(W)`` is symmetric
    unitary and ``A = U Z U^t``; with ``R`` a symmetric square root of ``Z``
    the factor is ``V = (U R)^t``.  The result is always checked against
    ``||A - V^t V||_F <= 10 tol dim``.
    """
    A = as_square(A, "A")
    dim = A.shape[0]
    if fro(A - A.T) > tol * max(1.0, fro(A)):
        raise NotSymmetric("matrix is not symmetric within tolerance")
    if fro(A.conj().T @ A - np.eye(dim)) > tol * max(1.0, dim):
        raise NotUnitary("matrix is not unitary within tolerance")
    U, _, Vh = np.linalg.svd(A)
    Z = U.conj().T @ Vh.T
    Z = (Z + Z.T) / 2
    R = _sqrt_unitary(Z, tol)
    R = (R + R.T) / 2
    V = (U @ R).T
    Vu, _ = polar(V)
    for cand in (Vu, V):
        if fro(A - cand.T @ cand) <= 10 * tol * dim and fro(cand.conj().T @ cand - np.eye(dim)) <= 10 * tol * dim:
            return cand
    raise NotSymmetric("Takagi factor failed verification")


def noise_blocks(M, n, d):
    """View an ``(n*d) x (n*d)`` operator as an array ``B[i, j]`` of ``n x n`` blocks."""
    M = as_matrix(M)
    if M.shape != (n * d, n * d):
        raise ShapeError(f"expected shape {(n * d, n * d)}, got {M.shape}")
    return M.reshape(d, n, d, n).transpose(0, 2, 1, 3)


def from_noise_blocks(B):
    B = np.asarray(B, dtype=complex)
    d, _, n, _ = B.shape
    return B.transpose(0, 2, 1, 3).reshape(n * d, n * d)


def lift_noise(Y, n):
    """``I_H (x) Y`` in the noise-major layout."""
    return np.kron(np.asarray(Y, dtype=complex), np.eye(n))


def weighted_partial_trace(M, f_index, g_index, n, d):
    """The ``d x d`` scalar matrix ``(i, j) -> block(i, j)[f_index, g_index]``.

    This is the partial trace of ``M`` against ``|g><f|`` for canonical basis
    vectors ``f, g`` of the system space.
    """
    B = noise_blocks(M, n, d)
    if not (0 <= f_index < n and 0 <= g_index < n):
        raise IndexError(f"system indices ({f_index}, {g_index}) out of range for n={n}")
    return B[:, :, f_index, g_index].copy()


def haar_unitary(n, rng):
    """Haar-distributed ``n x n`` unitary (QR of a complex Ginibre matrix)."""
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
    Q, R = np.linalg.qr(Z)
    ph = np.diag(R) / np.abs(np.diag(R))
    return Q * ph


def random_hermitian(n, rng, scale=1.0):
    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (X + X.conj().T) / 2


def random_matrix(n, rng, scale=1.0):
    return scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
