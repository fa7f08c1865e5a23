"""Coefficients of unitary quantum Langevin equations and changes of noise.

A unitary equation is determined by a self-adjoint ``H`` on the system space
(dimension ``n``), a column ``L0`` of ``d`` system operators (the creation
coefficients) and the gauge ``S``, a unitary on H (x) K stored noise-major
(see :mod:`qlenv.linalg`).  Block ``(i, j)`` of ``S`` is the operator the
literature writes ``S^j_i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .exceptions import NotUnitary, NotUnitaryScheme, ShapeError


@dataclass(frozen=True, eq=False)
class QleCoefficients:
    """Canonical data ``(H, L0, S)`` of a unitary quantum Langevin equation."""

    H: np.ndarray
    L0: tuple
    S: np.ndarray

    def __post_init__(self):
        H = la.as_square(self.H, "H")
        n = H.shape[0]
        L0 = tuple(la.as_square(L, "L0 entry") for L in self.L0)
        d = len(L0)
        if d == 0:
            raise ShapeError("at least one noise direction is required")
        if any(L.shape != (n, n) for L in L0):
            raise ShapeError("L0 entries must match the shape of H")
        S = la.as_square(self.S, "S")
        if S.shape != (n * d, n * d):
            raise ShapeError(f"S must be {(n * d, n * d)}, got {S.shape}")
        for arr in (H, S, *L0):
            arr.setflags(write=False)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "L0", L0)
        object.__setattr__(self, "S", S)

    @property
    def n(self):
        return self.H.shape[0]

    @property
    def d(self):
        return len(self.L0)

    def S_blocks(self):
        """``B[i, j]`` = block ``(i, j)`` of the gauge."""
        return la.noise_blocks(self.S, self.n, self.d)

    def check(self, tol=la.DEFAULT_TOL):
        """Raise :class:`NotUnitaryScheme` unless ``H`` is self-adjoint and ``S`` unitary."""
        r = la.fro(self.H - self.H.conj().T)
        if r > tol * max(1.0, la.fro(self.H)):
            raise NotUnitaryScheme("H self-adjoint", r)
        eye = np.eye(self.n * self.d)
        r = max(la.fro(self.S.conj().T @ self.S - eye), la.fro(self.S @ self.S.conj().T - eye))
        if r > tol * max(1.0, self.n * self.d):
            raise NotUnitaryScheme("S unitary", r)
        return self

    def allclose(self, other, atol=1e-12):
        return (
            self.n == other.n
            and self.d == other.d
            and la.fro(self.H - other.H) <= atol
            and la.fro(self.S - other.S) <= atol
            and all(la.fro(a - b) <= atol for a, b in zip(self.L0, other.L0))
        )

    def distance(self, other):
        """Largest Frobenius distance over ``H``, ``S`` and the ``L0`` entries."""
        return max(
            [la.fro(self.H - other.H), la.fro(self.S - other.S)]
            + [la.fro(a - b) for a, b in zip(self.L0, other.L0)]
        )


@dataclass(frozen=True, eq=False)
class FullCoefficients:
    """All coefficients ``L^i_j`` of the equation, ``i, j`` in ``{0, ..., d}``.

    ``L0_col[i]`` multiplies the creation noise of direction ``i``,
    ``L0_row[i]`` the annihilation noise, and ``Lmat[i, j]`` (shape
    ``(d, d, n, n)``) is the gauge coefficient block ``(i, j)``.
    """

    L00: np.ndarray
    L0_col: tuple
    L0_row: tuple
    Lmat: np.ndarray = field(repr=False)

    @property
    def n(self):
        return self.L00.shape[0]

    @property
    def d(self):
        return len(self.L0_col)

    def extended(self):
        """The ``(d+1) x (d+1)`` block array with index 0 for the time/vacuum slot.

        Entry ``[0, 0]`` is ``L00``, ``[i, 0]`` the creation coefficient,
        ``[0, i]`` the annihilation coefficient and ``[i, j]`` the gauge block.
        """
        n, d = self.n, self.d
        E = np.zeros((d + 1, d + 1, n, n), dtype=complex)
        E[0, 0] = self.L00
        for i in range(d):
            E[i + 1, 0] = self.L0_col[i]
            E[0, i + 1] = self.L0_row[i]
        E[1:, 1:] = self.Lmat
        return E


def derive_full(c: QleCoefficients) -> FullCoefficients:
    """Fill in the whole coefficient family of a unitary equation."""
    n, d = c.n, c.d
    B = c.S_blocks()
    drift = -1j * c.H - 0.5 * sum(L.conj().T @ L for L in c.L0)
    # Annihilation coefficient of direction i: -sum_j L0_j^* S^i_j, where
    # S^i_j is stored at block (j, i).
    row = tuple(-sum(c.L0[j].conj().T @ B[j, i] for j in range(d)) for i in range(d))
    Lmat = B.copy()
    for i in range(d):
        Lmat[i, i] = Lmat[i, i] - np.eye(n)
    return FullCoefficients(drift, tuple(L.copy() for L in c.L0), row, Lmat)


def validate(full: FullCoefficients, tol=la.DEFAULT_TOL) -> QleCoefficients:
    """Recognize a unitary scheme in an arbitrary coefficient family.

    Rebuilds ``S = Lmat + I`` and ``H = i (L00 + 1/2 sum L0_k^* L0_k)`` and
    checks, in order, unitarity of ``S``, self-adjointness of ``H`` and the
    annihilation-coefficient relation.  The first failure is raised as
    :class:`NotUnitaryScheme` naming the condition.
    """
    n, d = full.n, full.d
    L0 = tuple(la.as_square(L, "L0_col entry") for L in full.L0_col)
    if len(full.L0_row) != d or np.shape(full.Lmat) != (d, d, n, n):
        raise ShapeError("inconsistent coefficient shapes")
    B = np.array(full.Lmat, dtype=complex)
    for i in range(d):
        B[i, i] = B[i, i] + np.eye(n)
    S = la.from_noise_blocks(B)
    eye = np.eye(n * d)
    r = max(la.fro(S.conj().T @ S - eye), la.fro(S @ S.conj().T - eye))
    if r > tol * max(1.0, n * d):
        raise NotUnitaryScheme("S unitary", r)
    H = 1j * (full.L00 + 0.5 * sum(L.conj().T @ L for L in L0))
    r = la.fro(H - H.conj().T)
    if r > tol * max(1.0, la.fro(H)):
        raise NotUnitaryScheme("H self-adjoint", r)
    H = (H + H.conj().T) / 2
    for i in range(d):
        expected = -sum(L0[j].conj().T @ B[j, i] for j in range(d))
        r = la.fro(full.L0_row[i] - expected)
        if r > tol * max(1.0, la.fro(expected)):
            raise NotUnitaryScheme("row-coefficient relation", r, f"row-coefficient relation violated at index {i}")
    return QleCoefficients(H, L0, S)


def apply_noise_change(c: QleCoefficients, W, tol=la.DEFAULT_TOL) -> QleCoefficients:
    """Coefficients in the rotated noise basis ``f_i = W e_i``.

    ``L0 -> W^* L0`` (as a column of operators), ``S -> (I (x) W)^* S (I (x) W)``
    and ``H`` is unchanged.  Consequently
    ``apply_noise_change(c, W1 @ W2) == apply_noise_change(apply_noise_change(c, W1), W2)``.
    """
    W = la.as_square(W, "W")
    if W.shape != (c.d, c.d):
        raise ShapeError(f"W must be {(c.d, c.d)}, got {W.shape}")
    if not la.is_unitary(W, tol):
        raise NotUnitary("noise change W is not unitary")
    Wc = W.conj()
    L0 = tuple(sum(Wc[j, i] * c.L0[j] for j in range(c.d)) for i in range(c.d))
    K = la.lift_noise(W, c.n)
    S = K.conj().T @ c.S @ K
    return QleCoefficients(c.H.copy(), L0, S)


def restrict(c: QleCoefficients, F, keep_hamiltonian=False) -> QleCoefficients:
    """Equation seen on the noise subspace spanned by the orthonormal columns of ``F``.

    The drift keeps only the Ito correction of the retained directions
    (``H := 0``) unless ``keep_hamiltonian`` is set.
    """
    F = np.asarray(F, dtype=complex).reshape(c.d, -1)
    Fc = F.conj()
    k = F.shape[1]
    L0 = tuple(sum(Fc[j, i] * c.L0[j] for j in range(c.d)) for i in range(k))
    K = la.lift_noise(F, c.n)
    S = K.conj().T @ c.S @ K
    H = c.H.copy() if keep_hamiltonian else np.zeros_like(c.H)
    return QleCoefficients(H, L0, S)


def random_unitary_gauge(n, d, rng, scale=1.0):
    """``exp(iA)`` for a random Hermitian ``A`` on H (x) K."""
    return la.matrix_exp(1j * la.random_hermitian(n * d, rng, scale))


def random_coefficients(n, d, rng, scale=1.0) -> QleCoefficients:
    """Random valid coefficients: Hermitian ``H``, Gaussian ``L0``, unitary ``S``."""
    H = la.random_hermitian(n, rng, scale)
    L0 = tuple(la.random_matrix(n, rng, scale) for _ in range(d))
    return QleCoefficients(H, L0, random_unitary_gauge(n, d, rng))
