"""Heisenberg-picture Lindblad generators and their semigroups.

Superoperators act on column-stacked matrices: ``vec(X) = X.reshape(-1, order="F")``
so that ``X -> A X B`` is represented by ``kron(B.T, A)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .classical import ClassicalForm, rebuild, to_classical_form
from .exceptions import NotClassical, NotSelfAdjoint, NotUnitary, NotUnitaryScheme
from .model import QleCoefficients


def vec(X):
    return np.asarray(X, dtype=complex).reshape(-1, order="F")


def unvec(v, n):
    return np.asarray(v).reshape(n, n, order="F")


def superop_of(A, B):
    """Matrix of ``X -> A X B``."""
    return np.kron(np.asarray(B).T, np.asarray(A))


@dataclass(frozen=True, eq=False)
class LindbladGenerator:
    H: np.ndarray
    jump_ops: tuple
    superop: np.ndarray

    @property
    def n(self):
        return self.H.shape[0]

    def __call__(self, X):
        return unvec(self.superop @ vec(X), self.n)

    def dual(self, rho):
        """Schroedinger-picture action (trace-dual of the generator)."""
        return unvec(self.superop.conj().T @ vec(rho), self.n)

    def distance(self, other):
        return la.fro(self.superop - other.superop)


def _hamiltonian_part(H):
    n = H.shape[0]
    eye = np.eye(n)
    return -1j * (superop_of(H, eye) - superop_of(eye, H))


def _lindblad_superop(H, jump_ops):
    n = H.shape[0]
    eye = np.eye(n)
    G = _hamiltonian_part(H)
    for L in jump_ops:
        Ls = L.conj().T
        LL = Ls @ L
        G = G + superop_of(Ls, L) - 0.5 * superop_of(LL, eye) - 0.5 * superop_of(eye, LL)
    return G


def _check_hamiltonian(H, tol):
    H = la.as_square(H, "H")
    if not la.is_hermitian(H, tol):
        raise NotSelfAdjoint("H is not self-adjoint")
    return H


def generator(H, jump_ops=(), tol=la.DEFAULT_TOL) -> LindbladGenerator:
    """``L(X) = -i[H, X] + sum_k (L_k^* X L_k - 1/2 {L_k^* L_k, X})``."""
    H = _check_hamiltonian(H, tol)
    ops = tuple(la.as_square(L, "jump operator") for L in jump_ops)
    if any(L.shape != H.shape for L in ops):
        raise la.ShapeError("jump operators must match the shape of H")
    G = _lindblad_superop(H, ops)
    G.setflags(write=False)
    return LindbladGenerator(H, ops, G)


def commutative_generator(H, selfadjoint_Ls=(), unitary_Ss=(), lambdas=(), tol=la.DEFAULT_TOL) -> LindbladGenerator:
    """Generator with self-adjoint diffusion terms and unitary jump terms.

    ``L(X) = -i[H, X] + 1/2 sum (2 L X L - L^2 X - X L^2) + sum lam_k (S_k^* X S_k - X)``.
    The returned ``jump_ops`` is the equivalent standard-form list
    ``L_1, ..., sqrt(lam_1) S_1, ...``.
    """
    H = _check_hamiltonian(H, tol)
    n = H.shape[0]
    eye = np.eye(n)
    Ls = [la.as_square(L, "L") for L in selfadjoint_Ls]
    Ss = [la.as_square(S, "S") for S in unitary_Ss]
    lambdas = [float(x) for x in lambdas]
    if len(lambdas) != len(Ss):
        raise ValueError("one rate per unitary is required")
    if any(not la.is_hermitian(L, tol) for L in Ls):
        raise NotSelfAdjoint("diffusion coefficients must be self-adjoint")
    if any(not la.is_unitary(S, tol) for S in Ss):
        raise NotUnitary("jump operators must be unitary")
    if any(x < 0 for x in lambdas):
        raise ValueError("rates must be nonnegative")
    G = _hamiltonian_part(H)
    for L in Ls:
        L2 = L @ L
        G = G + superop_of(L, L) - 0.5 * superop_of(L2, eye) - 0.5 * superop_of(eye, L2)
    for S, lam in zip(Ss, lambdas):
        G = G + lam * (superop_of(S.conj().T, S) - np.eye(n * n))
    ops = tuple(Ls) + tuple(np.sqrt(lam) * S for S, lam in zip(Ss, lambdas))
    ref = _lindblad_superop(H, ops)
    gap = la.fro(G - ref)
    if gap > 1e-12 * max(1.0, la.fro(G)):
        raise AssertionError(f"standard-form jump list disagrees by {gap:.3e}")
    G.setflags(write=False)
    return LindbladGenerator(H, ops, G)


def poisson_hamiltonian_shift(cf: ClassicalForm):
    """Hamiltonian correction turning ``rho (S - I)`` jumps into pure ``S^* X S - X`` terms.

    ``generator(H, [rho (S - I)]) == commutative_generator(H + shift, [], [S], [rho^2])``
    with ``shift = i rho^2 (S - S^*) / 2``.
    """
    n = cf.n
    shift = np.zeros((n, n), dtype=complex)
    for p in cf.poisson:
        shift = shift + 0.5j * p.intensity * (p.S - p.S.conj().T)
    return shift


def from_classical_form(cf: ClassicalForm, H, tol=la.DEFAULT_TOL) -> LindbladGenerator:
    """Generator of ``X -> E[U_t^* X U_t]`` for the classical equation with Hamiltonian ``H``.

    Brownian coefficients ``A_k`` and Poisson coefficients ``rho_k (S_k - I)``
    are the jump operators; gauge-only directions drop out.  Equal to
    ``from_coefficients(rebuild(cf, H))``.
    """
    ops = [t.A for t in cf.brownian] + [t.B for t in cf.poisson]
    return generator(-la.as_square(H, "H"), ops, tol)


def from_coefficients(c: QleCoefficients, tol=la.DEFAULT_TOL) -> LindbladGenerator:
    """Generator of ``X -> <Omega, U_t^* (X (x) I) U_t Omega>``; the gauge plays no role.

    The equation's drift ``-iH - 1/2 sum L^* L`` makes ``U_t^* X U_t`` move
    by ``+i[H, X]``, so ``H`` enters :func:`generator` with a minus sign.
    """
    return generator(-c.H, c.L0, tol)


def semigroup_apply(g: LindbladGenerator, X, t):
    """``exp(t L)(X)``."""
    if t < 0:
        raise ValueError("time must be nonnegative")
    X = la.as_square(X, "X")
    if t == 0:
        return X.copy()
    return unvec(la.matrix_exp(t * g.superop) @ vec(X), g.n)


def semigroup_dual_apply(g: LindbladGenerator, rho, t):
    if t < 0:
        raise ValueError("time must be nonnegative")
    rho = la.as_square(rho, "rho")
    return unvec(la.matrix_exp(t * g.superop.conj().T) @ vec(rho), g.n)


@dataclass(frozen=True)
class DetailedBalanceVerdict:
    holds: bool
    classical_form: ClassicalForm | None = None
    reason: str | None = None
    failure: dict | None = None

    def __bool__(self):
        return self.holds


def detailed_balance_check(c: QleCoefficients, tol=la.DEFAULT_TOL) -> DetailedBalanceVerdict:
    """Trace-detailed-balance witness: a classical form with Brownian terms only.

    A ``False`` verdict means this particular equation is not Brownian-only
    classical; other dilations of the same semigroup are not examined.
    """
    try:
        cf = to_classical_form(c, tol)
    except NotClassical as exc:
        return DetailedBalanceVerdict(False, None, "NotClassical", exc.as_dict())
    except NotUnitaryScheme as exc:
        return DetailedBalanceVerdict(False, None, "NotUnitaryScheme", {"condition": exc.condition})
    if cf.poisson:
        return DetailedBalanceVerdict(False, cf, "PoissonTerms", {"indices": [p.index for p in cf.poisson]})
    return DetailedBalanceVerdict(True, cf, None, None)


__all__ = [
    "LindbladGenerator",
    "generator",
    "commutative_generator",
    "from_classical_form",
    "from_coefficients",
    "poisson_hamiltonian_shift",
    "semigroup_apply",
    "semigroup_dual_apply",
    "detailed_balance_check",
    "rebuild",
]
