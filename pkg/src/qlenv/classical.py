"""Recognition of classical-noise-driven equations and their explicit classical form.

An equation is classical when, after a change of noise, it reads

    dU = A0 U dt + sum_i A_i U dW^i + sum_k B_k U dX^k

with independent standard Brownian motions ``W^i`` and compensated Poisson
processes ``X^k`` (intensity ``rho_k**2``, jumps ``1/rho_k``).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg as la
from .algebra import diagonalize_environment
from .exceptions import NotClassical, ShapeError, SymmetricCompletionFailed
from .model import QleCoefficients, apply_noise_change, derive_full


@dataclass(frozen=True)
class BrownianTerm:
    index: int
    A: np.ndarray


@dataclass(frozen=True)
class PoissonTerm:
    index: int
    B: np.ndarray
    rho: float
    S: np.ndarray

    @property
    def jump(self):
        return 1.0 / self.rho

    @property
    def intensity(self):
        return self.rho**2


@dataclass(frozen=True)
class GaugeTerm:
    index: int
    S: np.ndarray


@dataclass(frozen=True)
class ClassicalForm:
    """Data of the classical stochastic equation in the final noise basis.

    ``noise_change`` maps the original noise basis to the classical one:
    ``apply_noise_change(c, cf.noise_change)`` has the coefficients listed here.
    """

    A0: np.ndarray
    brownian: list
    poisson: list
    gauge_only: list
    noise_change: np.ndarray
    residuals: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.A0.shape[0]

    @property
    def d(self):
        return len(self.brownian) + len(self.poisson) + len(self.gauge_only)


@dataclass(frozen=True)
class D1Verdict:
    kind: str  # "Brownian", "Poisson" or "Quantum"
    theta: float | None = None
    lam: complex | None = None


def principal_angle(z):
    """Argument in ``(-pi, pi]``."""
    t = cmath.phase(z)
    return math.pi if t <= -math.pi + 1e-15 else t


def gram_vectors(L0_wiener):
    """Columns ``u(k,l) = (L_i[k,l])_i`` and ``v(k,l) = (conj(L_i[l,k]))_i``.

    Both are returned as ``len(L0_wiener) x n**2`` arrays with column index
    ``k * n + l``.
    """
    mats = [la.as_square(L) for L in L0_wiener]
    if not mats:
        raise ShapeError("empty coefficient list")
    U = np.array([L.ravel() for L in mats])
    V = np.array([L.conj().T.ravel() for L in mats])
    return U, V


def gram_residual(L0_wiener):
    U, V = gram_vectors(L0_wiener)
    return la.fro(U.conj().T @ U - V.conj().T @ V), la.fro(U)


def wiener_condition(L0_wiener, tol=la.DEFAULT_TOL):
    """Symmetric unitary ``W`` with ``(L_i^*)_i = W (L_i)_i``, or ``None``.

    Exists iff the Gram matrices of the ``u`` and ``v`` families agree.  On the
    range of the ``u`` family ``W`` is the orthogonal Procrustes solution; on
    the orthogonal complement ``N`` it is ``conj(Q0) Q0^*`` for an orthonormal
    basis ``Q0`` of ``N``, which keeps ``W`` symmetric.
    """
    U, V = gram_vectors(L0_wiener)
    m = U.shape[0]
    gres = la.fro(U.conj().T @ U - V.conj().T @ V)
    unorm = la.fro(U)
    if gres > tol * (1.0 + unorm**2):
        return None
    M = V @ U.conj().T
    P, s, Qh = np.linalg.svd(M)
    Q = Qh.conj().T
    rank = int(np.sum(s > tol * max(1.0, unorm**2)))
    W = P[:, :rank] @ Q[:, :rank].conj().T
    Q0 = Q[:, rank:]
    W = W + Q0.conj() @ Q0.conj().T
    W, _ = la.polar((W + W.T) / 2)
    scale = max(1.0, unorm)
    if (
        la.fro(V - W @ U) > 10 * tol * scale
        or la.fro(W - W.T) > 10 * tol
        or la.fro(W.conj().T @ W - np.eye(m)) > 10 * tol
    ):
        raise SymmetricCompletionFailed(
            f"Gram matrices agree but no symmetric unitary completion verified "
            f"(relation {la.fro(V - W @ U):.3e}, symmetry {la.fro(W - W.T):.3e})"
        )
    return W


def poisson_condition(L, S_i, tol=la.DEFAULT_TOL):
    """``lam`` with ``L = lam (S_i - I)``, ``0`` for a vanishing ``L``, else ``None``."""
    L = la.as_square(L, "L")
    D = la.as_square(S_i, "S_i") - np.eye(L.shape[0])
    lnorm = la.fro(L)
    if lnorm <= tol:
        return 0j
    k, l = np.unravel_index(np.argmax(np.abs(D)), D.shape)
    if abs(D[k, l]) <= tol:
        return None
    lam = L[k, l] / D[k, l]
    if la.fro(L - lam * D) <= tol * (1.0 + lnorm):
        return complex(lam)
    return None


def commutation_residual(c: QleCoefficients):
    """Norm of the defect in the Ito commutation relations of the coefficients.

    With ``E`` the extended coefficient array (index 0 for the vacuum slot),
    ``F`` that of the adjoint equation and ``P`` the projection off index 0,
    the noise algebra is commutative iff for all system indices
    ``E^{kl} P E^{mn} = E^{mn} P E^{kl}`` and ``F^{kl} P E^{mn} = E^{mn} P F^{kl}``.
    This route never diagonalizes anything and serves as an independent
    check of :func:`to_classical_form`.
    """
    full = derive_full(c)
    E = full.extended()
    n, d1 = c.n, c.d + 1
    F = np.conj(E.transpose(1, 0, 3, 2))
    Ek = E.transpose(2, 3, 0, 1).reshape(n * n, d1, d1)
    Fk = F.transpose(2, 3, 0, 1).reshape(n * n, d1, d1)
    Ek[:, 0, 0] = 0
    Fk[:, 0, 0] = 0
    p = np.ones(d1)
    p[0] = 0
    EP = Ek * p  # E^{kl} P
    FP = Fk * p
    a = np.einsum("aij,bjk->abik", EP, Ek)
    r1 = a - a.transpose(1, 0, 2, 3)
    b = np.einsum("aij,bjk->abik", FP, Ek)
    b2 = np.einsum("bij,ajk->abik", EP, Fk)
    r2 = b - b2
    return float(np.sqrt(np.sum(np.abs(r1) ** 2) + np.sum(np.abs(r2) ** 2)))


def to_classical_form(c: QleCoefficients, tol=la.DEFAULT_TOL) -> ClassicalForm:
    """Explicit classical form of ``c``; raises :class:`NotClassical` otherwise.

    Steps: block-diagonalize the gauge; on the Wiener directions find the
    symmetric unitary ``W`` and factor ``-W = V^t V``, then rotate by ``V^*``
    so the Brownian coefficients ``K = V L0`` are anti-self-adjoint; on each
    Poisson direction write ``L0_k = rho_k e^{i theta_k} (S_k - I)`` and
    absorb the phase.
    """
    c.check(tol)
    d, n = c.d, c.n
    rep = diagonalize_environment(c, tol)
    if not rep.commutative:
        raise NotClassical("GaugeNotCommutative", range(d), rep.commutator_residual)
    c1 = apply_noise_change(c, rep.W_diag)
    wiener = rep.wiener_indices
    poisson = rep.poisson_indices
    residuals = {"gauge_commutator": rep.commutator_residual, "gauge_offdiag": rep.offdiag_residual}

    m = len(wiener)
    Vstar = np.eye(m, dtype=complex)
    if m:
        Lw = [c1.L0[i] for i in wiener]
        Wsym = wiener_condition(Lw, tol)
        if Wsym is None:
            gres, unorm = gram_residual(Lw)
            raise NotClassical("WienerGramMismatch", wiener, gres / (1.0 + unorm**2))
        V = la.takagi_symmetric_unitary(-Wsym, tol)
        Vstar = V.conj().T
        U, Vc = gram_vectors(Lw)
        residuals["wiener_relation"] = la.fro(Vc - Wsym @ U)
        residuals["wiener_symmetry"] = la.fro(Wsym - Wsym.T)

    phases = np.ones(d, dtype=complex)
    lams = {}
    bad = []
    worst = 0.0
    for i in poisson:
        lam = poisson_condition(c1.L0[i], rep.directions[i].S, tol)
        if lam is None:
            bad.append(i)
            D = rep.directions[i].S - np.eye(n)
            coef = np.vdot(D.ravel(), c1.L0[i].ravel()) / max(np.vdot(D.ravel(), D.ravel()).real, 1e-300)
            worst = max(worst, la.fro(c1.L0[i] - coef * D) / (1.0 + la.fro(c1.L0[i])))
            continue
        lams[i] = lam
        if lam != 0:
            phases[i] = cmath.exp(1j * principal_angle(lam))
    if bad:
        raise NotClassical("PoissonRayMismatch", bad, worst)

    R = np.eye(d, dtype=complex)
    R[:m, :m] = Vstar
    W_total = rep.W_diag @ R @ np.diag(phases)
    final = apply_noise_change(c, W_total)
    A0 = derive_full(final).L00
    Bk = la.noise_blocks(final.S, n, d)

    brownian = []
    for i in range(m):
        A = final.L0[i]
        residuals.setdefault("brownian_antihermitian", 0.0)
        residuals["brownian_antihermitian"] = max(residuals["brownian_antihermitian"], la.fro(A + A.conj().T))
        brownian.append(BrownianTerm(i, A.copy()))
    poisson_terms, gauge_terms = [], []
    for i in poisson:
        S_i = Bk[i, i].copy()
        lam = lams[i]
        if lam == 0:
            gauge_terms.append(GaugeTerm(i, S_i))
            continue
        rho = abs(lam)
        B = rho * (S_i - np.eye(n))
        residuals["poisson_ray"] = max(residuals.get("poisson_ray", 0.0), la.fro(final.L0[i] - B))
        poisson_terms.append(PoissonTerm(i, B, rho, S_i))
    return ClassicalForm(A0, brownian, poisson_terms, gauge_terms, W_total, residuals)


def classify_d1(H, L, S, tol=la.DEFAULT_TOL) -> D1Verdict:
    """Single-noise dichotomy: Brownian ``(L^* = e^{i theta} L, S = I)``, Poisson ``(L = lam (S - I))`` or quantum."""
    L = la.as_square(L, "L")
    S = la.as_square(S, "S")
    n = L.shape[0]
    lnorm = la.fro(L)
    if la.fro(S - np.eye(n)) <= tol * math.sqrt(n):
        if lnorm <= tol:
            return D1Verdict("Brownian", theta=0.0)
        k, l = np.unravel_index(np.argmax(np.abs(L)), L.shape)
        phase = np.conj(L[l, k]) / L[k, l]
        if abs(abs(phase) - 1.0) > 1e-6:
            return D1Verdict("Quantum")
        theta = principal_angle(phase)
        if la.fro(L.conj().T - cmath.exp(1j * theta) * L) <= tol * (1.0 + lnorm):
            return D1Verdict("Brownian", theta=theta)
        return D1Verdict("Quantum")
    lam = poisson_condition(L, S, tol)
    if lam is None:
        return D1Verdict("Quantum")
    return D1Verdict("Poisson", lam=lam)


def rebuild(cf: ClassicalForm, H) -> QleCoefficients:
    """Coefficients ``(H, L0, S)`` of the classical equation in its own basis."""
    H = la.as_square(H, "H")
    n = H.shape[0]
    d = cf.d
    if d == 0:
        # No noise: a single idle direction gives the Hamiltonian evolution.
        return QleCoefficients(H, (np.zeros((n, n), dtype=complex),), np.eye(n, dtype=complex))
    L0 = [None] * d
    B = np.zeros((d, d, n, n), dtype=complex)
    for t in cf.brownian:
        L0[t.index] = t.A
        B[t.index, t.index] = np.eye(n)
    for t in cf.poisson:
        L0[t.index] = t.B
        B[t.index, t.index] = t.S
    for t in cf.gauge_only:
        L0[t.index] = np.zeros((n, n), dtype=complex)
        B[t.index, t.index] = t.S
    if any(L is None for L in L0):
        raise ShapeError("classical form indices do not cover 0..d-1")
    return QleCoefficients(H, tuple(L0), la.from_noise_blocks(B))


def random_classical_coefficients(n, n_wiener, n_poisson, rng, n_gauge=0, scramble=True):
    """Coefficients built from classical data, optionally hidden by a random noise change.

    Returns ``(c, data)`` where ``data`` lists the generating ``rho`` values.
    """
    d = n_wiener + n_poisson + n_gauge
    H = la.random_hermitian(n, rng)
    L0, blocks, rhos = [], [], []
    for _ in range(n_wiener):
        A = la.random_matrix(n, rng)
        L0.append((A - A.conj().T) / 2)
        blocks.append(np.eye(n))
    for _ in range(n_poisson):
        S_k = la.haar_unitary(n, rng)
        rho = float(rng.uniform(0.3, 2.5))
        lam = rho * cmath.exp(1j * rng.uniform(-math.pi, math.pi))
        L0.append(lam * (S_k - np.eye(n)))
        blocks.append(S_k)
        rhos.append(rho)
    for _ in range(n_gauge):
        L0.append(np.zeros((n, n), dtype=complex))
        blocks.append(la.haar_unitary(n, rng))
    B = np.zeros((d, d, n, n), dtype=complex)
    for i, blk in enumerate(blocks):
        B[i, i] = blk
    c = QleCoefficients(H, tuple(L0), la.from_noise_blocks(B))
    if scramble:
        c = apply_noise_change(c, la.haar_unitary(d, rng))
    return c, {"rho": rhos}
