"""Monte Carlo simulation of classical unitary jump-diffusions.

The scheme is split-step: an Euler step for drift and diffusion,
``U <- (I + D dt + sum_i A_i sqrt(dt) xi_i) U`` with the Poisson compensators
folded into ``D``, followed by the exact unitary factor ``S_k`` for every
jump sampled in the step (``I + B_k / rho_k = S_k``).

Each trajectory draws from its own Philox stream keyed by ``(seed, index)``
and trajectories are processed in batches of fixed size, so estimates do
not depend on how batches are spread over workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .classical import ClassicalForm
from .lindblad import LindbladGenerator, from_classical_form, semigroup_apply

BATCH = 2048
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-3
    t_final: float = 1.0
    n_traj: int = 1000
    seed: int = 0
    reunitarize: bool = False

    def __post_init__(self):
        if not (self.dt > 0 and self.t_final > 0):
            raise ValueError("dt and t_final must be positive")
        if self.dt > self.t_final * (1 + 1e-12):
            raise ValueError("dt must not exceed t_final")
        if int(self.n_traj) < 1:
            raise ValueError("n_traj must be at least 1")

    @property
    def n_steps(self):
        return max(1, int(round(self.t_final / self.dt)))


@dataclass(frozen=True)
class SemigroupEstimate:
    mean: np.ndarray
    stderr: float
    unitarity_defect: float
    n_traj: int
    mean_jumps: np.ndarray


@dataclass(frozen=True)
class StepData:
    """Matrices driving the scheme, derived once from a classical form."""

    drift: np.ndarray
    A: np.ndarray  # (nB, n, n)
    S: np.ndarray  # (nP, n, n)
    rates: np.ndarray  # (nP,)

    @property
    def n(self):
        return self.drift.shape[0]


def step_data(cf: ClassicalForm, H) -> StepData:
    H = la.as_square(H, "H")
    n = H.shape[0]
    A = np.array([t.A for t in cf.brownian], dtype=complex).reshape(-1, n, n)
    B = np.array([t.B for t in cf.poisson], dtype=complex).reshape(-1, n, n)
    S = np.array([t.S for t in cf.poisson], dtype=complex).reshape(-1, n, n)
    rho = np.array([t.rho for t in cf.poisson], dtype=float)
    drift = -1j * H
    drift = drift - 0.5 * sum((a.conj().T @ a for a in A), np.zeros((n, n)))
    drift = drift - 0.5 * sum((b.conj().T @ b for b in B), np.zeros((n, n)))
    # compensator of each jump term: -rho_k B_k dt
    drift = drift - sum((r * b for r, b in zip(rho, B)), np.zeros((n, n)))
    return StepData(drift, A, S, rho**2)


def trajectory_rng(seed, traj_index):
    return np.random.Generator(np.random.Philox(key=[int(seed) & _MASK64, int(traj_index) & _MASK64]))


def draw_increments(data: StepData, config: SimConfig, traj_index):
    """Standard normals ``(steps, nB)`` and jump counts ``(steps, nP)`` of one trajectory."""
    rng = trajectory_rng(config.seed, traj_index)
    steps = config.n_steps
    xi = rng.standard_normal((steps, data.A.shape[0]))
    dN = rng.poisson(data.rates * config.dt, size=(steps, data.S.shape[0]))
    return xi, dN


def _project_unitary(U):
    W, _, Vh = np.linalg.svd(U)
    return W @ Vh


def evolve(data: StepData, dt, xi, dN, U0=None, reunitarize=False):
    """Run the scheme on explicit increments.

    ``xi`` has shape ``(m, steps, nB)`` and ``dN`` shape ``(m, steps, nP)``
    for a batch of ``m`` trajectories (2-D inputs are a single trajectory).
    """
    single = np.ndim(xi) == 2
    xi = np.asarray(xi, dtype=float)
    dN = np.asarray(dN, dtype=np.int64)
    if single:
        xi, dN = xi[None], dN[None]
    m, steps = xi.shape[:2]
    n = data.n
    eye = np.eye(n)
    U = np.broadcast_to(eye if U0 is None else U0, (m, n, n)).astype(complex)
    base = eye + data.drift * dt
    sq = math.sqrt(dt)
    nP = data.S.shape[0]
    for s in range(steps):
        M = base + sq * np.einsum("mk,kij->mij", xi[:, s], data.A) if data.A.shape[0] else base
        U = np.matmul(M, U)
        for k in range(nP):
            hit = np.nonzero(dN[:, s, k])[0]
            for j in hit:
                U[j] = np.linalg.matrix_power(data.S[k], int(dN[j, s, k])) @ U[j]
        if reunitarize:
            U = _project_unitary(U)
    return U[0] if single else U


def simulate_trajectory(cf: ClassicalForm, H, config: SimConfig, traj_index=0):
    """Final unitary of trajectory ``traj_index``."""
    data = step_data(cf, H)
    xi, dN = draw_increments(data, config, traj_index)
    return evolve(data, config.dt, xi, dN, reunitarize=config.reunitarize)


def _run_batch(args):
    data, X, config, start, stop = args
    xs, ns = zip(*(draw_increments(data, config, i) for i in range(start, stop)))
    U = evolve(data, config.dt, np.stack(xs), np.stack(ns), reunitarize=config.reunitarize)
    Ud = np.conj(np.swapaxes(U, 1, 2))
    vals = Ud @ X @ U
    defect = np.linalg.norm(Ud @ U - np.eye(data.n), axis=(1, 2))
    jumps = np.stack(ns).sum(axis=1)
    return vals, defect, jumps


def estimate_semigroup(cf: ClassicalForm, H, X, config: SimConfig, workers=1) -> SemigroupEstimate:
    """Monte Carlo estimate of ``E[U_t^* X U_t]`` at ``t = config.t_final``."""
    data = step_data(cf, H)
    X = la.as_square(X, "X")
    N = int(config.n_traj)
    jobs = [(data, X, config, a, min(a + BATCH, N)) for a in range(0, N, BATCH)]
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_batch, jobs))
    else:
        parts = [_run_batch(j) for j in jobs]
    vals = np.concatenate([p[0] for p in parts])
    defect = np.concatenate([p[1] for p in parts])
    jumps = np.concatenate([p[2] for p in parts])
    mean = vals.mean(axis=0)
    if N > 1:
        var = (np.abs(vals - mean) ** 2).sum(axis=0) / (N - 1)
        stderr = float(np.sqrt(var / N).max())
    else:
        stderr = float("inf")
    return SemigroupEstimate(mean, stderr, float(defect.mean()), N, jumps.mean(axis=0))


def compare_with_lindblad(cf: ClassicalForm, H, X, t, config: SimConfig, C=1.0, floor=5e-3, reference: LindbladGenerator | None = None, workers=1):
    """Check the Monte Carlo estimate against ``exp(t L)(X)``.

    Passes iff the largest entrywise deviation is at most
    ``max(3 stderr + C dt, floor)``.  ``reference`` replaces the generator
    derived from ``cf`` (used for negative controls).
    """
    if abs(config.t_final - t) > 1e-12:
        config = SimConfig(config.dt, t, config.n_traj, config.seed, config.reunitarize)
    est = estimate_semigroup(cf, H, X, config, workers=workers)
    g = reference if reference is not None else from_classical_form(cf, H)
    exact = semigroup_apply(g, X, t)
    err = float(np.abs(est.mean - exact).max())
    bound = max(3 * est.stderr + C * config.dt, floor)
    return {
        "max_abs_error": err,
        "stderr": est.stderr,
        "bound": bound,
        "pass": bool(err <= bound),
        "unitarity_defect": est.unitarity_defect,
        "estimate": est.mean,
        "exact": exact,
    }
