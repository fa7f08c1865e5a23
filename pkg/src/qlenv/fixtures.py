"""Small reference equations used by the tests, the CLI and the README."""

from __future__ import annotations

import numpy as np

from . import linalg as la
from .model import QleCoefficients

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
LOWERING = np.array([[0, 1], [0, 0]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def rotation(theta):
    """The real noise change ``[[sin, cos], [-cos, sin]]``."""
    s, c = np.sin(theta), np.cos(theta)
    return np.array([[s, c], [-c, s]], dtype=complex)


def spontaneous_emission():
    return QleCoefficients(np.zeros((2, 2)), (LOWERING,), I2)


def amplitude_damping():
    return spontaneous_emission()


def brownian_d1():
    """Anti-Hermitian coefficient ``i sigma_x``: classical Brownian."""
    return QleCoefficients(np.zeros((2, 2)), (1j * SIGMA_X,), I2)


def brownian_selfadjoint():
    """Self-adjoint coefficient ``sigma_x``; Brownian after a phase change of noise."""
    return QleCoefficients(np.zeros((2, 2)), (SIGMA_X,), I2)


def poisson_d1(rho=1.0):
    """``L = rho (sigma_x - I)`` with gauge ``sigma_x``."""
    return QleCoefficients(np.zeros((2, 2)), (rho * (SIGMA_X - I2),), SIGMA_X)


def mixed_pair(theta=np.pi / 6, lam=2.0):
    """One emission channel and one Poisson channel, rotated by ``rotation(theta)``.

    In the rotated basis the gauge is ``I (+) sigma_x`` and the coefficients are
    ``LOWERING`` and ``lam (sigma_x - I)``.
    """
    s, c = np.sin(theta), np.cos(theta)
    W = rotation(theta)
    K = la.lift_noise(W, 2)
    S = K @ la.from_noise_blocks(np.array([[I2, 0 * I2], [0 * I2, SIGMA_X]])) @ K.conj().T
    L1 = np.array([[-lam * c, lam * c + s], [lam * c, -lam * c]], dtype=complex)
    L2 = np.array([[-lam * s, lam * s - c], [lam * s, -lam * s]], dtype=complex)
    return QleCoefficients(np.zeros((2, 2)), (L1, L2), S)


def hidden_pair(theta=np.pi / 6):
    """Trivial gauge with a classical direction hidden at angle ``theta``."""
    s, c = np.sin(theta), np.cos(theta)
    L1 = np.array([[-c, c + s], [c, -c]], dtype=complex)
    L2 = np.array([[-s, s - c], [s, -s]], dtype=complex)
    return QleCoefficients(np.zeros((2, 2)), (L1, L2), np.eye(4, dtype=complex))


EXAMPLES = {
    "spontaneous_emission": spontaneous_emission,
    "amplitude_damping": amplitude_damping,
    "brownian_d1": brownian_d1,
    "brownian_selfadjoint": brownian_selfadjoint,
    "poisson_d1": poisson_d1,
    "mixed_pair": mixed_pair,
    "hidden_pair": hidden_pair,
}

# Fixtures taking ``theta`` and (for mixed_pair) ``lam``.
PARAMETERS = {"mixed_pair": ("theta", "lam"), "hidden_pair": ("theta",), "poisson_d1": ("rho",)}


def build(name, **params):
    """Instantiate a named fixture; unknown names raise ``KeyError`` listing the choices."""
    if name not in EXAMPLES:
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(sorted(EXAMPLES))}")
    allowed = PARAMETERS.get(name, ())
    kwargs = {k: v for k, v in params.items() if v is not None}
    extra = set(kwargs) - set(allowed)
    if extra:
        raise ValueError(f"fixture {name!r} takes no parameter(s) {sorted(extra)}")
    return EXAMPLES[name](**kwargs)
