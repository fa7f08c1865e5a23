"""Input-validation helpers shared by the estimators and the CLI."""

from __future__ import annotations

import os

import numpy as np

from . import linalg as la
from .fixtures import I2, SIGMA_X, SIGMA_Y, SIGMA_Z
from .model import QleCoefficients

TOL_ENV = "QLENV_TOL"

_NAMED = {
    "sigma_x": SIGMA_X,
    "sigma_y": SIGMA_Y,
    "sigma_z": SIGMA_Z,
    "identity": I2,
}


def default_tol():
    """Tolerance from ``$QLENV_TOL`` if set, else the library default."""
    raw = os.environ.get(TOL_ENV)
    if raw is None or raw == "":
        return la.DEFAULT_TOL
    return check_tolerance(float(raw))


def check_tolerance(tol):
    tol = float(tol)
    if not np.isfinite(tol) or tol <= 0:
        raise ValueError(f"tolerance must be a positive number, got {tol}")
    return tol


def check_coefficients(c, tol=None) -> QleCoefficients:
    """Accept ``QleCoefficients`` or a coefficient file object; checks unitarity when ``tol`` is given."""
    from .io import CoefficientFile

    if isinstance(c, CoefficientFile):
        c = c.coefficients
    elif isinstance(c, dict):
        c = CoefficientFile.from_dict(c).coefficients
    if not isinstance(c, QleCoefficients):
        raise TypeError(f"expected QleCoefficients, got {type(c).__name__}")
    if tol is not None:
        c.check(tol)
    return c


def check_coefficient_list(X, tol=None):
    if isinstance(X, (QleCoefficients, dict)):
        X = [X]
    return [check_coefficients(c, tol) for c in X]


def parse_observable(spec, n):
    """Observable from a name (``sigma_z``...), ``diag:a,b,...`` or a JSON matrix."""
    import json

    from .io import decode_matrix

    if isinstance(spec, np.ndarray):
        X = la.as_square(spec, "observable")
    elif spec in _NAMED:
        X = _NAMED[spec]
    elif isinstance(spec, str) and spec.startswith("diag:"):
        X = np.diag([complex(v) for v in spec[5:].split(",")])
    else:
        obj = json.loads(spec)
        arr = np.asarray(obj)
        X = decode_matrix(obj, (n, n), "observable") if arr.ndim == 3 else np.asarray(obj, dtype=complex)
    X = la.as_square(X, "observable")
    if X.shape != (n, n):
        raise la.ShapeError(f"observable must be {n} x {n}")
    return X
