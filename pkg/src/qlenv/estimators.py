"""Estimator-style wrappers over the classification pipeline.

Inputs are sequences of :class:`QleCoefficients` (a single instance is
accepted too).  Fitted state lives in trailing-underscore attributes.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .classical import commutation_residual, to_classical_form
from .decompose import decompose
from .exceptions import NotClassical
from .lindblad import from_coefficients, semigroup_apply
from .model import apply_noise_change
from .validation import check_coefficient_list, check_coefficients, check_tolerance, default_tol

VERDICTS = np.array(["Classical", "Mixed", "Quantum"])


class LangevinClassifier(BaseEstimator):
    """Label each equation ``Classical``, ``Mixed`` or ``Quantum``.

    ``fit`` only records the validated tolerance; the verdict is a
    deterministic function of the coefficients.
    """

    def __init__(self, tol=None, search_budget=2000):
        self.tol = tol
        self.search_budget = search_budget

    def fit(self, X, y=None):
        self.tol_ = check_tolerance(self.tol) if self.tol is not None else default_tol()
        self.classes_ = VERDICTS.copy()
        check_coefficient_list(X, self.tol_)
        return self

    def _verdict(self, c):
        try:
            to_classical_form(c, self.tol_)
            return "Classical"
        except NotClassical:
            res = decompose(c, self.tol_, self.search_budget)
            return "Mixed" if res.dim_classical else "Quantum"

    def predict(self, X):
        check_is_fitted(self, "tol_")
        return np.array([self._verdict(c) for c in check_coefficient_list(X, self.tol_)])

    def decision_function(self, X):
        """Commutation residual of each equation; zero exactly for classical ones."""
        check_is_fitted(self, "tol_")
        return np.array([commutation_residual(c) for c in check_coefficient_list(X, self.tol_)])


class NoiseDecomposer(BaseEstimator, TransformerMixin):
    """Find the classical/quantum split of one equation and rotate others into it."""

    def __init__(self, tol=None, search_budget=2000, seed=0):
        self.tol = tol
        self.search_budget = search_budget
        self.seed = seed

    def fit(self, X, y=None):
        tol = check_tolerance(self.tol) if self.tol is not None else default_tol()
        (c,) = check_coefficient_list(X, tol)
        res = decompose(c, tol, self.search_budget, seed=self.seed)
        self.tol_ = tol
        self.result_ = res
        self.Kc_basis_ = res.Kc_basis
        self.Kq_basis_ = res.Kq_basis
        self.noise_change_ = res.noise_change
        self.tier_ = res.tier
        return self

    def transform(self, X):
        """Coefficients in the basis (classical directions first, then quantum)."""
        check_is_fitted(self, "noise_change_")
        out = [apply_noise_change(c, self.noise_change_, self.tol_) for c in check_coefficient_list(X, self.tol_)]
        return out


class SemigroupModel(BaseEstimator):
    """Semigroup of one equation; ``predict`` evolves observables to ``time``."""

    def __init__(self, time=1.0, tol=None):
        self.time = time
        self.tol = tol

    def fit(self, X, y=None):
        tol = check_tolerance(self.tol) if self.tol is not None else default_tol()
        c = check_coefficients(X[0] if isinstance(X, (list, tuple)) else X, tol)
        self.tol_ = tol
        self.generator_ = from_coefficients(c, tol)
        return self

    def predict(self, X):
        check_is_fitted(self, "generator_")
        obs = [X] if np.ndim(X) == 2 else list(X)
        out = np.array([semigroup_apply(self.generator_, x, float(self.time)) for x in obs])
        return out[0] if np.ndim(X) == 2 else out
