"""Scikit-learn style wrappers mapping touchdown rows to lift-off rows.

Both estimators take ``X`` with columns ``(x_dot0, y_dot0, omega0)``. There is
nothing to learn: ``fit`` only validates parameters and builds the model, so
the wrappers can sit inside pipelines and parameter grids.
"""

from __future__ import annotations

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from spinbounce.core import BallState
from spinbounce.filippov import IntegratorConfig, simulate_bounce
from spinbounce.rigid import RigidParams, rigid_bounce
from spinbounce.surface import make_model


def _touchdowns(X):
    X = check_array(X, dtype=float)
    if X.shape[1] != 3:
        raise ValueError(f"expected 3 columns (x_dot0, y_dot0, omega0), got {X.shape[1]}")
    return X


def _slips(X, Y):
    return np.column_stack([X[:, 0] + X[:, 2], Y[:, 0] + Y[:, 2]])


class RigidBounce(TransformerMixin, BaseEstimator):
    def __init__(self, mu=0.3, r=0.5):
        self.mu = mu
        self.r = r

    def fit(self, X=None, y=None):
        self.params_ = RigidParams(self.mu, self.r)
        self.n_features_in_ = 3
        return self

    def predict(self, X):
        """Lift-off ``(x_dot, y_dot, omega)`` for each touchdown row."""
        check_is_fitted(self, "params_")
        X = _touchdowns(X)
        out = np.empty_like(X)
        for i, (xd, yd, w) in enumerate(X):
            f = rigid_bounce(BallState.touchdown(xd, yd, w), self.params_).final_state
            out[i] = (f.x_dot, f.y_dot, f.omega)
        return out

    def case_labels(self, X):
        check_is_fitted(self, "params_")
        X = _touchdowns(X)
        return np.array([rigid_bounce(BallState.touchdown(*row), self.params_).case_label.value for row in X])

    def transform(self, X):
        """``(H0, HF)``: contact-point slip at touchdown and at lift-off."""
        X = _touchdowns(X)
        return _slips(X, self.predict(X))


def _simulate_row(model, row, scale, config):
    tr = simulate_bounce(model, BallState.touchdown(*row).scale_velocities(scale), config)
    f = tr.final_state.scale_velocities(1.0 / scale)
    return f.x_dot, f.y_dot, f.omega


class CompliantBounce(TransformerMixin, BaseEstimator):
    """Compliant-surface bounce. Rows are multiplied by ``velocity_scale`` before
    integration and the lift-off velocities are scaled back."""

    def __init__(self, model="kv", model_params=None, velocity_scale=1.0, rtol=1e-9, atol=1e-12, n_jobs=1):
        self.model = model
        self.model_params = model_params
        self.velocity_scale = velocity_scale
        self.rtol = rtol
        self.atol = atol
        self.n_jobs = n_jobs

    def fit(self, X=None, y=None):
        if not self.velocity_scale > 0:
            raise ValueError("velocity_scale must be positive")
        self.model_ = make_model(self.model, **dict(self.model_params or {}))
        self.config_ = IntegratorConfig(rtol=self.rtol, atol=self.atol)
        self.n_features_in_ = 3
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = _touchdowns(X)
        rows = Parallel(n_jobs=self.n_jobs)(
            delayed(_simulate_row)(self.model_, row, self.velocity_scale, self.config_) for row in X.tolist()
        )
        return np.array(rows, dtype=float).reshape(-1, 3)

    def transform(self, X):
        X = _touchdowns(X)
        return _slips(X, self.predict(X))
