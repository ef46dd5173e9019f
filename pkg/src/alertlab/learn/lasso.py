"""L1-penalized logistic regression fit by cyclic coordinate descent.

Each sweep re-quadratizes the logistic loss (IRLS working response) and runs
one cyclic pass of soft-threshold coordinate updates over the standardized
features; the intercept is unpenalized.  The objective is

    (1/n) * sum(logloss) + penalty * sum(|weights|)

in the standardized parameterization, and the fitted model records the
maximum KKT violation so convergence is checkable after the fact.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from ..errors import ValidationError
from .boosting import sigmoid
from .validation import check_binary_labels, check_matrix

_MIN_WEIGHT = 1e-5
_PROB_EPS = 1e-15


def soft_threshold(value: float, penalty: float) -> float:
    if value > penalty:
        return value - penalty
    if value < -penalty:
        return value + penalty
    return 0.0


class LassoLogit(BaseEstimator, ClassifierMixin):
    """Sparse linear classifier; rejects NaN input (impute upstream)."""

    def __init__(
        self,
        penalty: float = 0.01,
        max_sweeps: int = 10_000,
        tol: float = 1e-7,
        standardize: bool = True,
    ):
        self.penalty = penalty
        self.max_sweeps = max_sweeps
        self.tol = tol
        self.standardize = standardize

    def fit(self, X, y):
        X = check_matrix(X, allow_nan=False)
        y = check_binary_labels(y, len(X), require_both=False)
        if self.penalty < 0:
            raise ValidationError("penalty must be non-negative")
        n, d = X.shape

        if self.standardize:
            mean = X.mean(axis=0)
            std = X.std(axis=0)
            std = np.where(std == 0.0, 1.0, std)
        else:
            mean = np.zeros(d)
            std = np.ones(d)
        Z = (X - mean) / std

        base_rate = float(np.clip(y.mean(), 1e-12, 1.0 - 1e-12))
        intercept = float(np.log(base_rate / (1.0 - base_rate)))
        beta = np.zeros(d, dtype=np.float64)
        eta = np.full(n, intercept, dtype=np.float64)

        sweeps = 0
        for sweeps in range(1, self.max_sweeps + 1):
            p = sigmoid(eta)
            w = np.clip(p * (1.0 - p), _MIN_WEIGHT, None)
            z = eta + (y - p) / w
            r = z - eta  # residual of the working response

            max_delta = 0.0
            # Unpenalized intercept update.
            delta_b = float((w * r).sum() / w.sum())
            intercept += delta_b
            r -= delta_b
            max_delta = max(max_delta, abs(delta_b))

            for j in range(d):
                zj = Z[:, j]
                denom = float((w * zj * zj).sum()) / n
                if denom == 0.0:
                    continue
                rho = float((w * zj * r).sum()) / n + denom * beta[j]
                new_beta = soft_threshold(rho, self.penalty) / denom
                if new_beta != beta[j]:
                    r -= zj * (new_beta - beta[j])
                    max_delta = max(max_delta, abs(new_beta - beta[j]))
                    beta[j] = new_beta

            eta = z - r
            if max_delta <= self.tol:
                break

        p = sigmoid(eta)
        gradient = Z.T @ (p - y) / n
        violation = 0.0
        for j in range(d):
            if beta[j] == 0.0:
                violation = max(violation, abs(float(gradient[j])) - self.penalty)
            else:
                violation = max(violation, abs(float(gradient[j]) + self.penalty * np.sign(beta[j])))
        self.kkt_violation_ = max(violation, 0.0)

        self.coef_ = beta / std
        self.intercept_ = float(intercept - float((beta * mean / std).sum()))
        self.n_sweeps_ = sweeps
        self.n_features_in_ = d
        self.classes_ = np.array([0, 1])
        return self

    def _check_fitted(self):
        if not hasattr(self, "coef_"):
            raise NotFittedError("this LassoLogit instance is not fitted yet")

    def decision_function(self, X) -> np.ndarray:
        self._check_fitted()
        X = check_matrix(X, allow_nan=False)
        if X.shape[1] != self.n_features_in_:
            raise ValidationError(f"X has {X.shape[1]} features, model expects {self.n_features_in_}")
        return X @ self.coef_ + self.intercept_

    def predict_proba(self, X) -> np.ndarray:
        p = np.clip(sigmoid(self.decision_function(X)), _PROB_EPS, 1.0 - _PROB_EPS)
        return np.column_stack([1.0 - p, p])

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(int)
