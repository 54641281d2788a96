"""Logistic regression on a polynomial basis, fitted by IRLS.

Stores the inverse observed Fisher information so confidence margins on the
predicted probability can be formed with the Delta method.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from scpc.regressors.basis import FitError, InputScaler, PolynomialBasis

log = logging.getLogger(__name__)

_SEPARATION_RIDGE = 1e-6


def _sigmoid(eta):
    return 1.0 / (1.0 + np.exp(-np.clip(eta, -500.0, 500.0)))


@dataclass
class LogisticModel:
    basis: PolynomialBasis
    scaler: InputScaler
    beta: np.ndarray
    cov: np.ndarray  # Var(beta), inverse observed information
    ridge: float
    converged: bool

    def features(self, X) -> np.ndarray:
        return self.basis.evaluate(self.scaler.transform(X))

    def predict_proba(self, X) -> np.ndarray:
        return _sigmoid(self.features(X) @ self.beta)

    def delta_margin(self, X, z: float) -> np.ndarray:
        """z * sqrt(p(1-p) * phi' Var(beta) phi), the confidence buffer on p-hat."""
        Phi = self.features(X)
        p = _sigmoid(Phi @ self.beta)
        quad = np.einsum("ij,jk,ik->i", Phi, self.cov, Phi)
        return z * np.sqrt(np.clip(p * (1.0 - p) * quad, 0.0, None))


def _loglik(y, eta, beta, ridge):
    # Bernoulli log-likelihood with optional ridge penalty
    ll = float(np.sum(y * eta - np.logaddexp(0.0, eta)))
    if ridge > 0.0:
        ll -= 0.5 * ridge * float(beta @ beta)
    return ll


def _irls(Phi, y, ridge, max_iter, tol):
    k = Phi.shape[1]
    beta = np.zeros(k)
    eta = Phi @ beta
    ll = _loglik(y, eta, beta, ridge)
    converged = False
    for _ in range(max_iter):
        p = _sigmoid(eta)
        w = p * (1.0 - p)
        grad = Phi.T @ (y - p) - ridge * beta
        if np.linalg.norm(grad) < tol:
            converged = True
            break
        H = (Phi * w[:, None]).T @ Phi + (ridge + 1e-12) * np.eye(k)
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            return beta, H, False, True
        # halve until the log-likelihood does not decrease
        t = 1.0
        for _ in range(30):
            cand = beta + t * step
            eta_c = Phi @ cand
            ll_c = _loglik(y, eta_c, cand, ridge)
            if ll_c >= ll - 1e-12:
                break
            t *= 0.5
        beta, eta, ll = beta + t * step, Phi @ (beta + t * step), ll_c
        if np.max(np.abs(beta)) > 1e3:
            return beta, None, False, True  # divergence: complete separation path
    p = _sigmoid(eta)
    H = (Phi * (p * (1.0 - p))[:, None]).T @ Phi + (ridge + 1e-12) * np.eye(k)
    return beta, H, converged, False


def logistic_fit(
    inputs,
    labels,
    basis: PolynomialBasis,
    max_iter: int = 100,
    tol: float = 1e-8,
) -> LogisticModel:
    """Maximum-likelihood logistic fit of binary labels on polynomial features.

    If only one class is present, or IRLS diverges (complete separation), the
    fit is redone with ridge strength 1e-6 and a warning; the error condition
    is thereby resolved automatically rather than raised.
    """
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(labels, dtype=float)
    if set(np.unique(y)) - {0.0, 1.0}:
        raise FitError("labels must be in {0, 1}")
    scaler = InputScaler.fit(X)
    Phi = basis.evaluate(scaler.transform(X))
    ridge = 0.0
    if len(np.unique(y)) < 2:
        warnings.warn(
            "single-class labels: complete separation; fitting with ridge 1e-6", stacklevel=2
        )
        ridge = _SEPARATION_RIDGE
    beta, H, converged, diverged = _irls(Phi, y, ridge, max_iter, tol)
    if (diverged or not converged) and ridge == 0.0:
        warnings.warn(
            "complete separation detected (divergent coefficients); "
            "refitting with ridge regularization 1e-6",
            stacklevel=2,
        )
        ridge = _SEPARATION_RIDGE
        beta, H, converged, diverged = _irls(Phi, y, ridge, max_iter, tol)
    if H is None:
        raise FitError("logistic IRLS failed even with ridge regularization")
    cov = np.linalg.inv(H)
    return LogisticModel(basis=basis, scaler=scaler, beta=beta, cov=cov, ridge=ridge, converged=converged)
