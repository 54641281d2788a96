"""Linear-in-basis quantile regression via smoothed-pinball IRLS.

The pinball loss rho_tau(r) = r*(tau - 1{r<0}) is smoothed through
|r| ~ sqrt(r^2 + eps) with eps driven down a ladder to 1e-6, which turns each
iteration into a weighted least-squares solve and avoids a linear-programming
dependency.  Var(beta-hat) uses the Powell sandwich with a kernel estimate of
the residual density at zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from scpc.regressors.basis import FitError, InputScaler, PolynomialBasis

_EPS_FINAL = 1e-6


def pinball_loss(residuals, tau: float) -> float:
    r = np.asarray(residuals, dtype=float)
    return float(np.sum(r * (tau - (r < 0.0))))


@dataclass
class QuantRegModel:
    basis: PolynomialBasis
    scaler: InputScaler
    beta: np.ndarray
    cov: np.ndarray
    level: float

    def features(self, X) -> np.ndarray:
        return self.basis.evaluate(self.scaler.transform(X))

    def predict(self, X) -> np.ndarray:
        return self.features(X) @ self.beta

    def delta_margin(self, X, z: float) -> np.ndarray:
        """z * sqrt(phi' Var(beta) phi), the confidence buffer on the quantile."""
        Phi = self.features(X)
        quad = np.einsum("ij,jk,ik->i", Phi, self.cov, Phi)
        return z * np.sqrt(np.clip(quad, 0.0, None))


def quantile_fit(
    inputs,
    responses,
    basis: PolynomialBasis,
    level: float,
    max_iter: int = 200,
    tol: float = 1e-6,
) -> QuantRegModel:
    """Fit the conditional ``level``-quantile by smoothed-pinball IRLS.

    ``level`` is the estimated quantile (e.g. 0.95 to bound an upper tail of
    probability 0.05).  Raises after ``max_iter`` iterations without
    convergence.
    """
    if not 0.0 < level < 1.0:
        raise FitError("quantile level must lie strictly in (0, 1)")
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(responses, dtype=float)
    scaler = InputScaler.fit(X)
    Phi = basis.evaluate(scaler.transform(X))
    n, k = Phi.shape
    if n <= k:
        raise FitError(f"{n} samples cannot identify {k} basis terms")
    tau = float(level)
    scale = max(float(np.std(y)), 1e-12)

    # start from the mean fit, then sharpen the smoothing
    beta, *_ = np.linalg.lstsq(Phi, y, rcond=None)
    phi_sum = Phi.sum(axis=0)
    eps = (0.1 * scale) ** 2
    eps_final = (_EPS_FINAL * scale) ** 2
    converged = False
    for _ in range(max_iter):
        r = y - Phi @ beta
        w = 0.5 / np.sqrt(r * r + eps)
        A = (Phi * w[:, None]).T @ Phi + 1e-10 * np.eye(k)
        rhs = Phi.T @ (w * y) + (tau - 0.5) * phi_sum
        beta_new = np.linalg.solve(A, rhs)
        delta = float(np.max(np.abs(beta_new - beta)))
        beta = beta_new
        if eps <= eps_final and delta < tol * scale:
            converged = True
            break
        eps = max(eps * 0.5, eps_final)
    if not converged:
        raise FitError(f"quantile IRLS did not converge in {max_iter} iterations")

    r = y - Phi @ beta
    # Powell sandwich: tau(1-tau) * B^-1 A B^-1 with kernel-estimated sparsity
    h = max(1.06 * float(np.std(r)) * n ** (-1.0 / 3.0), 1e-8)
    kern = (np.abs(r) <= h).astype(float) / (2.0 * h)
    B = (Phi * kern[:, None]).T @ Phi
    A0 = Phi.T @ Phi
    try:
        Binv = np.linalg.inv(B + 1e-10 * np.eye(k))
    except np.linalg.LinAlgError:
        Binv = np.linalg.pinv(B)
    cov = tau * (1.0 - tau) * Binv @ A0 @ Binv
    return QuantRegModel(basis=basis, scaler=scaler, beta=beta, cov=cov, level=tau)
