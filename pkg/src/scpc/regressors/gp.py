"""Gaussian process regression with constant mean and anisotropic kernels.

The kernel is parameterised through squared-distance divisors ("lengthscales"
in the sense kappa = s2 * k(sum_d (x_d - x'_d)^2 / len_d)), which keeps the
three supported families (squared exponential, Matern-3/2, Matern-5/2) on one
common footing.  Inputs are mapped to the unit box before any lengthscale is
interpreted; hyperparameters are found by multi-start Nelder-Mead on the log
marginal likelihood with the constant mean profiled out in closed form.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular
from scipy.optimize import minimize

from scpc._kernels import kernel_cross
from scpc.regressors.basis import FitError, InputScaler

log = logging.getLogger(__name__)

KERNEL_IDS = {"se": 0, "matern32": 1, "matern52": 2}
_JITTERS = (0.0, 1e-10, 1e-8, 1e-6)
_LOG_BOX = (np.log(1e-3), np.log(1e3))
_NOISE_BOX = (np.log(1e-6), np.log(1e2))


@dataclass
class GPModel:
    kernel: str
    lengthscales: np.ndarray  # squared-distance divisors, unit-box coordinates
    process_var: float
    noise_var: float
    mean_const: float
    scaler: InputScaler
    x_train: np.ndarray  # unit-box coordinates
    y_train: np.ndarray
    chol: np.ndarray
    alpha: np.ndarray  # (K + noise I)^{-1} (y - mean)

    @property
    def kind_id(self) -> int:
        return KERNEL_IDS[self.kernel]

    def predict(self, X, return_sd: bool = False):
        return gp_predict(self, X, return_sd=return_sd)


def _chol_with_jitter(K: np.ndarray):
    scale = float(np.mean(np.diag(K)))
    for j in _JITTERS:
        try:
            return cholesky(K + j * scale * np.eye(K.shape[0]), lower=True)
        except np.linalg.LinAlgError:
            continue
    raise FitError("covariance matrix not positive definite after maximal jitter")


def _nll_and_mean(Xs, y, inv_len, kind, pv, nv):
    K = pv * kernel_cross(Xs, Xs, inv_len, kind)
    K[np.diag_indices_from(K)] += nv
    L = _chol_with_jitter(K)
    ones = np.ones_like(y)
    ki_y = cho_solve((L, True), y)
    ki_1 = cho_solve((L, True), ones)
    denom = float(ones @ ki_1)
    beta0 = float(ones @ ki_y) / denom if denom > 0 else float(np.mean(y))
    r = y - beta0
    ki_r = ki_y - beta0 * ki_1
    nll = 0.5 * float(r @ ki_r) + float(np.sum(np.log(np.diag(L)))) + 0.5 * len(y) * np.log(2 * np.pi)
    return nll, beta0, L, ki_r


def _hyper_starts(d: int, y_var: float, n_starts: int) -> list:
    # structured spread of lengthscales and variance splits inside the box
    base_ls = [0.02, 0.08, 0.25, 0.8]
    noise_frac = [0.3, 0.05]
    starts = []
    i = 0
    while len(starts) < n_starts:
        ls = base_ls[i % len(base_ls)]
        nf = noise_frac[(i // len(base_ls)) % len(noise_frac)]
        theta = np.concatenate(
            [np.full(d, np.log(ls)), [np.log(max(y_var * (1 - nf), 1e-8))], [np.log(max(y_var * nf, 1e-8))]]
        )
        starts.append(theta)
        i += 1
    return starts


def gp_fit(
    X,
    y,
    kernel: str = "matern32",
    optimizer_budget: int = 60,
    n_starts: int = 8,
    subsample: int = 500,
) -> GPModel:
    """Fit hyperparameters by maximising the log marginal likelihood.

    Multi-start Nelder-Mead over log-parameters within box bounds; when the
    training set is larger than ``subsample`` the search runs on a fixed
    subsample and the returned model conditions on the full data with the
    selected hyperparameters.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    if n < 10:
        raise FitError("gp_fit needs at least 10 samples")
    scaler = InputScaler.fit(X)
    Xs = scaler.transform(X)
    if n > subsample:
        idx = np.random.default_rng(12345).permutation(n)[:subsample]
        Xo, yo = np.ascontiguousarray(Xs[idx]), y[idx]
    else:
        Xo, yo = Xs, y
    kind = KERNEL_IDS[kernel]
    y_var = max(float(np.var(yo)), 1e-10)

    lo = np.concatenate([np.full(d, _LOG_BOX[0]), [_LOG_BOX[0]], [_NOISE_BOX[0]]])
    hi = np.concatenate([np.full(d, _LOG_BOX[1]), [_LOG_BOX[1]], [_NOISE_BOX[1]]])

    def objective(theta):
        th = np.clip(theta, lo, hi)
        penalty = 1e4 * float(np.sum((theta - th) ** 2))
        ls = np.exp(th[:d])
        pv = float(np.exp(th[d]))
        nv = float(np.exp(th[d + 1]))
        try:
            nll, _, _, _ = _nll_and_mean(Xo, yo, 1.0 / ls, kind, pv, nv)
        except (FitError, np.linalg.LinAlgError):
            return 1e12
        if not np.isfinite(nll):
            return 1e12
        return nll + penalty

    best = None
    best_val = np.inf
    for theta0 in _hyper_starts(d, y_var, n_starts):
        res = minimize(
            objective,
            theta0,
            method="Nelder-Mead",
            options={"maxiter": optimizer_budget * (d + 2), "xatol": 1e-3, "fatol": 1e-4},
        )
        if res.fun < best_val:
            best_val = res.fun
            best = np.clip(res.x, lo, hi)
    if best is None or not np.isfinite(best_val) or best_val >= 1e12:
        raise FitError("GP likelihood non-finite at every start")
    ls = np.exp(best[:d])
    pv = float(np.exp(best[d]))
    nv = float(np.exp(best[d + 1]))
    return _condition_scaled(scaler, Xs, y, kernel, ls, pv, nv)


def gp_condition(X, y, kernel, lengthscales, process_var, noise_var, mean_const=None) -> GPModel:
    """Condition a GP with explicitly supplied hyperparameters.

    ``lengthscales`` are interpreted in unit-box coordinates after internal
    standardisation, matching what ``gp_fit`` stores.  With ``mean_const``
    unset the constant mean is profiled by generalised least squares.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    scaler = InputScaler.fit(X)
    return _condition_scaled(
        scaler, scaler.transform(X), y, kernel,
        np.asarray(lengthscales, dtype=float), float(process_var), float(noise_var), mean_const,
    )


def _condition_scaled(scaler, Xs, y, kernel, ls, pv, nv, mean_const=None) -> GPModel:
    kind = KERNEL_IDS[kernel]
    Xs = np.ascontiguousarray(Xs)
    K = pv * kernel_cross(Xs, Xs, 1.0 / ls, kind)
    K[np.diag_indices_from(K)] += nv
    L = _chol_with_jitter(K)
    if mean_const is None:
        ones = np.ones_like(y)
        ki_y = cho_solve((L, True), y)
        ki_1 = cho_solve((L, True), ones)
        denom = float(ones @ ki_1)
        mean_const = float(ones @ ki_y) / denom if denom > 0 else float(np.mean(y))
    alpha = cho_solve((L, True), y - mean_const)
    return GPModel(
        kernel=kernel,
        lengthscales=ls,
        process_var=pv,
        noise_var=nv,
        mean_const=float(mean_const),
        scaler=scaler,
        x_train=Xs,
        y_train=np.asarray(y, dtype=float),
        chol=L,
        alpha=alpha,
    )


def gp_refit_targets(model: GPModel, y_new) -> GPModel:
    """Re-condition on new targets keeping hyperparameters and sites fixed."""
    y_new = np.asarray(y_new, dtype=float)
    ones = np.ones_like(y_new)
    ki_y = cho_solve((model.chol, True), y_new)
    ki_1 = cho_solve((model.chol, True), ones)
    denom = float(ones @ ki_1)
    beta0 = float(ones @ ki_y) / denom if denom > 0 else float(np.mean(y_new))
    alpha = ki_y - beta0 * ki_1
    return GPModel(
        kernel=model.kernel,
        lengthscales=model.lengthscales,
        process_var=model.process_var,
        noise_var=model.noise_var,
        mean_const=beta0,
        scaler=model.scaler,
        x_train=model.x_train,
        y_train=y_new,
        chol=model.chol,
        alpha=alpha,
    )


def gp_predict(model: GPModel, X, return_sd: bool = False, chunk: int = 20000):
    """Posterior mean (and s.d. of the latent surface) at query sites."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Xq = np.ascontiguousarray(model.scaler.transform(X))
    nq = Xq.shape[0]
    mean = np.empty(nq)
    sd = np.empty(nq) if return_sd else None
    inv_len = 1.0 / model.lengthscales
    for s in range(0, nq, chunk):
        e = min(s + chunk, nq)
        Kq = model.process_var * kernel_cross(Xq[s:e], model.x_train, inv_len, model.kind_id)
        mean[s:e] = model.mean_const + Kq @ model.alpha
        if return_sd:
            v = solve_triangular(model.chol, Kq.T, lower=True)
            var = model.process_var - np.einsum("ij,ij->j", v, v)
            sd[s:e] = np.sqrt(np.clip(var, 0.0, None))
    if return_sd:
        return mean, sd
    return mean
