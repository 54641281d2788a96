"""Soft-margin SVM with an RBF kernel, solved in the dual by SMO.

The kernel is exp(-sum_d gamma_d (x_d - x'_d)^2) on unit-box coordinates;
bandwidths default to the inverse median pairwise squared distance, shared
within coordinate blocks (state coordinates vs the control coordinate).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from scpc._kernels import kernel_cross, smo_solve
from scpc.regressors.basis import FitError, InputScaler

_ALPHA_TOL = 1e-10


@dataclass
class SVMModel:
    scaler: InputScaler
    gamma: np.ndarray  # per-coordinate bandwidths on unit-box inputs
    sv_x: np.ndarray   # support vectors, unit-box coordinates
    sv_coef: np.ndarray  # alpha_i * y_i
    bias: float
    n_iter: int
    kkt_gap: float

    def decision(self, X) -> np.ndarray:
        Xq = np.ascontiguousarray(self.scaler.transform(X))
        K = kernel_cross(Xq, self.sv_x, self.gamma, 0)
        return K @ self.sv_coef + self.bias

    def classify(self, X) -> np.ndarray:
        return np.where(self.decision(X) >= 0.0, 1, -1)


def _default_gamma(Xs: np.ndarray, blocks) -> np.ndarray:
    """Inverse median pairwise squared distance, one value per block."""
    n = Xs.shape[0]
    sub = Xs if n <= 500 else Xs[np.linspace(0, n - 1, 500).astype(int)]
    gamma = np.empty(Xs.shape[1])
    for block in blocks:
        cols = sub[:, block]
        d2 = np.sum((cols[:, None, :] - cols[None, :, :]) ** 2, axis=-1)
        med = float(np.median(d2[np.triu_indices_from(d2, k=1)]))
        gamma[block] = 1.0 / max(med, 1e-12)
    return gamma


def svm_fit(
    inputs,
    labels,
    C: float = 1.0,
    gamma=None,
    tol: float = 1e-4,
    max_iter: int = 2_000_000,
    control_block: bool = True,
) -> SVMModel:
    """Solve the kernelised soft-margin problem (box constraint ``C``).

    ``labels`` must be in {-1, +1} with both classes present.  ``gamma`` may
    be a scalar or per-coordinate array; by default one shared bandwidth is
    estimated for the state coordinates and one for the last (control)
    coordinate.  Raises on non-convergence with the final KKT violation.
    """
    X = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(labels, dtype=float)
    if set(np.unique(y)) - {-1.0, 1.0}:
        raise FitError("labels must be in {-1, +1}")
    if len(np.unique(y)) < 2:
        raise FitError("both classes must be present")
    if C <= 0.0:
        raise FitError("penalty C must be positive")
    scaler = InputScaler.fit(X)
    Xs = np.ascontiguousarray(scaler.transform(X))
    d = Xs.shape[1]
    if gamma is None:
        blocks = [list(range(d - 1)), [d - 1]] if (control_block and d >= 2) else [list(range(d))]
        gamma = _default_gamma(Xs, blocks)
    else:
        gamma = np.broadcast_to(np.asarray(gamma, dtype=float), (d,)).copy()
    K = kernel_cross(Xs, Xs, gamma, 0)
    alpha, b, n_iter, gap = smo_solve(K, y, float(C), float(tol), int(max_iter))
    if gap >= tol and n_iter >= max_iter:
        raise FitError(f"SMO did not converge: KKT violation {gap:.3e} after {n_iter} iterations")
    keep = alpha > _ALPHA_TOL
    return SVMModel(
        scaler=scaler,
        gamma=gamma,
        sv_x=Xs[keep],
        sv_coef=(alpha * y)[keep],
        bias=float(b),
        n_iter=int(n_iter),
        kkt_gap=float(gap),
    )
