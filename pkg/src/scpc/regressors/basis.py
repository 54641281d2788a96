"""Polynomial feature maps and ordinary least squares."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from itertools import combinations_with_replacement

import numpy as np

log = logging.getLogger(__name__)


class FitError(RuntimeError):
    """A regression fit failed or did not converge."""


@dataclass(frozen=True)
class PolynomialBasis:
    """Monomials of total degree <= ``degree`` in ``dims`` coordinates.

    The constant term comes first, then terms ordered by total degree and
    lexicographic exponent order, so evaluation at the zero vector is
    (1, 0, 0, ...).  With ``include_cross_terms=False`` only pure powers of
    single coordinates are kept.
    """

    degree: int
    dims: int
    include_cross_terms: bool = True
    exponents: tuple = field(init=False)

    def __post_init__(self) -> None:
        if self.degree < 0 or self.dims < 1:
            raise ValueError("degree >= 0 and dims >= 1 required")
        exps = []
        for deg in range(self.degree + 1):
            for combo in combinations_with_replacement(range(self.dims), deg):
                e = [0] * self.dims
                for c in combo:
                    e[c] += 1
                if not self.include_cross_terms and np.count_nonzero(e) > 1:
                    continue
                exps.append(tuple(e))
        object.__setattr__(self, "exponents", tuple(sorted(exps, key=lambda e: (sum(e), e))))

    def __len__(self) -> int:
        return len(self.exponents)

    def evaluate(self, X) -> np.ndarray:
        """Feature matrix (n, n_terms) for inputs X of shape (n, dims)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.dims:
            raise ValueError(f"expected {self.dims} input coordinates, got {X.shape[1]}")
        out = np.empty((X.shape[0], len(self.exponents)))
        for k, e in enumerate(self.exponents):
            col = np.ones(X.shape[0])
            for d, p in enumerate(e):
                if p:
                    col = col * X[:, d] ** p
            out[:, k] = col
        return out

    def term_names(self, labels=None) -> list:
        labels = labels or [f"x{d}" for d in range(self.dims)]
        names = []
        for e in self.exponents:
            parts = [
                labels[d] if p == 1 else f"{labels[d]}^{p}" for d, p in enumerate(e) if p > 0
            ]
            names.append("*".join(parts) if parts else "1")
        return names


def ols_fit(inputs, targets, basis: PolynomialBasis, ridge: float = 0.0) -> np.ndarray:
    """Least-squares coefficients of ``targets`` on the polynomial features.

    Solved by QR/SVD through ``numpy.linalg.lstsq``.  A rank-deficient design
    is reported with the offending basis columns and re-solved with a small
    ridge (1e-6) on the normal equations.
    """
    Phi = basis.evaluate(inputs)
    y = np.asarray(targets, dtype=float)
    if Phi.shape[0] < len(basis):
        raise FitError(f"{Phi.shape[0]} rows cannot identify {len(basis)} basis terms")
    if ridge > 0.0:
        A = Phi.T @ Phi + ridge * np.eye(Phi.shape[1])
        return np.linalg.solve(A, Phi.T @ y)
    beta, _, rank, sv = np.linalg.lstsq(Phi, y, rcond=None)
    if rank < Phi.shape[1]:
        # name the columns dominating the null space of the design
        _, _, vt = np.linalg.svd(Phi, full_matrices=False)
        null = np.abs(vt[rank:]).sum(axis=0)
        bad = [basis.term_names()[j] for j in np.nonzero(null > 1e-8 * null.max())[0]]
        warnings.warn(
            f"rank-deficient design (rank {rank} < {Phi.shape[1]}); "
            f"deficient basis columns {bad}; refitting with ridge 1e-6",
            stacklevel=2,
        )
        A = Phi.T @ Phi + 1e-6 * np.eye(Phi.shape[1])
        beta = np.linalg.solve(A, Phi.T @ y)
    return beta


@dataclass(frozen=True)
class InputScaler:
    """Affine map of each coordinate onto [0, 1], frozen at fit time."""

    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def fit(cls, X) -> "InputScaler":
        X = np.atleast_2d(np.asarray(X, dtype=float))
        lo = X.min(axis=0)
        hi = X.max(axis=0)
        span = hi - lo
        hi = np.where(span < 1e-12, lo + 1.0, hi)
        return cls(lo=lo, hi=hi)

    def transform(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return (X - self.lo) / (self.hi - self.lo)
