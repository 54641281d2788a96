"""Censored-Gaussian maximum likelihood for the transformed failure functional.

The modelled variable has CDF P(G <= g) = Phi((g - theta2)/theta3) * 1{g >= theta1}:
a Gaussian right part with a point mass at the censoring location theta1.
theta1 is pinned to the sample minimum (the deterministic first-sub-step value
of the functional); (theta2, theta3) maximise the censored likelihood via a
nested golden-section search (outer log theta3, inner theta2), which is exact
enough for the smooth, unimodal profile and vectorises across many sites.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr

from scpc.regressors.basis import FitError

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
_MIN_DRAWS = 30


@dataclass(frozen=True)
class TruncNormalParams:
    theta1: float  # censoring location (point mass)
    theta2: float  # Gaussian mean
    theta3: float  # Gaussian s.d.

    def tail(self, z):
        """P(G > z); equal to 1 left of the censoring point."""
        z = np.asarray(z, dtype=float)
        out = np.where(z < self.theta1, 1.0, 1.0 - ndtr((z - self.theta2) / self.theta3))
        return float(out) if out.ndim == 0 else out

    def cdf(self, g):
        g = np.asarray(g, dtype=float)
        out = np.where(g < self.theta1, 0.0, ndtr((g - self.theta2) / self.theta3))
        return float(out) if out.ndim == 0 else out


def _neg_loglik(t2, log_t3, t1, m, n_u, sy, syy):
    """-loglik per site from sufficient statistics; all args broadcast."""
    t3 = np.exp(log_t3)
    a = (t1 - t2) / t3
    ll = m * log_ndtr(a) - n_u * log_t3 - 0.5 * (syy - 2.0 * t2 * sy + n_u * t2 * t2) / (t3 * t3)
    return -ll


def _golden_vec(f, lo, hi, iters):
    """Vectorised golden-section minimisation over per-site brackets."""
    a = lo.copy()
    b = hi.copy()
    for _ in range(iters):
        c = b - _GOLDEN * (b - a)
        d = a + _GOLDEN * (b - a)
        left = f(c) < f(d)
        b = np.where(left, d, b)
        a = np.where(left, a, c)
    return 0.5 * (a + b)


def truncnormal_mle_batch(draws: np.ndarray, outer_iters: int = 40, inner_iters: int = 40):
    """Fit (theta1, theta2, theta3) per row of ``draws`` (n_sites, m_b).

    Returns three arrays of length n_sites.  Rows with fewer than 30 draws or
    zero spread raise.
    """
    G = np.atleast_2d(np.asarray(draws, dtype=float))
    n_sites, m_b = G.shape
    if m_b < _MIN_DRAWS:
        raise FitError(f"censored-normal fit needs >= {_MIN_DRAWS} draws, got {m_b}")
    t1 = G.min(axis=1)
    spread = G.std(axis=1)
    if np.any(spread < 1e-12):
        bad = int(np.argmin(spread))
        raise FitError(f"degenerate draws (zero variance) at site {bad}")
    cens = G <= (t1[:, None] + 1e-9)
    m = cens.sum(axis=1).astype(float)
    n_u = m_b - m
    Gu = np.where(cens, 0.0, G)
    sy = Gu.sum(axis=1)
    syy = (Gu * Gu).sum(axis=1)
    # all-censored rows already excluded by the spread check
    sd = np.maximum(spread, 1e-6)

    def profile(log_t3):
        def inner(t2):
            return _neg_loglik(t2, log_t3, t1, m, n_u, sy, syy)

        t2_opt = _golden_vec(inner, t1 - 8.0 * sd, t1 + 8.0 * sd, inner_iters)
        return _neg_loglik(t2_opt, log_t3, t1, m, n_u, sy, syy)

    log_t3 = _golden_vec(profile, np.log(0.05 * sd), np.log(20.0 * sd), outer_iters)

    def inner_final(t2):
        return _neg_loglik(t2, log_t3, t1, m, n_u, sy, syy)

    t2 = _golden_vec(inner_final, t1 - 8.0 * sd, t1 + 8.0 * sd, inner_iters + 20)
    return t1, t2, np.exp(log_t3)


def truncnormal_mle(draws) -> TruncNormalParams:
    """Censored-Gaussian MLE for a single sample of draws."""
    t1, t2, t3 = truncnormal_mle_batch(np.asarray(draws, dtype=float)[None, :])
    return TruncNormalParams(float(t1[0]), float(t2[0]), float(t3[0]))


def batch_tail_at_zero(t1, t2, t3) -> np.ndarray:
    """P(G > 0) per site for arrays of fitted parameters."""
    t1 = np.asarray(t1, dtype=float)
    out = 1.0 - ndtr((0.0 - np.asarray(t2)) / np.asarray(t3))
    return np.where(t1 > 0.0, 1.0, out)
