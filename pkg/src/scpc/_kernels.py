"""Numba kernels for the simulation and fitting hot paths.

Everything here is a plain array-in / array-out function; RNG draws are
generated by the callers (``numpy`` Philox streams) so that results do not
depend on threading or chunking.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

SQRT3 = 1.7320508075688772
SQRT5 = 2.23606797749979


@njit(cache=True, fastmath=True)
def _battery(L, I, u, dn, imax, bmin, bmax):
    # B = clamp(max(min(L-u, I/dn), -(imax-I)/dn), bmin, bmax)
    b = L - u
    idis = I / dn
    if b > idis:
        b = idis
    lo = -(imax - I) / dn
    if b < lo:
        b = lo
    if b < bmin:
        b = bmin
    elif b > bmax:
        b = bmax
    return b


@njit(cache=True, fastmath=True)
def sim_batches(L0, I0, U, Z, mu_nodes, sig_steps, decay, csd, dn, imax, bmin, bmax):
    """Simulate ``M_b`` sub-stepped one-interval paths from each site.

    L0, I0, U : (n,) site coordinates and constant control.
    Z         : (n, M_b, K) standard normal draws.
    mu_nodes  : (K+1,) demand mean at the sub-step times (zeros if stationary).
    sig_steps : (K,) volatility per sub-step (constant if stationary).
    decay, csd: exp(-lam*dn) and sqrt((1-exp(-2*lam*dn))/(2*lam)).

    Returns (w, g, Lend, Iend), each (n, M_b): blackout indicator, sup of the
    transformed failure functional, and the arrival state.
    """
    n = L0.shape[0]
    mb = Z.shape[1]
    K = Z.shape[2]
    w = np.zeros((n, mb), np.uint8)
    g = np.empty((n, mb))
    Lend = np.empty((n, mb))
    Iend = np.empty((n, mb))
    for i in range(n):
        u = U[i]
        for b in range(mb):
            L = L0[i]
            I = I0[i]
            gi = -1e300
            wi = np.uint8(0)
            for k in range(K):
                bk = _battery(L, I, u, dn, imax, bmin, bmax)
                s = L - u - bk
                if s > 0.0:
                    wi = np.uint8(1)
                idis = I / dn
                cap = idis if idis < bmax else bmax
                gp = L - u - cap
                if gp > gi:
                    gi = gp
                I -= bk * dn
                if I < 0.0:
                    I = 0.0
                elif I > imax:
                    I = imax
                L = mu_nodes[k + 1] + (L - mu_nodes[k]) * decay + sig_steps[k] * csd * Z[i, b, k]
            w[i, b] = wi
            g[i, b] = gi
            Lend[i, b] = L
            Iend[i, b] = I
    return w, g, Lend, Iend


@njit(cache=True, fastmath=True)
def _count_blackouts(L0, I0, u, Z, mu_nodes, sig_steps, decay, csd, dn, imax, bmin, bmax):
    mb = Z.shape[0]
    K = Z.shape[1]
    cnt = 0
    for b in range(mb):
        L = L0
        I = I0
        for k in range(K):
            bk = _battery(L, I, u, dn, imax, bmin, bmax)
            if L - u - bk > 0.0:
                cnt += 1
                break
            I -= bk * dn
            if I < 0.0:
                I = 0.0
            elif I > imax:
                I = imax
            L = mu_nodes[k + 1] + (L - mu_nodes[k]) * decay + sig_steps[k] * csd * Z[b, k]
    return cnt


@njit(cache=True, fastmath=True)
def gold_umin(Lg, Ig, Z, u_levels, p, mu_nodes, sig_steps, decay, csd, dn, imax, bmin, bmax):
    """Minimum admissible control on a node list, by nested MC with shared draws.

    Z is one (M_b, K) normal block reused for every node and control level
    (common random numbers); the blackout indicator is then non-increasing in
    u draw by draw, so the smallest admissible grid level is found by binary
    search.  Nodes where even the largest level fails get that level.
    """
    nn = Lg.shape[0]
    mb = Z.shape[0]
    nu = u_levels.shape[0]
    thresh = p * mb  # admissible iff blackout count < thresh (strict)
    out = np.empty(nn)
    for i in range(nn):
        c0 = _count_blackouts(Lg[i], Ig[i], 0.0, Z, mu_nodes, sig_steps, decay, csd, dn, imax, bmin, bmax)
        if c0 < thresh:
            out[i] = 0.0
            continue
        chi = _count_blackouts(Lg[i], Ig[i], u_levels[nu - 1], Z, mu_nodes, sig_steps,
                               decay, csd, dn, imax, bmin, bmax)
        if chi >= thresh:
            out[i] = u_levels[nu - 1]
            continue
        lo = 0
        hi = nu - 1
        while lo < hi:
            mid = (lo + hi) // 2
            c = _count_blackouts(Lg[i], Ig[i], u_levels[mid], Z, mu_nodes, sig_steps,
                                 decay, csd, dn, imax, bmin, bmax)
            if c < thresh:
                hi = mid
            else:
                lo = mid + 1
        out[i] = u_levels[lo]
    return out


@njit(cache=True, fastmath=True, parallel=True)
def kernel_cross(Q, X, inv_len, kind):
    """Cross-covariance (without process variance) between query and training sites.

    kind: 0 squared-exponential, 1 Matern-3/2, 2 Matern-5/2.  ``inv_len`` holds
    1/lengthscale per input coordinate; the scaled squared distance is
    sum((q-x)^2 * inv_len), matching an anisotropic kernel parameterisation.
    """
    nq = Q.shape[0]
    nx = X.shape[0]
    d = Q.shape[1]
    out = np.empty((nq, nx))
    for i in prange(nq):
        for j in range(nx):
            r2 = 0.0
            for k in range(d):
                dk = Q[i, k] - X[j, k]
                r2 += dk * dk * inv_len[k]
            if kind == 0:
                out[i, j] = np.exp(-r2)
            elif kind == 1:
                r = SQRT3 * np.sqrt(r2)
                out[i, j] = (1.0 + r) * np.exp(-r)
            else:
                r = SQRT5 * np.sqrt(r2)
                out[i, j] = (1.0 + r + r * r / 3.0) * np.exp(-r)
    return out


@njit(cache=True)
def smo_solve(K, y, C, tol, max_iter):
    """LIBSVM-style SMO on the dual soft-margin problem.

    Minimises 0.5*a'Qa - e'a with Q_ij = y_i y_j K_ij subject to y'a = 0 and
    0 <= a_i <= C, using maximal-violating-pair working set selection.
    Returns (alpha, b, n_iter, gap).
    """
    n = y.shape[0]
    alpha = np.zeros(n)
    G = -np.ones(n)
    gap = np.inf
    it = 0
    while it < max_iter:
        gmax = -1e300
        gmin = 1e300
        i = -1
        j = -1
        for t in range(n):
            yt = y[t]
            if (yt > 0 and alpha[t] < C) or (yt < 0 and alpha[t] > 0):
                v = -yt * G[t]
                if v > gmax:
                    gmax = v
                    i = t
            if (yt > 0 and alpha[t] > 0) or (yt < 0 and alpha[t] < C):
                v = -yt * G[t]
                if v < gmin:
                    gmin = v
                    j = t
        gap = gmax - gmin
        if i < 0 or j < 0 or gap < tol:
            break
        it += 1
        yi = y[i]
        yj = y[j]
        ai_old = alpha[i]
        aj_old = alpha[j]
        quad = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if quad <= 0.0:
            quad = 1e-12
        if yi != yj:
            delta = (-G[i] - G[j]) / quad
            diff = ai_old - aj_old
            ai = ai_old + delta
            aj = aj_old + delta
            if diff > 0.0:
                if aj < 0.0:
                    aj = 0.0
                    ai = diff
            else:
                if ai < 0.0:
                    ai = 0.0
                    aj = -diff
            if diff > 0.0:
                if ai > C:
                    ai = C
                    aj = C - diff
            else:
                if aj > C:
                    aj = C
                    ai = C + diff
        else:
            delta = (G[i] - G[j]) / quad
            ssum = ai_old + aj_old
            ai = ai_old - delta
            aj = aj_old + delta
            if ssum > C:
                if ai > C:
                    ai = C
                    aj = ssum - C
            else:
                if aj < 0.0:
                    aj = 0.0
                    ai = ssum
            if ssum > C:
                if aj > C:
                    aj = C
                    ai = ssum - C
            else:
                if ai < 0.0:
                    ai = 0.0
                    aj = ssum
        alpha[i] = ai
        alpha[j] = aj
        dai = ai - ai_old
        daj = aj - aj_old
        for t in range(n):
            G[t] += y[t] * (yi * K[t, i] * dai + yj * K[t, j] * daj)
    # offset: average KKT condition over free vectors, else midpoint of the bounds
    nb = 0
    b = 0.0
    for t in range(n):
        if 1e-12 < alpha[t] < C - 1e-12:
            b += -y[t] * G[t]
            nb += 1
    if nb > 0:
        b /= nb
    else:
        gmax = -1e300
        gmin = 1e300
        for t in range(n):
            yt = y[t]
            if (yt > 0 and alpha[t] < C) or (yt < 0 and alpha[t] > 0):
                v = -yt * G[t]
                if v > gmax:
                    gmax = v
            if (yt > 0 and alpha[t] > 0) or (yt < 0 and alpha[t] < C):
                v = -yt * G[t]
                if v < gmin:
                    gmin = v
        b = (gmax + gmin) / 2.0
    return alpha, b, it, gap
