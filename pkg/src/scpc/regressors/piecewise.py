"""Continuation-value surfaces: piecewise cubic-in-demand and global polynomial.

The piecewise form follows the low-dimensional interpolation scheme: an
independent polynomial in L is fitted for every (inventory knot, control knot)
pair, and evaluation blends the four surrounding cubics bilinearly in (I, u).
The OFF regime (u = 0) is a separate surface over (L, I) with a linear blend
in I only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from scpc.regressors.basis import FitError, InputScaler, PolynomialBasis

_L_SCALE = 8.0  # demand is conditioned to O(1) before the cubic fit


def _polyval(coefs, x):
    # coefs (..., deg+1) ascending; x broadcastable
    out = np.zeros(np.broadcast(x, coefs[..., 0]).shape)
    for p in range(coefs.shape[-1] - 1, -1, -1):
        out = out * x + coefs[..., p]
    return out


def _cell_index(knots: np.ndarray, v: np.ndarray):
    """Left knot index and interpolation weight; queries clamped to the range."""
    idx = np.searchsorted(knots, v, side="right") - 1
    idx = np.clip(idx, 0, max(len(knots) - 2, 0))
    if len(knots) == 1:
        return idx, np.zeros_like(np.asarray(v, dtype=float))
    width = knots[idx + 1] - knots[idx]
    w = np.clip((v - knots[idx]) / width, 0.0, 1.0)
    return idx, w


@dataclass
class PiecewiseContinuationSurface:
    i_knots: np.ndarray            # inventory knots, ascending
    u_knots: np.ndarray | None     # ON-regime control knots, ascending (None: OFF only)
    degree: int
    on_coefs: np.ndarray | None    # (n_i, n_u, degree+1), ascending powers of L/_L_SCALE
    off_coefs: np.ndarray | None   # (n_i, degree+1)

    def eval_on(self, L, I, u):
        if self.on_coefs is None:
            raise FitError("surface has no ON-regime component")
        L = np.asarray(L, dtype=float) / _L_SCALE
        I = np.asarray(I, dtype=float)
        u = np.asarray(u, dtype=float)
        li, wi = _cell_index(self.i_knots, I)
        lu, wu = _cell_index(self.u_knots, u)
        c00 = _polyval(self.on_coefs[li, lu], L)
        if len(self.u_knots) > 1:
            c01 = _polyval(self.on_coefs[li, lu + 1], L)
        else:
            c01 = c00
        if len(self.i_knots) > 1:
            c10 = _polyval(self.on_coefs[li + 1, lu], L)
            c11 = _polyval(self.on_coefs[li + 1, lu + 1], L) if len(self.u_knots) > 1 else c10
        else:
            c10, c11 = c00, c01
        return ((1 - wi) * ((1 - wu) * c00 + wu * c01) + wi * ((1 - wu) * c10 + wu * c11))

    def eval_off(self, L, I):
        if self.off_coefs is None:
            raise FitError("surface has no OFF-regime component")
        L = np.asarray(L, dtype=float) / _L_SCALE
        li, wi = _cell_index(self.i_knots, np.asarray(I, dtype=float))
        c0 = _polyval(self.off_coefs[li], L)
        c1 = _polyval(self.off_coefs[li + 1], L) if len(self.i_knots) > 1 else c0
        return (1 - wi) * c0 + wi * c1


def _match_knots(values: np.ndarray, knots: np.ndarray, what: str) -> np.ndarray:
    idx = np.argmin(np.abs(values[:, None] - knots[None, :]), axis=1)
    if np.any(np.abs(values - knots[idx]) > 1e-9):
        off = float(values[np.argmax(np.abs(values - knots[idx]))])
        raise FitError(f"{what} sample {off} does not sit on a knot")
    return idx


def piecewise_fit(L, I, u, y, i_knots, u_knots, degree: int = 3) -> PiecewiseContinuationSurface:
    """Per-knot-pair cubics in L from samples whose (I, u) lie on the knots.

    Samples with u = 0 feed the OFF surface (per inventory knot); samples with
    u > 0 must sit on a (i_knot, u_knot) pair.  Every cell needs at least
    ``degree + 2`` samples; an empty or starved cell raises, naming the pair.
    """
    L = np.asarray(L, dtype=float)
    I = np.asarray(I, dtype=float)
    u = np.asarray(u, dtype=float)
    y = np.asarray(y, dtype=float)
    i_knots = np.asarray(i_knots, dtype=float)
    u_knots = np.asarray(u_knots, dtype=float) if u_knots is not None else None
    x = L / _L_SCALE
    van = np.vander(x, degree + 1, increasing=True)

    off_mask = u == 0.0
    off_coefs = None
    if np.any(off_mask):
        off_coefs = np.zeros((len(i_knots), degree + 1))
        ii = _match_knots(I[off_mask], i_knots, "inventory")
        for l in range(len(i_knots)):
            sel = np.nonzero(off_mask)[0][ii == l]
            if len(sel) < degree + 2:
                raise FitError(f"OFF cell at inventory knot {i_knots[l]} has {len(sel)} samples")
            off_coefs[l], *_ = np.linalg.lstsq(van[sel], y[sel], rcond=None)

    on_coefs = None
    if u_knots is not None and np.any(~off_mask):
        on_idx = np.nonzero(~off_mask)[0]
        ii = _match_knots(I[on_idx], i_knots, "inventory")
        uu = _match_knots(u[on_idx], u_knots, "control")
        on_coefs = np.zeros((len(i_knots), len(u_knots), degree + 1))
        for l in range(len(i_knots)):
            for e in range(len(u_knots)):
                sel = on_idx[(ii == l) & (uu == e)]
                if len(sel) < degree + 2:
                    raise FitError(
                        f"ON cell at knot pair (I={i_knots[l]}, u={u_knots[e]}) "
                        f"has {len(sel)} samples"
                    )
                on_coefs[l, e], *_ = np.linalg.lstsq(van[sel], y[sel], rcond=None)

    return PiecewiseContinuationSurface(
        i_knots=i_knots, u_knots=u_knots, degree=degree, on_coefs=on_coefs, off_coefs=off_coefs
    )


@dataclass
class GlobalPolySurface:
    """Quadratic-in-(L, I, u) alternative: 10 ON bases and 6 OFF bases."""

    scaler_on: InputScaler | None
    scaler_off: InputScaler | None
    basis_on: PolynomialBasis | None
    basis_off: PolynomialBasis | None
    beta_on: np.ndarray | None
    beta_off: np.ndarray | None

    def eval_on(self, L, I, u):
        if self.beta_on is None:
            raise FitError("surface has no ON-regime component")
        X = np.column_stack([np.broadcast_arrays(L, I, u)[i].ravel() for i in range(3)])
        vals = self.basis_on.evaluate(self.scaler_on.transform(X)) @ self.beta_on
        return vals.reshape(np.broadcast(L, I, u).shape) if np.ndim(L) else float(vals[0])

    def eval_off(self, L, I):
        if self.beta_off is None:
            raise FitError("surface has no OFF-regime component")
        X = np.column_stack([np.broadcast_arrays(L, I)[i].ravel() for i in range(2)])
        vals = self.basis_off.evaluate(self.scaler_off.transform(X)) @ self.beta_off
        return vals.reshape(np.broadcast(L, I).shape) if np.ndim(L) else float(vals[0])


def global_poly_fit(L, I, u, y, degree: int = 2) -> GlobalPolySurface:
    L = np.asarray(L, dtype=float)
    I = np.asarray(I, dtype=float)
    u = np.asarray(u, dtype=float)
    y = np.asarray(y, dtype=float)
    off = u == 0.0
    scaler_on = scaler_off = basis_on = basis_off = beta_on = beta_off = None
    if np.any(off):
        X = np.column_stack([L[off], I[off]])
        scaler_off = InputScaler.fit(X)
        basis_off = PolynomialBasis(degree, 2)
        Phi = basis_off.evaluate(scaler_off.transform(X))
        beta_off, *_ = np.linalg.lstsq(Phi, y[off], rcond=None)
    if np.any(~off):
        X = np.column_stack([L[~off], I[~off], u[~off]])
        scaler_on = InputScaler.fit(X)
        basis_on = PolynomialBasis(degree, 3)
        Phi = basis_on.evaluate(scaler_on.transform(X))
        beta_on, *_ = np.linalg.lstsq(Phi, y[~off], rcond=None)
    return GlobalPolySurface(scaler_on, scaler_off, basis_on, basis_off, beta_on, beta_off)
