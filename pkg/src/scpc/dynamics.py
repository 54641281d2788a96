"""Net-demand models and microgrid physics.

The controlled state is ``(L, I, C)``: net demand (kW), battery inventory
(kWh) and the generator regime (0 = OFF, 1 = ON).  A control step of length
``dt`` is simulated on ``k_sub`` finer sub-steps; demand follows an exact
Ornstein-Uhlenbeck transition on each sub-step while the battery responds
deterministically.  A blackout is the event that the imbalance

    S_k = L_k - u - B_k

is strictly positive at any sub-step of the interval.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from scpc import _kernels


class ConfigurationError(ValueError):
    """Invalid model or parameter configuration."""


@dataclass(frozen=True)
class MicrogridState:
    """State triple (net demand kW, battery inventory kWh, generator regime)."""

    L: float
    I: float
    C: int = 0

    def validate(self, params: "MicrogridParams") -> None:
        if not 0.0 <= self.I <= params.i_max:
            raise ConfigurationError(f"inventory {self.I} outside [0, {params.i_max}]")
        if self.C not in (0, 1):
            raise ConfigurationError(f"generator regime {self.C} not in {{0, 1}}")


@dataclass(frozen=True)
class MicrogridParams:
    """Physical and cost parameters of the microgrid.

    Defaults follow the benchmark configuration: 10 kWh battery with
    symmetric 6 kW rate limits, 5 currency units to switch the diesel on,
    diesel range [1, 10] kW, 15-minute control steps over a 48 hour horizon.
    The running cost of output u is ``rho_coeff * u`` per hour; the terminal
    penalty is affine, ``terminal_w0 + terminal_wl*L + terminal_wi*I``
    (identically zero by default).
    """

    i_max: float = 10.0
    b_min: float = -6.0
    b_max: float = 6.0
    k_switch: float = 5.0
    u_lo: float = 1.0
    u_hi: float = 10.0
    dt: float = 0.25
    n_steps: int = 192
    k_sub: int = 15
    rho_coeff: float = 1.0
    terminal_w0: float = 0.0
    terminal_wl: float = 0.0
    terminal_wi: float = 0.0

    def __post_init__(self) -> None:
        if not self.b_min < 0.0 < self.b_max:
            raise ConfigurationError("battery rate bounds must satisfy b_min < 0 < b_max")
        if not 0.0 < self.u_lo <= self.u_hi:
            raise ConfigurationError("diesel range must satisfy 0 < u_lo <= u_hi")
        if self.dt <= 0.0 or self.k_sub < 1 or self.n_steps < 1:
            raise ConfigurationError("dt > 0, k_sub >= 1 and n_steps >= 1 required")
        if self.i_max <= 0.0:
            raise ConfigurationError("i_max must be positive")

    @property
    def dn(self) -> float:
        """Sub-step length in hours."""
        return self.dt / self.k_sub

    def running_cost(self, c_prev: int, u: float) -> float:
        switch = self.k_switch if (c_prev == 0 and u > 0.0) else 0.0
        return switch + self.rho_coeff * u * self.dt

    def terminal_penalty(self, L, I):
        return self.terminal_w0 + self.terminal_wl * L + self.terminal_wi * I


def _ou_csd(lam: float, delta: float) -> float:
    # conditional s.d. multiplier: sd = sigma * csd
    return math.sqrt((1.0 - math.exp(-2.0 * lam * delta)) / (2.0 * lam))


@dataclass(frozen=True)
class StationaryOU:
    """Time-homogeneous OU net demand, dL = -lam*L dt + sigma dB."""

    lam: float = 0.5
    sigma: float = 2.0
    kind: str = field(default="stationary", init=False)

    def __post_init__(self) -> None:
        if self.lam <= 0.0 or self.sigma <= 0.0:
            raise ConfigurationError("OU requires lam > 0 and sigma > 0")

    def mean(self, t: float) -> float:
        return 0.0

    def substep_coeffs(self, t_n: float, dn: float, k_sub: int):
        mu_nodes = np.zeros(k_sub + 1)
        sig_steps = np.full(k_sub, self.sigma)
        return mu_nodes, sig_steps, math.exp(-self.lam * dn), _ou_csd(self.lam, dn)


@dataclass(frozen=True)
class SeasonalOU:
    """Seasonal OU demand reverting to a periodic mean curve.

    ``mu_grid`` and ``sigma_grid`` tabulate mu(t) and sigma(t) over one
    24-hour period; the mean is interpolated linearly between grid points
    while sigma is held piecewise-constant on each tabulation slot.
    """

    lam: float
    mu_grid: np.ndarray
    sigma_grid: np.ndarray
    period: float = 24.0
    kind: str = field(default="seasonal", init=False)

    def __post_init__(self) -> None:
        mu = np.asarray(self.mu_grid, dtype=float)
        sg = np.asarray(self.sigma_grid, dtype=float)
        object.__setattr__(self, "mu_grid", mu)
        object.__setattr__(self, "sigma_grid", sg)
        if self.lam <= 0.0:
            raise ConfigurationError("mean-reversion rate must be positive")
        if mu.ndim != 1 or sg.ndim != 1 or len(mu) != len(sg) or len(mu) < 2:
            raise ConfigurationError("mu and sigma grids must be 1-d of equal length >= 2")
        if np.any(sg <= 0.0):
            raise ConfigurationError("all sigma grid values must be positive")

    @property
    def resolution(self) -> float:
        return self.period / len(self.mu_grid)

    def _check_time(self, t) -> None:
        if np.any(np.asarray(t) < 0.0):
            raise ConfigurationError("seasonal time index must be non-negative")

    def mean(self, t):
        """Periodic linear interpolation of the tabulated mean curve."""
        self._check_time(t)
        tt = np.asarray(t, dtype=float) % self.period
        pos = tt / self.resolution
        i0 = np.floor(pos).astype(int) % len(self.mu_grid)
        i1 = (i0 + 1) % len(self.mu_grid)
        w = pos - np.floor(pos)
        out = (1.0 - w) * self.mu_grid[i0] + w * self.mu_grid[i1]
        return float(out) if np.isscalar(t) else out

    def vol(self, t):
        """sigma(t), constant on each tabulation slot."""
        self._check_time(t)
        tt = np.asarray(t, dtype=float) % self.period
        idx = np.floor(tt / self.resolution + 1e-12).astype(int) % len(self.sigma_grid)
        out = self.sigma_grid[idx]
        return float(out) if np.isscalar(t) else out

    def substep_coeffs(self, t_n: float, dn: float, k_sub: int):
        times = t_n + dn * np.arange(k_sub + 1)
        mu_nodes = np.asarray(self.mean(times), dtype=float)
        sig_steps = np.asarray(self.vol(times[:-1]), dtype=float)
        return mu_nodes, sig_steps, math.exp(-self.lam * dn), _ou_csd(self.lam, dn)

    @classmethod
    def from_csv(cls, mu_path, sigma_path, lam: float, period: float = 24.0) -> "SeasonalOU":
        t_mu, mu = load_seasonal_grid(mu_path, period)
        t_sg, sg = load_seasonal_grid(sigma_path, period)
        if len(t_mu) != len(t_sg) or not np.allclose(t_mu, t_sg):
            raise ConfigurationError("mu and sigma grids tabulated on different time points")
        return cls(lam=lam, mu_grid=mu, sigma_grid=sg, period=period)


@dataclass(frozen=True)
class DemandCycle:
    """Deterministic demand cycling through a fixed lattice of levels.

    Used by the lattice toy study: ``L`` jumps to the next level of the cycle
    on every sub-step, with no noise.  Levels not on the lattice are first
    snapped to the nearest level.
    """

    levels: tuple
    kind: str = field(default="cycle", init=False)

    def __post_init__(self) -> None:
        if len(self.levels) < 1:
            raise ConfigurationError("cycle needs at least one level")

    def next_level(self, L: float) -> float:
        lv = np.asarray(self.levels, dtype=float)
        i = int(np.argmin(np.abs(lv - L)))
        return float(lv[(i + 1) % len(lv)])


def load_seasonal_grid(path, period: float = 24.0):
    """Read a two-column CSV (time-of-day hours, value) tabulating one period.

    Rows must be equispaced starting at 0; 96 rows give the 15-minute
    resolution used by the case studies.
    """
    times = []
    vals = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            times.append(float(row[0]))
            vals.append(float(row[1]))
    times = np.asarray(times)
    vals = np.asarray(vals)
    if len(times) < 2:
        raise ConfigurationError(f"{path}: need at least two rows")
    step = period / len(times)
    expect = step * np.arange(len(times))
    if not np.allclose(times, expect, atol=1e-9):
        raise ConfigurationError(
            f"{path}: rows must be equispaced over [0, {period}) starting at 0"
        )
    return times, vals


def default_seasonal_model(lam: float = 0.3416) -> SeasonalOU:
    """Seasonal model from the packaged mean/volatility curves."""
    base = resources.files("scpc") / "data"
    with resources.as_file(base / "seasonal_mu.csv") as mp, resources.as_file(
        base / "seasonal_sigma.csv"
    ) as sp:
        return SeasonalOU.from_csv(mp, sp, lam=lam)


# ---------------------------------------------------------------------------
# elementary transitions


def ou_step(L, delta, model, noise, t: float = 0.0):
    """One exact OU transition of length ``delta`` hours.

    Stationary:  L*exp(-lam*delta) + sigma*sqrt((1-exp(-2 lam delta))/(2 lam))*z.
    Seasonal:    mu(t+delta) + (L - mu(t))*exp(-lam*delta) + sigma(t)*(same s.d.)*z,
    with sigma frozen at its value at the start of the sub-step.
    """
    if delta <= 0.0:
        raise ConfigurationError("delta must be positive")
    csd = _ou_csd(model.lam, delta)
    if model.kind == "stationary":
        return L * math.exp(-model.lam * delta) + model.sigma * csd * noise
    if model.kind == "seasonal":
        decay = math.exp(-model.lam * delta)
        return model.mean(t + delta) + (L - model.mean(t)) * decay + model.vol(t) * csd * noise
    raise ConfigurationError(f"ou_step undefined for demand model kind {model.kind!r}")


def battery_power(L, I, u, delta, params: MicrogridParams):
    """Battery response B = clamp(max(min(L-u, I/delta), -(i_max-I)/delta), b_min, b_max).

    Positive values discharge, negative values charge.  The outer clamp
    enforces the physical rate limits.
    """
    b = np.minimum(L - u, I / delta)
    b = np.maximum(b, -(params.i_max - I) / delta)
    b = np.clip(b, params.b_min, params.b_max)
    return float(b) if np.isscalar(L) and np.isscalar(I) else b


@dataclass
class SubstepPath:
    """One simulated control interval at sub-step resolution."""

    states: list
    control: float
    blackout: int
    running_cost: float
    g_sup: float  # sup_k of the transformed functional L_k - u - min(I_k/dn, b_max)
    t_start: float = 0.0


def simulate_substep_path(
    x0: MicrogridState,
    u: float,
    model,
    params: MicrogridParams,
    t_n: float = 0.0,
    rng: np.random.Generator | None = None,
    noise: np.ndarray | None = None,
) -> SubstepPath:
    """Reference single-path simulator over one control interval.

    ``noise`` may supply the k_sub standard normal draws explicitly (e.g. all
    zeros for deterministic checks); otherwise they come from ``rng``.  The
    vectorised equivalents in ``simulate_batches`` must agree with this
    routine draw for draw.
    """
    x0.validate(params)
    if not (u == 0.0 or params.u_lo <= u <= params.u_hi):
        raise ConfigurationError(f"control {u} not in {{0}} U [{params.u_lo}, {params.u_hi}]")
    k_sub = params.k_sub
    dn = params.dn
    if noise is None:
        if model.kind == "cycle":
            noise = np.zeros(k_sub)
        else:
            if rng is None:
                raise ConfigurationError("either rng or noise must be given")
            noise = rng.standard_normal(k_sub)
    noise = np.asarray(noise, dtype=float)
    if noise.shape != (k_sub,):
        raise ConfigurationError(f"noise must have shape ({k_sub},)")

    c_run = 1 if u > 0.0 else 0
    L = float(x0.L)
    I = float(x0.I)
    states = [MicrogridState(L, I, c_run)]
    blackout = 0
    g_sup = -math.inf
    for k in range(k_sub):
        B = battery_power(L, I, u, dn, params)
        if L - u - B > 0.0:
            blackout = 1
        g_sup = max(g_sup, L - u - min(I / dn, params.b_max))
        I = float(np.clip(I - B * dn, 0.0, params.i_max))
        if model.kind == "cycle":
            L = model.next_level(L)
        else:
            L = ou_step(L, dn, model, noise[k], t=t_n + k * dn)
        states.append(MicrogridState(L, I, c_run))
    cost = params.running_cost(x0.C, u)
    return SubstepPath(states, u, blackout, cost, g_sup, t_n)


def blackout_indicator(path: SubstepPath, params: MicrogridParams) -> int:
    """Recompute the blackout flag from the stored trajectory (strict S > 0)."""
    u = path.control
    for k in range(len(path.states) - 1):
        s = path.states[k]
        B = battery_power(s.L, s.I, u, params.dn, params)
        if s.L - u - B > 0.0:
            return 1
    return 0


# ---------------------------------------------------------------------------
# vectorised batch simulation


def simulate_batches(L0, I0, U, model, params: MicrogridParams, t_n, m_b, rng):
    """Simulate ``m_b`` independent one-interval paths per site.

    Returns arrays of shape (n_sites, m_b): blackout indicators (uint8), the
    transformed-functional sup G', and the arrival state coordinates.
    """
    L0 = np.ascontiguousarray(L0, dtype=float)
    I0 = np.ascontiguousarray(I0, dtype=float)
    U = np.ascontiguousarray(U, dtype=float)
    n = L0.shape[0]
    if model.kind == "cycle":
        w = np.zeros((n, m_b), np.uint8)
        g = np.empty((n, m_b))
        Lend = np.empty((n, m_b))
        Iend = np.empty((n, m_b))
        for i in range(n):
            path = simulate_substep_path(
                MicrogridState(L0[i], I0[i], 0), U[i], model, params, t_n
            )
            w[i, :] = path.blackout
            g[i, :] = path.g_sup
            Lend[i, :] = path.states[-1].L
            Iend[i, :] = path.states[-1].I
        return w, g, Lend, Iend
    mu_nodes, sig_steps, decay, csd = model.substep_coeffs(t_n, params.dn, params.k_sub)
    Z = rng.standard_normal((n, m_b, params.k_sub))
    return _kernels.sim_batches(
        L0, I0, U, Z, mu_nodes, sig_steps, decay, csd,
        params.dn, params.i_max, params.b_min, params.b_max,
    )
