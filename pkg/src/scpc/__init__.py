"""Regression Monte Carlo for stochastic control with step-wise probabilistic constraints.

The package solves finite-horizon dispatch problems where, at every decision
epoch, the set of allowed controls is defined implicitly through a bound on
the probability of a failure event over the coming interval.  It ships:

* ``scpc.dynamics``      -- net-demand models and microgrid physics,
* ``scpc.regressors``     -- statistical learning primitives (GP, logistic,
  quantile, SVM, censored-normal, piecewise surfaces),
* ``scpc.admissibility``  -- eight interchangeable admissible-set estimators,
* ``scpc.solver``         -- backward induction and forward policy execution,
* ``scpc.evaluation``     -- brute-force gold standard, out-of-sample metrics
  and hypothesis tests,
* ``scpc.cli``            -- config-driven experiment runner.
"""

from scpc.dynamics import (
    DemandCycle,
    MicrogridParams,
    MicrogridState,
    SeasonalOU,
    StationaryOU,
    battery_power,
    blackout_indicator,
    ou_step,
    simulate_substep_path,
)

__version__ = "0.1.0"

__all__ = [
    "DemandCycle",
    "MicrogridParams",
    "MicrogridState",
    "SeasonalOU",
    "StationaryOU",
    "battery_power",
    "blackout_indicator",
    "ou_step",
    "simulate_substep_path",
    "__version__",
]
