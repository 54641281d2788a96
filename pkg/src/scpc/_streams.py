"""Deterministic RNG streams.

Every stochastic routine draws from a stream derived from one root seed via
``numpy.random.SeedSequence`` spawn keys.  A stream is addressed by a tuple of
small integers ``(phase, *indices)`` so that results are bit-identical no
matter how work is scheduled across workers.

Phase identifiers are module-level constants; new phases must get new numbers,
never reuse old ones.
"""

from __future__ import annotations

import numpy as np

# phase ids; append only
PHASE_ADMISSIBILITY = 1   # (phase, step)
PHASE_CONTINUATION = 2    # (phase, step)
PHASE_FORWARD = 3         # (phase,)
PHASE_GOLD = 4            # (phase, step)
PHASE_MISC = 5


def stream(root_seed: int, *key: int) -> np.random.Generator:
    """Return the Philox generator addressed by ``key`` under ``root_seed``."""
    ss = np.random.SeedSequence(entropy=int(root_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
