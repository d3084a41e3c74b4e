"""Counter-based random streams for reproducible, parallel replications.

Each replication gets its own Philox stream keyed by an avalanche mix of the
base seed and the replication index, so streams are statistically independent
and any replication can be regenerated in isolation.
"""

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix_seed(base_seed: int, index: int) -> int:
    """Derive a 64-bit stream key from ``base_seed`` and a replication index.

    splitmix64 finalizer: a single flipped input bit avalanches across the
    whole output, so consecutive indices give unrelated keys.
    """
    z = (int(base_seed) + (int(index) + 1) * _GOLDEN) & _MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return z


def stream(base_seed: int, index: int = 0) -> np.random.Generator:
    """Generator for replication ``index`` of the experiment ``base_seed``."""
    return np.random.Generator(np.random.Philox(key=mix_seed(base_seed, index)))
