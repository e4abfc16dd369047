"""
Random stream derivation for reproducible Monte Carlo.

Every stream is a Philox (counter-based) generator keyed by
(master seed, trial, purpose, extra keys). Streams for different keys are
independent, and adding a new purpose never perturbs existing ones, so
results do not depend on how trials are spread over workers.

Author: DuplexSched Project
"""

from typing import Tuple

import numpy as np

# Stable purpose codes; append only.
PURPOSES = {
    'channel': 1,
    'uplink_beam': 2,
    'downlink_beam': 3,
    'interference': 4,
    'candidate': 5,
    'extreme': 6,
}


def stream_key(trial: int, purpose: str, *extra: int) -> Tuple[int, ...]:
    """Spawn key for a (trial, purpose, extra...) stream."""
    if purpose not in PURPOSES:
        raise KeyError(f"unknown stream purpose: {purpose}")
    return (int(trial), PURPOSES[purpose]) + tuple(int(x) for x in extra)


def trial_stream(seed: int, trial: int, purpose: str, *extra: int) -> np.random.Generator:
    """
    Independent random stream for one trial and purpose.

    Args:
        seed (int): 64-bit master seed
        trial (int): Trial index
        purpose (str): One of PURPOSES
        *extra (int): Further keys (network size, user index, ...)

    Returns:
        np.random.Generator: Philox-backed generator
    """
    seq = np.random.SeedSequence(entropy=int(seed), spawn_key=stream_key(trial, purpose, *extra))
    return np.random.Generator(np.random.Philox(seq))
