"""Deterministic seed fan-out from one global seed."""

import numpy as np

# Stage keys of the documented derivation: derive_seed(seed, STAGE_x[, ...])
STAGE_SCENE = 1
STAGE_INGEST = 2
STAGE_ABNORMAL = 3
STAGE_TRAIN = 4
STAGE_EVAL = 5


def derive_seed(base_seed: int, *keys: int) -> int:
    """Derive an independent 32-bit seed from a base seed and a path of integer keys."""
    sequence = np.random.SeedSequence(entropy=int(base_seed), spawn_key=tuple(int(k) for k in keys))
    return int(sequence.generate_state(1, dtype=np.uint32)[0])
