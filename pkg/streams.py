"""
Counter-based random streams.

Every random draw in the package comes from a Generator keyed by
(root_seed, purpose, ...) so results do not depend on execution order.
"""
from typing import Iterable

import numpy as np

# purposes, first element of every key
SAMPLE = 0
PRIVATIZE = 1
NU = 3
TRUTH = 4


def _flatten(key: Iterable) -> tuple:
    out = []
    for k in key:
        if isinstance(k, (tuple, list)):
            out.extend(_flatten(k))
            continue
        if int(k) != k or k < 0:
            raise ValueError(f"stream key components must be non-negative integers, got {k!r}")
        out.append(int(k))
    return tuple(out)


def derive_stream(root_seed: int, *key) -> np.random.Generator:
    """Philox generator for the sub-stream named by `key` under `root_seed`."""
    if int(root_seed) != root_seed or root_seed < 0:
        raise ValueError(f"root seed must be a non-negative integer, got {root_seed!r}")
    seq = np.random.SeedSequence(int(root_seed), spawn_key=_flatten(key))
    return np.random.Generator(np.random.Philox(seq))
