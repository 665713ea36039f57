from enum import IntEnum

import numpy as np


class Stream(IntEnum):
    """Top-level keys of the counter-based streams, one per sampler family."""

    EXACT = 1
    BLOCK = 2
    SPECTRAL_TORUS = 3
    IID = 4
    EQUICORRELATED = 5
    SLEPIAN = 6
    SUP_BOX = 7
    PAM = 8
    FEYNMAN_KAC = 9
    OCCUPANCY = 10
    SHELL = 11
    VALIDATION = 12


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Returns the Philox generator keyed by (seed, *keys).

    Distinct key tuples give disjoint streams, so blocks, replicas and shells can be sampled in
    any order or concurrently and still reproduce bit-identical draws.
    """
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(key) for key in keys))
    return np.random.Generator(np.random.Philox(sequence))


def derive_seed(seed: int, *keys: int) -> int:
    """Integer seed of the sub-task keyed by (seed, *keys), for services that take a plain seed."""
    if seed < 0:
        raise ValueError(f"seed must be nonnegative, got {seed}")
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(key) for key in keys))
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
