"""
Reproducible random streams.

Each (master seed, trial, stream tag) triple keys an independent counter-based
Philox generator, so trials can run in any order or process and still draw the
same numbers.
"""

from enum import IntEnum

import numpy as np

Seed = int | np.random.Generator


class StreamTag(IntEnum):
    CLUSTERS = 1
    CHANNEL = 2
    PILOT = 3
    COMBINER = 4
    NOISE = 5


def stream(master_seed: int, trial: int, tag: StreamTag, *extra: int) -> np.random.Generator:
    """
    Build the generator for one random stream of one trial.

    Args:
        master_seed: experiment-wide seed (any non-negative 64-bit integer).
        trial: trial index.
        tag: which quantity the stream feeds.
        extra: further integer keys, e.g. the index of an SNR point.

    Returns:
        A Generator over a Philox bit generator.
    """
    entropy = [int(master_seed), int(trial), int(tag), *(int(e) for e in extra)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def as_generator(seed: Seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def complex_normal(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """Circularly-symmetric CN(0, variance) samples: real and imaginary parts N(0, variance/2)."""
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
