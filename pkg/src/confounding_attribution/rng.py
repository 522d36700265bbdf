"""Counter-based, splittable random streams.

Every draw in the package comes from a :class:`numpy.random.Philox` generator
keyed by ``(seed, stream id)`` through :class:`numpy.random.SeedSequence`'s
spawn key, so independent concerns (covariate blocks, treatment, noise,
coalition sampling) never share a stream. Adding a covariate block therefore
leaves the other blocks' draws untouched.
"""
from enum import IntEnum
from typing import Union

import numpy as np


class Stream(IntEnum):
    COVARIATES = 0
    TREATMENT = 1
    NOISE = 2
    SAMPLER = 3
    SPLIT = 4
    FEATURE_DROP = 5


def stream(seed: int, stream_id: Union[Stream, int], *sub_ids: int) -> np.random.Generator:
    """Return the generator for ``(seed, stream_id, *sub_ids)``.

    >>> a = stream(0, Stream.NOISE).standard_normal(3)
    >>> b = stream(0, Stream.NOISE).standard_normal(3)
    >>> bool((a == b).all())
    True
    """
    if seed < 0:
        raise ValueError(f"`seed` must be non-negative, got {seed}.")
    key = (int(stream_id),) + tuple(int(i) for i in sub_ids)
    seed_seq = np.random.SeedSequence(entropy=int(seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(seed_seq))
