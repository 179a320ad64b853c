"""Seeded random streams kept separate per concern.

Parameter initialization, dropout masks, latent-sampling noise, and data
shuffling each draw from an independent generator so that, e.g., freezing
the noise stream in a test does not perturb initialization.
"""

from __future__ import annotations

import numpy as np

_STREAMS = ("init", "dropout", "noise", "shuffle")


class RandomStreams:
    """Four independent generators derived from one master seed.

    Any stream can be pinned to its own seed via keyword override, e.g.
    ``RandomStreams(7, noise=123)``.
    """

    def __init__(self, seed, **overrides: int):
        unknown = set(overrides) - set(_STREAMS)
        if unknown:
            raise ValueError(f"unknown stream names: {sorted(unknown)}")
        root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        children = root.spawn(len(_STREAMS))
        for name, child in zip(_STREAMS, children):
            if name in overrides:
                gen = np.random.default_rng(overrides[name])
            else:
                gen = np.random.default_rng(child)
            setattr(self, name, gen)

    init: np.random.Generator
    dropout: np.random.Generator
    noise: np.random.Generator
    shuffle: np.random.Generator
