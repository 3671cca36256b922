"""Seeded, counter-based random streams.

All randomness goes through numpy's Philox bit generator.  A batch draw of
shape (m, B) consumes the stream exactly like m consecutive draws of size B,
so batched Monte Carlo and one-at-a-time sampling see the same values.
"""

import numpy as np


def make_rng(seed):
    return np.random.Generator(np.random.Philox(seed))


def substream(seed, *keys):
    """Independent stream keyed by ``(seed, *keys)``, e.g. per-trial streams."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *keys])))
