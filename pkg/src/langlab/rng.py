"""Named, reproducible random streams.

Every stochastic component draws from its own stream derived from
(global seed, stream name[, index]).  Streams never interfere, so e.g. the
task-side dropout sequence of a gradient-reversal run is identical to the
one a plain fine-tuning run sees with the same seed, regardless of how many
LID batches are interleaved.
"""

import zlib

import numpy as np


def stream(seed: int, *tags) -> np.random.Generator:
    """Return a Generator for the stream named by ``tags`` under ``seed``.

    String tags are hashed (crc32, stable across platforms and runs);
    integer tags are used as-is.
    """
    entropy = [int(seed) & 0xFFFFFFFF]
    for tag in tags:
        if isinstance(tag, str):
            entropy.append(zlib.crc32(tag.encode("utf-8")))
        else:
            entropy.append(int(tag) & 0xFFFFFFFF)
    return np.random.default_rng(np.random.SeedSequence(entropy))
