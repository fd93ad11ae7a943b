"""Named random substreams derived from a single root seed.

Every consumer of randomness asks for a stream by name. Streams with
different names are statistically independent, and the same (seed, names)
pair always yields the same stream, so adding a new consumer never
perturbs the draws seen by existing ones.
"""

from __future__ import annotations

import zlib

import numpy as np


def substream(seed: int, *names: object) -> np.random.Generator:
    """Generator for the substream identified by the given name parts.

    Name parts may be strings or integers; integers are used directly as
    entropy words, strings are hashed with CRC-32.
    """
    if seed < 0:
        raise ValueError("seed must be non-negative")
    entropy: list[int] = [int(seed)]
    for part in names:
        if isinstance(part, (int, np.integer)) and not isinstance(part, bool):
            if part < 0:
                raise ValueError("integer name parts must be non-negative")
            entropy.append(int(part))
        elif isinstance(part, str):
            entropy.append(zlib.crc32(part.encode("utf-8")))
        else:
            raise TypeError(f"stream name parts must be str or int, got {part!r}")
    return np.random.default_rng(np.random.SeedSequence(entropy))
