"""Named random substreams derived from one integer seed."""
import zlib

import numpy as np

STREAMS = ("scenario", "detector", "particles", "training")


def substream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for ``name``; the same (seed, name) always gives the same stream."""
    return np.random.default_rng([int(seed), zlib.crc32(name.encode())])
