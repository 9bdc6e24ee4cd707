"""
Counter-based random streams

Every consumer of randomness asks for a named stream derived from one of the
experiment seeds. Streams are Philox generators keyed by a SeedSequence, so
the same (seed, path) always yields the same numbers regardless of call order
elsewhere in the program.
"""
import zlib
from typing import Union
import numpy as np

StreamKey = Union[int, str]


def _key_to_int(key: StreamKey) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    if key < 0:
        raise ValueError(f"Stream keys must be non-negative, got {key}")
    return int(key)


def rng_stream(seed: int, *path: StreamKey) -> np.random.Generator:
    """Independent generator for (seed, *path), e.g. rng_stream(7, "dropout", epoch)"""
    entropy = [_key_to_int(seed)] + [_key_to_int(key) for key in path]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def derive_seed(seed: int, *path: StreamKey) -> int:
    """A plain integer seed for APIs that take ints (worker and shard seeds)"""
    return int(rng_stream(seed, *path).integers(0, 2**31 - 1))
