"""Named random substreams derived from one 64-bit seed."""

import zlib

import numpy as np

__all__ = ["SEED_MASK", "substream"]

SEED_MASK = (1 << 64) - 1


def _stream_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def substream(seed: int, name: str, *indices: int) -> np.random.Generator:
    """Create the generator for one named component of a run.

    Streams with different names or indices are statistically independent, and
    the same (seed, name, indices) always reproduces the same stream.

    Args:
        seed: The run's 64-bit seed.
        name: Component name such as "sampling", "solver" or "audit".
        *indices: Optional replication, chunk or trial indices.

    Returns:
        A PCG64-backed generator.
    """
    sequence = np.random.SeedSequence(entropy=seed & SEED_MASK, spawn_key=(_stream_key(name), *indices))
    return np.random.Generator(np.random.PCG64(sequence))
