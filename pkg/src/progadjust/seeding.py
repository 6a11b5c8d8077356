"""Counter-based seed derivation; no global RNG state anywhere."""
import zlib

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF


def _key(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    return int(part) & 0xFFFFFFFF


def derive_seed(seed: int, *path) -> int:
    """64-bit child seed as a pure function of ``seed`` and the ``path`` labels."""
    ss = np.random.SeedSequence(int(seed) & _MASK, spawn_key=tuple(_key(p) for p in path))
    lo, hi = ss.generate_state(2, np.uint32)
    return int(lo) | (int(hi) << 32)


def rng_for(seed: int, *path) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed) & _MASK, spawn_key=tuple(_key(p) for p in path))
    return np.random.Generator(np.random.PCG64(ss))
