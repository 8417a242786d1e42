import zlib
from typing import Union

import numpy as np


def cell_seed(master: int, *keys: Union[str, int, float]) -> np.random.SeedSequence:
    """Seed sequence for one sweep cell, derived from the master seed and the cell keys.

    Keys are hashed with crc32 so the derivation is stable across processes.
    """
    spawn_key = tuple(zlib.crc32(str(key).encode("utf-8")) for key in keys)
    return np.random.SeedSequence(entropy=int(master), spawn_key=spawn_key)


def cell_rng(master: int, *keys: Union[str, int, float]) -> np.random.Generator:
    return np.random.default_rng(cell_seed(master, *keys))
