"""Named deterministic random substreams.

Every stochastic process in the platform draws from its own generator, keyed
by a stable name, so adding or freezing one process never perturbs the draw
sequence of another.  Names are hashed with crc32 rather than Python's
built-in hash, which is salted per interpreter run.
"""

from __future__ import annotations

import random
import zlib

_MIX = 0x9E3779B97F4A7C15  # 64-bit golden-ratio odd constant


def substream(master_seed: int, name: str) -> random.Random:
    """Generator for `name`, decorrelated from siblings under the same seed."""
    key = zlib.crc32(name.encode("utf-8"))
    seed = (master_seed * _MIX + key * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return random.Random(seed)
