"""Label-keyed deterministic random streams.

Every randomized subsystem (set cover clocks, matching thresholds, MST
thresholds) draws from its own counter-based generator derived from the
master seed plus a fixed subsystem label plus the entity key.  Streams are
therefore stable under arrival order and replayable byte for byte.
"""

from __future__ import annotations

import hashlib

import numpy as np

SETCOVER_CLOCKS = 0x53_43
MATCHING_THRESHOLDS = 0x4D_41
MST_THRESHOLDS = 0x4D_53

_MASK = (1 << 63) - 1


def _token(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & _MASK
    digest = hashlib.blake2b(str(part).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") & _MASK


def substream(seed: int, label: int, *key) -> np.random.Generator:
    """Generator for one (subsystem, entity) pair under a master seed."""
    entropy = [int(seed) & _MASK, int(label) & _MASK] + [_token(k) for k in key]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
