from __future__ import annotations

import hashlib

import numpy as np

SEED_MASK = (1 << 64) - 1


def stage_seed(seed: int, label: str) -> int:
    """Derive a 64-bit seed for one named pipeline stage.

    The derivation only depends on the root seed and the label text, so adding
    new stages never shifts the random streams of existing ones.
    """
    digest = hashlib.sha256(f"{int(seed) & SEED_MASK}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def stage_rng(seed: int, label: str) -> np.random.Generator:
    return np.random.default_rng(stage_seed(seed, label))
