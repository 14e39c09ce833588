"""Seed derivation: every stochastic work item gets its own SeedSequence-derived seed."""
from __future__ import annotations

import hashlib

import numpy as np


def _key(k) -> int:
    if isinstance(k, (int, np.integer)):
        if k < 0:
            raise ValueError("seed keys must be non-negative")
        return int(k)
    digest = hashlib.sha256(str(k).encode()).digest()
    return int.from_bytes(digest[:8], "little")


def derive_seed(master: int, *keys) -> int:
    """64-bit seed for the stream identified by ``(master, *keys)``."""
    ss = np.random.SeedSequence([_key(master), *(_key(k) for k in keys)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def config_digest(config) -> int:
    text = f"{config.mu}|{config.lam}|{config.p_m!r}|{config.p_c!r}"
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little")


def rng_for(master: int, *keys) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(derive_seed(master, *keys)))
