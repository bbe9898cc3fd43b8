"""Deterministic, role-separated random streams.

Every stream is a Philox counter-based generator keyed by (seed, role) so the
encoder and decoder can rebuild the shared stream independently, and trial
seeds are derived from (seed, trial index).
"""

from __future__ import annotations

import numpy as np

ROLES = {"shared": 1, "encoder": 2, "channel": 3, "message": 4, "diagnostic": 5}


def stream(seed: int, role: str) -> np.random.Generator:
    if role not in ROLES:
        msg = f"unknown stream role {role!r}"
        raise ValueError(msg)
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, ROLES[role]])
    return np.random.Generator(np.random.Philox(ss))


def trial_seed(seed: int, index: int) -> int:
    """Seed for the index-th independent trial of a batch."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, 0x7452, int(index)])
    return int(ss.generate_state(1, np.uint64)[0])
