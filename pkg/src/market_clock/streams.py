"""Counter-based per-replication random streams.

Every replication draws from its own Philox stream keyed by
``(master_seed, rep, substream)``, so results never depend on batching or
on how many workers run the experiment.
"""

from __future__ import annotations

import numpy as np


def replication_stream(master_seed: int, rep: int, substream: int = 0) -> np.random.Generator:
    """Independent generator for one replication (and optional substream)."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(rep, substream))
    return np.random.Generator(np.random.Philox(ss))
