"""Deterministic seed derivation shared by the bench runner and the CLI."""

from __future__ import annotations

import numpy as np


def episode_seed(seed: int, episode_index: int) -> int:
    """Stable per-episode seed from (configured seed, episode index)."""
    ss = np.random.SeedSequence([int(seed), int(episode_index)])
    return int(ss.generate_state(1)[0])
