"""Group-level difficulty bookkeeping.

During an epoch, the difficulty of every augmented object is appended to
its group's score pool.  At the epoch boundary each non-empty pool is
averaged into the group score and all pools are cleared; groups that were
not sampled keep their previous score.  Epoch-wise averaging (rather than
a momentum update) keeps groups with very different pool sizes moving at
the same pace.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class GroupScores:
    """Per-group difficulty scores plus the epoch of the last update."""

    values: np.ndarray
    epoch: int = 0


def init_scores(group_count: int) -> GroupScores:
    """All groups start at the same score (0.0) so epoch-1 sampling is uniform."""
    if group_count < 1:
        raise ValueError(f"group_count must be >= 1: {group_count}")
    return GroupScores(values=np.zeros(group_count, dtype=np.float64), epoch=0)


class ScorePool:
    """Per-group buffers of difficulty observations for the current epoch."""

    def __init__(self, group_count: int):
        if group_count < 1:
            raise ValueError(f"group_count must be >= 1: {group_count}")
        self.group_count = group_count
        self._pools = [[] for _ in range(group_count)]

    def record(self, group: int, s_tilde: float) -> None:
        """Append one observation to a group's pool."""
        if not 0 <= group < self.group_count:
            raise IndexError(f"group {group} out of range [0, {self.group_count})")
        self._pools[group].append(float(s_tilde))

    def pool(self, group: int) -> list:
        return list(self._pools[group])

    def sizes(self) -> np.ndarray:
        return np.array([len(p) for p in self._pools], dtype=np.int64)

    def clear(self) -> None:
        self._pools = [[] for _ in range(self.group_count)]


def end_epoch(pool: ScorePool, scores: GroupScores) -> GroupScores:
    """Average each non-empty pool into its group score and clear the pools.

    Groups with empty pools retain their previous score.  Calling this
    twice in a row is a no-op the second time (pools are already empty).
    """
    if pool.group_count != len(scores.values):
        raise ValueError("pool and scores disagree on group count")
    values = scores.values.copy()
    for g in range(pool.group_count):
        observations = pool._pools[g]
        if observations:
            values[g] = np.mean(observations)
    pool.clear()
    return GroupScores(values=values, epoch=scores.epoch + 1)


def write_score_log(fh, epoch: int, scores: GroupScores, pool_sizes: np.ndarray) -> None:
    """Append one CSV line per group: epoch, group, score, pool size."""
    for g, (s, n) in enumerate(zip(scores.values, pool_sizes)):
        fh.write(f"{epoch},{g},{float(s)!r},{int(n)}\n")
