"""Difficulty-adaptive group sampling.

Group scores are sorted descending (largest difficulty score = easiest
first).  A pacing rule picks a rank that slides from the easiest group
toward harder ones as training progresses; the score at that rank becomes
the center of a Gaussian curve over group scores.  Group probabilities
are the curve values scaled by group size and normalized.  Drawing picks
a group by inverse-CDF lookup, then an object uniformly inside the group.

Modes: ``curriculum`` (easy first), ``anti_curriculum`` (the sorted order
is reversed, so the pacing starts at the hardest group) and ``uniform``
(flat curve — plain size-weighted ground-truth sampling).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .clustering import GroupRegistry
from .difficulty_tracker import GroupScores

MODES = ("curriculum", "anti_curriculum", "uniform")


@dataclass
class CurriculumState:
    """Pacing inputs: current epoch, total epochs, speed, curve width, mode."""

    t: float
    total_epochs: int
    pacing: float = 0.5
    sigma: float = 0.2
    mode: str = "curriculum"

    def __post_init__(self):
        if self.total_epochs < 1:
            raise ValueError(f"total_epochs must be >= 1: {self.total_epochs}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive: {self.sigma}")
        if self.pacing <= 0:
            raise ValueError(f"pacing must be positive: {self.pacing}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}: {self.mode}")


def sorted_order(scores: np.ndarray, mode: str = "curriculum") -> np.ndarray:
    """Group indices sorted by score descending, ties broken by group index.

    Anti-curriculum reverses the order (hardest first).
    """
    order = np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")
    if mode == "anti_curriculum":
        order = order[::-1]
    return order


def center_rank(state: CurriculumState, group_count: int) -> int:
    """1-based rank of the pacing center: min(floor(pacing*t/T*G), G), floored at 1.

    The raw formula yields rank 0 at t = 0; the lower clamp keeps the
    center on the easiest group there.
    """
    raw = math.floor((state.pacing * state.t / state.total_epochs) * group_count)
    return min(max(raw, 1), group_count)


def center(scores: GroupScores | np.ndarray, state: CurriculumState):
    """Pacing center: (mu, rank, order) for the current epoch.

    ``mu`` is the score at the pacing rank of the (mode-dependent) sorted
    order; curriculum rank 1 is the easiest group, anti-curriculum rank 1
    the hardest.
    """
    values = scores.values if isinstance(scores, GroupScores) else np.asarray(scores)
    if len(values) < 1:
        raise ValueError("need at least one group")
    order = sorted_order(values, state.mode)
    rank = center_rank(state, len(values))
    return float(values[order[rank - 1]]), rank, order


@dataclass
class SamplingPlan:
    """Per-group probabilities for one epoch.

    raw      -- unnormalized Gaussian curve values
    probs    -- size-scaled, normalized probabilities (sum to 1)
    mu       -- pacing center used
    rank     -- 1-based pacing rank (mode-independent formula value)
    position -- 1-based position of the center on the descending
                (easiest-first) order; equals ``rank`` in curriculum mode
                and mirrors to ``G + 1 - rank`` in anti-curriculum mode
    order    -- group indices in the sorted order used
    """

    raw: np.ndarray
    probs: np.ndarray
    mu: float
    rank: int
    position: int
    order: np.ndarray
    mode: str = "curriculum"
    sigma: float = 0.2


def plan(scores: GroupScores | np.ndarray, counts: np.ndarray, state: CurriculumState) -> SamplingPlan:
    """Build the epoch's sampling plan from group scores and sizes.

    probs_g = raw_g * n_g / sum_i raw_i * n_i, so empty groups get zero
    probability and, when all scores are equal (e.g. at initialization),
    the plan degenerates to size-weighted sampling — every object in the
    database equally likely.
    """
    values = scores.values if isinstance(scores, GroupScores) else np.asarray(scores, dtype=np.float64)
    counts = np.asarray(counts)
    if len(values) != len(counts):
        raise ValueError("scores and counts disagree on group count")
    if not (counts > 0).any():
        raise ValueError("all groups are empty; nothing to sample")
    mu, rank, order = center(values, state)
    if state.mode == "uniform":
        raw = np.ones_like(values)
    else:
        z = (values - mu) / state.sigma
        raw = np.exp(-0.5 * z * z)
    weighted = raw * counts
    probs = weighted / weighted.sum()
    position = len(values) + 1 - rank if state.mode == "anti_curriculum" else rank
    return SamplingPlan(
        raw=raw, probs=probs, mu=mu, rank=rank, position=position, order=order,
        mode=state.mode, sigma=state.sigma,
    )


def draw(
    plan: SamplingPlan,
    registry: GroupRegistry,
    rng: np.random.Generator,
    k: int,
    replace: bool = True,
) -> list:
    """Draw ``k`` object ids: group by plan probability, object uniform in group.

    Draws are independent by default.  With ``replace=False`` (one frame's
    augmentation request) an object is drawn at most once; if that leaves
    a chosen group without candidates the group is excluded and redrawn.
    Zero-point objects are never drawn.  Returns fewer than ``k`` ids only
    when ``replace=False`` exhausts every candidate.
    """
    if k < 0:
        raise ValueError(f"k must be >= 0: {k}")
    probs = np.asarray(plan.probs, dtype=np.float64).copy()
    pools = [list(ids) for ids in registry.sampleable]
    probs[[len(p) == 0 for p in pools]] = 0.0
    if k > 0 and probs.sum() <= 0.0:
        raise ValueError("no sampleable objects under this plan")
    cum = np.cumsum(probs / probs.sum()) if k > 0 else None
    chosen: list = []
    for _ in range(k):
        while True:
            g = int(np.searchsorted(cum, rng.random(), side="right"))
            g = min(g, len(cum) - 1)
            if pools[g]:
                break
            # cumsum rounding landed on an excluded group: redraw
            probs[g] = 0.0
            if probs.sum() <= 0.0:
                return chosen
            cum = np.cumsum(probs / probs.sum())
        pool = pools[g]
        j = min(int(rng.random() * len(pool)), len(pool) - 1)
        chosen.append(int(pool[j]))
        if not replace:
            pool.pop(j)
            if not pool:
                probs[g] = 0.0
                total = probs.sum()
                if total <= 0.0:
                    break
                cum = np.cumsum(probs / total)
    return chosen
