"""Difficulty-adaptive loss weighting (COMLoss).

The detector's classification scores act as a difficulty proxy.  A running
average ``tau`` of the original (non-augmented) object scores tracks the
score distribution drift; an object's difficulty is its score minus tau,
so smaller means harder.  A sigmoid-shaped weighting curve whose height
decays linearly to zero at a tipping-point epoch emphasizes easy objects
early and hard objects late (for negative curve shape), degrading exactly
to the unweighted objective when the shape parameter is zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass(frozen=True)
class LossWeightConfig:
    """Weighting parameters.

    alpha          -- momentum of the running-average threshold, in (0, 1]
    beta           -- curve shape; negative = easy-to-hard, 0 = no re-weighting
    height         -- re-weighting amplitude H
    tipping_epoch  -- epoch t_r at which the emphasis flips
    total_epochs   -- training length T
    """

    alpha: float = 0.001
    beta: float = -5.0
    height: float = 1.0
    tipping_epoch: float = 30.0
    total_epochs: float = 30.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1]: {self.alpha}")
        if self.total_epochs < 1:
            raise ValueError(f"total_epochs must be >= 1: {self.total_epochs}")
        if not 0.0 <= self.tipping_epoch <= self.total_epochs:
            raise ValueError(
                f"tipping_epoch must lie in [0, total_epochs]: {self.tipping_epoch}"
            )


@dataclass
class ThresholdState:
    """Running average of original-object classification scores; starts at 0."""

    tau: float = 0.0


def update_threshold(state: ThresholdState, scores, alpha: float = 0.001) -> ThresholdState:
    """Fold the mean of a batch of original-object scores into tau.

    An empty batch carries no information and leaves tau unchanged.
    Augmented-object scores must not be passed here: their sampling is
    difficulty-skewed and would bias the threshold.
    """
    scores = list(scores)
    for s in scores:
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"classification score outside [0, 1]: {s}")
    if not scores:
        return state
    mean = math.fsum(scores) / len(scores)
    state.tau = (1.0 - alpha) * state.tau + alpha * mean
    return state


def difficulty(score: float, tau: float) -> float:
    """Object difficulty: score minus threshold.  Smaller means harder."""
    return score - tau


def curve_height(t: float, cfg: LossWeightConfig) -> float:
    """Epoch-dependent amplitude: height * (tipping_epoch - t) / total_epochs."""
    return cfg.height * (cfg.tipping_epoch - t) / cfg.total_epochs


def weight(s_tilde: float, t: float, cfg: LossWeightConfig) -> float:
    """Re-weighting factor w = 1 + h_t * (1 - e^{beta*s}) / (1 + e^{beta*s}).

    The sigmoid-shaped term is evaluated as -tanh(beta*s/2), which is the
    same function but immune to exp overflow for large |beta*s|.  With
    beta < 0 and t below the tipping point, easy objects (positive
    difficulty) get w > 1 and hard ones w < 1; past the tipping point the
    relation flips; at t == tipping_epoch every object weighs exactly 1.
    """
    if not 0.0 <= t <= cfg.total_epochs:
        raise ValueError(f"epoch {t} outside [0, {cfg.total_epochs}]")
    return 1.0 - curve_height(t, cfg) * math.tanh(0.5 * cfg.beta * s_tilde)


def total_loss(records, weights, background_loss: float, normalizer: float) -> float:
    """Weighted detection objective.

    (background + sum_i w_i * (cls_i + reg_i)) / normalizer, over all
    original and augmented object records.  The normalizer is supplied by
    the caller because detectors customize it.
    """
    if normalizer <= 0:
        raise ValueError(f"normalizer must be positive: {normalizer}")
    if len(records) != len(weights):
        raise ValueError(f"{len(weights)} weights for {len(records)} records")
    acc = background_loss
    for rec, w in zip(records, weights):
        acc += w * (rec.loss_cls + rec.loss_reg)
    return acc / normalizer


@dataclass(frozen=True)
class ObjectLossRecord:
    """Per-object loss observation: score, the two loss terms, and origin."""

    score: float
    loss_cls: float
    loss_reg: float
    origin: str = "original"  # "original" or "augmented"

    def __post_init__(self):
        if self.origin not in ("original", "augmented"):
            raise ValueError(f"origin must be original|augmented: {self.origin}")
        if not math.isfinite(self.score):
            raise ValueError(f"score not finite: {self.score}")
        if self.loss_cls < 0 or self.loss_reg < 0:
            raise ValueError("losses must be non-negative")


@dataclass
class WeightedLossReport:
    """Weights and difficulties for a batch, plus the aggregated objective."""

    weights: list = field(default_factory=list)
    difficulties: list = field(default_factory=list)
    total: float = 0.0


def weigh_records(
    records,
    t: float,
    cfg: LossWeightConfig,
    state: ThresholdState,
    background_loss: float = 0.0,
    normalizer: float = 1.0,
) -> WeightedLossReport:
    """Full per-batch pipeline: threshold update, difficulties, weights, total.

    The threshold absorbs the batch's original-object scores first (the
    running-average step), then difficulties and weights are computed
    against the updated value.
    """
    update_threshold(state, [r.score for r in records if r.origin == "original"], cfg.alpha)
    report = WeightedLossReport()
    for rec in records:
        s_tilde = difficulty(rec.score, state.tau)
        report.difficulties.append(s_tilde)
        report.weights.append(weight(s_tilde, t, cfg))
    report.total = total_loss(records, report.weights, background_loss, normalizer)
    return report
