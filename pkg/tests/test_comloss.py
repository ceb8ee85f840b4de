"""Tests for comaug.comloss: threshold, difficulty, weighting, total loss."""

import math

import mpmath
import numpy as np
import pytest

from comaug.comloss import (
    LossWeightConfig,
    ObjectLossRecord,
    ThresholdState,
    difficulty,
    total_loss,
    update_threshold,
    weigh_records,
    weight,
)


def oracle_weight(s_tilde, t, cfg):
    """High-precision evaluation of the published form (1-e^x)/(1+e^x)."""
    with mpmath.workdps(50):
        x = mpmath.mpf(cfg.beta) * mpmath.mpf(s_tilde)
        h = mpmath.mpf(cfg.height) * (mpmath.mpf(cfg.tipping_epoch) - t) / mpmath.mpf(
            cfg.total_epochs
        )
        w = 1 + h * (1 - mpmath.e**x) / (1 + mpmath.e**x)
        return float(w)


def test_update_threshold_small_alpha():
    state = update_threshold(ThresholdState(), [0.4, 0.5, 0.6], alpha=0.001)
    assert state.tau == pytest.approx(0.0005, rel=1e-12)


def test_update_threshold_full_replacement():
    state = update_threshold(ThresholdState(), [0.7], alpha=1.0)
    assert state.tau == pytest.approx(0.7)


def test_update_threshold_empty_list_is_noop():
    state = ThresholdState(tau=0.3)
    update_threshold(state, [], alpha=0.5)
    assert state.tau == 0.3


def test_update_threshold_rejects_out_of_range_scores():
    with pytest.raises(ValueError):
        update_threshold(ThresholdState(), [1.2])
    with pytest.raises(ValueError):
        update_threshold(ThresholdState(), [-0.01])


def test_tau_geometric_convergence():
    # |tau_k - m| = (1 - alpha)^k |tau_0 - m|
    alpha, m = 0.001, 0.8
    state = ThresholdState()
    for k in range(1, 2001):
        update_threshold(state, [m], alpha=alpha)
        expected = (1 - alpha) ** k * m
        assert abs(m - state.tau) == pytest.approx(expected, abs=1e-9)


def test_difficulty_is_score_minus_tau():
    assert difficulty(0.4, 0.4) == 0.0
    assert difficulty(0.9, 0.4) == pytest.approx(0.5)
    assert difficulty(0.1, 0.4) == pytest.approx(-0.3)  # hard: negative


def test_weight_neutral_difficulty():
    cfg = LossWeightConfig()
    for t in (0, 7.5, 30):
        assert weight(0.0, t, cfg) == 1.0


def test_weight_at_tipping_epoch_is_one():
    cfg = LossWeightConfig(tipping_epoch=12, total_epochs=30)
    for s in (-0.9, -0.1, 0.0, 0.3, 1.0):
        assert weight(s, 12, cfg) == pytest.approx(1.0, abs=1e-15)


def test_weight_example_against_oracle():
    cfg = LossWeightConfig(height=1.0, total_epochs=30, tipping_epoch=30, beta=-5.0)
    got = weight(0.5, 0.0, cfg)
    assert got == pytest.approx(oracle_weight(0.5, 0.0, cfg), rel=1e-14)
    assert got == pytest.approx(1.8483, abs=5e-5)


def test_weight_matches_oracle_on_grid():
    cfg = LossWeightConfig(height=0.6, total_epochs=30, tipping_epoch=20, beta=-5.0)
    for s in np.linspace(-1, 1, 21):
        for t in (0.0, 5.0, 19.0, 20.0, 25.0, 30.0):
            assert weight(float(s), t, cfg) == pytest.approx(
                oracle_weight(float(s), t, cfg), rel=1e-13
            )


def test_weight_numerically_stable_for_extreme_arguments():
    cfg = LossWeightConfig(beta=-500.0)
    assert weight(5.0, 0.0, cfg) == pytest.approx(2.0)
    assert weight(-5.0, 0.0, cfg) == pytest.approx(0.0, abs=1e-15)
    assert math.isfinite(weight(1e6, 0.0, cfg))


def test_weight_sign_logic():
    # before the tipping point easy (positive) objects are emphasized,
    # past it the relation flips
    cfg = LossWeightConfig(beta=-5.0, height=1.0, tipping_epoch=15, total_epochs=30)
    assert weight(0.4, 5, cfg) > 1.0 > weight(-0.4, 5, cfg)
    assert weight(0.4, 25, cfg) < 1.0 < weight(-0.4, 25, cfg)


def test_weight_monotonicity_property():
    rng = np.random.default_rng(2)
    cfg = LossWeightConfig(beta=-5.0, height=1.0, tipping_epoch=18, total_epochs=30)
    for _ in range(300):
        t = rng.uniform(0, 30)
        a, b = sorted(rng.uniform(-1, 1, 2))
        wa, wb = weight(a, t, cfg), weight(b, t, cfg)
        if t < cfg.tipping_epoch:
            assert wa <= wb + 1e-15
        elif t > cfg.tipping_epoch:
            assert wa >= wb - 1e-15


def test_weight_symmetry_and_bound():
    rng = np.random.default_rng(9)
    cfg = LossWeightConfig(beta=-5.0, height=0.8, tipping_epoch=22, total_epochs=30)
    bound = cfg.height * max(cfg.tipping_epoch, cfg.total_epochs - cfg.tipping_epoch) / cfg.total_epochs
    for _ in range(500):
        s = rng.uniform(-2, 2)
        t = rng.uniform(0, 30)
        assert weight(s, t, cfg) + weight(-s, t, cfg) == pytest.approx(2.0, abs=1e-12)
        assert abs(weight(s, t, cfg) - 1.0) <= bound + 1e-12


def test_weight_rejects_epoch_outside_range():
    with pytest.raises(ValueError):
        weight(0.0, 31, LossWeightConfig())


def test_beta_zero_reduces_to_baseline():
    cfg = LossWeightConfig(beta=0.0)
    records = [
        ObjectLossRecord(score=0.3, loss_cls=1.0, loss_reg=0.5),
        ObjectLossRecord(score=0.9, loss_cls=0.2, loss_reg=0.1, origin="augmented"),
    ]
    report = weigh_records(records, t=3, cfg=cfg, state=ThresholdState(), background_loss=2.0,
                           normalizer=4.0)
    assert report.weights == [1.0, 1.0]
    unweighted = (2.0 + (1.0 + 0.5) + (0.2 + 0.1)) / 4.0
    assert report.total == pytest.approx(unweighted, rel=1e-15)


def test_total_loss_hand_example():
    records = [
        ObjectLossRecord(score=0.5, loss_cls=1.0, loss_reg=1.0),
        ObjectLossRecord(score=0.5, loss_cls=5.0, loss_reg=5.0),
    ]
    assert total_loss(records, [2.0, 0.0], background_loss=0.0, normalizer=1.0) == 4.0


def test_total_loss_no_objects():
    assert total_loss([], [], background_loss=3.0, normalizer=2.0) == 1.5


def test_total_loss_validates_normalizer():
    with pytest.raises(ValueError):
        total_loss([], [], background_loss=0.0, normalizer=0.0)


def test_config_validation():
    with pytest.raises(ValueError):
        LossWeightConfig(alpha=0.0)
    with pytest.raises(ValueError):
        LossWeightConfig(tipping_epoch=40, total_epochs=30)


def test_record_validation():
    with pytest.raises(ValueError):
        ObjectLossRecord(score=0.5, loss_cls=-1.0, loss_reg=0.0)
    with pytest.raises(ValueError):
        ObjectLossRecord(score=0.5, loss_cls=0.0, loss_reg=0.0, origin="other")


def test_weigh_records_updates_threshold_with_originals_only():
    cfg = LossWeightConfig(alpha=0.5)
    state = ThresholdState()
    records = [
        ObjectLossRecord(score=0.8, loss_cls=0.1, loss_reg=0.1),
        ObjectLossRecord(score=0.2, loss_cls=0.1, loss_reg=0.1, origin="augmented"),
    ]
    report = weigh_records(records, t=1, cfg=cfg, state=state)
    assert state.tau == pytest.approx(0.4)  # mean of originals only, alpha=0.5
    assert report.difficulties[0] == pytest.approx(0.8 - 0.4)
    assert report.difficulties[1] == pytest.approx(0.2 - 0.4)
