#!/usr/bin/env python3
# The difficulty-adaptive loss weight, visualized.
#
# An object's difficulty is its classification score minus a running
# average of original-object scores; the weight curve emphasizes easy
# objects before the tipping-point epoch and hard objects after it.

from pathlib import Path

import numpy as np

from comaug import LossWeightConfig, ThresholdState, update_threshold, weight

cfg = LossWeightConfig(beta=-5.0, height=1.0, tipping_epoch=20, total_epochs=30)

s = np.linspace(-1, 1, 201)
print("weight at selected epochs (difficulty -1 = hardest, +1 = easiest):")
for t in (0, 10, 20, 25, 30):
    w = [weight(float(x), t, cfg) for x in (-0.8, -0.3, 0.0, 0.3, 0.8)]
    print(f"  epoch {t:>2}: " + "  ".join(f"{x:5.3f}" for x in w))
print("note: everything weighs 1.0 at the tipping epoch, then the emphasis flips")

# the adaptive threshold drifts toward the mean original score, so the
# difficulty scale self-centers as the detector improves
state = ThresholdState()
for step in range(3000):
    batch_mean = 0.2 + 0.6 * step / 3000  # improving detector
    update_threshold(state, [batch_mean], alpha=0.001)
print(f"threshold after 3000 steps of improving scores: {state.tau:.3f}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("matplotlib not installed; skipping the plot")
else:
    out = Path("demo_output")
    out.mkdir(exist_ok=True)
    fig, ax = plt.subplots(figsize=(7, 4))
    for t in (0, 10, 20, 25, 30):
        ax.plot(s, [weight(float(x), t, cfg) for x in s], label=f"epoch {t}")
    ax.axhline(1.0, color="gray", lw=0.5)
    ax.set_xlabel("object difficulty (score - threshold)")
    ax.set_ylabel("loss weight")
    ax.set_title("difficulty-adaptive weighting across training")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / "loss_weighting.png", dpi=120)
    print(f"wrote {out/'loss_weighting.png'}")
