#!/usr/bin/env python3
# Paste sampled objects into a frame: each class is topped up to its
# target count, candidates re-use their recorded pose, and anything that
# would overlap an existing box (in birds-eye view) is skipped.

from pathlib import Path

import numpy as np

from comaug import ComposerConfig, CurriculumState, compose, plan
from comaug.clustering import build_registry, default_rules
from comaug.harness import SyntheticSpec, generate_synthetic_db
from comaug.seeding import make_rng

spec = SyntheticSpec()
db, frames = generate_synthetic_db(spec, seed=0)
registry = build_registry(db, default_rules()["vehicle"], "vehicle")

state = CurriculumState(t=5, total_epochs=30)
epoch_plan = plan(np.zeros(registry.group_count), registry.counts, state)
cfg = ComposerConfig()  # vehicle target 15, pedestrian 10, cyclist 10

frame = frames[0]
aug = compose(frame, db, {"vehicle": (registry, epoch_plan)}, cfg, make_rng(42))

accepted = [p for p in aug.provenance if p.accepted]
skipped = [p for p in aug.provenance if not p.accepted]
print(f"frame {frame.frame_id}: {len(frame.labels)} original objects, "
      f"{len(frame.points)} points")
print(f"composed: +{len(accepted)} objects, +"
      f"{len(aug.frame.points) - len(frame.points)} points; "
      f"{len(skipped)} skipped ({[p.reason for p in skipped]})")
for p in accepted[:5]:
    print(f"  inserted object {p.object_id} from group {p.group} "
          f"at ({p.box.cx:+.1f}, {p.box.cy:+.1f})")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.patches import Polygon as MplPolygon
except ImportError:
    print("matplotlib not installed; skipping the plot")
else:
    out = Path("demo_output")
    out.mkdir(exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 6))
    pts = aug.frame.points
    ax.scatter(pts[:, 0], pts[:, 1], s=1, c="lightgray")
    for label, origin in zip(aug.frame.labels, aug.origins):
        color = "tab:blue" if origin == "original" else "tab:red"
        ax.add_patch(MplPolygon(label.box.corners_bev(), closed=True, fill=False,
                                edgecolor=color, lw=1.2))
    ax.scatter([0], [0], marker="*", c="k", s=80)
    ax.set_aspect("equal")
    ax.set_title("composed frame (blue = original, red = inserted)")
    fig.tight_layout()
    fig.savefig(out / "scene_composition.png", dpi=120)
    print(f"wrote {out/'scene_composition.png'}")
