"""Ground-truth augmentation of point-cloud frames.

Each class is topped up to its target object count by drawing objects
from the database and pasting them into the frame at their recorded pose
(optionally re-posed by a random yaw about the sensor origin).  A
candidate is rejected when its box overlaps any existing box in
birds-eye view; composition only ever adds points and labels, never
removes or modifies scene content.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace as dc_replace

import numpy as np

from .geometry import Box3D, to_world
from .gt_database import CLASS_NAMES, Frame, GtDatabase, GtObject, Label
from .sampler import SamplingPlan, draw


@dataclass(frozen=True)
class ComposerConfig:
    """Placement policy knobs.

    thresholds    -- per-class target object counts (vehicle 15,
                     pedestrian 10, cyclist 10)
    max_attempts  -- placement tries per object before it is skipped
    random_yaw    -- re-pose candidates by a random rotation about the
                     origin instead of re-using the recorded pose
    """

    thresholds: dict = field(
        default_factory=lambda: {"vehicle": 15, "pedestrian": 10, "cyclist": 10}
    )
    max_attempts: int = 10
    random_yaw: bool = False

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError(f"max_attempts must be >= 1: {self.max_attempts}")
        for cls, g in self.thresholds.items():
            if g < 0:
                raise ValueError(f"threshold for {cls} must be >= 0: {g}")


def quota(original_count: int, threshold: int) -> int:
    """Objects to add: the shortfall against the class target, never negative."""
    if original_count < 0 or threshold < 0:
        raise ValueError("counts must be non-negative")
    return max(0, threshold - original_count)


def _bev_axes_corners(box: Box3D):
    c, s = math.cos(box.heading), math.sin(box.heading)
    axes = np.array([[c, s], [-s, c]])  # box length/width directions
    return axes, box.corners_bev()


def collide(a: Box3D, b: Box3D) -> bool:
    """True iff the birds-eye rectangles overlap with positive area.

    Separating-axis test on the four edge normals; touching edges or
    corners (zero-area contact) do not count as a collision.
    """
    axes_a, corners_a = _bev_axes_corners(a)
    axes_b, corners_b = _bev_axes_corners(b)
    for axis in (*axes_a, *axes_b):
        pa = corners_a @ axis
        pb = corners_b @ axis
        if pa.max() <= pb.min() or pb.max() <= pa.min():
            return False
    return True


class CollisionField:
    """Incremental BEV collision tester over a growing set of boxes.

    Same separating-axis decision as :func:`collide`, but one vectorized
    pass checks a candidate against every stored box at once.
    """

    def __init__(self, boxes=()):
        self._corners = []  # (4, 2) per box
        self._axes = []  # (2, 2) per box
        self._self_lo = []  # own-axis projection minima (2,)
        self._self_hi = []
        for b in boxes:
            self.add(b)

    def __len__(self) -> int:
        return len(self._corners)

    def add(self, box: Box3D) -> None:
        axes, corners = _bev_axes_corners(box)
        proj = corners @ axes.T  # (4, 2)
        self._corners.append(corners)
        self._axes.append(axes)
        self._self_lo.append(proj.min(axis=0))
        self._self_hi.append(proj.max(axis=0))

    def collides(self, box: Box3D) -> bool:
        if not self._corners:
            return False
        axes, corners = _bev_axes_corners(box)
        all_corners = np.stack(self._corners)  # (n, 4, 2)
        all_axes = np.stack(self._axes)  # (n, 2, 2)
        # candidate axes: candidate extent vs every box's extent
        cand_proj = corners @ axes.T  # (4, 2)
        cand_lo, cand_hi = cand_proj.min(axis=0), cand_proj.max(axis=0)
        boxes_on_cand = np.einsum("ax,nkx->nka", axes, all_corners)  # (n, 4, 2)
        b_lo, b_hi = boxes_on_cand.min(axis=1), boxes_on_cand.max(axis=1)
        sep = (cand_hi[None, :] <= b_lo) | (b_hi <= cand_lo[None, :])
        # each box's own axes: candidate projected onto them
        cand_on_boxes = np.einsum("nax,kx->nka", all_axes, corners)  # (n, 4, 2)
        c_lo, c_hi = cand_on_boxes.min(axis=1), cand_on_boxes.max(axis=1)
        s_lo, s_hi = np.stack(self._self_lo), np.stack(self._self_hi)
        sep2 = (c_hi <= s_lo) | (s_hi <= c_lo)
        separated = sep.any(axis=1) | sep2.any(axis=1)
        return bool((~separated).any())


def _collides_any(box: Box3D, others) -> bool:
    return any(collide(box, o) for o in others)


def _yawed(box: Box3D, yaw: float) -> Box3D:
    c, s = math.cos(yaw), math.sin(yaw)
    return Box3D(
        c * box.cx - s * box.cy,
        s * box.cx + c * box.cy,
        box.cz,
        box.l,
        box.w,
        box.h,
        box.heading + yaw,
    )


def place(existing_boxes, obj: GtObject, rng: np.random.Generator, cfg: ComposerConfig):
    """Pick a collision-free pose for ``obj`` or return None.

    ``existing_boxes`` is a sequence of boxes or a prebuilt
    :class:`CollisionField`.  The default policy re-uses the recorded
    pose, so there is exactly one candidate; with ``random_yaw`` each
    attempt spins the pose about the sensor origin.
    """
    if obj.is_empty:
        raise ValueError(f"object {obj.object_id} has no points; filter upstream")
    field = (
        existing_boxes
        if isinstance(existing_boxes, CollisionField)
        else CollisionField(existing_boxes)
    )
    attempts = cfg.max_attempts if cfg.random_yaw else 1
    for _ in range(attempts):
        candidate = (
            _yawed(obj.label.box, rng.random() * 2.0 * math.pi)
            if cfg.random_yaw
            else obj.label.box
        )
        if not field.collides(candidate):
            return candidate
    return None


@dataclass
class Placement:
    """Provenance of one insertion attempt."""

    object_id: int
    group: int
    box: Box3D = None
    accepted: bool = False
    reason: str = "ok"


@dataclass
class AugmentedFrame:
    """Composition result: extended frame, per-label origins, provenance."""

    frame: Frame
    origins: list  # "original" | "augmented", aligned with frame.labels
    provenance: list  # Placement per drawn object


def compose(
    frame: Frame,
    db: GtDatabase,
    plans: dict,
    cfg: ComposerConfig,
    rng: np.random.Generator,
) -> AugmentedFrame:
    """Top up ``frame`` with database objects per class.

    ``plans`` maps a class name to its (registry, plan) pair; classes
    without a plan are left alone.  The original frame is never mutated:
    points and labels are copied into a new Frame.  Skipped placements
    are reported in the provenance, not raised.
    """
    class_counts = {c: 0 for c in CLASS_NAMES}
    for label in frame.labels:
        class_counts[label.class_name] += 1
    new_labels = list(frame.labels)
    new_origins = ["original"] * len(frame.labels)
    field = CollisionField(label.box for label in frame.labels)
    point_blocks = [np.asarray(frame.points, dtype=np.float32).reshape(-1, 4)]
    provenance = []
    for cls in CLASS_NAMES:
        if cls not in plans:
            continue
        registry, class_plan = plans[cls]
        need = quota(class_counts[cls], cfg.thresholds.get(cls, 0))
        if need == 0:
            continue
        for object_id in draw(class_plan, registry, rng, need, replace=False):
            obj = db.get(object_id)
            record = Placement(object_id=object_id, group=registry.group_of[object_id])
            pose = place(field, obj, rng, cfg)
            if pose is None:
                record.accepted = False
                record.reason = "collision"
            else:
                record.accepted = True
                record.box = pose
                field.add(pose)
                new_labels.append(dc_replace(obj.label, box=pose))
                new_origins.append("augmented")
                world = to_world(obj.points, pose).astype(np.float32)
                point_blocks.append(world)
            provenance.append(record)
    out_frame = Frame(
        frame_id=frame.frame_id,
        points=np.concatenate(point_blocks, axis=0),
        labels=new_labels,
    )
    return AugmentedFrame(frame=out_frame, origins=new_origins, provenance=provenance)
