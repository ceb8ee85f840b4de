"""Point-cloud and oriented-box geometry kernels.

Points are plain numpy arrays of shape (N, 4): x, y, z in meters plus an
intensity payload in [0, 1] that every operation passes through untouched.
Boxes are z-up oriented cuboids described by center, dimensions and a yaw
heading.

The four grouping features computed here summarise how hard an object is
to observe: sensor distance, bounding-box size, the heading-vs-azimuth
angle folded into [0, pi/2), and the fraction of box voxels that contain
at least one point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TAU = 2.0 * math.pi
HALF_PI = 0.5 * math.pi


def normalize_heading(heading: float) -> float:
    """Wrap a yaw angle into (-pi, pi]."""
    r = heading % TAU
    if r > math.pi:
        r -= TAU
    return r


@dataclass(frozen=True)
class Box3D:
    """Oriented 3D bounding box: center (cx, cy, cz), dims (l, w, h), yaw heading.

    Dimensions must be positive; the heading is normalized to (-pi, pi] on
    construction.
    """

    cx: float
    cy: float
    cz: float
    l: float
    w: float
    h: float
    heading: float

    def __post_init__(self):
        for name in ("cx", "cy", "cz", "l", "w", "h", "heading"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"box field {name} is not finite: {v}")
        if self.l <= 0 or self.w <= 0 or self.h <= 0:
            raise ValueError(f"box dims must be positive: l={self.l} w={self.w} h={self.h}")
        object.__setattr__(self, "heading", normalize_heading(self.heading))

    @property
    def center(self) -> np.ndarray:
        return np.array([self.cx, self.cy, self.cz])

    @property
    def dims(self) -> np.ndarray:
        return np.array([self.l, self.w, self.h])

    def corners_bev(self) -> np.ndarray:
        """Birds-eye-view corner coordinates, shape (4, 2), counter-clockwise."""
        c, s = math.cos(self.heading), math.sin(self.heading)
        hl, hw = 0.5 * self.l, 0.5 * self.w
        local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
        rot = np.array([[c, -s], [s, c]])
        return local @ rot.T + np.array([self.cx, self.cy])


@dataclass(frozen=True)
class VoxelScheme:
    """Equal-split voxel counts along the box-local length/width/height axes."""

    nl: int
    nw: int
    nh: int

    def __post_init__(self):
        if min(self.nl, self.nw, self.nh) < 1:
            raise ValueError(f"voxel counts must be >= 1: {self}")

    @property
    def total(self) -> int:
        return self.nl * self.nw * self.nh


#: Per-class voxel splits for the occupancy ratio: vehicles are cut 3x2x2
#: along length/width/height; pedestrians (and, lacking better data,
#: cyclists) are cut into 5 height slabs only.
VEHICLE_VOXELS = VoxelScheme(3, 2, 2)
PEDESTRIAN_VOXELS = VoxelScheme(1, 1, 5)


@dataclass(frozen=True)
class ObjectFeatures:
    """Grouping features of one object.

    distance  -- meters from the sensor origin to the box center
    size      -- max(l, w, h) in meters
    angle     -- heading minus center azimuth, folded into [0, pi/2)
    occupancy -- non-empty voxel fraction in [0, 1]
    """

    distance: float
    size: float
    angle: float
    occupancy: float

    def as_array(self) -> np.ndarray:
        return np.array([self.distance, self.size, self.angle, self.occupancy])


def to_local(points: np.ndarray, box: Box3D) -> np.ndarray:
    """Express points in the box frame (translate to center, rotate by -heading).

    Extra columns beyond x, y, z (e.g. intensity) are carried through.
    """
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    c, s = math.cos(box.heading), math.sin(box.heading)
    out = pts.astype(np.float64, copy=True)
    dx = pts[:, 0] - box.cx
    dy = pts[:, 1] - box.cy
    out[:, 0] = c * dx + s * dy
    out[:, 1] = -s * dx + c * dy
    out[:, 2] = pts[:, 2] - box.cz
    return out[0] if single else out


def to_world(points_local: np.ndarray, box: Box3D) -> np.ndarray:
    """Inverse of :func:`to_local`: rotate by +heading, translate to center."""
    pts = np.asarray(points_local, dtype=np.float64)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    c, s = math.cos(box.heading), math.sin(box.heading)
    out = pts.astype(np.float64, copy=True)
    out[:, 0] = c * pts[:, 0] - s * pts[:, 1] + box.cx
    out[:, 1] = s * pts[:, 0] + c * pts[:, 1] + box.cy
    out[:, 2] = pts[:, 2] + box.cz
    return out[0] if single else out


def point_in_box(points: np.ndarray, box: Box3D):
    """Inclusive point-in-box test in the box local frame.

    Accepts one point (shape (3,) or (4,)) returning a bool, or a stack
    (N, 3+) returning a bool array.  Points exactly on a face count as
    inside.
    """
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 1
    local = to_local(np.atleast_2d(pts), box)
    inside = (
        (np.abs(local[:, 0]) <= 0.5 * box.l)
        & (np.abs(local[:, 1]) <= 0.5 * box.w)
        & (np.abs(local[:, 2]) <= 0.5 * box.h)
    )
    return bool(inside[0]) if single else inside


def feature_distance(box: Box3D) -> float:
    """Euclidean distance from the sensor origin to the box center."""
    return math.sqrt(box.cx * box.cx + box.cy * box.cy + box.cz * box.cz)


def feature_size(box: Box3D) -> float:
    """Largest box dimension."""
    return max(box.l, box.w, box.h)


def feature_angle(box: Box3D) -> float:
    """Heading minus center azimuth, reduced modulo pi/2 into [0, pi/2).

    The azimuth is the full-quadrant arctangent of the center, taken as 0
    for a box centered exactly on the sensor axis (cx = cy = 0).  Floored
    modulo keeps the result non-negative; adding any multiple of pi/2 to
    the heading leaves the value unchanged.
    """
    if box.cx == 0.0 and box.cy == 0.0:
        azimuth = 0.0
    else:
        azimuth = math.atan2(box.cy, box.cx)
    a = (box.heading - azimuth) % HALF_PI
    if a >= HALF_PI:  # guard against fp wrap at the modulus boundary
        a -= HALF_PI
    return a


def voxel_indices(points_local: np.ndarray, box: Box3D, scheme: VoxelScheme) -> np.ndarray:
    """Voxel index triples for box-local points, shape (N, 3).

    The box extent is split into equal voxels per axis.  A point on a
    shared voxel face goes to the voxel with the larger index; points on
    the outermost face are clamped into the last voxel (they are inside
    the box, inclusively).
    """
    pts = np.atleast_2d(np.asarray(points_local, dtype=np.float64))
    counts = np.array([scheme.nl, scheme.nw, scheme.nh])
    extents = np.array([box.l, box.w, box.h])
    frac = (pts[:, :3] + 0.5 * extents) / extents  # [0, 1] inside the box
    idx = np.floor(frac * counts).astype(np.int64)
    return np.clip(idx, 0, counts - 1)


def occupancy_from_local(points_local: np.ndarray, box: Box3D, scheme: VoxelScheme) -> float:
    """Occupancy ratio for points already in the box frame.

    Every given point is counted (callers crop first); indices clamp into
    the outermost voxels so face contact stays inside.
    """
    pts = np.asarray(points_local, dtype=np.float64)
    if pts.size == 0:
        return 0.0
    idx = voxel_indices(np.atleast_2d(pts), box, scheme)
    flat = (idx[:, 0] * scheme.nw + idx[:, 1]) * scheme.nh + idx[:, 2]
    return float(len(np.unique(flat))) / scheme.total


def feature_occupancy(points: np.ndarray, box: Box3D, scheme: VoxelScheme) -> float:
    """Fraction of the scheme's voxels containing at least one interior point.

    ``points`` are world-frame rows (N, 3+); points outside the box are
    ignored.  Returns 0.0 for an empty point set.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        return 0.0
    pts = np.atleast_2d(pts)
    local = to_local(pts, box)
    inside = (
        (np.abs(local[:, 0]) <= 0.5 * box.l)
        & (np.abs(local[:, 1]) <= 0.5 * box.w)
        & (np.abs(local[:, 2]) <= 0.5 * box.h)
    )
    if not inside.any():
        return 0.0
    return occupancy_from_local(local[inside], box, scheme)


def compute_features(points: np.ndarray, box: Box3D, scheme: VoxelScheme) -> ObjectFeatures:
    """All four grouping features of one object."""
    return ObjectFeatures(
        distance=feature_distance(box),
        size=feature_size(box),
        angle=feature_angle(box),
        occupancy=feature_occupancy(points, box, scheme),
    )
