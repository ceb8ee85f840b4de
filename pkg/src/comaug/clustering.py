"""Difficulty-group assignment by four-factor feature binning.

Objects are bucketed by sensor distance, box size, relative angle and
occupancy ratio.  Each factor has ordered interior bin edges; the first
bin starts at the factor's domain minimum and the last bin is unbounded
above (angle and occupancy are naturally capped by their domains).  Bins
are half-open [lo, hi): a value exactly on an edge falls in the upper bin.

A group index composes the per-factor bin indices row-major in the fixed
factor order distance, size, angle, occupancy (inactive factors skipped),
so indices are reproducible across runs and implementations.

Default rules: vehicles use all four factors with distance cut at 30/50 m,
size at 4/8 m, angle in thirds of [0, pi/2] and occupancy in fifths of
[0, 1], giving 3*3*3*5 = 135 groups.  Pedestrians use distance and
occupancy only (15 groups); cyclists reuse the pedestrian rule.
"""

from __future__ import annotations

import configparser
import math
from bisect import bisect_right
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import ObjectFeatures

FACTORS = ("distance", "size", "angle", "occupancy")

DISTANCE_EDGES = (30.0, 50.0)
SIZE_EDGES = (4.0, 8.0)
ANGLE_EDGES = (math.pi / 6.0, math.pi / 3.0)
OCCUPANCY_EDGES = (0.2, 0.4, 0.6, 0.8)


@dataclass(frozen=True)
class BinningRule:
    """Per-factor interior bin edges plus the mask of active factors."""

    distance_edges: tuple = DISTANCE_EDGES
    size_edges: tuple = SIZE_EDGES
    angle_edges: tuple = ANGLE_EDGES
    occupancy_edges: tuple = OCCUPANCY_EDGES
    active: tuple = FACTORS

    def __post_init__(self):
        seen = set()
        for f in self.active:
            if f not in FACTORS or f in seen:
                raise ValueError(f"bad factor in active mask: {self.active}")
            seen.add(f)
        canonical = tuple(f for f in FACTORS if f in seen)
        object.__setattr__(self, "active", canonical)
        for f in FACTORS:
            edges = self.edges_for(f)
            if any(b <= a for a, b in zip(edges, edges[1:])):
                raise ValueError(f"{f} edges must be strictly increasing: {edges}")

    def edges_for(self, factor: str) -> tuple:
        return getattr(self, f"{factor}_edges")

    @property
    def bin_counts(self) -> tuple:
        """Bin count per active factor (len(edges) + 1 each)."""
        return tuple(len(self.edges_for(f)) + 1 for f in self.active)

    @property
    def group_count(self) -> int:
        n = 1
        for c in self.bin_counts:
            n *= c
        return n

    def group_key(self, index: int) -> tuple:
        """Per-factor bin indices of a group, in active-factor order."""
        if not 0 <= index < self.group_count:
            raise ValueError(f"group index out of range: {index}")
        key = []
        for c in reversed(self.bin_counts):
            key.append(index % c)
            index //= c
        return tuple(reversed(key))


def default_rules() -> dict:
    """Per-class default rules; cyclists fall back to the pedestrian rule."""
    vehicle = BinningRule()
    pedestrian = BinningRule(active=("distance", "occupancy"))
    return {"vehicle": vehicle, "pedestrian": pedestrian, "cyclist": pedestrian}


def reduced_rule(rule: BinningRule, active_factors) -> BinningRule:
    """Same edges, only the given factors active; empty set gives one group."""
    return replace(rule, active=tuple(active_factors))


def assign_group(features: ObjectFeatures, rule: BinningRule) -> int:
    """Row-major group index of one feature vector."""
    index = 0
    for factor, count in zip(rule.active, rule.bin_counts):
        value = getattr(features, factor)
        index = index * count + bisect_right(rule.edges_for(factor), value)
    return index


def assign_groups(feature_array: np.ndarray, rule: BinningRule) -> np.ndarray:
    """Vectorized :func:`assign_group` over rows of (distance, size, angle, occupancy)."""
    feats = np.atleast_2d(np.asarray(feature_array, dtype=np.float64))
    index = np.zeros(len(feats), dtype=np.int64)
    for factor, count in zip(rule.active, rule.bin_counts):
        col = FACTORS.index(factor)
        bins = np.searchsorted(np.asarray(rule.edges_for(factor)), feats[:, col], side="right")
        index = index * count + bins
    return index


@dataclass
class GroupRegistry:
    """Clustering result for one class partition of a database.

    ``counts`` includes every object (zero-point ones too, so group sizes
    are not skewed); ``sampleable`` lists only object ids that actually
    carry points and may be drawn for augmentation.
    """

    class_name: str
    rule: BinningRule
    group_of: dict = field(default_factory=dict)  # object_id -> group index
    counts: np.ndarray = None
    members: list = None  # per group: np.ndarray of object ids
    sampleable: list = None  # per group: ids of objects with >= 1 point

    @property
    def group_count(self) -> int:
        return self.rule.group_count

    def group_key(self, index: int) -> tuple:
        return self.rule.group_key(index)


def build_registry(db, rule: BinningRule, class_name: str) -> GroupRegistry:
    """Assign every object of ``class_name`` in ``db`` to its difficulty group."""
    objects = db.by_class.get(class_name, [])
    G = rule.group_count
    reg = GroupRegistry(class_name=class_name, rule=rule)
    reg.counts = np.zeros(G, dtype=np.int64)
    members = [[] for _ in range(G)]
    sampleable = [[] for _ in range(G)]
    if objects:
        feats = np.array([o.features.as_array() for o in objects])
        groups = assign_groups(feats, rule)
        for obj, g in zip(objects, groups):
            g = int(g)
            reg.group_of[obj.object_id] = g
            reg.counts[g] += 1
            members[g].append(obj.object_id)
            if obj.num_points > 0:
                sampleable[g].append(obj.object_id)
    reg.members = [np.array(m, dtype=np.int64) for m in members]
    reg.sampleable = [np.array(m, dtype=np.int64) for m in sampleable]
    return reg


def save_rules(rules: dict, path) -> None:
    """Write per-class rules as an INI file (one section per class)."""
    cp = configparser.ConfigParser()
    for cls in sorted(rules):
        rule = rules[cls]
        cp[cls] = {"factors": " ".join(rule.active)}
        for f in FACTORS:
            cp[cls][f"{f}_edges"] = " ".join(repr(e) for e in rule.edges_for(f))
    with open(path, "w") as fh:
        cp.write(fh)


def load_rules(path) -> dict:
    """Read per-class rules written by :func:`save_rules`.

    Schema: one section per class; ``factors`` lists the active factors,
    ``<factor>_edges`` gives space-separated interior edges.  Unknown keys
    are rejected.
    """
    cp = configparser.ConfigParser()
    with open(path) as fh:
        cp.read_file(fh)
    rules = {}
    known = {"factors"} | {f"{f}_edges" for f in FACTORS}
    for cls in cp.sections():
        section = cp[cls]
        unknown = set(section) - known
        if unknown:
            raise ValueError(f"unknown keys in rule section [{cls}]: {sorted(unknown)}")
        kwargs = {}
        for f in FACTORS:
            if f"{f}_edges" in section:
                kwargs[f"{f}_edges"] = tuple(float(x) for x in section[f"{f}_edges"].split())
        if "factors" in section:
            kwargs["active"] = tuple(section["factors"].split())
        rules[cls] = BinningRule(**kwargs)
    return rules
