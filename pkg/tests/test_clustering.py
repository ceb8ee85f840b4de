"""Tests for comaug.clustering: binning rules, group assignment, registry."""

import math

import numpy as np
import pytest

from comaug.clustering import (
    FACTORS,
    BinningRule,
    assign_group,
    assign_groups,
    build_registry,
    default_rules,
    load_rules,
    reduced_rule,
    save_rules,
)
from comaug.geometry import ObjectFeatures


def brute_force_bin(value, edges):
    idx = 0
    while idx < len(edges) and value >= edges[idx]:
        idx += 1
    return idx


def brute_force_assign(features, rule):
    index = 0
    for factor, count in zip(rule.active, rule.bin_counts):
        index = index * count + brute_force_bin(getattr(features, factor), rule.edges_for(factor))
    return index


def test_default_group_counts():
    rules = default_rules()
    assert rules["vehicle"].group_count == 135
    assert rules["pedestrian"].group_count == 15
    assert rules["cyclist"].group_count == 15  # reuses the pedestrian rule


def test_vehicle_example_index():
    # bins (0, 1, 0, 4) compose row-major to 0*45 + 1*15 + 0*5 + 4 = 19
    f = ObjectFeatures(distance=10, size=4.5, angle=0.1, occupancy=0.9)
    assert assign_group(f, default_rules()["vehicle"]) == 19


def test_pedestrian_example_index():
    # distance x occupancy: bins (2, 0) -> 2*5 + 0 = 10
    f = ObjectFeatures(distance=60, size=1.8, angle=0.0, occupancy=0.05)
    assert assign_group(f, default_rules()["pedestrian"]) == 10


def test_edge_value_goes_to_upper_bin():
    f = ObjectFeatures(distance=30.0, size=1.0, angle=0.0, occupancy=0.0)
    rule = reduced_rule(default_rules()["vehicle"], ("distance",))
    assert assign_group(f, rule) == 1  # [30, 50)


def test_assign_matches_brute_force_on_random_features():
    rng = np.random.default_rng(23)
    rule = default_rules()["vehicle"]
    feats = np.column_stack(
        [
            rng.uniform(0, 120, 10_000),
            rng.uniform(0, 15, 10_000),
            rng.uniform(0, math.pi / 2, 10_000),
            rng.uniform(0, 1, 10_000),
        ]
    )
    vec = assign_groups(feats, rule)
    for row, got in zip(feats, vec):
        f = ObjectFeatures(*row)
        expected = brute_force_assign(f, rule)
        assert assign_group(f, rule) == expected == got


def test_bin_membership_stable_near_edges():
    rule = default_rules()["vehicle"]
    for edge in rule.distance_edges:
        below = ObjectFeatures(edge - 1e-9, 1, 0, 0)
        at = ObjectFeatures(edge, 1, 0, 0)
        assert assign_group(below, rule) != assign_group(at, rule)
        assert assign_group(ObjectFeatures(edge + 1e-9, 1, 0, 0), rule) == assign_group(at, rule)


def test_reduced_rule_counts():
    vehicle = default_rules()["vehicle"]
    assert reduced_rule(vehicle, ("distance",)).group_count == 3
    assert reduced_rule(vehicle, ()).group_count == 1
    assert reduced_rule(vehicle, ("occupancy", "distance")).group_count == 15


def test_reduced_rule_canonicalizes_factor_order():
    vehicle = default_rules()["vehicle"]
    rule = reduced_rule(vehicle, ("occupancy", "distance"))
    assert rule.active == ("distance", "occupancy")


def test_group_key_round_trip():
    rule = default_rules()["vehicle"]
    for g in range(rule.group_count):
        key = rule.group_key(g)
        index = 0
        for bin_index, count in zip(key, rule.bin_counts):
            index = index * count + bin_index
        assert index == g


def test_rule_validation():
    with pytest.raises(ValueError):
        BinningRule(distance_edges=(50.0, 30.0))
    with pytest.raises(ValueError):
        BinningRule(active=("distance", "distance"))
    with pytest.raises(ValueError):
        BinningRule(active=("speed",))


def test_rules_config_round_trip(tmp_path):
    rules = default_rules()
    path = tmp_path / "rules.cfg"
    save_rules(rules, path)
    loaded = load_rules(path)
    assert set(loaded) == set(rules)
    for cls in rules:
        assert loaded[cls] == rules[cls]


def test_rules_config_rejects_unknown_keys(tmp_path):
    path = tmp_path / "rules.cfg"
    path.write_text("[vehicle]\nfactors = distance\nspeed_edges = 1 2\n")
    with pytest.raises(ValueError):
        load_rules(path)


def _mini_db(features_per_class):
    """Ad-hoc database double: objects with .features/.object_id/.num_points."""

    class Obj:
        def __init__(self, oid, feats, n=3):
            self.object_id = oid
            self.features = feats
            self.num_points = n

    class Db:
        def __init__(self):
            self.by_class = {}

    db = Db()
    oid = 0
    for cls, feats in features_per_class.items():
        objs = []
        for f in feats:
            objs.append(Obj(oid, f))
            oid += 1
        db.by_class[cls] = objs
    return db


def test_registry_partitions_every_object():
    rng = np.random.default_rng(41)
    feats = [
        ObjectFeatures(rng.uniform(0, 90), rng.uniform(0, 12), rng.uniform(0, 1.5), rng.uniform(0, 1))
        for _ in range(500)
    ]
    db = _mini_db({"vehicle": feats})
    reg = build_registry(db, default_rules()["vehicle"], "vehicle")
    assert reg.counts.sum() == 500
    assert len(reg.group_of) == 500
    for g, members in enumerate(reg.members):
        for oid in members:
            assert reg.group_of[oid] == g
    assert reg.group_count == 135


def test_registry_empty_database():
    db = _mini_db({"vehicle": []})
    reg = build_registry(db, default_rules()["vehicle"], "vehicle")
    assert reg.counts.sum() == 0
    assert all(c == 0 for c in reg.counts)
