"""Closed-loop synthetic experiment for the curriculum machinery.

A toy world stands in for a real detector so the full loop — plan,
compose, score, threshold update, pool update, epoch average — can run at
desk scale and reproduce the qualitative sampling dynamics: easy groups
dominate early epochs, hard groups take over late, medium groups peak in
between.  No detection quality is simulated; only mechanism dynamics.

The synthetic world gives every difficulty group of the clustering rule
at least one object, with point density falling off with distance so the
occupancy feature behaves realistically.  Group sizes grow with distance
and sparsity (far, low-occupancy objects are the plentiful ones in real
drive data), which is also what makes the late-training probability mass
shift visible at this scale.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace as dc_replace

import numpy as np

from .clustering import BinningRule, build_registry, default_rules
from .comloss import LossWeightConfig, ThresholdState, difficulty, update_threshold, weight
from .difficulty_tracker import GroupScores, ScorePool, end_epoch, init_scores, write_score_log
from .geometry import Box3D, ObjectFeatures, to_world
from .gt_database import CLASS_NAMES, Frame, GtDatabase, Label, VOXEL_SCHEMES, build_database
from .sampler import CurriculumState, plan, sorted_order
from .scene_composer import CollisionField, ComposerConfig, compose
from .seeding import frame_stream, make_rng


@dataclass
class DifficultyModel:
    """Latent difficulty of an object from its grouping features, in [0, 1].

    d = distance_coef * min(distance / distance_scale, 1)
      + occupancy_coef * (1 - occupancy)
      + size_coef * rank(|size - median size|),   clamped to [0, 1].

    The size term ranks how unusual the object's size is among the fitted
    population.  Monotone: non-decreasing in distance, non-increasing in
    occupancy.
    """

    distance_coef: float = 0.5
    occupancy_coef: float = 0.3
    size_coef: float = 0.2
    distance_scale: float = 75.0
    median_size: float = 0.0
    size_deviations: np.ndarray = field(default_factory=lambda: np.zeros(1))

    @classmethod
    def fit(cls, features, **kwargs) -> "DifficultyModel":
        sizes = np.array([f.size for f in features], dtype=np.float64)
        if len(sizes) == 0:
            sizes = np.zeros(1)
        median = float(np.median(sizes))
        devs = np.sort(np.abs(sizes - median))
        return cls(median_size=median, size_deviations=devs, **kwargs)

    def latent(self, features: ObjectFeatures) -> float:
        return float(self.latent_array(np.array([features.as_array()]))[0])

    def latent_array(self, feats: np.ndarray) -> np.ndarray:
        """Vectorized latent difficulty over rows (distance, size, angle, occupancy)."""
        feats = np.atleast_2d(feats)
        dev = np.abs(feats[:, 1] - self.median_size)
        rank = np.searchsorted(self.size_deviations, dev, side="right") / len(
            self.size_deviations
        )
        d = (
            self.distance_coef * np.minimum(feats[:, 0] / self.distance_scale, 1.0)
            + self.occupancy_coef * (1.0 - feats[:, 3])
            + self.size_coef * rank
        )
        return np.clip(d, 0.0, 1.0)


@dataclass
class DetectorProxy:
    """Stand-in for an improving detector.

    Emits score = clamp(skill(t) - latent + N(0, noise), 0, 1): monotone
    in skill, anti-monotone in latent difficulty.  The default skill curve
    is t / total_epochs.
    """

    model: DifficultyModel
    total_epochs: int
    noise: float = 0.05
    skill: object = None  # callable epoch -> [0, 1]; None means t / total_epochs

    def skill_at(self, t: float) -> float:
        if self.skill is not None:
            return float(self.skill(t))
        return float(t) / self.total_epochs

    def score(self, latent: np.ndarray, t: float, rng: np.random.Generator) -> np.ndarray:
        latent = np.asarray(latent, dtype=np.float64)
        raw = self.skill_at(t) - latent + rng.normal(0.0, self.noise, size=latent.shape)
        return np.clip(raw, 0.0, 1.0)


# --- synthetic world ---------------------------------------------------------

# Feature values are sampled with wide margins inside their bins so float32
# quantization can never flip a bin assignment.  The near bin starts at 3 m
# so the easiest objects sit low enough on the difficulty scale for a
# fresh (low-skill) detector proxy to tell them apart from the rest.
_DISTANCE_RANGES = ((3.0, 28.0), (31.5, 48.5), (51.5, 74.0))
_SIZE_RANGES = ((2.5, 3.9), (4.2, 7.8), (8.3, 11.5))
_ANGLE_MARGIN = 0.06


@dataclass(frozen=True)
class SyntheticSpec:
    """Shape of the synthetic database.

    objects_per_group     -- baseline object count in every group
    distance_count_skew   -- extra objects per distance bin step toward the
                             sensor (near objects are the plentiful,
                             densely-observed ones)
    occupancy_count_skew  -- extra objects per occupancy bin step toward
                             sparse (partially-observed shapes come in many
                             more variations than complete ones)
    frame_size            -- original objects per synthetic frame
    points_per_voxel_near -- point budget of a near object's occupied voxel;
                             density decays quadratically with distance
    background_points     -- clutter points per frame (never inside a box)
    """

    class_name: str = "vehicle"
    rule: BinningRule = field(default_factory=BinningRule)
    objects_per_group: int = 1
    distance_count_skew: int = 2
    occupancy_count_skew: int = 3
    frame_size: int = 5
    points_per_voxel_near: int = 6
    background_points: int = 30

    def group_target(self, key: tuple) -> int:
        """Object count for one group key (bin indices in active-factor order)."""
        count = self.objects_per_group
        for factor, bin_index, bins in zip(
            self.rule.active, key, self.rule.bin_counts
        ):
            if factor == "distance":
                count += self.distance_count_skew * (bins - 1 - bin_index)
            elif factor == "occupancy":
                count += self.occupancy_count_skew * (bins - 1 - bin_index)
        return count


def _occupied_voxel_options(scheme, occ_edges, o_bin: int):
    """Voxel counts k whose ratio k/total falls in occupancy bin ``o_bin``."""
    total = scheme.total
    lo = occ_edges[o_bin - 1] if o_bin > 0 else 0.0
    hi = occ_edges[o_bin] if o_bin < len(occ_edges) else 1.0 + 1e-9
    last = o_bin == len(occ_edges)
    ks = [k for k in range(1, total + 1) if (lo <= k / total < hi) or (last and k == total)]
    return ks


def _sample_in(rng, lo, hi):
    return lo + rng.random() * (hi - lo)


def generate_synthetic_db(spec: SyntheticSpec, seed: int):
    """Build (database, frames) covering every group of the spec's rule.

    Deterministic for a given seed.  Objects are laid out on random
    azimuths at their target radius; original boxes never collide.
    """
    rng = make_rng(seed, stream=0)
    rule = spec.rule
    scheme = VOXEL_SCHEMES[spec.class_name]
    occ_edges = rule.occupancy_edges
    angle_edges = (0.0,) + tuple(rule.angle_edges) + (math.pi / 2.0,)

    blueprints = []  # (distance, length, rel_angle, occupied_voxel_count)
    for g in range(rule.group_count):
        key = rule.group_key(g)
        bins = dict(zip(rule.active, key))
        for _ in range(spec.group_target(key)):
            d_bin = bins.get("distance", rng.integers(0, 3))
            if spec.class_name == "vehicle":
                s_bin = bins.get("size", rng.integers(0, 3))
                length = _sample_in(rng, *_SIZE_RANGES[int(s_bin)])
                dims = (length, 0.45 * length, 0.3 * length + 1.0)
            else:
                dims = (0.7, 0.7, 1.8)
            lo, hi = _DISTANCE_RANGES[int(d_bin)]
            # big boxes cannot sit right on top of the sensor, or nothing
            # else fits in the frame
            radius = _sample_in(rng, max(lo, 0.9 * dims[0]), hi)
            if "angle" in bins:
                a_bin = int(bins["angle"])
                rel_angle = _sample_in(
                    rng,
                    angle_edges[a_bin] + _ANGLE_MARGIN,
                    angle_edges[a_bin + 1] - _ANGLE_MARGIN,
                )
            else:
                rel_angle = _sample_in(rng, _ANGLE_MARGIN, math.pi / 2 - _ANGLE_MARGIN)
            o_bin = bins.get("occupancy", None)
            if o_bin is None:
                k = int(rng.integers(1, scheme.total + 1))
            else:
                options = _occupied_voxel_options(scheme, occ_edges, int(o_bin))
                k = int(options[int(rng.integers(0, len(options)))]) if options else 0
            blueprints.append((radius, dims, rel_angle, k))

    order = rng.permutation(len(blueprints))
    frames = []
    n_frames = math.ceil(len(blueprints) / spec.frame_size)
    for fi in range(n_frames):
        chunk = order[fi * spec.frame_size : (fi + 1) * spec.frame_size]
        labels = []
        blocks = []
        field = CollisionField()
        for bi in chunk:
            radius, dims, rel_angle, k = blueprints[bi]
            box = None
            for _ in range(200):
                azimuth = rng.random() * 2.0 * math.pi
                heading = azimuth + rel_angle + (math.pi / 2.0) * int(rng.integers(0, 4))
                cand = Box3D(
                    radius * math.cos(azimuth),
                    radius * math.sin(azimuth),
                    0.0,
                    *dims,
                    heading,
                )
                if not field.collides(cand):
                    box = cand
                    break
            if box is None:
                raise RuntimeError("could not place a synthetic object without collision")
            field.add(box)
            labels.append(Label(box=box, class_name=spec.class_name))
            if k > 0:
                blocks.append(_object_points(rng, box, scheme, k, radius, spec))
        if spec.background_points > 0:
            blocks.append(_background_points(rng, spec.background_points))
        points = (
            np.concatenate(blocks, axis=0)
            if blocks
            else np.empty((0, 4), dtype=np.float32)
        )
        frames.append(Frame(frame_id=f"synthetic-{fi:05d}", points=points, labels=labels))

    db = build_database(frames, provenance=f"synthetic seed={seed}")
    return db, frames


def _object_points(rng, box, scheme, occupied: int, radius: float, spec: SyntheticSpec):
    """Points inside ``occupied`` distinct voxels, density decaying with radius."""
    per_voxel = max(1, round(spec.points_per_voxel_near / (1.0 + (radius / 30.0) ** 2)))
    counts = np.array([scheme.nl, scheme.nw, scheme.nh])
    extents = np.array([box.l, box.w, box.h])
    voxel = extents / counts
    chosen = rng.choice(scheme.total, size=occupied, replace=False)
    rows = []
    for flat in chosen:
        i, rem = divmod(int(flat), scheme.nw * scheme.nh)
        j, m = divmod(rem, scheme.nh)
        lo = -0.5 * extents + np.array([i, j, m]) * voxel
        for _ in range(per_voxel):
            # keep a 10% margin from every voxel face so quantization can
            # never move a point across a voxel or box boundary
            frac = 0.1 + 0.8 * rng.random(3)
            local = lo + frac * voxel
            rows.append([*local, rng.random()])
    world = to_world(np.array(rows, dtype=np.float64), box)
    return world.astype(np.float32)


def _background_points(rng, n: int):
    """Clutter well above every box (boxes sit at z = 0 with h < 5)."""
    r = 10.0 + 70.0 * np.sqrt(rng.random(n))
    az = 2.0 * math.pi * rng.random(n)
    pts = np.stack(
        [r * np.cos(az), r * np.sin(az), 5.0 + rng.random(n), rng.random(n)], axis=1
    )
    return pts.astype(np.float32)


# --- the experiment loop -----------------------------------------------------


@dataclass
class HarnessConfig:
    """Everything one closed-loop run needs; defaults mirror the training recipe
    (30 epochs, pacing 0.5, curve width 0.2, momentum 0.001, shape -5)."""

    seed: int = 0
    total_epochs: int = 30
    pacing: float = 0.5
    sigma: float = 0.2
    mode: str = "curriculum"
    noise: float = 0.05
    skill: object = None
    spec: SyntheticSpec = field(default_factory=SyntheticSpec)
    loss: LossWeightConfig = None
    composer: ComposerConfig = field(default_factory=ComposerConfig)
    workers: int = 1

    def __post_init__(self):
        if self.loss is None:
            self.loss = LossWeightConfig(
                tipping_epoch=self.total_epochs, total_epochs=self.total_epochs
            )


@dataclass
class TrendReport:
    """Per-epoch curriculum dynamics of one run."""

    epochs: np.ndarray
    easy: np.ndarray
    medium: np.ndarray
    hard: np.ndarray
    tau: np.ndarray
    mu: np.ndarray
    rank: np.ndarray
    pool_sizes: list  # per epoch: (G,) pool sizes before averaging
    inserted_counts: list  # per epoch: (G,) accepted insertions per group
    scores_final: np.ndarray
    seed: int = 0
    mode: str = "curriculum"

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("epoch,easy,medium,hard,tau,mu,rank\n")
        for i, t in enumerate(self.epochs):
            out.write(
                f"{int(t)},{self.easy[i]!r},{self.medium[i]!r},{self.hard[i]!r},"
                f"{self.tau[i]!r},{self.mu[i]!r},{int(self.rank[i])}\n"
            )
        return out.getvalue()


def _tertile_means(probs: np.ndarray, order: np.ndarray):
    """Mean plan probability over the easy / medium / hard thirds of ``order``."""
    parts = np.array_split(order, 3)
    return tuple(float(probs[p].mean()) for p in parts)


def run_experiment(config: HarnessConfig, score_log=None) -> TrendReport:
    """Run the full loop for ``config.total_epochs`` epochs.

    Per epoch: build the sampling plan from current group scores, compose
    every frame, score originals (threshold update) and insertions
    (difficulty pools) with the detector proxy, then average pools into
    group scores.  Deterministic for a given config and seed: every frame
    of every epoch draws from its own (seed, epoch, frame) stream, so
    results do not depend on the worker count.
    """
    if config.spec.frame_size < 1:
        raise ValueError("frame_size must be >= 1")
    if config.noise < 0:
        raise ValueError("noise must be >= 0")
    cls = config.spec.class_name
    db, frames = generate_synthetic_db(config.spec, config.seed)
    registry = build_registry(db, config.spec.rule, cls)
    G = registry.group_count
    scores = init_scores(G)
    pool = ScorePool(G)
    tau_state = ThresholdState()

    class_objs = db.by_class[cls]
    model = DifficultyModel.fit([o.features for o in class_objs])
    proxy = DetectorProxy(model=model, total_epochs=config.total_epochs, noise=config.noise,
                          skill=config.skill)
    latent_by_id = {}
    for o in class_objs:
        latent_by_id[o.object_id] = float(model.latent_array(o.features.as_array()[None, :])[0])
    by_frame = {}
    for o in db.objects:
        by_frame.setdefault(o.frame_id, []).append(o)
    orig_latents = {
        frame.frame_id: model.latent_array(
            np.array([o.features.as_array() for o in by_frame.get(frame.frame_id, [])])
        )
        if by_frame.get(frame.frame_id)
        else np.zeros(0)
        for frame in frames
    }

    rows = {k: [] for k in ("easy", "medium", "hard", "tau", "mu", "rank")}
    pool_sizes_hist = []
    inserted_hist = []

    for t in range(1, config.total_epochs + 1):
        state = CurriculumState(
            t=t, total_epochs=config.total_epochs, pacing=config.pacing,
            sigma=config.sigma, mode=config.mode,
        )
        epoch_plan = plan(scores, registry.counts, state)
        # tertile labels always follow the easiest-first order, whatever the
        # sampling mode, so "easy" means the same thing in every report
        easy, medium, hard = _tertile_means(
            epoch_plan.probs, sorted_order(scores.values, "curriculum")
        )

        def compose_one(fi_frame):
            fi, frame = fi_frame
            rng = make_rng(config.seed, frame_stream(t, 2 * fi))
            return compose(frame, db, {cls: (registry, epoch_plan)}, config.composer, rng)

        if config.workers > 1:
            with ThreadPoolExecutor(max_workers=config.workers) as ex:
                composed = list(ex.map(compose_one, enumerate(frames)))
        else:
            composed = [compose_one(x) for x in enumerate(frames)]

        inserted_counts = np.zeros(G, dtype=np.int64)
        for fi, (frame, aug) in enumerate(zip(frames, composed)):
            rng = make_rng(config.seed, frame_stream(t, 2 * fi + 1))
            s_orig = proxy.score(orig_latents[frame.frame_id], t, rng)
            update_threshold(tau_state, s_orig.tolist(), config.loss.alpha)
            accepted = [p for p in aug.provenance if p.accepted]
            if accepted:
                latents = np.array([latent_by_id[p.object_id] for p in accepted])
                s_aug = proxy.score(latents, t, rng)
                for p, s in zip(accepted, s_aug):
                    pool.record(p.group, difficulty(float(s), tau_state.tau))
                    inserted_counts[p.group] += 1

        pool_sizes_hist.append(pool.sizes())
        inserted_hist.append(inserted_counts)
        rows["easy"].append(easy)
        rows["medium"].append(medium)
        rows["hard"].append(hard)
        rows["tau"].append(tau_state.tau)
        rows["mu"].append(epoch_plan.mu)
        rows["rank"].append(epoch_plan.rank)
        if score_log is not None:
            write_score_log(score_log, t, scores, pool_sizes_hist[-1])
        scores = end_epoch(pool, scores)

    return TrendReport(
        epochs=np.arange(1, config.total_epochs + 1),
        easy=np.array(rows["easy"]),
        medium=np.array(rows["medium"]),
        hard=np.array(rows["hard"]),
        tau=np.array(rows["tau"]),
        mu=np.array(rows["mu"]),
        rank=np.array(rows["rank"], dtype=np.int64),
        pool_sizes=pool_sizes_hist,
        inserted_counts=inserted_hist,
        scores_final=scores.values,
        seed=config.seed,
        mode=config.mode,
    )


def sweep(base: HarnessConfig, pacings=(0.5,), sigmas=(0.2,), modes=("curriculum",)):
    """Run one experiment per (pacing, sigma, mode) cell; everything else shared.

    Returns a list of metric dicts (trend metrics only, no detection
    quality): final tertile means, the epoch of the medium-tertile peak,
    and the first epoch whose pacing rank reaches the hardest group.
    """
    rows = []
    for pacing in pacings:
        for sigma in sigmas:
            for mode in modes:
                cfg = dc_replace(base, pacing=pacing, sigma=sigma, mode=mode)
                report = run_experiment(cfg)
                at_max = np.nonzero(report.rank == _group_count(cfg))[0]
                rows.append(
                    {
                        "pacing": pacing,
                        "sigma": sigma,
                        "mode": mode,
                        "easy_final": float(report.easy[-1]),
                        "medium_final": float(report.medium[-1]),
                        "hard_final": float(report.hard[-1]),
                        "medium_peak_epoch": int(report.epochs[np.argmax(report.medium)]),
                        "epoch_rank_max": int(report.epochs[at_max[0]]) if len(at_max) else None,
                        "tau_final": float(report.tau[-1]),
                    }
                )
    return rows


def _group_count(cfg: HarnessConfig) -> int:
    return cfg.spec.rule.group_count


def format_sweep_table(rows) -> str:
    """Render sweep rows as a CSV table."""
    cols = (
        "pacing", "sigma", "mode", "easy_final", "medium_final", "hard_final",
        "medium_peak_epoch", "epoch_rank_max", "tau_final",
    )
    out = io.StringIO()
    out.write(",".join(cols) + "\n")
    for row in rows:
        out.write(",".join("" if row[c] is None else repr(row[c]) if isinstance(row[c], float) else str(row[c]) for c in cols) + "\n")
    return out.getvalue()
