"""Command-line front end.

Subcommands: build-db, cluster, sample, weights, simulate.  Every command
is reproducible byte-for-byte for a fixed seed and independent of the
worker count.  Exit codes: 0 success, 2 configuration error, 3 I/O error,
4 data-validation error; failures print one ``error: ...`` line to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import clustering, comloss, gt_database, harness, sampler
from .config import (
    ConfigError,
    RunConfig,
    dump_run_config,
    load_run_config,
    override_from_args,
    validate_run_config,
)
from .scene_composer import ComposerConfig
from .seeding import make_rng

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DATA = 4


class DataError(Exception):
    pass


def _load_config(args) -> RunConfig:
    cfg = load_run_config(args.config) if getattr(args, "config", None) else RunConfig()
    return override_from_args(
        cfg,
        args,
        {
            "seed": "seed",
            "epochs": "epochs",
            "workers": "workers",
            "alpha": "alpha",
            "beta": "beta",
            "height": "height",
            "tipping": "tipping_epoch",
            "pacing": "pacing",
            "sigma": "sigma",
            "mode": "mode",
            "class_name": "class_name",
            "noise": "noise",
        },
    )


def _rules(cfg: RunConfig) -> dict:
    if cfg.rules_file:
        return clustering.load_rules(cfg.rules_file)
    return clustering.default_rules()


def _write_out(text: str, path) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --- subcommands -------------------------------------------------------------


def cmd_build_db(args) -> int:
    cfg = _load_config(args)
    frames = gt_database.read_manifest(args.manifest)
    db = gt_database.build_database(
        frames, provenance=args.provenance, workers=cfg.workers
    )
    gt_database.save_database(db, args.out)
    print(f"objects={len(db)} -> {args.out}")
    return 0


def cmd_cluster(args) -> int:
    cfg = _load_config(args)
    rules = _rules(cfg)
    db = gt_database.load_database(args.db)
    classes = [cfg.class_name] if args.class_name else list(gt_database.CLASS_NAMES)
    lines = []
    for cls in classes:
        registry = clustering.build_registry(db, rules[cls], cls)
        lines.append(f"{cls}: G={registry.group_count}")
        occupied = np.count_nonzero(registry.counts)
        lines.append(
            f"  objects={int(registry.counts.sum())} occupied_groups={occupied}"
            f" max_group={int(registry.counts.max()) if len(registry.counts) else 0}"
        )
        if args.histogram:
            for g in range(registry.group_count):
                if registry.counts[g]:
                    lines.append(f"  {g},{registry.group_key(g)},{int(registry.counts[g])}")
    _write_out("\n".join(lines) + "\n", args.out)
    return 0


def load_scores_file(path, group_count: int):
    """Scores file: one ``<group> <score>`` line per group, all groups present."""
    values = np.zeros(group_count, dtype=np.float64)
    seen = set()
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected '<group> <score>'")
            g = int(parts[0])
            if not 0 <= g < group_count or g in seen:
                raise DataError(f"{path}:{lineno}: bad or repeated group {g}")
            seen.add(g)
            values[g] = float(parts[1])
    if len(seen) != group_count:
        raise DataError(f"{path}: {len(seen)} of {group_count} groups present")
    return values


def cmd_sample(args) -> int:
    cfg = _load_config(args)
    rules = _rules(cfg)
    db = gt_database.load_database(args.db)
    rule = rules[cfg.class_name]
    registry = clustering.build_registry(db, rule, cfg.class_name)
    if args.scores:
        values = load_scores_file(args.scores, registry.group_count)
    else:
        values = np.zeros(registry.group_count)
    state = sampler.CurriculumState(
        t=args.epoch, total_epochs=cfg.epochs, pacing=cfg.pacing,
        sigma=cfg.sigma, mode=cfg.mode,
    )
    epoch_plan = sampler.plan(values, registry.counts, state)
    rng = make_rng(cfg.seed)
    ids = sampler.draw(epoch_plan, registry, rng, args.count, replace=not args.no_replace)
    payload = {
        "seed": cfg.seed,
        "class": cfg.class_name,
        "epoch": args.epoch,
        "mode": cfg.mode,
        "ids": ids,
        "groups": [registry.group_of[i] for i in ids],
        "plan": {
            "mu": epoch_plan.mu,
            "rank": epoch_plan.rank,
            "order": epoch_plan.order.tolist(),
            "raw": epoch_plan.raw.tolist(),
            "probs": epoch_plan.probs.tolist(),
        },
    }
    _write_out(json.dumps(payload, sort_keys=True) + "\n", args.out)
    return 0


def cmd_weights(args) -> int:
    cfg = _load_config(args)
    loss_cfg = comloss.LossWeightConfig(
        alpha=cfg.alpha, beta=cfg.beta, height=cfg.height,
        tipping_epoch=cfg.tipping_epoch, total_epochs=cfg.epochs,
    )
    state = comloss.ThresholdState()
    stdin = args.stream if args.stream is not None else sys.stdin
    stdout = args.sink if args.sink is not None else sys.stdout
    for lineno, line in enumerate(stdin, 1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
            score = float(rec["score"])
            origin = rec["origin"]
            t = float(rec["t"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise DataError(f"stdin:{lineno}: bad record: {e}") from e
        if origin not in ("original", "augmented"):
            raise DataError(f"stdin:{lineno}: bad origin {origin!r}")
        if origin == "original":
            comloss.update_threshold(state, [score], loss_cfg.alpha)
        s_tilde = comloss.difficulty(score, state.tau)
        w = comloss.weight(s_tilde, t, loss_cfg)
        stdout.write(json.dumps({"s_tilde": s_tilde, "w": w}, sort_keys=True) + "\n")
        stdout.flush()
    return 0


def _harness_config(cfg: RunConfig) -> harness.HarnessConfig:
    rules = _rules(cfg)
    spec = harness.SyntheticSpec(
        class_name=cfg.class_name,
        rule=rules[cfg.class_name],
        objects_per_group=cfg.objects_per_group,
        distance_count_skew=cfg.distance_count_skew,
        occupancy_count_skew=cfg.occupancy_count_skew,
        frame_size=cfg.frame_size,
        points_per_voxel_near=cfg.points_per_voxel_near,
        background_points=cfg.background_points,
    )
    loss_cfg = comloss.LossWeightConfig(
        alpha=cfg.alpha, beta=cfg.beta, height=cfg.height,
        tipping_epoch=cfg.tipping_epoch, total_epochs=cfg.epochs,
    )
    composer_cfg = ComposerConfig(
        thresholds={
            "vehicle": cfg.vehicle_threshold,
            "pedestrian": cfg.pedestrian_threshold,
            "cyclist": cfg.cyclist_threshold,
        },
        max_attempts=cfg.max_attempts,
        random_yaw=cfg.random_yaw,
    )
    return harness.HarnessConfig(
        seed=cfg.seed, total_epochs=cfg.epochs, pacing=cfg.pacing, sigma=cfg.sigma,
        mode=cfg.mode, noise=cfg.noise, spec=spec, loss=loss_cfg,
        composer=composer_cfg, workers=cfg.workers,
    )


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    hcfg = _harness_config(cfg)
    if args.sweep_pacing or args.sweep_sigma or args.sweep_mode:
        rows = harness.sweep(
            hcfg,
            pacings=tuple(args.sweep_pacing or (cfg.pacing,)),
            sigmas=tuple(args.sweep_sigma or (cfg.sigma,)),
            modes=tuple(args.sweep_mode or (cfg.mode,)),
        )
        _write_out(harness.format_sweep_table(rows), args.out)
        return 0
    log = open(args.score_log, "w") if args.score_log else None
    try:
        report = harness.run_experiment(hcfg, score_log=log)
    finally:
        if log:
            log.close()
    _write_out(report.to_csv(), args.out)
    if args.plot:
        _plot_report(report, args.plot)
    return 0


def _plot_report(report, path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(report.epochs, report.easy, label="easy third", color="tab:green")
    ax.plot(report.epochs, report.medium, label="medium third", color="tab:orange")
    ax.plot(report.epochs, report.hard, label="hard third", color="tab:red")
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean sampling probability")
    ax.set_title(f"group sampling probability by difficulty third ({report.mode})")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def cmd_dump_config(args) -> int:
    cfg = _load_config(args)
    _write_out(dump_run_config(cfg), args.out)
    return 0


# --- parser ------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="run configuration file (INI)")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--epochs", type=int, help="total training epochs T")
    p.add_argument("--workers", type=int, help="worker threads (results identical for any count)")
    p.add_argument("--alpha", type=float, help="threshold momentum")
    p.add_argument("--beta", type=float, help="weighting curve shape")
    p.add_argument("--height", type=float, help="re-weighting amplitude H")
    p.add_argument("--tipping", type=float, help="tipping-point epoch")
    p.add_argument("--pacing", type=float, help="curriculum pacing speed")
    p.add_argument("--sigma", type=float, help="sampling curve width")
    p.add_argument("--mode", choices=sampler.MODES, help="sampling mode")
    p.add_argument("--class", dest="class_name", choices=gt_database.CLASS_NAMES,
                   help="object class")
    p.add_argument("--noise", type=float, help="detector-proxy noise scale")
    p.add_argument("--out", help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="comaug",
        description="curriculum-driven ground-truth augmentation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-db", help="build an object database from a frame manifest")
    p.add_argument("--manifest", required=True, help="JSON-lines frame manifest")
    p.add_argument("--provenance", default="", help="free-form source tag")
    _add_common(p)
    p.set_defaults(func=cmd_build_db)
    # --out is the database path here, required
    p.set_defaults(_out_required=True)

    p = sub.add_parser("cluster", help="group database objects and print group sizes")
    p.add_argument("--db", required=True, help="database file")
    p.add_argument("--histogram", action="store_true", help="print per-group counts")
    _add_common(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("sample", help="draw object ids from the curriculum sampler")
    p.add_argument("--db", required=True, help="database file")
    p.add_argument("--scores", help="per-group scores file (default: all zero)")
    p.add_argument("--epoch", type=float, required=True, help="current epoch t")
    p.add_argument("--count", "-k", type=int, required=True, help="number of draws")
    p.add_argument("--no-replace", action="store_true",
                   help="draw objects at most once (one frame's request)")
    _add_common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("weights", help="stream difficulty weights (JSONL on stdin/stdout)")
    _add_common(p)
    p.set_defaults(func=cmd_weights, stream=None, sink=None)

    p = sub.add_parser("simulate", help="run the synthetic closed-loop experiment")
    p.add_argument("--plot", help="also render the trend curves to this image")
    p.add_argument("--score-log", help="write per-epoch group scores/pool sizes here")
    p.add_argument("--sweep-pacing", type=float, nargs="*", help="sweep pacing values")
    p.add_argument("--sweep-sigma", type=float, nargs="*", help="sweep sigma values")
    p.add_argument("--sweep-mode", nargs="*", choices=sampler.MODES, help="sweep modes")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("dump-config", help="print the effective configuration")
    _add_common(p)
    p.set_defaults(func=cmd_dump_config)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "_out_required", False) and not args.out:
        print("error: --out is required for this command", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (gt_database.DatabaseError, DataError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
