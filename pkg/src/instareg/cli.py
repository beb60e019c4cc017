"""Command-line surface: synthesize scenes, register, evaluate, ablate.

Exit codes: 0 success, 2 usage error, 3 I/O or file-content error,
4 internal failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import itertools
import os
import sys
import time
from pathlib import Path

from . import __version__
from .errors import InvalidInput, RegistrationError
from .fileio import (
    dump_json,
    load_json,
    read_correspondences,
    read_ground_truth,
    read_ply,
    read_poses,
    write_correspondences,
    write_ground_truth,
    write_metrics,
    write_ply,
    write_poses,
)
from .geometry import cloud_resolution
from .metrics import HitCriteria, compute_metrics, match_hits
from .pipeline import PipelineConfig, register_instances
from .synthesis import MAX_INSTANCES, builtin_model, generate_correspondences, generate_scene

OUTPUT_DIR_ENV = "INSTAREG_OUT"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_INTERNAL = 4


class _UsageError(Exception):
    pass


def _default_out() -> str:
    return os.environ.get(OUTPUT_DIR_ENV, ".")


def _build_config(args) -> PipelineConfig:
    base = PipelineConfig.for_real_scans() if getattr(args, "preset", "synthetic") == "real" \
        else PipelineConfig()
    fields = {f.name for f in dataclasses.fields(PipelineConfig)}
    overrides = {}
    if getattr(args, "config", None):
        loaded = load_json(args.config)
        unknown = set(loaded) - fields
        if unknown:
            raise _UsageError(f"unknown config fields: {sorted(unknown)}")
        overrides.update(loaded)
    for flag, field in (("validation", "validation_mode"), ("solver", "solver_mode"),
                        ("seed_mode", "seed_mode"), ("seed", "rng_seed")):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[field] = value
    try:
        return dataclasses.replace(base, **overrides)
    except InvalidInput as exc:
        raise _UsageError(str(exc)) from exc


def _write_manifest(path: Path, command: str, cfg: PipelineConfig | None,
                    inputs: dict, outputs: dict, rng_seed: int | None,
                    wall_time_s: float) -> None:
    dump_json({
        "version": __version__,
        "command": command,
        "config": dataclasses.asdict(cfg) if cfg is not None else None,
        "inputs": {k: str(v) for k, v in inputs.items()},
        "outputs": {k: str(v) for k, v in outputs.items()},
        "rng_seed": rng_seed,
        "wall_time_s": wall_time_s,
    }, path)


def cmd_synth(args) -> int:
    if not 1 <= args.instances <= MAX_INSTANCES:
        raise _UsageError(f"--instances must be in [1, {MAX_INSTANCES}]")
    if not 0.0 <= args.outlier_ratio < 1.0:
        raise _UsageError("--outlier-ratio must be in [0, 1)")
    if args.inliers < 1:
        raise _UsageError("--inliers must be >= 1")
    if args.noise < 0:
        raise _UsageError("--noise must be >= 0")
    if args.clutter < 0:
        raise _UsageError("--clutter must be >= 0")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = read_ply(args.model) if args.model else builtin_model(args.model_points)
    gt = generate_scene(model, args.instances, args.clutter, args.seed)
    labeled = generate_correspondences(gt, args.inliers, args.outlier_ratio,
                                       args.noise, args.seed + 1)
    pr = cloud_resolution(gt.model)

    write_ply(out / "model.ply", gt.model)
    write_ply(out / "scene.ply", gt.scene)
    write_ground_truth(out / "gt.json", gt.poses,
                       {int(i): int(l) for i, l in
                        zip(labeled.corrs.ids, labeled.labels)}, pr)
    write_correspondences(out / "corrs.json", labeled.corrs)
    return EXIT_OK


def cmd_register(args) -> int:
    cfg = _build_config(args)
    model = read_ply(args.model)
    scene = read_ply(args.scene)
    corrs, ratios = read_correspondences(args.corrs)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    outcome = register_instances(corrs, model, scene, cfg, ratios=ratios)
    wall = time.perf_counter() - start

    poses_path = out / "poses.json"
    manifest_path = out / "manifest.json"
    write_poses(poses_path, outcome)
    _write_manifest(manifest_path, "register", cfg,
                    {"model": args.model, "scene": args.scene, "corrs": args.corrs},
                    {"poses": poses_path, "manifest": manifest_path},
                    cfg.rng_seed, wall)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    preds, _raw = read_poses(args.poses)
    gts, _labels, pr = read_ground_truth(args.gt)
    criteria = HitCriteria(rre_max_deg=args.rre_max, rte_max_pr=args.rte_max)
    hits = match_hits(preds, gts, criteria, pr)
    mean_time = 0.0
    manifest = Path(args.poses).with_name("manifest.json")
    if manifest.exists():
        mean_time = float(load_json(manifest).get("wall_time_s", 0.0))
    report = compute_metrics([(len(hits), len(gts), len(preds))], mean_time=mean_time)
    write_metrics(args.out, report)
    return EXIT_OK


def _grid_cells(grid: dict) -> list[tuple[str, dict]]:
    """Cross product of {field: [values]} as (config id, overrides) pairs."""
    if not grid:
        return []
    fields = {f.name for f in dataclasses.fields(PipelineConfig)}
    unknown = set(grid) - fields
    if unknown:
        raise _UsageError(f"unknown grid fields: {sorted(unknown)}")
    names = sorted(grid)
    cells = []
    for combo in itertools.product(*(grid[n] for n in names)):
        overrides = dict(zip(names, combo))
        cell_id = ";".join(f"{n}={overrides[n]}" for n in names)
        cells.append((cell_id, overrides))
    return sorted(cells)


def cmd_ablate(args) -> int:
    base = _build_config(args)
    grid = load_json(args.grid)
    if not isinstance(grid, dict):
        raise _UsageError("grid spec must be a JSON object of field -> value list")
    cells = _grid_cells(grid)

    fixture_dirs = sorted(
        d for d in Path(args.fixtures).iterdir()
        if d.is_dir() and (d / "corrs.json").exists()
    )
    if cells and not fixture_dirs:
        raise _UsageError(f"no fixture directories under {args.fixtures}")

    fixtures = []
    for d in fixture_dirs:
        model = read_ply(d / "model.ply")
        scene = read_ply(d / "scene.ply")
        corrs, ratios = read_correspondences(d / "corrs.json")
        gts, _labels, pr = read_ground_truth(d / "gt.json")
        fixtures.append((model, scene, corrs, ratios, gts, pr))

    criteria = HitCriteria()
    rows = []
    for cell_id, overrides in cells:
        try:
            cfg = dataclasses.replace(base, **overrides)
        except InvalidInput as exc:
            raise _UsageError(f"{cell_id}: {exc}") from exc
        per_pair = []
        times = []
        for model, scene, corrs, ratios, gts, pr in fixtures:
            outcome = register_instances(corrs, model, scene, cfg, ratios=ratios)
            preds = [r.transform for r in outcome.results]
            hits = match_hits(preds, gts, criteria, pr)
            per_pair.append((len(hits), len(gts), len(preds)))
            times.append(outcome.wall_time)
        report = compute_metrics(per_pair, mean_time=sum(times) / len(times))
        rows.append((cell_id, report))

    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["config_id", "mhr", "mhp", "mhf1", "mean_time_s"])
        for cell_id, report in rows:
            writer.writerow([cell_id, f"{report.mhr:.6f}", f"{report.mhp:.6f}",
                             f"{report.mhf1:.6f}", f"{report.mean_time:.6f}"])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="instareg",
        description="Multi-instance rigid registration from point correspondences.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scene with ground truth")
    p.add_argument("--model", help="source model PLY (default: built-in shape)")
    p.add_argument("--model-points", type=int, default=256,
                   help="built-in model size (default 256)")
    p.add_argument("--instances", type=int, required=True)
    p.add_argument("--inliers", type=int, default=20, help="inliers per instance")
    p.add_argument("--outlier-ratio", type=float, default=0.0)
    p.add_argument("--noise", type=float, default=0.5,
                   help="target-side noise sigma in resolution multiples")
    p.add_argument("--clutter", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=_default_out())
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("register", help="estimate instance poses")
    p.add_argument("--model", required=True)
    p.add_argument("--scene", required=True)
    p.add_argument("--corrs", required=True)
    p.add_argument("--out", default=_default_out())
    p.add_argument("--preset", choices=("synthetic", "real"), default="synthetic")
    p.add_argument("--config", help="JSON file of config field overrides")
    p.add_argument("--validation", choices=("global", "local", "none"))
    p.add_argument("--solver", choices=("guided", "ransac"))
    p.add_argument("--seed-mode", dest="seed_mode", choices=("game", "ratio"))
    p.add_argument("--seed", type=int, default=None, help="run RNG seed")
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("evaluate", help="score predicted poses against ground truth")
    p.add_argument("--poses", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--rre-max", type=float, default=15.0,
                   help="max rotation error in degrees")
    p.add_argument("--rte-max", type=float, default=10.0,
                   help="max translation error in resolution multiples")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="run a config grid over fixture scenes")
    p.add_argument("--fixtures", required=True,
                   help="directory of scene subdirectories")
    p.add_argument("--grid", required=True, help="JSON object: field -> value list")
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--preset", choices=("synthetic", "real"), default="synthetic")
    p.add_argument("--config", help="JSON file of base config overrides")
    p.set_defaults(func=cmd_ablate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, InvalidInput) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except RegistrationError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
