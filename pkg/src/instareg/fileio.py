"""On-disk formats: ASCII PLY clouds and JSON records.

JSON is always dumped with sorted keys, two-space indent, and a trailing
newline; floats go through repr, so serialize -> parse -> serialize is
byte-identical.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .correspondences import CorrespondenceSet
from .errors import InvalidInput
from .geometry import RigidTransform, as_cloud


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def load_json(path):
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path}: not valid JSON ({exc})") from exc


def write_ply(path, points) -> None:
    pts = as_cloud(points)
    lines = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(pts)}",
        "property double x",
        "property double y",
        "property double z",
        "end_header",
    ]
    for x, y, z in pts:
        lines.append(f"{float(x)!r} {float(y)!r} {float(z)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_ply(path) -> np.ndarray:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].strip() != "ply":
        raise InvalidInput(f"{path}: missing 'ply' magic")
    count = None
    body_at = None
    for i, line in enumerate(lines[1:], start=1):
        tok = line.split()
        if not tok or tok[0] == "comment":
            continue
        if tok[0] == "format" and tok[1] != "ascii":
            raise InvalidInput(f"{path}: only ascii PLY is supported")
        if tok[0] == "element":
            if tok[1] != "vertex":
                raise InvalidInput(f"{path}: unsupported element '{tok[1]}'")
            count = int(tok[2])
        if tok[0] == "end_header":
            body_at = i + 1
            break
    if count is None or body_at is None:
        raise InvalidInput(f"{path}: malformed PLY header")
    rows = []
    for line in lines[body_at:body_at + count]:
        vals = line.split()
        if len(vals) < 3:
            raise InvalidInput(f"{path}: short vertex row '{line}'")
        rows.append([float(v) for v in vals[:3]])
    if len(rows) != count:
        raise InvalidInput(f"{path}: expected {count} vertices, found {len(rows)}")
    return as_cloud(np.asarray(rows, dtype=np.float64))


def write_correspondences(path, corrs: CorrespondenceSet,
                          ratios: dict[int, float] | None = None) -> None:
    pairs = []
    for c in corrs:
        entry = {
            "id": int(c.id),
            "src": [float(v) for v in c.src],
            "dst": [float(v) for v in c.dst],
        }
        if ratios is not None and c.id in ratios:
            entry["nnsr"] = float(ratios[c.id])
        pairs.append(entry)
    dump_json({"pairs": pairs}, path)


def read_correspondences(path) -> tuple[CorrespondenceSet, dict[int, float] | None]:
    data = load_json(path)
    try:
        pairs = data["pairs"]
        src = np.asarray([p["src"] for p in pairs], dtype=np.float64)
        dst = np.asarray([p["dst"] for p in pairs], dtype=np.float64)
        ids = np.asarray([p["id"] for p in pairs], dtype=np.int64)
    except (KeyError, TypeError) as exc:
        raise InvalidInput(f"{path}: malformed correspondence file ({exc})") from exc
    ratios = {int(p["id"]): float(p["nnsr"]) for p in pairs if "nnsr" in p}
    return CorrespondenceSet(src, dst, ids), (ratios or None)


def _transform_to_json(t: RigidTransform) -> dict:
    return {
        "rotation": [[float(v) for v in row] for row in t.rotation],
        "translation": [float(v) for v in t.translation],
    }


def _transform_from_json(obj) -> RigidTransform:
    return RigidTransform(np.asarray(obj["rotation"], dtype=np.float64),
                          np.asarray(obj["translation"], dtype=np.float64))


def write_ground_truth(path, poses: list[RigidTransform], labels, pr: float) -> None:
    dump_json({
        "pr": float(pr),
        "poses": [_transform_to_json(p) for p in poses],
        "labels": {str(i): int(v) for i, v in labels.items()},
    }, path)


def read_ground_truth(path) -> tuple[list[RigidTransform], dict[int, int], float]:
    data = load_json(path)
    try:
        poses = [_transform_from_json(p) for p in data["poses"]]
        labels = {int(k): int(v) for k, v in data.get("labels", {}).items()}
        pr = float(data["pr"])
    except (KeyError, TypeError) as exc:
        raise InvalidInput(f"{path}: malformed ground-truth file ({exc})") from exc
    return poses, labels, pr


def write_poses(path, outcome) -> None:
    """Accepted poses plus deterministic run counters (no wall time here)."""
    dump_json({
        "poses": [
            {
                **_transform_to_json(r.transform),
                "overlap": float(r.overlap),
                "mae": float(r.mae),
                "iteration": int(r.iteration),
            }
            for r in outcome.results
        ],
        "iterations_run": int(outcome.iterations_run),
        "rejected_count": len(outcome.rejected),
    }, path)


def read_poses(path) -> tuple[list[RigidTransform], dict]:
    data = load_json(path)
    try:
        transforms = [_transform_from_json(p) for p in data["poses"]]
    except (KeyError, TypeError) as exc:
        raise InvalidInput(f"{path}: malformed pose file ({exc})") from exc
    return transforms, data


def write_metrics(path, report) -> None:
    dump_json({
        "mhr": report.mhr,
        "mhp": report.mhp,
        "mhf1": report.mhf1,
        "per_pair": [
            {"hits": h, "gt_count": g, "pred_count": p}
            for h, g, p in report.per_pair
        ],
        "mean_time": report.mean_time,
    }, path)
