"""Command-line surface: ingest, stats, augment, prompts, eval, loss."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .errors import SceneForgeError
from .evaluation import evaluate
from .ingestion import AssetBank, AugmentConfig, ObjectAsset, compute_category_stats
from .insertion import InsertionConfig
from .losses import (
    AlignmentBatch,
    BoxRegressionBatch,
    FeatureBatch,
    alignment_loss,
    contrastive_grad,
    contrastive_loss,
    localization_loss,
)
from .pipeline import RunConfig, regenerate_prompts, run_augment
from .prompts import PromptType
from .scene import PointCloud

_PROMPT_MODES = {
    "detection": PromptType.DETECTION,
    "absolute": PromptType.ABSOLUTE_LOCATION,
    "relative": PromptType.RELATIVE_LOCATION,
}


def _split_arg(value: str):
    """Accept a builtin split name or a path to a split file."""
    return io.load_benchmark_split(value)


def cmd_ingest(args) -> int:
    """Scan assets_dir/<source>/<category>/*.{ply,xyz} into a manifest."""
    root = Path(args.assets_dir)
    assets = []
    for path in sorted(root.rglob("*")):
        if path.suffix.lower() not in (".ply", ".xyz"):
            continue
        rel = path.relative_to(root)
        if len(rel.parts) < 3:
            print(f"skipping {rel}: expected <source>/<category>/<file>", file=sys.stderr)
            continue
        source, category = rel.parts[0], rel.parts[1]
        if path.suffix.lower() == ".ply":
            xyz, _ = io.read_ply(path)
        else:
            xyz = io.read_xyz(path)
        if args.up == "y":
            xyz = np.column_stack([xyz[:, 0], -xyz[:, 2], xyz[:, 1]])
        assets.append(
            ObjectAsset.from_cloud(
                asset_id=str(rel.with_suffix("")).replace("\\", "/"),
                category=category.replace("_", " "),
                source=source,
                cloud=PointCloud(xyz),
            )
        )
    if not assets:
        print("no .ply or .xyz assets found", file=sys.stderr)
        return 1
    bank = AssetBank.of(assets)
    io.write_asset_manifest(bank, Path(args.out), inline_points=not args.bin_payloads)
    print(f"ingested {len(assets)} assets from {len(bank.sources)} sources -> {args.out}")
    return 0


def cmd_stats(args) -> int:
    scenes = io.load_scenes(Path(args.scenes))
    split = _split_arg(args.split)
    table = compute_category_stats(scenes, split)
    io.write_category_table(table, Path(args.out))
    with_stats = sum(1 for e in table.entries.values() if e.has_stats)
    print(f"computed stats for {with_stats}/{len(table.entries)} categories -> {args.out}")
    return 0


def cmd_augment(args) -> int:
    augment = None
    if args.augment:
        augment = AugmentConfig(
            yaw_range=args.yaw_range,
            drop_ratio=args.drop_ratio,
            jitter_sigma=args.jitter_sigma,
        )
    cfg = RunConfig(
        global_seed=args.seed,
        inserts_per_scene=args.k,
        scenes_dir=Path(args.scenes),
        bank_path=Path(args.bank),
        table_path=Path(args.table),
        split_path=Path(args.split),
        out_samples=Path(args.out_samples),
        out_scenes_dir=Path(args.out_scenes) if args.out_scenes else None,
        prompt_mode=_PROMPT_MODES[args.prompt_mode],
        insertion=InsertionConfig(
            region_half_extent=args.region,
            max_tries=args.max_tries,
            cell_size=args.cell_size,
            random_heading=not args.fixed_heading,
        ),
        augment=augment,
        workers=args.workers,
        export_ply=args.ply,
    )
    summary = run_augment(cfg)
    print(json.dumps(summary, sort_keys=True))
    if summary["samples"] == 0:
        print("error: zero samples produced", file=sys.stderr)
        return 1
    return 0


def cmd_prompts(args) -> int:
    split = _split_arg(args.split)
    samples = regenerate_prompts(
        Path(args.scene), _PROMPT_MODES[args.mode], split, seed=args.seed
    )
    lines = [io.sample_to_json_line(s) for s in samples]
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text("\n".join(lines) + ("\n" if lines else ""))
        print(f"wrote {len(lines)} samples -> {args.out}")
    else:
        for line in lines:
            print(line)
    return 0


def cmd_eval(args) -> int:
    dets = io.read_detections(Path(args.pred))
    gts = io.read_ground_truth(Path(args.gt))
    split = _split_arg(args.split)
    report = evaluate(
        dets,
        gts,
        split,
        iou_threshold=args.iou,
        iou_mode=args.iou_mode,
        interpolation=args.interp,
    )
    doc = io.report_to_doc(report)
    if args.out:
        io.write_report(report, Path(args.out))
    print(json.dumps(doc, sort_keys=True))
    return 0


def cmd_loss(args) -> int:
    path = Path(args.batch)
    doc = io._load_json(path)
    printed = False
    if "contrastive" in doc:
        body = doc["contrastive"]
        tau = args.tau if args.tau is not None else body.get("temperature", 0.07)
        batch = FeatureBatch(
            features=np.asarray(body["features"], dtype=float),
            labels=tuple(body["labels"]),
            sources=tuple(body.get("sources", [""] * len(body["labels"]))),
            temperature=float(tau),
        )
        print(f"contrastive_loss {contrastive_loss(batch):.6f}")
        if args.grad_check:
            grad = contrastive_grad(batch)
            fd = _finite_difference_grad(batch)
            denom = np.maximum(np.maximum(np.abs(grad), np.abs(fd)), 1e-3)
            err = float((np.abs(grad - fd) / denom).max())
            print(f"contrastive_grad_max_rel_err {err:.3e}")
        printed = True
    if "alignment" in doc:
        body = doc["alignment"]
        batch = AlignmentBatch(
            object_features=np.asarray(body["object_features"], dtype=float),
            text_features=np.asarray(body["text_features"], dtype=float),
            target=np.asarray(body["target"], dtype=float),
        )
        print(f"alignment_loss {alignment_loss(batch):.6f}")
        printed = True
    if "localization" in doc:
        body = doc["localization"]
        batch = BoxRegressionBatch(
            predicted=tuple(
                io.box_from_doc(b, path, "localization.") for b in body["predicted"]
            ),
            ground_truth=tuple(
                io.box_from_doc(b, path, "localization.") for b in body["ground_truth"]
            ),
        )
        weights = tuple(body.get("weights", (args.lambda_l1, args.lambda_giou)))
        print(f"localization_loss {localization_loss(batch, weights):.6f}")
        printed = True
    if not printed:
        print("batch file has no 'contrastive', 'alignment', or 'localization' section", file=sys.stderr)
        return 1
    return 0


def _finite_difference_grad(batch: FeatureBatch, h: float = 1e-5) -> np.ndarray:
    base = np.array(batch.features)
    out = np.zeros_like(base)
    for i in range(base.shape[0]):
        for j in range(base.shape[1]):
            plus = base.copy()
            plus[i, j] += h
            minus = base.copy()
            minus[i, j] -= h
            lp = contrastive_loss(
                FeatureBatch(plus, batch.labels, batch.sources, batch.temperature)
            )
            lm = contrastive_loss(
                FeatureBatch(minus, batch.labels, batch.sources, batch.temperature)
            )
            out[i, j] = (lp - lm) / (2 * h)
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sceneforge",
        description="Scene augmentation by object insertion, grounding prompt "
        "generation, and 3D detection loss/metric numerics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="build an asset manifest from a directory tree")
    p.add_argument("assets_dir")
    p.add_argument("out")
    p.add_argument("--up", choices=("z", "y"), default="z")
    p.add_argument("--bin-payloads", action="store_true", help="write .bin sidecars instead of inline points")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stats", help="compute per-category statistics from scenes")
    p.add_argument("--scenes", required=True)
    p.add_argument("--split", required=True, help="split file or builtin name")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("augment", help="insert objects and emit grounding samples")
    p.add_argument("--scenes", required=True)
    p.add_argument("--bank", required=True)
    p.add_argument("--table", required=True)
    p.add_argument("--split", required=True, help="split file path")
    p.add_argument("--out-samples", required=True)
    p.add_argument("--out-scenes", default=None)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--k", type=int, default=1, help="insertions per scene")
    p.add_argument("--region", type=float, default=1.0, help="placement region half extent (m)")
    p.add_argument("--cell-size", type=float, default=0.05)
    p.add_argument("--max-tries", type=int, default=32)
    p.add_argument("--prompt-mode", choices=sorted(_PROMPT_MODES), default="relative")
    p.add_argument("--fixed-heading", action="store_true", help="disable random yaw for inserted objects")
    p.add_argument("--augment", action="store_true", help="apply point augmentation to targets")
    p.add_argument("--yaw-range", type=float, default=3.141592653589793)
    p.add_argument("--drop-ratio", type=float, default=0.1)
    p.add_argument("--jitter-sigma", type=float, default=0.005)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--ply", action="store_true", help="also export augmented scenes as PLY")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("prompts", help="regenerate prompts for an augmented scene")
    p.add_argument("--scene", required=True)
    p.add_argument("--mode", choices=sorted(_PROMPT_MODES), required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_prompts)

    p = sub.add_parser("eval", help="evaluate detections against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--iou", type=float, default=0.25)
    p.add_argument("--iou-mode", choices=("aabb", "oriented"), default="aabb")
    p.add_argument("--interp", choices=("all", "eleven"), default="all")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("loss", help="evaluate losses on a numeric batch file")
    p.add_argument("--batch", required=True)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--grad-check", action="store_true")
    p.add_argument("--lambda-l1", type=float, default=5.0)
    p.add_argument("--lambda-giou", type=float, default=2.0)
    p.set_defaults(func=cmd_loss)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SceneForgeError as exc:
        report = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(report), file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(json.dumps({"error": "FileNotFound", "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
