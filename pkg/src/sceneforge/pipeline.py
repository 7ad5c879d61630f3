"""End-to-end augmentation runs: fan out scenes, emit samples and scenes.

Each scene job owns a private random stream derived from
(global_seed, scene_id), so results do not depend on worker scheduling;
outputs are written in scene-id order regardless of completion order.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .errors import AugmentationFailedError
from .ingestion import AssetBank, AugmentConfig, BenchmarkSplit, CategoryTable
from .insertion import InsertionConfig, InsertionRecord, augment_scene
from .io import (
    load_asset_bank,
    read_benchmark_split,
    read_category_table,
    read_scene,
    sample_to_json_line,
    write_ply,
    write_scene,
)
from .prompts import PromptType, generate_samples
from .rng import derive_stream
from .scene import Scene


@dataclass
class RunConfig:
    """Everything a reproducible augment run needs."""

    global_seed: int
    inserts_per_scene: int
    scenes_dir: Path
    bank_path: Path
    table_path: Path
    split_path: Path
    out_samples: Path
    out_scenes_dir: Path | None = None
    prompt_mode: PromptType = PromptType.RELATIVE_LOCATION
    insertion: InsertionConfig = field(default_factory=InsertionConfig)
    augment: AugmentConfig | None = None
    workers: int | None = None  # None -> logical cores
    export_ply: bool = False

    def __post_init__(self):
        if self.inserts_per_scene < 1:
            raise ValueError("inserts_per_scene must be >= 1")


@dataclass
class SceneResult:
    scene_id: str
    sample_lines: list[str]
    insertions: int
    failed: bool = False
    error: str = ""


def augment_and_prompt(
    scene: Scene,
    bank: AssetBank,
    table: CategoryTable,
    split: BenchmarkSplit,
    cfg: RunConfig,
) -> tuple[Scene, list[InsertionRecord], list]:
    """Augment one scene and generate its grounding samples."""
    stream = derive_stream(cfg.global_seed, scene.scene_id)
    augmented, records = augment_scene(
        scene,
        bank,
        table,
        split,
        cfg.insertion,
        cfg.inserts_per_scene,
        stream,
        augment=cfg.augment,
    )
    samples = generate_samples(
        augmented, records, cfg.prompt_mode, split, stream
    )
    return augmented, records, samples


def _run_one(args: tuple[str, RunConfig]) -> SceneResult:
    scene_path, cfg = args
    scene, _ = read_scene(Path(scene_path))
    bank = load_asset_bank(cfg.bank_path)
    table = read_category_table(cfg.table_path)
    split = read_benchmark_split(cfg.split_path)
    try:
        augmented, records, samples = augment_and_prompt(scene, bank, table, split, cfg)
    except AugmentationFailedError as exc:
        return SceneResult(scene.scene_id, [], 0, failed=True, error=str(exc))
    if cfg.out_scenes_dir is not None:
        out = Path(cfg.out_scenes_dir) / f"{scene.scene_id}.json"
        write_scene(augmented, out, records)
        if cfg.export_ply:
            write_ply(
                Path(cfg.out_scenes_dir) / f"{scene.scene_id}.ply",
                augmented.cloud.xyz,
                augmented.cloud.colors,
            )
    lines = [sample_to_json_line(s) for s in samples]
    return SceneResult(scene.scene_id, lines, len(records))


def run_augment(cfg: RunConfig) -> dict:
    """Augment every scene in cfg.scenes_dir; returns a summary dict.

    Sample lines are concatenated into cfg.out_samples in scene-id order.
    """
    scene_paths = sorted(str(p) for p in Path(cfg.scenes_dir).glob("*.json"))
    if not scene_paths:
        raise FileNotFoundError(f"no scene documents in {cfg.scenes_dir}")
    jobs = [(p, cfg) for p in scene_paths]
    workers = cfg.workers if cfg.workers is not None else (os.cpu_count() or 1)
    if workers <= 1 or len(jobs) == 1:
        results = [_run_one(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, jobs))
    results.sort(key=lambda r: r.scene_id)

    out = Path(cfg.out_samples)
    out.parent.mkdir(parents=True, exist_ok=True)
    total_samples = 0
    with open(out, "w", encoding="utf-8") as fh:
        for result in results:
            for line in result.sample_lines:
                fh.write(line + "\n")
                total_samples += 1
    insertions = sum(r.insertions for r in results)
    requested = len(results) * cfg.inserts_per_scene
    return {
        "scenes": len(results),
        "requested_insertions": requested,
        "insertions": insertions,
        "placement_failures": requested - insertions,
        "samples": total_samples,
        "failed_scenes": sorted(r.scene_id for r in results if r.failed),
        "errors": [r.error for r in results if r.failed],
    }


def regenerate_prompts(
    scene_path: Path,
    mode: PromptType,
    split: BenchmarkSplit,
    seed: int = 0,
) -> list:
    """Re-run prompt generation for an already-augmented scene document."""
    scene, records = read_scene(Path(scene_path))
    stream = derive_stream(seed, scene.scene_id)
    return generate_samples(scene, records, mode, split, stream)
