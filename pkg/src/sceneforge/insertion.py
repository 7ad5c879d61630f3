"""Anchor-guided object insertion with height-map placement.

A seen-category object in the scene anchors each insertion: candidate
centroids are sampled in a rectangular region around it, the support
surface under the target footprint is read from a z-axis height map of
the region, and candidates are kept only if the support role rule holds
and the target box collides with nothing it is not resting on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AugmentationFailedError,
    InvalidConfigError,
    NoAnchorAvailableError,
    NoTargetAvailableError,
    PlacementFailedError,
)
from .geometry import Box3, bev_intersection_area, bounds_from_points, intersection_volume, rot2d
from .ingestion import (
    AssetBank,
    AugmentConfig,
    BenchmarkSplit,
    CategorySplit,
    CategoryTable,
    ObjectAsset,
    augment_points,
    normalize_and_resample,
)
from .rng import RandomStream
from .scene import ObjectAnnotation, PointCloud, Scene, SupportRole

# A placement's box bottom must sit on its support surface within this.
SUPPORT_EPS = 0.01


@dataclass(frozen=True)
class HeightMap:
    """Per-cell maximum point height over a planar grid.

    cells[ix, iy] covers x in [origin_x + ix*cell, origin_x + (ix+1)*cell)
    and similarly for y; cells without points hold floor_z.
    """

    origin: tuple[float, float]
    cell_size: float
    width: int
    depth: int
    cells: np.ndarray
    floor_z: float

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=float)
        if cells.shape != (self.width, self.depth):
            raise ValueError("cells shape does not match width/depth")
        if not np.isfinite(cells).all():
            raise ValueError("height map contains non-finite cells")
        if cells.size and cells.min() < self.floor_z - 1e-9:
            raise ValueError("height map cell below floor")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)

    def cell_index(self, x: float, y: float) -> tuple[int, int]:
        ix = int(math.floor((x - self.origin[0]) / self.cell_size))
        iy = int(math.floor((y - self.origin[1]) / self.cell_size))
        return ix, iy

    def max_under_footprint(
        self, cx: float, cy: float, sx: float, sy: float, heading: float
    ) -> float:
        """Highest cell under a rotated rectangular footprint.

        Cells are selected by center-in-footprint; if the footprint is
        smaller than one cell the cells under its axis-aligned bounds are
        used instead. Ranges are clamped to the grid.
        """
        c, s = abs(math.cos(heading)), abs(math.sin(heading))
        hx = (sx * c + sy * s) / 2.0
        hy = (sx * s + sy * c) / 2.0
        i0 = max(0, int(math.floor((cx - hx - self.origin[0]) / self.cell_size)))
        i1 = min(self.width - 1, int(math.floor((cx + hx - self.origin[0]) / self.cell_size)))
        j0 = max(0, int(math.floor((cy - hy - self.origin[1]) / self.cell_size)))
        j1 = min(self.depth - 1, int(math.floor((cy + hy - self.origin[1]) / self.cell_size)))
        if i1 < i0 or j1 < j0:
            return self.floor_z
        ii, jj = np.meshgrid(
            np.arange(i0, i1 + 1), np.arange(j0, j1 + 1), indexing="ij"
        )
        centers_x = self.origin[0] + (ii + 0.5) * self.cell_size - cx
        centers_y = self.origin[1] + (jj + 0.5) * self.cell_size - cy
        u = centers_x * math.cos(heading) + centers_y * math.sin(heading)
        v = -centers_x * math.sin(heading) + centers_y * math.cos(heading)
        inside = (np.abs(u) <= sx / 2.0) & (np.abs(v) <= sy / 2.0)
        block = self.cells[i0 : i1 + 1, j0 : j1 + 1]
        if inside.any():
            return float(block[inside].max())
        return float(block.max())


@dataclass(frozen=True)
class Placement:
    """Where an object goes: box-center position, yaw, and what supports it.

    supported_by is None for the ground plane, otherwise the instance id
    of the supporting object.
    """

    centroid: tuple[float, float, float]
    heading: float
    support_surface_z: float
    supported_by: str | None = None


@dataclass(frozen=True)
class InsertionConfig:
    region_half_extent: float = 1.0
    max_tries: int = 32
    collision_margin: float = 0.01
    allow_on_ground_supportee: bool = True
    random_heading: bool = True
    cell_size: float = 0.05
    retry_budget: int = 4

    def __post_init__(self):
        if self.region_half_extent <= 0 or self.cell_size <= 0:
            raise InvalidConfigError("region_half_extent and cell_size must be > 0")
        if self.max_tries < 1 or self.retry_budget < 1:
            raise InvalidConfigError("max_tries and retry_budget must be >= 1")
        if self.collision_margin < 0:
            raise InvalidConfigError("collision_margin must be >= 0")


@dataclass(frozen=True)
class ValidityReport:
    valid: bool
    reason: str | None = None  # "role_violation" | "collision" | "support_violation"
    detail: str = ""


@dataclass(frozen=True)
class InsertionRecord:
    """Everything needed to reproduce or audit one insertion."""

    anchor_id: str
    annotation: ObjectAnnotation
    placement: Placement
    asset_id: str
    category_split: CategorySplit
    point_range: tuple[int, int]


def select_anchor(
    scene: Scene, split: BenchmarkSplit, rng: RandomStream
) -> ObjectAnnotation:
    """Uniformly random seen-category annotation from the scene."""
    candidates = [o for o in scene.objects if split.is_seen(o.category)]
    if not candidates:
        raise NoAnchorAvailableError(
            f"scene {scene.scene_id!r} has no seen-category object"
        )
    return candidates[int(rng.integers(len(candidates)))]


def select_target(
    bank: AssetBank, anchor_category: str, rng: RandomStream
) -> ObjectAsset:
    """Uniformly random bank asset outside the anchor's category."""
    eligible = [a for a in bank.assets if a.category != anchor_category]
    if not eligible:
        raise NoTargetAvailableError(
            f"bank has no asset outside category {anchor_category!r}"
        )
    return eligible[int(rng.integers(len(eligible)))]


def build_height_map(
    scene: Scene,
    region_center: tuple[float, float],
    half_extent: float,
    cell_size: float = 0.05,
) -> HeightMap:
    """Max point height per cell over a square region; empty cells = floor_z."""
    if half_extent <= 0:
        raise InvalidConfigError("half_extent must be > 0")
    n = max(1, int(math.ceil(2.0 * half_extent / cell_size)))
    origin = (
        region_center[0] - n * cell_size / 2.0,
        region_center[1] - n * cell_size / 2.0,
    )
    cells = np.full((n, n), scene.floor_z, dtype=float)
    xyz = scene.cloud.xyz
    ix = np.floor((xyz[:, 0] - origin[0]) / cell_size).astype(np.int64)
    iy = np.floor((xyz[:, 1] - origin[1]) / cell_size).astype(np.int64)
    ok = (ix >= 0) & (ix < n) & (iy >= 0) & (iy < n)
    np.maximum.at(cells, (ix[ok], iy[ok]), xyz[ok, 2])
    return HeightMap(origin, cell_size, n, n, cells, scene.floor_z)


def check_physical_validity(
    target_role: SupportRole,
    anchor_role: SupportRole,
    placement: Placement,
    scene: Scene,
    target_box: Box3,
    margin: float,
    *,
    allow_on_ground_supportee: bool = True,
    support_eps: float = SUPPORT_EPS,
) -> ValidityReport:
    """Role rule plus collision rule for a candidate placement.

    Standers and supporters must rest on the ground plane; supportees must
    rest on a supporter instance (or the ground, when allowed). The target
    box must have zero oriented intersection volume, within `margin`, with
    every existing object box except its own supporter.
    """
    del anchor_role  # only the target's support rule is physically binding

    if abs(target_box.bottom_z - placement.support_surface_z) > support_eps:
        return ValidityReport(
            False,
            "support_violation",
            f"box bottom {target_box.bottom_z:.3f} off surface "
            f"{placement.support_surface_z:.3f}",
        )

    supporter = placement.supported_by
    if target_role in (SupportRole.STANDER, SupportRole.SUPPORTER):
        if supporter is not None:
            return ValidityReport(
                False, "role_violation", f"{target_role.value} placed on {supporter!r}"
            )
        if abs(placement.support_surface_z - scene.floor_z) > support_eps:
            return ValidityReport(
                False, "role_violation", f"{target_role.value} not on the ground plane"
            )
    else:  # SUPPORTEE
        if supporter is None:
            if not allow_on_ground_supportee:
                return ValidityReport(
                    False, "role_violation", "supportee on ground is disabled"
                )
            if abs(placement.support_surface_z - scene.floor_z) > support_eps:
                return ValidityReport(
                    False, "role_violation", "supportee not on the ground plane"
                )
        else:
            try:
                host = scene.object_by_id(supporter)
            except Exception:
                return ValidityReport(
                    False, "support_violation", f"unknown supporter {supporter!r}"
                )
            if host.role is not SupportRole.SUPPORTER:
                return ValidityReport(
                    False,
                    "role_violation",
                    f"supportee resting on {host.role.value} {supporter!r}",
                )
            if abs(host.box.top_z - placement.support_surface_z) > support_eps:
                return ValidityReport(
                    False,
                    "support_violation",
                    f"supporter top {host.box.top_z:.3f} off surface",
                )

    for obj in scene.objects:
        if obj.instance_id == supporter:
            continue
        overlap = intersection_volume(target_box, obj.box)
        if overlap > margin:
            return ValidityReport(
                False,
                "collision",
                f"overlap {overlap:.4f} m^3 with {obj.instance_id!r}",
            )
    return ValidityReport(True)


def _resolve_supporter(
    scene: Scene,
    surface_z: float,
    footprint: Box3,
    support_eps: float,
) -> tuple[str | None, bool]:
    """Map a support surface height to the ground plane or an object top.

    Returns (supporter_id_or_None, resolved). Unresolvable surfaces (wall
    points, partial overhangs) fail the candidate.
    """
    if abs(surface_z - scene.floor_z) <= support_eps:
        return None, True
    best_id = None
    best_overlap = 0.0
    for obj in scene.objects:
        if abs(obj.box.top_z - surface_z) > support_eps:
            continue
        overlap = bev_intersection_area(footprint, obj.box)
        if overlap > best_overlap:
            best_overlap = overlap
            best_id = obj.instance_id
    if best_id is None:
        return None, False
    return best_id, True


def sample_placement(
    scene: Scene,
    anchor: ObjectAnnotation,
    target: ObjectAsset,
    target_role: SupportRole,
    cfg: InsertionConfig,
    rng: RandomStream,
) -> Placement:
    """Sample candidate centroids near the anchor until one is valid.

    Draw order per try: x, y, then heading (only when random_heading).
    Raises PlacementFailedError after max_tries rejected candidates.
    """
    ax, ay = anchor.box.center[0], anchor.box.center[1]
    extent = target.canonical_extent
    footprint_radius = math.hypot(extent[0], extent[1]) / 2.0
    hmap = build_height_map(
        scene,
        (ax, ay),
        cfg.region_half_extent + footprint_radius + cfg.cell_size,
        cfg.cell_size,
    )
    he = cfg.region_half_extent
    for _ in range(cfg.max_tries):
        x = ax + float(rng.uniform(-he, he))
        y = ay + float(rng.uniform(-he, he))
        heading = float(rng.uniform(-math.pi, math.pi)) if cfg.random_heading else 0.0
        surface = hmap.max_under_footprint(x, y, extent[0], extent[1], heading)
        z = surface + extent[2] / 2.0
        box = Box3((x, y, z), extent, heading)
        supporter, resolved = _resolve_supporter(scene, surface, box, SUPPORT_EPS)
        if not resolved:
            continue
        placement = Placement((x, y, z), heading, surface, supporter)
        report = check_physical_validity(
            target_role,
            anchor.role,
            placement,
            scene,
            box,
            cfg.collision_margin,
            allow_on_ground_supportee=cfg.allow_on_ground_supportee,
        )
        if report.valid:
            return placement
    raise PlacementFailedError(
        f"no valid placement for {target.asset_id!r} near {anchor.instance_id!r} "
        f"after {cfg.max_tries} tries"
    )


def _fresh_instance_id(scene: Scene) -> str:
    existing = {o.instance_id for o in scene.objects}
    n = sum(1 for i in existing if i.startswith("ins-"))
    candidate = f"ins-{n:04d}"
    while candidate in existing:
        n += 1
        candidate = f"ins-{n:04d}"
    return candidate


def insert_object(
    scene: Scene,
    target: ObjectAsset,
    placement: Placement,
    new_category_split: CategorySplit,
    *,
    role: SupportRole = SupportRole.STANDER,
    instance_id: str | None = None,
) -> tuple[Scene, ObjectAnnotation]:
    """Compose the target into the scene; returns a new scene value.

    The asset cloud is rotated by the placement heading about its bounds
    center, translated so that center lands on placement.centroid, and
    appended to the scene cloud. The new annotation's box is the tight
    bounds of the transformed points at the placement heading.
    """
    del new_category_split  # recorded by the caller; annotations carry no split
    src = target.cloud.xyz
    box_center = np.array(bounds_from_points(src, 0.0).center)
    local = src - box_center
    xy = local[:, :2] @ rot2d(placement.heading).T
    moved = np.column_stack([xy, local[:, 2]]) + np.array(placement.centroid)

    colors = target.cloud.colors
    if scene.cloud.colors is not None and colors is None:
        colors = np.full((len(src), 3), 0.5)
    elif scene.cloud.colors is None:
        colors = None
    new_cloud = PointCloud.concatenate(scene.cloud, PointCloud(moved, colors))

    box = bounds_from_points(moved, placement.heading)
    annotation = ObjectAnnotation(
        instance_id=instance_id or _fresh_instance_id(scene),
        category=target.category,
        box=box,
        role=role,
        source=target.source,
    )
    corners = np.vstack(
        [scene.bounds.corners(), box.corners(), moved.min(axis=0)[None], moved.max(axis=0)[None]]
    )
    bounds = bounds_from_points(corners, 0.0)
    new_scene = Scene(
        scene.scene_id,
        new_cloud,
        scene.floor_z,
        scene.objects + (annotation,),
        bounds,
    )
    return new_scene, annotation


def augment_scene(
    scene: Scene,
    bank: AssetBank,
    table: CategoryTable,
    split: BenchmarkSplit,
    cfg: InsertionConfig,
    k_inserts: int,
    rng: RandomStream,
    *,
    augment: AugmentConfig | None = None,
) -> tuple[Scene, list[InsertionRecord]]:
    """Insert up to k_inserts objects, retrying failed placements.

    Each insertion slot draws a fresh anchor/target pair up to
    cfg.retry_budget times. Raises AugmentationFailedError if no slot
    succeeds. Deterministic given the rng state.
    """
    if k_inserts < 1:
        raise InvalidConfigError("k_inserts must be >= 1")
    records: list[InsertionRecord] = []
    current = scene
    selection_exhausted = False
    for _ in range(k_inserts):
        if selection_exhausted:
            break
        for _ in range(cfg.retry_budget):
            try:
                anchor = select_anchor(current, split, rng)
            except NoAnchorAvailableError:
                selection_exhausted = True
                break
            try:
                raw = select_target(bank, anchor.category, rng)
            except NoTargetAvailableError:
                continue  # a different anchor may have eligible targets
            target = normalize_and_resample(raw, table, rng=rng)
            if augment is not None:
                target = target.with_cloud(augment_points(target.cloud, rng, augment))
            role = table.role_of(target.category)
            tag = CategorySplit.SEEN if split.is_seen(target.category) else CategorySplit.UNSEEN
            try:
                placement = sample_placement(current, anchor, target, role, cfg, rng)
            except PlacementFailedError:
                continue
            n_before = len(current.cloud)
            current, annotation = insert_object(
                current, target, placement, tag, role=role
            )
            records.append(
                InsertionRecord(
                    anchor_id=anchor.instance_id,
                    annotation=annotation,
                    placement=placement,
                    asset_id=raw.asset_id,
                    category_split=tag,
                    point_range=(n_before, len(current.cloud)),
                )
            )
            break
    if not records:
        raise AugmentationFailedError(
            f"scene {scene.scene_id!r}: zero successful insertions"
        )
    return current, records
