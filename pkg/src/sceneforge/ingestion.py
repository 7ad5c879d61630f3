"""Asset banks, category statistics, and object normalization/resampling.

Inserted objects come from external object banks whose point clouds have
different densities and scales than the host scenes. Before placement,
each target object is rescaled to the average size of its (similar) seen
category and resampled to the average in-box point count observed in the
scene data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InvalidConfigError, MissingCategoryStatsError
from .geometry import Box3, bounds_from_points, rot2d
from .rng import RandomStream
from .scene import PointCloud, Scene, SupportRole

# Fallback resampling budget when a category has no statistics: clouds
# larger than this are downsampled, smaller ones are kept as-is.
DEFAULT_POINT_BUDGET = 1024
# Radius of the jitter ball applied to duplicated points when upsampling.
UPSAMPLE_JITTER_RADIUS = 0.005


class CategorySplit(Enum):
    SEEN = "seen"
    UNSEEN = "unseen"


@dataclass(frozen=True)
class ObjectAsset:
    """A bank object in canonical pose: +z up, centroid at origin, heading 0."""

    asset_id: str
    category: str
    source: str
    cloud: PointCloud
    canonical_extent: tuple[float, float, float]

    def __post_init__(self):
        if not self.asset_id or not self.category:
            raise ValueError("asset_id and category must be non-empty")
        if len(self.cloud) == 0:
            raise ValueError(f"asset {self.asset_id!r} has an empty cloud")
        extent = bounds_from_points(self.cloud, 0.0).size
        if not np.allclose(self.canonical_extent, extent, atol=1e-6):
            raise ValueError(
                f"asset {self.asset_id!r}: canonical_extent {self.canonical_extent} "
                f"does not match cloud bounds {extent}"
            )

    @classmethod
    def from_cloud(
        cls, asset_id: str, category: str, source: str, cloud: PointCloud
    ) -> "ObjectAsset":
        """Canonicalize a raw cloud (centroid to origin) and wrap it."""
        centered = cloud.translated(-cloud.centroid())
        extent = bounds_from_points(centered, 0.0).size
        return cls(asset_id, category, source, centered, extent)

    def with_cloud(self, cloud: PointCloud) -> "ObjectAsset":
        """Same identity, new (re-canonicalized) geometry."""
        return ObjectAsset.from_cloud(self.asset_id, self.category, self.source, cloud)


@dataclass(frozen=True)
class AssetBank:
    """An indexed collection of object assets from one or more sources."""

    assets: tuple[ObjectAsset, ...]
    by_category: Mapping[str, tuple[str, ...]]

    def __post_init__(self):
        if not self.assets:
            raise ValueError("asset bank must contain at least one asset")
        ids = [a.asset_id for a in self.assets]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate asset ids in bank")
        known = set(ids)
        for category, members in self.by_category.items():
            for asset_id in members:
                if asset_id not in known:
                    raise ValueError(
                        f"index entry {category!r} -> {asset_id!r} does not resolve"
                    )

    @classmethod
    def of(cls, assets: Iterable[ObjectAsset]) -> "AssetBank":
        assets = tuple(assets)
        index: dict[str, list[str]] = {}
        for a in assets:
            index.setdefault(a.category, []).append(a.asset_id)
        return cls(assets, {k: tuple(v) for k, v in index.items()})

    @property
    def sources(self) -> frozenset[str]:
        return frozenset(a.source for a in self.assets)

    def get(self, asset_id: str) -> ObjectAsset:
        for a in self.assets:
            if a.asset_id == asset_id:
                return a
        raise KeyError(asset_id)


@dataclass(frozen=True)
class CategoryEntry:
    split: CategorySplit
    role: SupportRole
    similar_seen_category: str | None = None
    avg_size: tuple[float, float, float] | None = None
    avg_point_count: int | None = None

    def __post_init__(self):
        if self.avg_size is not None:
            if any(s <= 0 or not math.isfinite(s) for s in self.avg_size):
                raise ValueError(f"avg_size must be positive, got {self.avg_size}")
        if self.avg_point_count is not None and self.avg_point_count < 1:
            raise ValueError("avg_point_count must be >= 1")

    @property
    def has_stats(self) -> bool:
        return self.avg_size is not None and self.avg_point_count is not None


@dataclass(frozen=True)
class CategoryTable:
    """Per-category split/role/statistics lookup."""

    entries: Mapping[str, CategoryEntry]

    def __post_init__(self):
        for cat, entry in self.entries.items():
            similar = entry.similar_seen_category
            if similar is None:
                continue
            target = self.entries.get(similar)
            if target is None:
                raise ValueError(f"{cat}: similar category {similar!r} not in table")
            if target.split is not CategorySplit.SEEN:
                raise ValueError(f"{cat}: similar category {similar!r} is not seen")

    def get(self, category: str) -> CategoryEntry | None:
        return self.entries.get(category)

    def role_of(self, category: str, default: SupportRole = SupportRole.STANDER) -> SupportRole:
        entry = self.entries.get(category)
        return entry.role if entry is not None else default

    def stats_for(self, category: str) -> tuple[np.ndarray, int] | None:
        """Statistics for a category, following its similar-seen link."""
        entry = self.entries.get(category)
        if entry is None:
            return None
        if entry.has_stats:
            return np.array(entry.avg_size), int(entry.avg_point_count)
        if entry.similar_seen_category is not None:
            proxy = self.entries[entry.similar_seen_category]
            if proxy.has_stats:
                return np.array(proxy.avg_size), int(proxy.avg_point_count)
        return None


@dataclass(frozen=True)
class BenchmarkSplit:
    """Seen/unseen category lists, plus shipped role and similar defaults."""

    name: str
    seen: tuple[str, ...]
    unseen: tuple[str, ...]
    roles: Mapping[str, SupportRole] = field(default_factory=dict)
    similar: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "seen", tuple(self.seen))
        object.__setattr__(self, "unseen", tuple(self.unseen))
        overlap = set(self.seen) & set(self.unseen)
        if overlap:
            raise ValueError(f"seen/unseen overlap: {sorted(overlap)}")

    @property
    def seen_set(self) -> frozenset[str]:
        return frozenset(self.seen)

    @property
    def unseen_set(self) -> frozenset[str]:
        return frozenset(self.unseen)

    def is_seen(self, category: str) -> bool:
        return category in self.seen_set

    def categories(self) -> tuple[str, ...]:
        return self.seen + self.unseen


@dataclass(frozen=True)
class AugmentConfig:
    """Point-level augmentation: yaw rotation, dropping, jitter."""

    yaw_range: float = math.pi
    drop_ratio: float = 0.1
    jitter_sigma: float = 0.005
    jitter_clip_sigmas: float = 3.0

    def __post_init__(self):
        if self.drop_ratio < 0.0 or self.drop_ratio >= 1.0:
            raise InvalidConfigError(
                f"drop_ratio must be in [0, 1), got {self.drop_ratio}"
            )
        if self.yaw_range < 0.0 or self.jitter_sigma < 0.0:
            raise InvalidConfigError("yaw_range and jitter_sigma must be >= 0")


def points_in_box_count(xyz: np.ndarray, box: Box3, eps: float = 1e-9) -> int:
    return int(box.contains_points(xyz, eps=eps).sum())


def compute_category_stats(
    scenes: Sequence[Scene], split: BenchmarkSplit
) -> CategoryTable:
    """Average box size and in-box point count per category.

    Every seen category must have at least one instance across the scenes;
    otherwise MissingCategoryStatsError lists the offenders. Contributions
    are sorted before averaging so scene order cannot change the result.
    """
    sizes: dict[str, list[tuple[float, float, float]]] = {}
    counts: dict[str, list[int]] = {}
    roles: dict[str, SupportRole] = {}
    for scene in scenes:
        xyz = scene.cloud.xyz
        for obj in scene.objects:
            sizes.setdefault(obj.category, []).append(obj.box.size)
            counts.setdefault(obj.category, []).append(points_in_box_count(xyz, obj.box))
            prev = roles.setdefault(obj.category, obj.role)
            if prev is not obj.role:
                raise ValueError(
                    f"category {obj.category!r} annotated with conflicting roles "
                    f"{prev.value}/{obj.role.value}"
                )

    missing = [c for c in split.seen if c not in sizes]
    if missing:
        raise MissingCategoryStatsError(missing)

    entries: dict[str, CategoryEntry] = {}
    categories = list(split.categories()) + [
        c for c in sorted(sizes) if c not in split.seen_set | split.unseen_set
    ]
    for cat in categories:
        cat_split = CategorySplit.SEEN if split.is_seen(cat) else CategorySplit.UNSEEN
        role = roles.get(cat) or split.roles.get(cat) or SupportRole.STANDER
        avg_size = avg_count = None
        if cat in sizes:
            stacked = np.sort(np.array(sizes[cat], dtype=float), axis=0)
            avg_size = tuple(float(v) for v in stacked.mean(axis=0))
            avg_count = max(1, int(round(float(np.mean(sorted(counts[cat]))))))
        entries[cat] = CategoryEntry(
            split=cat_split,
            role=role,
            similar_seen_category=split.similar.get(cat),
            avg_size=avg_size,
            avg_point_count=avg_count,
        )
    return CategoryTable(entries)


def _uniform_ball(rng: RandomStream, n: int, radius: float) -> np.ndarray:
    """n points uniform in a 3-ball of the given radius."""
    direction = rng.standard_normal((n, 3))
    norms = np.linalg.norm(direction, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    r = radius * rng.random(n) ** (1.0 / 3.0)
    return direction / norms * r[:, None]


def _extent_preserving_downsample(
    rng: RandomStream, xyz: np.ndarray, target: int
) -> np.ndarray:
    """Index selection that keeps per-axis min/max points so bounds survive."""
    n = len(xyz)
    forced = np.unique(
        np.concatenate([xyz.argmin(axis=0), xyz.argmax(axis=0)])
    )
    if target <= len(forced):
        return np.sort(forced[:target])
    rest = np.setdiff1d(np.arange(n), forced)
    picked = rng.choice(rest, size=target - len(forced), replace=False)
    return np.sort(np.concatenate([forced, picked]))


def normalize_and_resample(
    asset: ObjectAsset,
    table: CategoryTable,
    *,
    rng: RandomStream | None = None,
    resample_first: bool = False,
) -> ObjectAsset:
    """Rescale an asset to its (similar) category's average size and density.

    Uniform scaling by the diagonal-length ratio |avg_size| / |extent|
    preserves shape; the cloud is then resampled to the category's average
    in-box point count (downsample without replacement keeping extreme
    points; upsample by duplicating points with <= 5 mm jitter). Without
    statistics the scale is identity and the point count is capped at
    DEFAULT_POINT_BUDGET. Output is re-centered at the origin.

    By default scaling happens before resampling; resample_first flips the
    order (the jitter radius then applies pre-scale).
    """
    if rng is None:
        rng = np.random.default_rng(0)
    stats = table.stats_for(asset.category)
    if stats is not None:
        avg_size, target_n = stats
        scale = float(np.linalg.norm(avg_size) / np.linalg.norm(asset.canonical_extent))
    else:
        scale = 1.0
        target_n = min(len(asset.cloud), DEFAULT_POINT_BUDGET)

    def do_scale(cloud: PointCloud) -> PointCloud:
        if scale == 1.0:
            return cloud
        return PointCloud(cloud.xyz * scale, cloud.colors)

    def do_resample(cloud: PointCloud) -> PointCloud:
        n = len(cloud)
        if target_n == n:
            return cloud
        if target_n < n:
            idx = _extent_preserving_downsample(rng, cloud.xyz, target_n)
            colors = cloud.colors[idx] if cloud.colors is not None else None
            return PointCloud(cloud.xyz[idx], colors)
        extra = target_n - n
        idx = rng.integers(0, n, size=extra)
        jitter = _uniform_ball(rng, extra, UPSAMPLE_JITTER_RADIUS)
        xyz = np.vstack([cloud.xyz, cloud.xyz[idx] + jitter])
        colors = None
        if cloud.colors is not None:
            colors = np.vstack([cloud.colors, cloud.colors[idx]])
        return PointCloud(xyz, colors)

    cloud = asset.cloud
    if resample_first:
        cloud = do_scale(do_resample(cloud))
    else:
        cloud = do_resample(do_scale(cloud))
    return asset.with_cloud(cloud)


def augment_points(
    cloud: PointCloud, rng: RandomStream, config: AugmentConfig
) -> PointCloud:
    """Yaw-rotate about the centroid, drop points, add clamped jitter.

    Draw order: yaw, drop mask, (survivor index if all dropped), jitter.
    At least one point always survives.
    """
    if len(cloud) == 0:
        return cloud
    yaw = float(rng.uniform(-config.yaw_range, config.yaw_range))
    centroid = cloud.centroid()
    xyz = cloud.xyz
    if yaw != 0.0:
        xy = (xyz[:, :2] - centroid[:2]) @ rot2d(yaw).T + centroid[:2]
        xyz = np.column_stack([xy, xyz[:, 2]])
    keep = rng.random(len(xyz)) >= config.drop_ratio
    if not keep.any():
        keep[rng.integers(len(xyz))] = True
    xyz = xyz[keep]
    colors = cloud.colors[keep] if cloud.colors is not None else None
    noise = rng.standard_normal(xyz.shape) * config.jitter_sigma
    clip = config.jitter_clip_sigmas * config.jitter_sigma
    xyz = xyz + np.clip(noise, -clip, clip)
    return PointCloud(xyz, colors)
