"""Core scene domain types: points, clouds, annotations, scenes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator

import numpy as np

from .errors import NotFoundError
from .geometry import Box3, bounds_from_points

# Slack used when checking that object boxes lie inside scene bounds.
BOUNDS_SLACK = 0.05
# Objects may dip below the floor by at most this much (scan noise).
FLOOR_SLACK = 0.01


@dataclass(frozen=True)
class Point3:
    """A single point in meters, with optional unit-interval RGB color."""

    x: float
    y: float
    z: float
    r: float | None = None
    g: float | None = None
    b: float | None = None

    def __post_init__(self):
        for v in (self.x, self.y, self.z):
            if not math.isfinite(v):
                raise ValueError(f"point coordinates must be finite, got {self!r}")

    @property
    def xyz(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


class PointCloud:
    """Immutable ordered point set backed by float64 arrays.

    xyz is (N, 3); colors is (N, 3) in [0, 1] or None.
    """

    __slots__ = ("xyz", "colors")

    def __init__(self, xyz: np.ndarray, colors: np.ndarray | None = None):
        xyz = np.ascontiguousarray(np.asarray(xyz, dtype=float)).reshape(-1, 3)
        if not np.isfinite(xyz).all():
            raise ValueError("point cloud contains non-finite coordinates")
        xyz.setflags(write=False)
        object.__setattr__(self, "xyz", xyz)
        if colors is not None:
            colors = np.ascontiguousarray(np.asarray(colors, dtype=float)).reshape(-1, 3)
            if colors.shape[0] != xyz.shape[0]:
                raise ValueError("colors must match point count")
            colors.setflags(write=False)
        object.__setattr__(self, "colors", colors)

    def __setattr__(self, name, value):
        raise AttributeError("PointCloud is immutable")

    @classmethod
    def from_points(cls, points: Iterable[Point3]) -> "PointCloud":
        pts = list(points)
        xyz = np.array([p.xyz for p in pts], dtype=float).reshape(-1, 3)
        if pts and pts[0].r is not None:
            colors = np.array([[p.r, p.g, p.b] for p in pts], dtype=float)
        else:
            colors = None
        return cls(xyz, colors)

    def __len__(self) -> int:
        return self.xyz.shape[0]

    def __iter__(self) -> Iterator[Point3]:
        for i in range(len(self)):
            yield self.point(i)

    def point(self, i: int) -> Point3:
        x, y, z = self.xyz[i]
        if self.colors is not None:
            r, g, b = self.colors[i]
            return Point3(x, y, z, r, g, b)
        return Point3(x, y, z)

    def centroid(self) -> np.ndarray:
        if len(self) == 0:
            raise ValueError("empty cloud has no centroid")
        return self.xyz.mean(axis=0)

    def translated(self, offset) -> "PointCloud":
        return PointCloud(self.xyz + np.asarray(offset, dtype=float), self.colors)

    @staticmethod
    def concatenate(a: "PointCloud", b: "PointCloud") -> "PointCloud":
        xyz = np.vstack([a.xyz, b.xyz])
        if a.colors is not None and b.colors is not None:
            colors = np.vstack([a.colors, b.colors])
        else:
            colors = None
        return PointCloud(xyz, colors)


class SupportRole(Enum):
    """Support affordance of a category.

    Standers and supporters rest only on the ground; supporters may carry
    other objects; supportees rest on supporters (or the ground, if allowed).
    """

    STANDER = "stander"
    SUPPORTER = "supporter"
    SUPPORTEE = "supportee"

    @classmethod
    def parse(cls, value: str) -> "SupportRole":
        try:
            return cls(value.strip().lower())
        except ValueError:
            raise ValueError(f"unknown support role {value!r}") from None


@dataclass(frozen=True)
class AnchorExpression:
    """A referring expression whose main object is already identified.

    main_span is an inclusive [start, end] token index range over the
    word-level tokenization of text; those tokens name the main object.
    """

    text: str
    main_span: tuple[int, int]
    main_category: str

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("expression text must be non-empty")
        if not self.main_category.strip():
            raise ValueError("main_category must be non-empty")
        s, e = self.main_span
        if s < 0 or e < s:
            raise ValueError(f"invalid main_span {self.main_span!r}")
        object.__setattr__(self, "main_span", (int(s), int(e)))


@dataclass(frozen=True)
class ObjectAnnotation:
    """One annotated object instance in a scene."""

    instance_id: str
    category: str
    box: Box3
    role: SupportRole
    source: str = ""
    referring_expressions: tuple[AnchorExpression, ...] = field(default=())

    def __post_init__(self):
        if not self.instance_id:
            raise ValueError("instance_id must be non-empty")
        if not self.category:
            raise ValueError("category must be non-empty")
        object.__setattr__(
            self, "referring_expressions", tuple(self.referring_expressions)
        )


@dataclass(frozen=True)
class Scene:
    """An annotated point-cloud scene.

    bounds is an axis-aligned box containing the cloud and every object
    box (with BOUNDS_SLACK tolerance); floor_z is the ground height.
    """

    scene_id: str
    cloud: PointCloud
    floor_z: float
    objects: tuple[ObjectAnnotation, ...]
    bounds: Box3

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        if not self.scene_id:
            raise ValueError("scene_id must be non-empty")
        if len(self.cloud) == 0:
            raise ValueError("scene cloud must be non-empty")
        if self.bounds.heading != 0.0:
            raise ValueError("scene bounds must be axis-aligned")
        ids = [o.instance_id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate instance ids in scene")
        lo = np.array(self.bounds.center) - np.array(self.bounds.size) / 2 - BOUNDS_SLACK
        hi = np.array(self.bounds.center) + np.array(self.bounds.size) / 2 + BOUNDS_SLACK
        for obj in self.objects:
            if obj.box.bottom_z < self.floor_z - FLOOR_SLACK:
                raise ValueError(
                    f"object {obj.instance_id} bottom {obj.box.bottom_z:.3f} "
                    f"below floor {self.floor_z:.3f}"
                )
            corners = obj.box.corners()
            if (corners < lo).any() or (corners > hi).any():
                raise ValueError(f"object {obj.instance_id} outside scene bounds")

    @classmethod
    def build(
        cls,
        scene_id: str,
        cloud: PointCloud,
        floor_z: float,
        objects: Iterable[ObjectAnnotation],
        bounds: Box3 | None = None,
    ) -> "Scene":
        """Construct a scene, deriving bounds from content when not given."""
        objects = tuple(objects)
        if bounds is None:
            corners = [cloud.xyz]
            for obj in objects:
                corners.append(obj.box.corners())
            bounds = bounds_from_points(np.vstack(corners), 0.0)
        return cls(scene_id, cloud, float(floor_z), objects, bounds)

    def object_by_id(self, instance_id: str) -> ObjectAnnotation:
        for obj in self.objects:
            if obj.instance_id == instance_id:
                return obj
        raise NotFoundError(f"instance {instance_id!r} not in scene {self.scene_id!r}")

    def categories(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(o.category for o in self.objects))
