"""Yaw-oriented 3D box geometry: tight bounds, IoU variants, GIoU.

Boxes are yaw-only (rotation about +z). Oriented overlap is computed as
bird's-eye-view convex polygon intersection times the z-interval overlap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInputError, WrongVariantError

# Degenerate size components are clamped up to this value to keep
# volumes, IoU, and GIoU well defined.
MIN_BOX_SIZE = 1e-4


def wrap_heading(heading: float) -> float:
    """Wrap a yaw angle to [-pi, pi)."""
    return (float(heading) + math.pi) % (2.0 * math.pi) - math.pi


def rot2d(heading: float) -> np.ndarray:
    c, s = math.cos(heading), math.sin(heading)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class Box3:
    """Oriented (yaw-only) 3D bounding box.

    center: (x, y, z) in meters
    size:   (sx, sy, sz) in meters, strictly positive (clamped at MIN_BOX_SIZE)
    heading: yaw about +z in radians, normalized to [-pi, pi)
    """

    center: tuple[float, float, float]
    size: tuple[float, float, float]
    heading: float = 0.0

    def __post_init__(self):
        center = tuple(float(v) for v in self.center)
        if len(center) != 3 or not all(math.isfinite(v) for v in center):
            raise ValueError(f"box center must be 3 finite values, got {self.center!r}")
        raw = tuple(float(v) for v in self.size)
        if len(raw) != 3 or not all(math.isfinite(v) and v >= 0.0 for v in raw):
            raise ValueError(f"box size must be 3 finite non-negative values, got {self.size!r}")
        size = tuple(max(v, MIN_BOX_SIZE) for v in raw)
        heading = wrap_heading(self.heading)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "size", size)
        object.__setattr__(self, "heading", heading)

    @property
    def volume(self) -> float:
        sx, sy, sz = self.size
        return sx * sy * sz

    @property
    def bottom_z(self) -> float:
        return self.center[2] - self.size[2] / 2.0

    @property
    def top_z(self) -> float:
        return self.center[2] + self.size[2] / 2.0

    def bev_corners(self) -> np.ndarray:
        """Footprint corners, (4, 2), counter-clockwise."""
        hx, hy = self.size[0] / 2.0, self.size[1] / 2.0
        local = np.array([[hx, hy], [-hx, hy], [-hx, -hy], [hx, -hy]])
        return local @ rot2d(self.heading).T + np.array(self.center[:2])

    def corners(self) -> np.ndarray:
        """All 8 corners, (8, 3): bottom face then top face."""
        bev = self.bev_corners()
        out = np.empty((8, 3))
        out[:4, :2] = bev
        out[4:, :2] = bev
        out[:4, 2] = self.bottom_z
        out[4:, 2] = self.top_z
        return out

    def aabb(self) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned (min, max) bounds of the box corners."""
        if self.heading == 0.0:
            c = np.array(self.center)
            h = np.array(self.size) / 2.0
            return c - h, c + h
        corners = self.corners()
        return corners.min(axis=0), corners.max(axis=0)

    def contains_points(self, xyz: np.ndarray, eps: float = 1e-9) -> np.ndarray:
        """Boolean membership mask for points (N, 3), boundary inclusive."""
        xyz = np.asarray(xyz, dtype=float)
        local = xyz[:, :2] - np.array(self.center[:2])
        local = local @ rot2d(self.heading)  # world -> box frame
        hx, hy, hz = (s / 2.0 + eps for s in self.size)
        dz = xyz[:, 2] - self.center[2]
        return (
            (np.abs(local[:, 0]) <= hx)
            & (np.abs(local[:, 1]) <= hy)
            & (np.abs(dz) <= hz)
        )


def _as_xyz(cloud) -> np.ndarray:
    xyz = getattr(cloud, "xyz", cloud)
    return np.asarray(xyz, dtype=float).reshape(-1, 3)


def bounds_from_points(cloud, heading: float = 0.0) -> Box3:
    """Tightest box at the given heading containing all points.

    Degenerate extents (single point, coplanar cloud) are clamped to
    MIN_BOX_SIZE per axis.
    """
    xyz = _as_xyz(cloud)
    if xyz.shape[0] == 0:
        raise EmptyInputError("cannot compute bounds of an empty point cloud")
    heading = wrap_heading(heading)
    if heading == 0.0:
        lo = xyz.min(axis=0)
        hi = xyz.max(axis=0)
        center = (lo + hi) / 2.0
        return Box3(tuple(center), tuple(hi - lo), 0.0)
    # rotate into the heading frame, bound there, rotate the center back
    uv = xyz[:, :2] @ rot2d(heading)  # world -> frame (R(-h) = R(h).T applied on right)
    lo2, hi2 = uv.min(axis=0), uv.max(axis=0)
    zlo, zhi = xyz[:, 2].min(), xyz[:, 2].max()
    center_uv = (lo2 + hi2) / 2.0
    cx, cy = rot2d(heading) @ center_uv
    size = (hi2[0] - lo2[0], hi2[1] - lo2[1], zhi - zlo)
    return Box3((cx, cy, (zlo + zhi) / 2.0), size, heading)


def _require_axis_aligned(*boxes: Box3) -> None:
    for b in boxes:
        if b.heading != 0.0:
            raise WrongVariantError(
                "axis-aligned operation called with heading "
                f"{b.heading:.6f}; use the oriented variant"
            )


def _aa_intersection_volume(a: Box3, b: Box3) -> float:
    vol = 1.0
    for axis in range(3):
        lo = max(a.center[axis] - a.size[axis] / 2, b.center[axis] - b.size[axis] / 2)
        hi = min(a.center[axis] + a.size[axis] / 2, b.center[axis] + b.size[axis] / 2)
        if hi <= lo:
            return 0.0
        vol *= hi - lo
    return vol


def iou3d_axis_aligned(a: Box3, b: Box3) -> float:
    """Intersection-over-union of two axis-aligned boxes."""
    _require_axis_aligned(a, b)
    inter = _aa_intersection_volume(a, b)
    union = a.volume + b.volume - inter
    return inter / union


def polygon_area(poly: np.ndarray) -> float:
    """Shoelace area of a simple polygon, (N, 2); positive for CCW."""
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def clip_convex(subject: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman clip of a convex polygon against a convex CCW window.

    Boundary points count as inside, so shared edges and touching corners
    produce a (possibly degenerate) polygon rather than nothing.
    """
    output = [p for p in np.asarray(subject, dtype=float)]
    clip = np.asarray(clip, dtype=float)
    n = len(clip)
    for i in range(n):
        if not output:
            break
        edge_a = clip[i]
        edge_b = clip[(i + 1) % n]
        ex, ey = edge_b - edge_a
        points = output
        output = []
        prev = points[-1]
        # for a CCW clip polygon the interior is left of each edge:
        # cross(edge, p - a) >= 0, with boundary points counted inside
        prev_cross = ex * (prev[1] - edge_a[1]) - ey * (prev[0] - edge_a[0])
        prev_in = prev_cross >= 0.0
        for cur in points:
            cur_cross = ex * (cur[1] - edge_a[1]) - ey * (cur[0] - edge_a[0])
            cur_in = cur_cross >= 0.0
            if cur_in != prev_in:
                t = prev_cross / (prev_cross - cur_cross)
                output.append(prev + t * (cur - prev))
            if cur_in:
                output.append(cur)
            prev, prev_cross, prev_in = cur, cur_cross, cur_in
    return np.array(output) if output else np.empty((0, 2))


def bev_intersection_area(a: Box3, b: Box3) -> float:
    """Overlap area of the two yaw-rotated footprint rectangles."""
    if a.heading == 0.0 and b.heading == 0.0:
        w = min(a.center[0] + a.size[0] / 2, b.center[0] + b.size[0] / 2) - max(
            a.center[0] - a.size[0] / 2, b.center[0] - b.size[0] / 2
        )
        d = min(a.center[1] + a.size[1] / 2, b.center[1] + b.size[1] / 2) - max(
            a.center[1] - a.size[1] / 2, b.center[1] - b.size[1] / 2
        )
        return max(w, 0.0) * max(d, 0.0)
    clipped = clip_convex(a.bev_corners(), b.bev_corners())
    return abs(polygon_area(clipped))


def intersection_volume(a: Box3, b: Box3) -> float:
    """Oriented intersection volume: BEV polygon overlap times z overlap."""
    dz = min(a.top_z, b.top_z) - max(a.bottom_z, b.bottom_z)
    if dz <= 0.0:
        return 0.0
    # cheap AABB reject before polygon clipping
    alo, ahi = a.aabb()
    blo, bhi = b.aabb()
    if np.any(ahi[:2] <= blo[:2]) or np.any(bhi[:2] <= alo[:2]):
        return 0.0
    return bev_intersection_area(a, b) * dz


def iou3d_oriented(a: Box3, b: Box3) -> float:
    """IoU of two yaw-oriented boxes via BEV polygon clipping.

    Falls back to the axis-aligned closed form when both headings are
    exactly zero, so the two variants agree bit-for-bit on that input.
    """
    if a.heading == 0.0 and b.heading == 0.0:
        return iou3d_axis_aligned(a, b)
    inter = intersection_volume(a, b)
    union = a.volume + b.volume - inter
    return min(max(inter / union, 0.0), 1.0)


def enclosing_box(a: Box3, b: Box3) -> Box3:
    """Smallest axis-aligned box containing all corners of both boxes."""
    corners = np.vstack([a.corners(), b.corners()])
    lo = corners.min(axis=0)
    hi = corners.max(axis=0)
    return Box3(tuple((lo + hi) / 2.0), tuple(hi - lo), 0.0)


def giou3d(a: Box3, b: Box3) -> float:
    """Generalized IoU for axis-aligned boxes, in (-1, 1]."""
    _require_axis_aligned(a, b)
    inter = _aa_intersection_volume(a, b)
    union = a.volume + b.volume - inter
    iou = inter / union
    lo = np.minimum(
        np.array(a.center) - np.array(a.size) / 2,
        np.array(b.center) - np.array(b.size) / 2,
    )
    hi = np.maximum(
        np.array(a.center) + np.array(a.size) / 2,
        np.array(b.center) + np.array(b.size) / 2,
    )
    c_vol = float(np.prod(hi - lo))
    return iou - (c_vol - union) / c_vol


def axis_aligned_hull(box: Box3) -> Box3:
    """Axis-aligned box over the corners of an oriented box."""
    if box.heading == 0.0:
        return box
    lo, hi = box.aabb()
    return Box3(tuple((lo + hi) / 2.0), tuple(hi - lo), 0.0)
