"""Shared builders for synthetic scenes, banks, and boxes."""

from __future__ import annotations

import numpy as np

from sceneforge import (
    AnchorExpression,
    AssetBank,
    BenchmarkSplit,
    Box3,
    ObjectAnnotation,
    ObjectAsset,
    PointCloud,
    Scene,
    SupportRole,
)


def box_points(center, size, n, rng, top_frac=0.5):
    """Points filling a box, with a fraction pinned to the top face so
    height maps resolve supporter tops."""
    n_top = int(n * top_frac)
    c = np.asarray(center, dtype=float)
    s = np.asarray(size, dtype=float)
    vol = c + (rng.random((n - n_top, 3)) - 0.5) * s
    top = c + (rng.random((n_top, 3)) - 0.5) * s
    top[:, 2] = c[2] + s[2] / 2
    return np.vstack([vol, top])


def floor_grid(x_extent=6.0, y_extent=4.0, step=0.08, z=0.0):
    gx, gy = np.meshgrid(
        np.arange(-x_extent / 2, x_extent / 2 + step / 2, step),
        np.arange(-y_extent / 2, y_extent / 2 + step / 2, step),
    )
    return np.column_stack([gx.ravel(), gy.ravel(), np.full(gx.size, z)])


def make_fixture_split() -> BenchmarkSplit:
    return BenchmarkSplit(
        name="fixture",
        seen=("desk", "plant"),
        unseen=("lamp", "crate", "stool"),
        roles={
            "lamp": SupportRole.SUPPORTEE,
            "crate": SupportRole.STANDER,
            "stool": SupportRole.SUPPORTER,
        },
        similar={"lamp": "plant", "crate": "desk", "stool": "desk"},
    )


def make_fixture_scene(seed=7, scene_id="scene-a") -> Scene:
    rng = np.random.default_rng(seed)
    desk_c, desk_s = (1.0, 0.5, 0.375), (1.4, 0.7, 0.75)
    plant_c, plant_s = (-1.5, -1.0, 0.5), (0.4, 0.4, 1.0)
    cloud = PointCloud(
        np.vstack(
            [
                floor_grid(),
                box_points(desk_c, desk_s, 800, rng),
                box_points(plant_c, plant_s, 300, rng),
            ]
        )
    )
    objects = (
        ObjectAnnotation(
            "desk-1", "desk", Box3(desk_c, desk_s), SupportRole.SUPPORTER, "scan"
        ),
        ObjectAnnotation(
            "plant-1",
            "plant",
            Box3(plant_c, plant_s),
            SupportRole.STANDER,
            "scan",
            (AnchorExpression("a plant that is at the room center", (1, 1), "plant"),),
        ),
    )
    return Scene.build(scene_id, cloud, 0.0, objects)


def make_asset(asset_id, category, source, size, n, rng) -> ObjectAsset:
    pts = box_points((0.0, 0.0, 0.0), size, n, rng)
    return ObjectAsset.from_cloud(asset_id, category, source, PointCloud(pts))


def make_fixture_bank(seed=11) -> AssetBank:
    rng = np.random.default_rng(seed)
    return AssetBank.of(
        [
            make_asset("bank/lamp/0", "lamp", "bankA", (0.3, 0.3, 0.6), 200, rng),
            make_asset("bank/lamp/1", "lamp", "bankB", (0.25, 0.25, 0.5), 180, rng),
            make_asset("bank/crate/0", "crate", "bankA", (0.5, 0.5, 0.5), 300, rng),
            make_asset("bank/stool/0", "stool", "bankB", (0.4, 0.4, 0.45), 250, rng),
        ]
    )


def random_box(rng, center_span=1.0, size_lo=0.5, size_hi=2.0, oriented=False) -> Box3:
    center = tuple(rng.uniform(-center_span, center_span, 3))
    size = tuple(rng.uniform(size_lo, size_hi, 3))
    heading = float(rng.uniform(-np.pi, np.pi)) if oriented else 0.0
    return Box3(center, size, heading)
