"""Domain type invariants: points, clouds, annotations, scenes."""

import numpy as np
import pytest

from sceneforge import (
    AnchorExpression,
    Box3,
    NotFoundError,
    ObjectAnnotation,
    Point3,
    PointCloud,
    Scene,
    SupportRole,
)

from helpers import floor_grid


class TestPoint3:
    def test_finite_required(self):
        with pytest.raises(ValueError):
            Point3(float("inf"), 0.0, 0.0)

    def test_xyz_tuple(self):
        assert Point3(1.0, 2.0, 3.0).xyz == (1.0, 2.0, 3.0)


class TestPointCloud:
    def test_immutable(self, rng):
        cloud = PointCloud(rng.random((10, 3)))
        with pytest.raises(AttributeError):
            cloud.xyz = np.zeros((1, 3))
        with pytest.raises(ValueError):
            cloud.xyz[0, 0] = 5.0

    def test_from_points_with_colors(self):
        cloud = PointCloud.from_points(
            [Point3(0, 0, 0, 1.0, 0.5, 0.0), Point3(1, 1, 1, 0.0, 0.0, 1.0)]
        )
        assert cloud.colors is not None
        assert cloud.point(0).r == 1.0

    def test_concatenate_drops_mismatched_colors(self, rng):
        a = PointCloud(rng.random((5, 3)), rng.random((5, 3)))
        b = PointCloud(rng.random((3, 3)))
        merged = PointCloud.concatenate(a, b)
        assert len(merged) == 8
        assert merged.colors is None

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            PointCloud(np.array([[np.nan, 0, 0]]))

    def test_centroid(self):
        cloud = PointCloud(np.array([[0.0, 0.0, 0.0], [2.0, 2.0, 2.0]]))
        assert np.allclose(cloud.centroid(), [1.0, 1.0, 1.0])


class TestSupportRole:
    def test_parse(self):
        assert SupportRole.parse("Supporter ") is SupportRole.SUPPORTER

    def test_unknown(self):
        with pytest.raises(ValueError):
            SupportRole.parse("floaty")


class TestAnchorExpression:
    def test_bad_span(self):
        with pytest.raises(ValueError):
            AnchorExpression("the plant", (2, 1), "plant")

    def test_empty_text(self):
        with pytest.raises(ValueError):
            AnchorExpression("  ", (0, 0), "plant")


class TestScene:
    def _objects(self):
        return [
            ObjectAnnotation(
                "a", "desk", Box3((0, 0, 0.4), (1, 1, 0.8)), SupportRole.SUPPORTER
            )
        ]

    def test_duplicate_ids_rejected(self):
        cloud = PointCloud(floor_grid(4, 4, 0.5))
        objs = self._objects() * 2
        with pytest.raises(ValueError):
            Scene.build("s", cloud, 0.0, objs)

    def test_below_floor_rejected(self):
        cloud = PointCloud(floor_grid(4, 4, 0.5))
        sunk = ObjectAnnotation(
            "a", "desk", Box3((0, 0, -0.5), (1, 1, 0.8)), SupportRole.SUPPORTER
        )
        with pytest.raises(ValueError):
            Scene.build("s", cloud, 0.0, [sunk])

    def test_outside_bounds_rejected(self):
        cloud = PointCloud(floor_grid(4, 4, 0.5))
        bounds = Box3((0, 0, 1.0), (4.0, 4.0, 2.0))
        stray = ObjectAnnotation(
            "a", "desk", Box3((10, 0, 0.4), (1, 1, 0.8)), SupportRole.SUPPORTER
        )
        with pytest.raises(ValueError):
            Scene("s", cloud, 0.0, (stray,), bounds)

    def test_bounds_derived_to_contain_everything(self):
        cloud = PointCloud(floor_grid(4, 4, 0.5))
        scene = Scene.build("s", cloud, 0.0, self._objects())
        assert scene.bounds.contains_points(cloud.xyz, eps=1e-9).all()
        assert scene.bounds.contains_points(scene.objects[0].box.corners(), eps=1e-9).all()

    def test_object_by_id(self):
        cloud = PointCloud(floor_grid(4, 4, 0.5))
        scene = Scene.build("s", cloud, 0.0, self._objects())
        assert scene.object_by_id("a").category == "desk"
        with pytest.raises(NotFoundError):
            scene.object_by_id("zzz")

    def test_oriented_bounds_rejected(self):
        cloud = PointCloud(floor_grid(4, 4, 0.5))
        with pytest.raises(ValueError):
            Scene("s", cloud, 0.0, (), Box3((0, 0, 1), (5, 5, 3), 0.3))
