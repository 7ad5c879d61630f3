"""Schema round-trips, parse errors, and point-file formats."""

import json

import numpy as np
import pytest

from sceneforge import ParseError
from sceneforge import io as sfio
from helpers import make_fixture_bank, make_fixture_scene, make_fixture_split


class TestSceneRoundTrip:
    def test_bin_payload(self, tmp_path):
        scene = make_fixture_scene()
        path = tmp_path / "scene-a.json"
        sfio.write_scene(scene, path)
        assert (tmp_path / "scene-a.bin").exists()
        loaded, records = sfio.read_scene(path)
        assert records == []
        assert loaded.scene_id == scene.scene_id
        # float32 payload: coordinates survive to float32 precision
        assert np.allclose(loaded.cloud.xyz, scene.cloud.xyz, atol=1e-6)
        assert len(loaded.objects) == len(scene.objects)
        assert loaded.objects[1].referring_expressions == scene.objects[1].referring_expressions

    def test_inline_points(self, tmp_path):
        scene = make_fixture_scene()
        path = tmp_path / "scene-a.json"
        sfio.write_scene(scene, path, inline_points=True)
        loaded, _ = sfio.read_scene(path)
        assert np.array_equal(loaded.cloud.xyz, scene.cloud.xyz)

    def test_missing_category_is_parse_error(self, tmp_path):
        scene = make_fixture_scene()
        path = tmp_path / "scene-a.json"
        sfio.write_scene(scene, path, inline_points=True)
        doc = json.loads(path.read_text())
        del doc["objects"][0]["category"]
        path.write_text(json.dumps(doc))
        with pytest.raises(ParseError) as err:
            sfio.read_scene(path)
        assert "category" in str(err.value)

    def test_bad_format_version(self, tmp_path):
        path = tmp_path / "x.json"
        path.write_text(json.dumps({"format_version": 99}))
        with pytest.raises(ParseError) as err:
            sfio.read_scene(path)
        assert err.value.field == "format_version"

    def test_load_scenes_sorted(self, tmp_path):
        for sid in ("scene-b", "scene-a"):
            scene = make_fixture_scene(scene_id=sid)
            sfio.write_scene(scene, tmp_path / f"{sid}.json")
        scenes = sfio.load_scenes(tmp_path)
        assert [s.scene_id for s in scenes] == ["scene-a", "scene-b"]

    def test_insertion_records_round_trip(self, tmp_path):
        from sceneforge import InsertionConfig, augment_scene, compute_category_stats
        from sceneforge.rng import derive_stream

        scene = make_fixture_scene()
        split = make_fixture_split()
        bank = make_fixture_bank()
        table = compute_category_stats([scene], split)
        augmented, records = augment_scene(
            scene, bank, table, split, InsertionConfig(), 2, derive_stream(5, "s")
        )
        path = tmp_path / "aug.json"
        sfio.write_scene(augmented, path, records)
        loaded, loaded_records = sfio.read_scene(path)
        assert len(loaded_records) == len(records)
        for orig, back in zip(records, loaded_records):
            assert back.anchor_id == orig.anchor_id
            assert back.asset_id == orig.asset_id
            assert back.category_split is orig.category_split
            assert back.point_range == orig.point_range
            assert back.placement.supported_by == orig.placement.supported_by
            assert back.placement.centroid == pytest.approx(orig.placement.centroid)


class TestAssetBankRoundTrip:
    def test_inline_round_trip(self, tmp_path):
        bank = make_fixture_bank()
        path = tmp_path / "bank.json"
        sfio.write_asset_manifest(bank, path)
        loaded = sfio.load_asset_bank(path)
        assert {a.asset_id for a in loaded.assets} == {a.asset_id for a in bank.assets}
        assert loaded.sources == bank.sources
        assert len(loaded.sources) == 2
        for asset in bank.assets:
            back = loaded.get(asset.asset_id)
            assert np.allclose(back.cloud.xyz, asset.cloud.xyz, atol=1e-12)

    def test_bin_payload_round_trip(self, tmp_path):
        bank = make_fixture_bank()
        path = tmp_path / "bank.json"
        sfio.write_asset_manifest(bank, path, inline_points=False)
        loaded = sfio.load_asset_bank(path)
        for asset in bank.assets:
            back = loaded.get(asset.asset_id)
            assert np.allclose(back.cloud.xyz, asset.cloud.xyz, atol=1e-6)

    def test_missing_category_field(self, tmp_path):
        path = tmp_path / "bank.json"
        doc = {
            "format_version": 1,
            "assets": [{"asset_id": "a", "source": "s", "points": [[0, 0, 0], [1, 1, 1]]}],
        }
        path.write_text(json.dumps(doc))
        with pytest.raises(ParseError) as err:
            sfio.load_asset_bank(path)
        assert "category" in str(err.value)

    def test_up_axis_y_rotated(self, tmp_path):
        # a stick along +y in the file becomes a stick along +z
        path = tmp_path / "bank.json"
        doc = {
            "format_version": 1,
            "assets": [
                {
                    "asset_id": "stick",
                    "category": "stick",
                    "source": "s",
                    "up": "y",
                    "points": [[0, -1, 0], [0, 1, 0], [0.1, 0, 0.1], [-0.1, 0, -0.1]],
                }
            ],
        }
        path.write_text(json.dumps(doc))
        bank = sfio.load_asset_bank(path)
        extent = bank.assets[0].canonical_extent
        assert extent[2] == pytest.approx(2.0)
        assert extent[1] < 1.0


class TestPointFormats:
    def test_ply_ascii_round_trip(self, tmp_path, rng):
        xyz = rng.random((100, 3))
        colors = rng.random((100, 3))
        path = tmp_path / "c.ply"
        sfio.write_ply(path, xyz, colors)
        back_xyz, back_colors = sfio.read_ply(path)
        assert np.allclose(back_xyz, xyz, atol=1e-5)
        assert back_colors is not None
        assert np.allclose(back_colors, colors, atol=1 / 255 + 1e-9)

    def test_ply_binary_round_trip(self, tmp_path, rng):
        xyz = rng.random((64, 3))
        path = tmp_path / "c.ply"
        sfio.write_ply(path, xyz, binary=True)
        back_xyz, back_colors = sfio.read_ply(path)
        assert back_colors is None
        assert np.allclose(back_xyz, xyz, atol=1e-6)

    def test_truncated_ply_rejected(self, tmp_path, rng):
        path = tmp_path / "c.ply"
        sfio.write_ply(path, rng.random((10, 3)), binary=True)
        data = path.read_bytes()
        path.write_bytes(data[:-8])
        with pytest.raises(ParseError):
            sfio.read_ply(path)

    def test_xyz_round_trip(self, tmp_path, rng):
        xyz = rng.random((20, 3))
        path = tmp_path / "c.xyz"
        with open(path, "w") as fh:
            for row in xyz:
                fh.write(f"{row[0]:.9f} {row[1]:.9f} {row[2]:.9f}\n")
        assert np.allclose(sfio.read_xyz(path), xyz, atol=1e-8)

    def test_bin_count_mismatch(self, tmp_path, rng):
        path = tmp_path / "p.bin"
        sfio.write_points_bin(rng.random((10, 3)), path)
        with pytest.raises(ParseError):
            sfio.read_points_bin(path, 11)


class TestSamples:
    def _samples(self):
        from sceneforge import InsertionConfig, augment_scene, compute_category_stats
        from sceneforge.prompts import PromptType, generate_samples
        from sceneforge.rng import derive_stream

        scene = make_fixture_scene()
        split = make_fixture_split()
        bank = make_fixture_bank()
        table = compute_category_stats([scene], split)
        augmented, records = augment_scene(
            scene, bank, table, split, InsertionConfig(), 3, derive_stream(9, "s")
        )
        return generate_samples(
            augmented, records, PromptType.RELATIVE_LOCATION, split, derive_stream(0, "p")
        )

    def test_ndjson_round_trip(self, tmp_path):
        samples = self._samples()
        path = tmp_path / "samples.ndjson"
        n = sfio.write_samples(samples, path)
        assert n == len(samples)
        loaded = sfio.read_samples(path)
        assert len(loaded) == len(samples)
        for orig, back in zip(samples, loaded):
            assert back.prompt == orig.prompt
            assert back.tokens == orig.tokens
            assert np.array_equal(back.alignment.matrix, orig.alignment.matrix)

    def test_line_is_deterministic(self):
        samples = self._samples()
        assert samples, "fixture produced no samples"
        a = sfio.sample_to_json_line(samples[0])
        b = sfio.sample_to_json_line(samples[0])
        assert a == b
        assert json.loads(a)["format_version"] == 1


class TestTableAndSplit:
    def test_table_round_trip(self, tmp_path):
        from sceneforge import compute_category_stats

        scene = make_fixture_scene()
        split = make_fixture_split()
        table = compute_category_stats([scene], split)
        path = tmp_path / "table.json"
        sfio.write_category_table(table, path)
        loaded = sfio.read_category_table(path)
        assert set(loaded.entries) == set(table.entries)
        for cat, entry in table.entries.items():
            back = loaded.entries[cat]
            assert back.split is entry.split
            assert back.role is entry.role
            assert back.similar_seen_category == entry.similar_seen_category
            if entry.avg_size is None:
                assert back.avg_size is None
            else:
                assert back.avg_size == pytest.approx(entry.avg_size)
            assert back.avg_point_count == entry.avg_point_count

    def test_split_round_trip(self, tmp_path):
        split = make_fixture_split()
        path = tmp_path / "split.json"
        sfio.write_benchmark_split(split, path)
        loaded = sfio.read_benchmark_split(path)
        assert loaded.seen == split.seen
        assert loaded.unseen == split.unseen
        assert dict(loaded.similar) == dict(split.similar)
        assert {c: r for c, r in loaded.roles.items()} == dict(split.roles)

    def test_overlapping_split_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(
            json.dumps(
                {"format_version": 1, "name": "x", "seen": ["a"], "unseen": ["a"]}
            )
        )
        with pytest.raises(ParseError):
            sfio.read_benchmark_split(path)


class TestDetectionsAndReports:
    def test_detections_round_trip(self, tmp_path):
        from sceneforge import Box3, Detection

        dets = [
            Detection("s1", "chair", Box3((0, 0, 0), (1, 1, 1)), 0.9),
            Detection("s2", "table", Box3((1, 0, 0), (2, 1, 1), 0.3), 0.5),
        ]
        path = tmp_path / "pred.json"
        sfio.write_detections(dets, path)
        loaded = sfio.read_detections(path)
        assert len(loaded) == 2
        assert loaded[0].category == "chair"
        assert loaded[1].box.heading == pytest.approx(0.3)

    def test_ground_truth_round_trip(self, tmp_path):
        scene = make_fixture_scene()
        gts = {"s1": list(scene.objects)}
        path = tmp_path / "gt.json"
        sfio.write_ground_truth(gts, path)
        loaded = sfio.read_ground_truth(path)
        assert set(loaded) == {"s1"}
        assert [a.instance_id for a in loaded["s1"]] == ["desk-1", "plant-1"]

    def test_report_written(self, tmp_path):
        from sceneforge import EvalReport

        report = EvalReport(
            per_category_ap={"chair": 0.5},
            map_value=0.5,
            included_categories=("chair",),
            num_gt=2,
            num_detections=3,
            num_matched=1,
        )
        path = tmp_path / "report.json"
        sfio.write_report(report, path)
        doc = json.loads(path.read_text())
        assert doc["map"] == 0.5
        assert doc["counts"]["gt"] == 2
