"""File schemas and serialization.

Scenes, banks, tables, splits, and reports are structured JSON documents
carrying a top-level format_version. Bulk point data may live in a
sidecar binary payload (little-endian float32, xyz interleaved) referenced
by relative path. Sample records are newline-delimited JSON with stable
field ordering, so equal inputs serialize to equal bytes. PLY export
(ascii or binary little-endian) is provided for external viewers, and PLY
and xyz files can be ingested as assets.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import ParseError
from .evaluation import Detection, EvalReport
from .geometry import Box3
from .ingestion import (
    AssetBank,
    BenchmarkSplit,
    CategoryEntry,
    CategorySplit,
    CategoryTable,
    ObjectAsset,
)
from .insertion import InsertionRecord, Placement
from .prompts import AlignmentTarget, GroundingSample, PromptType, SampleTarget
from .scene import AnchorExpression, ObjectAnnotation, PointCloud, Scene, SupportRole

FORMAT_VERSION = 1

BUILTIN_SPLITS = ("ov_scannet20", "ov_sunrgbd20")


def _load_json(path: Path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ParseError("file not found", path=path)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}", path=path)
    if not isinstance(doc, dict):
        raise ParseError("top level must be a JSON object", path=path)
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ParseError(
            f"unsupported format_version {version!r}", path=path, field="format_version"
        )
    return doc


def _dump_json(doc: Mapping[str, Any], path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _get(doc: Mapping, key: str, kind, path: Path, where: str = "") -> Any:
    if key not in doc:
        raise ParseError("missing required field", path=path, field=where + key)
    value = doc[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise ParseError(
            f"expected {getattr(kind, '__name__', kind)}, got {type(value).__name__}",
            path=path,
            field=where + key,
        )
    return value


# ---------------------------------------------------------------------------
# Binary point payloads and point-file formats
# ---------------------------------------------------------------------------

def write_points_bin(xyz: np.ndarray, path: Path) -> None:
    """Little-endian float32, xyz interleaved."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    np.ascontiguousarray(xyz, dtype="<f4").tofile(path)


def read_points_bin(path: Path, count: int) -> np.ndarray:
    data = np.fromfile(path, dtype="<f4")
    if data.size != 3 * count:
        raise ParseError(
            f"expected {3 * count} float32 values, found {data.size}", path=path
        )
    return data.reshape(count, 3).astype(float)


def write_ply(
    path: Path, xyz: np.ndarray, colors: np.ndarray | None = None, binary: bool = False
) -> None:
    """Standard PLY point cloud, ascii or binary_little_endian."""
    xyz = np.asarray(xyz, dtype=float).reshape(-1, 3)
    n = xyz.shape[0]
    fmt = "binary_little_endian 1.0" if binary else "ascii 1.0"
    header = ["ply", f"format {fmt}", f"element vertex {n}"]
    header += [f"property float {axis}" for axis in "xyz"]
    if colors is not None:
        header += [f"property uchar {c}" for c in ("red", "green", "blue")]
    header.append("end_header")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rgb = None
    if colors is not None:
        rgb = np.clip(np.asarray(colors, dtype=float) * 255.0, 0, 255).astype(np.uint8)
    if binary:
        with open(path, "wb") as fh:
            fh.write(("\n".join(header) + "\n").encode("ascii"))
            f32 = xyz.astype("<f4")
            if rgb is None:
                fh.write(f32.tobytes())
            else:
                for i in range(n):
                    fh.write(f32[i].tobytes())
                    fh.write(rgb[i].tobytes())
    else:
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(header) + "\n")
            for i in range(n):
                line = f"{xyz[i, 0]:.6f} {xyz[i, 1]:.6f} {xyz[i, 2]:.6f}"
                if rgb is not None:
                    line += f" {rgb[i, 0]} {rgb[i, 1]} {rgb[i, 2]}"
                fh.write(line + "\n")


def read_ply(path: Path) -> tuple[np.ndarray, np.ndarray | None]:
    """Minimal PLY vertex reader (ascii / binary_little_endian)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    end = raw.find(b"end_header")
    if end < 0:
        raise ParseError("no end_header in PLY file", path=path)
    header_lines = raw[:end].decode("ascii", "replace").splitlines()
    body = raw[end:]
    body = body[body.find(b"\n") + 1 :]
    fmt = None
    n = None
    props: list[tuple[str, str]] = []
    in_vertex = False
    for line in header_lines:
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "format":
            fmt = parts[1]
        elif parts[0] == "element":
            in_vertex = parts[1] == "vertex"
            if in_vertex:
                n = int(parts[2])
        elif parts[0] == "property" and in_vertex:
            props.append((parts[1], parts[2]))
    if fmt not in ("ascii", "binary_little_endian"):
        raise ParseError(f"unsupported PLY format {fmt!r}", path=path)
    if n is None:
        raise ParseError("no vertex element in PLY file", path=path)
    names = [name for _, name in props]
    for axis in "xyz":
        if axis not in names:
            raise ParseError(f"PLY vertex missing property {axis!r}", path=path)

    type_map = {
        "float": "<f4", "float32": "<f4", "double": "<f8", "float64": "<f8",
        "uchar": "u1", "uint8": "u1", "char": "i1", "int8": "i1",
        "short": "<i2", "ushort": "<u2", "int": "<i4", "uint": "<u4",
    }
    if fmt == "ascii":
        rows = np.loadtxt(
            [ln for ln in body.decode("ascii").splitlines() if ln.strip()][:n],
            dtype=float,
            ndmin=2,
        )
        if rows.shape[0] != n or rows.shape[1] < len(props):
            raise ParseError("PLY vertex data truncated", path=path)
        table = {name: rows[:, i] for i, (_, name) in enumerate(props)}
    else:
        try:
            dtype = np.dtype([(name, type_map[t]) for t, name in props])
        except KeyError as exc:
            raise ParseError(f"unsupported PLY property type {exc}", path=path)
        if len(body) < dtype.itemsize * n:
            raise ParseError("PLY vertex data truncated", path=path)
        arr = np.frombuffer(body[: dtype.itemsize * n], dtype=dtype)
        table = {name: arr[name].astype(float) for _, name in props}
    xyz = np.column_stack([table["x"], table["y"], table["z"]])
    colors = None
    if all(c in table for c in ("red", "green", "blue")):
        colors = np.column_stack([table["red"], table["green"], table["blue"]]) / 255.0
    return xyz, colors


def read_xyz(path: Path) -> np.ndarray:
    """Whitespace-separated x y z [r g b] text file."""
    try:
        rows = np.loadtxt(path, dtype=float, ndmin=2)
    except ValueError as exc:
        raise ParseError(f"bad xyz text: {exc}", path=path)
    if rows.size == 0 or rows.shape[1] < 3:
        raise ParseError("xyz file needs at least three columns", path=path)
    return rows[:, :3]


# ---------------------------------------------------------------------------
# Shared document fragments
# ---------------------------------------------------------------------------

def box_to_doc(box: Box3) -> dict:
    return {
        "center": list(box.center),
        "size": list(box.size),
        "heading": box.heading,
    }


def box_from_doc(doc: Mapping, path: Path, where: str) -> Box3:
    center = _get(doc, "center", list, path, where)
    size = _get(doc, "size", list, path, where)
    heading = doc.get("heading", 0.0)
    try:
        return Box3(tuple(center), tuple(size), float(heading))
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc), path=path, field=where + "box")


def expression_to_doc(expr: AnchorExpression) -> dict:
    return {
        "text": expr.text,
        "main_span": list(expr.main_span),
        "main_category": expr.main_category,
    }


def expression_from_doc(doc: Mapping, path: Path, where: str) -> AnchorExpression:
    try:
        return AnchorExpression(
            text=_get(doc, "text", str, path, where),
            main_span=tuple(_get(doc, "main_span", list, path, where)),
            main_category=_get(doc, "main_category", str, path, where),
        )
    except ValueError as exc:
        raise ParseError(str(exc), path=path, field=where + "referring_expression")


def annotation_to_doc(ann: ObjectAnnotation) -> dict:
    doc = {
        "instance_id": ann.instance_id,
        "category": ann.category,
        "box": box_to_doc(ann.box),
        "role": ann.role.value,
        "source": ann.source,
    }
    if ann.referring_expressions:
        doc["referring_expressions"] = [
            expression_to_doc(e) for e in ann.referring_expressions
        ]
    return doc


def annotation_from_doc(doc: Mapping, path: Path, where: str) -> ObjectAnnotation:
    try:
        role = SupportRole.parse(_get(doc, "role", str, path, where))
    except ValueError as exc:
        raise ParseError(str(exc), path=path, field=where + "role")
    exprs = tuple(
        expression_from_doc(e, path, where)
        for e in doc.get("referring_expressions", [])
    )
    try:
        return ObjectAnnotation(
            instance_id=_get(doc, "instance_id", str, path, where),
            category=_get(doc, "category", str, path, where),
            box=box_from_doc(_get(doc, "box", dict, path, where), path, where),
            role=role,
            source=doc.get("source", ""),
            referring_expressions=exprs,
        )
    except ValueError as exc:
        raise ParseError(str(exc), path=path, field=where + "object")


def placement_to_doc(placement: Placement) -> dict:
    return {
        "centroid": list(placement.centroid),
        "heading": placement.heading,
        "support_surface_z": placement.support_surface_z,
        "supported_by": placement.supported_by,
    }


def placement_from_doc(doc: Mapping, path: Path) -> Placement:
    supported = doc.get("supported_by")
    if supported is not None and not isinstance(supported, str):
        raise ParseError("supported_by must be null or a string", path=path)
    return Placement(
        centroid=tuple(_get(doc, "centroid", list, path)),
        heading=float(_get(doc, "heading", float, path)),
        support_surface_z=float(_get(doc, "support_surface_z", float, path)),
        supported_by=supported,
    )


def record_to_doc(record: InsertionRecord) -> dict:
    return {
        "instance_id": record.annotation.instance_id,
        "anchor_id": record.anchor_id,
        "asset_id": record.asset_id,
        "category_split": record.category_split.value,
        "placement": placement_to_doc(record.placement),
        "point_range": list(record.point_range),
    }


def record_from_doc(doc: Mapping, scene: Scene, path: Path) -> InsertionRecord:
    instance_id = _get(doc, "instance_id", str, path)
    annotation = scene.object_by_id(instance_id)
    span = _get(doc, "point_range", list, path)
    return InsertionRecord(
        anchor_id=_get(doc, "anchor_id", str, path),
        annotation=annotation,
        placement=placement_from_doc(_get(doc, "placement", dict, path), path),
        asset_id=_get(doc, "asset_id", str, path),
        category_split=CategorySplit(_get(doc, "category_split", str, path)),
        point_range=(int(span[0]), int(span[1])),
    )


# ---------------------------------------------------------------------------
# Scenes
# ---------------------------------------------------------------------------

def write_scene(
    scene: Scene,
    path: Path,
    records: Sequence[InsertionRecord] = (),
    *,
    inline_points: bool = False,
) -> None:
    """Write a scene document; bulk points go to a sibling .bin payload
    unless inline_points is set."""
    path = Path(path)
    doc: dict[str, Any] = {
        "format_version": FORMAT_VERSION,
        "scene_id": scene.scene_id,
        "floor_z": scene.floor_z,
        "bounds": box_to_doc(scene.bounds),
        "objects": [annotation_to_doc(o) for o in scene.objects],
    }
    if records:
        doc["insertions"] = [record_to_doc(r) for r in records]
    if inline_points:
        doc["points"] = [[float(v) for v in row] for row in scene.cloud.xyz]
        if scene.cloud.colors is not None:
            doc["colors"] = [[float(v) for v in row] for row in scene.cloud.colors]
    else:
        bin_name = path.stem + ".bin"
        write_points_bin(scene.cloud.xyz, path.parent / bin_name)
        doc["points_file"] = bin_name
        doc["point_count"] = len(scene.cloud)
    _dump_json(doc, path)


def read_scene(path: Path) -> tuple[Scene, list[InsertionRecord]]:
    path = Path(path)
    doc = _load_json(path)
    scene_id = _get(doc, "scene_id", str, path)
    floor_z = float(_get(doc, "floor_z", float, path))
    colors = None
    if "points" in doc:
        xyz = np.asarray(_get(doc, "points", list, path), dtype=float)
        if "colors" in doc:
            colors = np.asarray(doc["colors"], dtype=float)
    elif "points_file" in doc:
        count = int(_get(doc, "point_count", int, path))
        xyz = read_points_bin(path.parent / _get(doc, "points_file", str, path), count)
    else:
        raise ParseError("scene needs 'points' or 'points_file'", path=path, field="points")
    try:
        cloud = PointCloud(xyz, colors)
    except ValueError as exc:
        raise ParseError(str(exc), path=path, field="points")
    objects = tuple(
        annotation_from_doc(o, path, "objects.") for o in _get(doc, "objects", list, path)
    )
    bounds = None
    if "bounds" in doc:
        bounds = box_from_doc(_get(doc, "bounds", dict, path), path, "bounds.")
    try:
        scene = Scene.build(scene_id, cloud, floor_z, objects, bounds)
    except ValueError as exc:
        raise ParseError(str(exc), path=path)
    records = [
        record_from_doc(r, scene, path) for r in doc.get("insertions", [])
    ]
    return scene, records


def load_scenes(directory: Path) -> list[Scene]:
    """All scene documents in a directory, ordered by scene id."""
    directory = Path(directory)
    scenes = []
    for path in sorted(directory.glob("*.json")):
        scene, _ = read_scene(path)
        scenes.append(scene)
    if not scenes:
        raise ParseError("no scene documents found", path=directory)
    return sorted(scenes, key=lambda s: s.scene_id)


# ---------------------------------------------------------------------------
# Asset banks
# ---------------------------------------------------------------------------

def write_asset_manifest(bank: AssetBank, path: Path, *, inline_points: bool = True) -> None:
    """Manifest with inline points (or .bin payloads next to the manifest)."""
    path = Path(path)
    assets = []
    for asset in bank.assets:
        entry: dict[str, Any] = {
            "asset_id": asset.asset_id,
            "category": asset.category,
            "source": asset.source,
            "up": "z",
        }
        if inline_points:
            entry["points"] = [[float(v) for v in row] for row in asset.cloud.xyz]
        else:
            safe = asset.asset_id.replace("/", "_")
            bin_name = f"{safe}.bin"
            write_points_bin(asset.cloud.xyz, path.parent / bin_name)
            entry["points_file"] = bin_name
            entry["point_count"] = len(asset.cloud)
        assets.append(entry)
    _dump_json({"format_version": FORMAT_VERSION, "assets": assets}, path)


def _read_asset_points(entry: Mapping, base: Path, path: Path) -> np.ndarray:
    if "points" in entry:
        return np.asarray(entry["points"], dtype=float).reshape(-1, 3)
    if "points_file" in entry:
        rel = _get(entry, "points_file", str, path, "assets.")
        target = base / rel
        suffix = target.suffix.lower()
        if suffix == ".bin":
            count = int(_get(entry, "point_count", int, path, "assets."))
            return read_points_bin(target, count)
        if suffix == ".ply":
            xyz, _ = read_ply(target)
            return xyz
        if suffix == ".xyz":
            return read_xyz(target)
        raise ParseError(f"unsupported point file type {suffix!r}", path=path)
    raise ParseError("asset needs 'points' or 'points_file'", path=path, field="assets.points")


def load_asset_bank(manifest_path: Path) -> AssetBank:
    """Parse a manifest and canonicalize each asset (+z up, centroid at origin)."""
    manifest_path = Path(manifest_path)
    doc = _load_json(manifest_path)
    entries = _get(doc, "assets", list, manifest_path)
    assets = []
    for entry in entries:
        if not isinstance(entry, dict):
            raise ParseError("asset entries must be objects", path=manifest_path, field="assets")
        xyz = _read_asset_points(entry, manifest_path.parent, manifest_path)
        up = entry.get("up", "z")
        if up == "y":
            xyz = np.column_stack([xyz[:, 0], -xyz[:, 2], xyz[:, 1]])
        elif up != "z":
            raise ParseError(f"unsupported up axis {up!r}", path=manifest_path, field="assets.up")
        try:
            assets.append(
                ObjectAsset.from_cloud(
                    asset_id=_get(entry, "asset_id", str, manifest_path, "assets."),
                    category=_get(entry, "category", str, manifest_path, "assets."),
                    source=_get(entry, "source", str, manifest_path, "assets."),
                    cloud=PointCloud(xyz),
                )
            )
        except ValueError as exc:
            raise ParseError(str(exc), path=manifest_path, field="assets")
    try:
        return AssetBank.of(assets)
    except ValueError as exc:
        raise ParseError(str(exc), path=manifest_path, field="assets")


# ---------------------------------------------------------------------------
# Category tables and benchmark splits
# ---------------------------------------------------------------------------

def write_category_table(table: CategoryTable, path: Path) -> None:
    categories = {}
    for cat, entry in sorted(table.entries.items()):
        categories[cat] = {
            "split": entry.split.value,
            "role": entry.role.value,
            "similar_seen_category": entry.similar_seen_category,
            "avg_size": list(entry.avg_size) if entry.avg_size else None,
            "avg_point_count": entry.avg_point_count,
        }
    _dump_json({"format_version": FORMAT_VERSION, "categories": categories}, path)


def read_category_table(path: Path) -> CategoryTable:
    path = Path(path)
    doc = _load_json(path)
    raw = _get(doc, "categories", dict, path)
    entries = {}
    for cat, body in raw.items():
        if not isinstance(body, dict):
            raise ParseError("category entries must be objects", path=path, field=cat)
        try:
            entries[cat] = CategoryEntry(
                split=CategorySplit(_get(body, "split", str, path, cat + ".")),
                role=SupportRole.parse(_get(body, "role", str, path, cat + ".")),
                similar_seen_category=body.get("similar_seen_category"),
                avg_size=tuple(body["avg_size"]) if body.get("avg_size") else None,
                avg_point_count=body.get("avg_point_count"),
            )
        except ValueError as exc:
            raise ParseError(str(exc), path=path, field=cat)
    try:
        return CategoryTable(entries)
    except ValueError as exc:
        raise ParseError(str(exc), path=path, field="categories")


def write_benchmark_split(split: BenchmarkSplit, path: Path) -> None:
    _dump_json(
        {
            "format_version": FORMAT_VERSION,
            "name": split.name,
            "seen": list(split.seen),
            "unseen": list(split.unseen),
            "roles": {c: r.value for c, r in sorted(split.roles.items())},
            "similar": dict(sorted(split.similar.items())),
        },
        path,
    )


def read_benchmark_split(path: Path) -> BenchmarkSplit:
    path = Path(path)
    doc = _load_json(path)
    roles = {}
    for cat, value in doc.get("roles", {}).items():
        try:
            roles[cat] = SupportRole.parse(value)
        except ValueError as exc:
            raise ParseError(str(exc), path=path, field=f"roles.{cat}")
    try:
        return BenchmarkSplit(
            name=_get(doc, "name", str, path),
            seen=tuple(_get(doc, "seen", list, path)),
            unseen=tuple(_get(doc, "unseen", list, path)),
            roles=roles,
            similar=dict(doc.get("similar", {})),
        )
    except ValueError as exc:
        raise ParseError(str(exc), path=path)


def load_benchmark_split(name_or_path: str | Path) -> BenchmarkSplit:
    """Load a split file, or one of the shipped splits by name."""
    if isinstance(name_or_path, str) and name_or_path in BUILTIN_SPLITS:
        from importlib.resources import as_file, files

        resource = files("sceneforge.data") / f"{name_or_path}.json"
        with as_file(resource) as concrete:
            return read_benchmark_split(concrete)
    return read_benchmark_split(Path(name_or_path))


# ---------------------------------------------------------------------------
# Grounding samples
# ---------------------------------------------------------------------------

def sample_to_doc(sample: GroundingSample) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "scene_id": sample.scene_id,
        "prompt": sample.prompt,
        "prompt_type": sample.prompt_type.value,
        "tokens": list(sample.tokens),
        "targets": [
            {
                "instance_id": t.instance_id,
                "box": box_to_doc(t.box),
                "token_span": list(t.token_span),
            }
            for t in sample.targets
        ],
        "alignment": [sample.alignment.row_string(r) for r in range(len(sample.targets))],
    }


def sample_to_json_line(sample: GroundingSample) -> str:
    return json.dumps(sample_to_doc(sample), sort_keys=True, separators=(",", ":"))


def sample_from_doc(doc: Mapping, path: Path) -> GroundingSample:
    targets = tuple(
        SampleTarget(
            instance_id=_get(t, "instance_id", str, path, "targets."),
            box=box_from_doc(_get(t, "box", dict, path, "targets."), path, "targets."),
            token_span=tuple(_get(t, "token_span", list, path, "targets.")),
        )
        for t in _get(doc, "targets", list, path)
    )
    rows = _get(doc, "alignment", list, path)
    matrix = np.array([[int(ch) for ch in row] for row in rows], dtype=np.uint8)
    try:
        return GroundingSample(
            scene_id=_get(doc, "scene_id", str, path),
            prompt=_get(doc, "prompt", str, path),
            prompt_type=PromptType(_get(doc, "prompt_type", str, path)),
            tokens=tuple(_get(doc, "tokens", list, path)),
            targets=targets,
            alignment=AlignmentTarget(matrix),
        )
    except ValueError as exc:
        raise ParseError(str(exc), path=path)


def write_samples(samples: Iterable[GroundingSample], path: Path) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for sample in samples:
            fh.write(sample_to_json_line(sample) + "\n")
            n += 1
    return n


def read_samples(path: Path) -> list[GroundingSample]:
    path = Path(path)
    samples = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            if doc.get("format_version") != FORMAT_VERSION:
                raise ParseError("unsupported format_version", path=path, field="format_version")
            samples.append(sample_from_doc(doc, path))
    return samples


# ---------------------------------------------------------------------------
# Detections, ground truth, reports
# ---------------------------------------------------------------------------

def write_detections(dets: Sequence[Detection], path: Path) -> None:
    _dump_json(
        {
            "format_version": FORMAT_VERSION,
            "detections": [
                {
                    "scene_id": d.scene_id,
                    "category": d.category,
                    "box": box_to_doc(d.box),
                    "score": d.score,
                }
                for d in dets
            ],
        },
        path,
    )


def read_detections(path: Path) -> list[Detection]:
    path = Path(path)
    doc = _load_json(path)
    dets = []
    for entry in _get(doc, "detections", list, path):
        try:
            dets.append(
                Detection(
                    scene_id=_get(entry, "scene_id", str, path, "detections."),
                    category=_get(entry, "category", str, path, "detections."),
                    box=box_from_doc(_get(entry, "box", dict, path, "detections."), path, "detections."),
                    score=float(_get(entry, "score", float, path, "detections.")),
                )
            )
        except ValueError as exc:
            raise ParseError(str(exc), path=path, field="detections")
    return dets


def write_ground_truth(gts: Mapping[str, Sequence[ObjectAnnotation]], path: Path) -> None:
    annotations = []
    for scene_id in sorted(gts):
        for ann in gts[scene_id]:
            doc = annotation_to_doc(ann)
            doc["scene_id"] = scene_id
            annotations.append(doc)
    _dump_json({"format_version": FORMAT_VERSION, "annotations": annotations}, path)


def read_ground_truth(path: Path) -> dict[str, list[ObjectAnnotation]]:
    path = Path(path)
    doc = _load_json(path)
    gts: dict[str, list[ObjectAnnotation]] = {}
    for entry in _get(doc, "annotations", list, path):
        scene_id = _get(entry, "scene_id", str, path, "annotations.")
        body = dict(entry)
        body.setdefault("role", "stander")
        gts.setdefault(scene_id, []).append(
            annotation_from_doc(body, path, "annotations.")
        )
    return gts


def report_to_doc(report: EvalReport) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "iou_threshold": report.iou_threshold,
        "iou_mode": report.iou_mode,
        "interpolation": report.interpolation,
        "per_category_ap": dict(sorted(report.per_category_ap.items())),
        "map": report.map_value,
        "included_categories": list(report.included_categories),
        "counts": {
            "gt": report.num_gt,
            "detections": report.num_detections,
            "matched": report.num_matched,
        },
    }


def write_report(report: EvalReport, path: Path) -> None:
    _dump_json(report_to_doc(report), path)
