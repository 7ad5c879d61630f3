"""Grounding prompt generation, spatial relation classification, and
alignment target matrices.

Three prompt families are produced for training records:
  detection          "bed. chair. sofa." (period-separated category list)
  absolute location  "a table that is closer to the center of the room"
  relative location  "a table that is next to a plant that is at the room center"

Relative prompts compose a spatial phrase with the anchor's own referring
expression, so the anchor noun becomes the auxiliary object and the new
object is the main one. Every emitted relative sample is checked for
referential uniqueness against the scene geometry.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    AmbiguousSpansError,
    EmptyInputError,
    InvalidConfigError,
    InvalidExpressionError,
)
from .geometry import Box3
from .ingestion import BenchmarkSplit
from .insertion import InsertionRecord
from .rng import RandomStream
from .scene import AnchorExpression, Scene


class RelationKind(Enum):
    VERTICAL = "vertical_proximity"
    HORIZONTAL = "horizontal_proximity"
    ALLOCENTRIC = "allocentric"


class SpatialRelation(Enum):
    """A spatial relation word with its taxonomy kind and template phrase."""

    ON = (RelationKind.VERTICAL, "on", "on")
    NEXT_TO = (RelationKind.HORIZONTAL, "next to", "next to")
    CLOSE_TO = (RelationKind.HORIZONTAL, "close to", "close to")
    LEFT_OF = (RelationKind.ALLOCENTRIC, "left of", "to the left of")
    RIGHT_OF = (RelationKind.ALLOCENTRIC, "right of", "to the right of")
    IN_FRONT_OF = (RelationKind.ALLOCENTRIC, "in front of", "in front of")
    BEHIND = (RelationKind.ALLOCENTRIC, "behind", "behind")

    def __init__(self, kind: RelationKind, label: str, phrase: str):
        self.kind = kind
        self.label = label
        self.phrase = phrase

    @classmethod
    def from_label(cls, label: str) -> "SpatialRelation":
        for member in cls:
            if member.label == label:
                return member
        raise ValueError(f"unknown relation label {label!r}")


@dataclass(frozen=True)
class RelationThresholds:
    """Geometric thresholds for relation classification and room bands."""

    on_eps: float = 0.03          # max |target bottom - anchor top| for "on"
    near_distance: float = 1.5    # BEV center distance bound for "next to"
    center_band: float = 0.4      # r below this is "center of the room"
    corner_band: float = 0.6      # r above this is "corner of the room"


DEFAULT_THRESHOLDS = RelationThresholds()


class PromptType(Enum):
    DETECTION = "detection"
    ABSOLUTE_LOCATION = "absolute_location"
    RELATIVE_LOCATION = "relative_location"


class Token(NamedTuple):
    text: str   # lowercased, punctuation-stripped
    start: int  # character offset into the original string
    end: int    # exclusive


_STRIP_CHARS = ".,;:!?\"'()[]{}<>"


def tokenize(text: str) -> list[Token]:
    """Lowercased word tokens with character offsets.

    Splits on whitespace and strips leading/trailing punctuation (internal
    hyphens survive). Offsets index the original string, so
    text[tok.start:tok.end].lower() == tok.text.
    """
    if not text or not text.strip():
        raise EmptyInputError("cannot tokenize empty text")
    tokens: list[Token] = []
    for match in re.finditer(r"\S+", text):
        chunk = match.group()
        start, end = match.start(), match.end()
        lead = len(chunk) - len(chunk.lstrip(_STRIP_CHARS + "-"))
        trail = len(chunk) - len(chunk.rstrip(_STRIP_CHARS + "-"))
        s, e = start + lead, end - trail
        if e <= s:
            continue
        tokens.append(Token(text[s:e].lower(), s, e))
    if not tokens:
        raise EmptyInputError("text contains no word tokens")
    return tokens


def classify_relation(
    target_box: Box3,
    anchor_box: Box3,
    anchor_heading_known: bool,
    thresholds: RelationThresholds = DEFAULT_THRESHOLDS,
) -> SpatialRelation:
    """Relation of a target to an anchor from their boxes.

    "on" when the target rests on the anchor top with its footprint center
    over the anchor; otherwise an allocentric sector (front = +x in the
    anchor's yaw frame, left = +y, quadrants split at 45 degrees) when the
    anchor orientation is known and the objects are near; otherwise
    "next to" when near, "close to" when far.
    """
    bottom = target_box.bottom_z
    top = anchor_box.top_z
    dx = target_box.center[0] - anchor_box.center[0]
    dy = target_box.center[1] - anchor_box.center[1]
    if abs(bottom - top) <= thresholds.on_eps:
        # footprint center inside the anchor footprint (anchor frame test)
        c, s = math.cos(anchor_box.heading), math.sin(anchor_box.heading)
        u = dx * c + dy * s
        v = -dx * s + dy * c
        if abs(u) <= anchor_box.size[0] / 2.0 and abs(v) <= anchor_box.size[1] / 2.0:
            return SpatialRelation.ON
    distance = math.hypot(dx, dy)
    if anchor_heading_known and distance <= thresholds.near_distance:
        c, s = math.cos(anchor_box.heading), math.sin(anchor_box.heading)
        u = dx * c + dy * s
        v = -dx * s + dy * c
        azimuth = math.atan2(v, u)
        if -math.pi / 4 <= azimuth < math.pi / 4:
            return SpatialRelation.IN_FRONT_OF
        if math.pi / 4 <= azimuth < 3 * math.pi / 4:
            return SpatialRelation.LEFT_OF
        if -3 * math.pi / 4 <= azimuth < -math.pi / 4:
            return SpatialRelation.RIGHT_OF
        return SpatialRelation.BEHIND
    if distance <= thresholds.near_distance:
        return SpatialRelation.NEXT_TO
    return SpatialRelation.CLOSE_TO


def spatial_prompt(target_class: str, rel: SpatialRelation, anchor_class: str) -> str:
    """Deterministic template: 'the <target> that is <phrase> the <anchor>'."""
    if not target_class.strip() or not anchor_class.strip():
        raise InvalidConfigError("target and anchor classes must be non-empty")
    return f"the {target_class} that is {rel.phrase} the {anchor_class}"


def class_token_span(target_class: str) -> tuple[int, int]:
    """Inclusive token span of the class words in 'a <class> that is ...'."""
    n_words = len(target_class.split())
    return (1, n_words)


def relative_location_prompt(
    target_class: str,
    rel: SpatialRelation,
    anchor_expr: AnchorExpression,
) -> tuple[str, tuple[int, int]]:
    """Compose a spatial phrase with the anchor's referring expression.

    The anchor expression is appended verbatim so its main object becomes
    the auxiliary object. Returns the prompt and the inclusive token span
    of the target class words (whose last token is the head noun).
    """
    if not target_class.strip():
        raise InvalidConfigError("target class must be non-empty")
    expr_tokens = tokenize(anchor_expr.text)
    s, e = anchor_expr.main_span
    if e >= len(expr_tokens):
        raise InvalidExpressionError(
            f"main_span {anchor_expr.main_span} out of range for "
            f"{len(expr_tokens)} tokens"
        )
    head = anchor_expr.main_category.split()[-1].lower()
    span_words = {expr_tokens[i].text for i in range(s, e + 1)}
    if head not in span_words:
        raise InvalidExpressionError(
            f"main_span tokens {sorted(span_words)} do not include head noun {head!r}"
        )
    prompt = f"a {target_class} that is {rel.phrase} {anchor_expr.text}"
    return prompt, class_token_span(target_class)


def absolute_location_prompt(
    target_class: str,
    target_box: Box3,
    scene_bounds: Box3,
    thresholds: RelationThresholds = DEFAULT_THRESHOLDS,
) -> str:
    """Describe where the target sits relative to the room center/corner.

    The planar distance from the room center is normalized so 0 is the
    center and 1 is a corner; the band thresholds pick the phrasing.
    """
    dx = target_box.center[0] - scene_bounds.center[0]
    dy = target_box.center[1] - scene_bounds.center[1]
    half = (scene_bounds.size[0] / 2.0, scene_bounds.size[1] / 2.0)
    r = math.hypot(dx, dy) / math.hypot(*half)
    if r < thresholds.center_band:
        where = "closer to the center of the room"
    elif r > thresholds.corner_band:
        where = "closer to the corner of the room"
    else:
        where = "in the middle area of the room"
    return f"a {target_class} that is {where}"


def detection_prompt(
    categories: Sequence[str],
) -> tuple[str, list[tuple[str, tuple[int, int]]]]:
    """Period-separated category list with per-category token spans.

    'bed. chair. night stand.' -> spans [(bed, (0,0)), (chair, (1,1)),
    (night stand, (2,3))].
    """
    if not categories:
        raise EmptyInputError("category list must be non-empty")
    if len(set(categories)) != len(categories):
        raise InvalidConfigError("detection prompt categories must be unique")
    text = " ".join(f"{c}." for c in categories)
    spans: list[tuple[str, tuple[int, int]]] = []
    cursor = 0
    for cat in categories:
        n_words = len(cat.split())
        spans.append((cat, (cursor, cursor + n_words - 1)))
        cursor += n_words
    return text, spans


def verify_unique(
    scene: Scene,
    target_id: str,
    rel: SpatialRelation,
    anchor_id: str,
    thresholds: RelationThresholds = DEFAULT_THRESHOLDS,
) -> bool:
    """True iff exactly one object of the target's category bears `rel`
    to the anchor.

    The anchor-orientation flag is reconstructed from the relation kind:
    allocentric relations can only have been produced with a known
    heading, and near non-allocentric relations only with an unknown one.
    """
    target = scene.object_by_id(target_id)
    anchor = scene.object_by_id(anchor_id)
    heading_known = rel.kind is RelationKind.ALLOCENTRIC
    hits = 0
    for obj in scene.objects:
        if obj.category != target.category:
            continue
        if classify_relation(obj.box, anchor.box, heading_known, thresholds) is rel:
            hits += 1
    return hits == 1


@dataclass(frozen=True)
class AlignmentTarget:
    """Binary matrix: rows are targets, columns are prompt tokens."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.uint8)
        if m.ndim != 2:
            raise ValueError("alignment matrix must be 2-D")
        if not np.isin(m, (0, 1)).all():
            raise ValueError("alignment matrix must be binary")
        if m.shape[0] and not m.any(axis=1).all():
            raise ValueError("every alignment row needs at least one 1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def row_string(self, row: int) -> str:
        return "".join(str(int(v)) for v in self.matrix[row])


def alignment_target(
    tokens: Sequence[Token] | Sequence[str],
    spans: Sequence[tuple[int, int]],
) -> AlignmentTarget:
    """Build the binary target matrix from per-target token spans.

    Spans are inclusive [start, end]. Distinct targets may share an
    identical span (several instances of one prompted category); partially
    overlapping spans are ambiguous and rejected.
    """
    n_tokens = len(tokens)
    if n_tokens == 0:
        raise EmptyInputError("token list must be non-empty")
    for s, e in spans:
        if s < 0 or e < s or e >= n_tokens:
            raise ValueError(f"span ({s}, {e}) out of range for {n_tokens} tokens")
    for i in range(len(spans)):
        for j in range(i + 1, len(spans)):
            a, b = spans[i], spans[j]
            if a == b:
                continue
            if a[0] <= b[1] and b[0] <= a[1]:
                raise AmbiguousSpansError(
                    f"targets {i} and {j} have partially overlapping spans {a} / {b}"
                )
    matrix = np.zeros((len(spans), n_tokens), dtype=np.uint8)
    for row, (s, e) in enumerate(spans):
        matrix[row, s : e + 1] = 1
    return AlignmentTarget(matrix)


@dataclass(frozen=True)
class SampleTarget:
    instance_id: str
    box: Box3
    token_span: tuple[int, int]


@dataclass(frozen=True)
class GroundingSample:
    """One training record: prompt text, targets, and alignment matrix."""

    scene_id: str
    prompt: str
    prompt_type: PromptType
    tokens: tuple[str, ...]
    targets: tuple[SampleTarget, ...]
    alignment: AlignmentTarget

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "targets", tuple(self.targets))
        if not self.targets:
            raise ValueError("grounding sample needs at least one target")
        n = len(self.tokens)
        if self.alignment.matrix.shape != (len(self.targets), n):
            raise ValueError("alignment shape does not match targets/tokens")
        for row, target in enumerate(self.targets):
            s, e = target.token_span
            if s < 0 or e < s or e >= n:
                raise ValueError(f"token_span {target.token_span} out of range")
            expected = np.zeros(n, dtype=np.uint8)
            expected[s : e + 1] = 1
            if not np.array_equal(self.alignment.matrix[row], expected):
                raise ValueError(f"alignment row {row} does not match its span")


_TEMPLATE_RE = re.compile(
    r"^(?:the|a|an)\s+(?P<noun>.+?)\s+that\s+is\s+.+$", re.IGNORECASE
)


def parse_anchor_expression(text: str) -> AnchorExpression:
    """Fallback parser for template-grammar expressions only.

    Accepts 'the <class> that is <anything>' (article may be a/an/the) and
    marks the words before 'that is' as the main object. Free-form text is
    rejected rather than guessed.
    """
    match = _TEMPLATE_RE.match(text.strip())
    if not match:
        raise InvalidExpressionError(
            f"expression {text!r} does not follow the "
            "'the <class> that is <...>' template and has no parse fields"
        )
    noun = match.group("noun").strip().lower()
    n_words = len(noun.split())
    return AnchorExpression(text=text.strip(), main_span=(1, n_words), main_category=noun)


def _expression_for_anchor(anchor, rng: RandomStream) -> AnchorExpression:
    """Pick a provided referring expression, or fall back to the class name."""
    if anchor.referring_expressions:
        idx = int(rng.integers(len(anchor.referring_expressions)))
        return anchor.referring_expressions[idx]
    n_words = len(anchor.category.split())
    return AnchorExpression(
        text=f"the {anchor.category}",
        main_span=(1, n_words),
        main_category=anchor.category,
    )


def generate_samples(
    scene: Scene,
    records: Sequence[InsertionRecord],
    mode: PromptType,
    split: BenchmarkSplit,
    rng: RandomStream,
    thresholds: RelationThresholds = DEFAULT_THRESHOLDS,
    *,
    allocentric_anchors: bool = False,
) -> list[GroundingSample]:
    """Emit grounding samples for an augmented scene.

    Detection mode emits one sample listing the split's categories with all
    matching scene objects as targets. Absolute/relative modes emit one
    sample per inserted object; relative samples that fail the uniqueness
    check are discarded.
    """
    samples: list[GroundingSample] = []
    if mode is PromptType.DETECTION:
        categories = list(split.categories())
        text, cat_spans = detection_prompt(categories)
        span_by_cat = dict(cat_spans)
        targets = [
            SampleTarget(o.instance_id, o.box, span_by_cat[o.category])
            for o in scene.objects
            if o.category in span_by_cat
        ]
        if targets:
            tokens = tuple(t.text for t in tokenize(text))
            align = alignment_target(tokens, [t.token_span for t in targets])
            samples.append(
                GroundingSample(scene.scene_id, text, mode, tokens, tuple(targets), align)
            )
        return samples

    for record in records:
        ann = record.annotation
        if mode is PromptType.ABSOLUTE_LOCATION:
            text = absolute_location_prompt(ann.category, ann.box, scene.bounds, thresholds)
            span = class_token_span(ann.category)
        else:
            anchor = scene.object_by_id(record.anchor_id)
            rel = classify_relation(
                ann.box, anchor.box, allocentric_anchors, thresholds
            )
            expr = _expression_for_anchor(anchor, rng)
            text, span = relative_location_prompt(ann.category, rel, expr)
            if not verify_unique(
                scene, ann.instance_id, rel, anchor.instance_id, thresholds
            ):
                continue
        tokens = tuple(t.text for t in tokenize(text))
        target = SampleTarget(ann.instance_id, ann.box, span)
        align = alignment_target(tokens, [span])
        samples.append(
            GroundingSample(scene.scene_id, text, mode, tokens, (target,), align)
        )
    return samples
