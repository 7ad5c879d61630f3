"""Training losses on plain numeric batches, with analytic gradients.

The category-level contrastive loss treats same-class features as
positives regardless of their source dataset:

    L = -(1/N') * sum_i log [ sum_{j != i, y_j = y_i} exp(f_i . f_j / tau)
                              / sum_{k != i} exp(f_i . f_k / tau) ]

where N' counts anchors that have at least one positive. The numerator
sums all positives inside a single log (the multi-positive generalized
form); the per-positive-log average is a known alternative but is not
what this function computes. Anchors without positives are excluded from
the average by default ("exclude"); "zero" keeps them as zero-loss terms
with N in the denominator.

Also provided: binary sigmoid alignment loss over object-text score
matrices, and the L1 + generalized-IoU box regression loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable

import numpy as np

from .errors import EmptyInputError, NoPositivePairsError
from .geometry import Box3, giou3d

DEFAULT_TEMPERATURE = 0.07
DEFAULT_LOC_WEIGHTS = (5.0, 2.0)  # (lambda_l1, lambda_giou)


@dataclass(frozen=True)
class FeatureBatch:
    """N feature vectors with class labels and source-dataset tags.

    Features are used as given; callers decide whether to L2-normalize.
    """

    features: np.ndarray
    labels: tuple[Hashable, ...]
    sources: tuple[str, ...]
    temperature: float = DEFAULT_TEMPERATURE

    def __post_init__(self):
        f = np.asarray(self.features, dtype=float)
        if f.ndim != 2 or f.shape[0] < 2 or f.shape[1] < 1:
            raise ValueError(f"features must be (N>=2, d>=1), got {f.shape}")
        if not np.isfinite(f).all():
            raise ValueError("features contain non-finite entries")
        if len(self.labels) != f.shape[0] or len(self.sources) != f.shape[0]:
            raise ValueError("labels/sources must match feature count")
        if not (self.temperature > 0 and math.isfinite(self.temperature)):
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        f = np.ascontiguousarray(f)
        f.setflags(write=False)
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "sources", tuple(self.sources))

    @property
    def n(self) -> int:
        return self.features.shape[0]


def _similarity_masks(batch: FeatureBatch) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(scores, off-diagonal mask, positive mask)."""
    f = batch.features
    scores = (f @ f.T) / batch.temperature
    n = batch.n
    off_diag = ~np.eye(n, dtype=bool)
    labels = np.array(batch.labels, dtype=object)
    positive = (labels[:, None] == labels[None, :]) & off_diag
    return scores, off_diag, positive


def _masked_logsumexp(scores: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Row-wise log sum exp over masked entries; -inf rows where mask empty."""
    neg_inf = np.float64(-np.inf)
    masked = np.where(mask, scores, neg_inf)
    peak = masked.max(axis=1)
    out = np.full(scores.shape[0], neg_inf)
    ok = np.isfinite(peak)
    if ok.any():
        shifted = np.exp(masked[ok] - peak[ok, None], where=mask[ok], out=np.zeros_like(masked[ok]))
        out[ok] = peak[ok] + np.log(shifted.sum(axis=1))
    return out


def contrastive_loss(batch: FeatureBatch, *, on_no_positive: str = "exclude") -> float:
    """Cross-domain category-level contrastive loss (log-sum-exp stabilized).

    Raises NoPositivePairsError when no anchor has a same-class partner.
    """
    if on_no_positive not in ("exclude", "zero"):
        raise ValueError(f"unknown on_no_positive mode {on_no_positive!r}")
    scores, off_diag, positive = _similarity_masks(batch)
    anchors = positive.any(axis=1)
    if not anchors.any():
        raise NoPositivePairsError("every label in the batch is unique")
    log_num = _masked_logsumexp(scores, positive)
    log_den = _masked_logsumexp(scores, off_diag)
    per_anchor = -(log_num - log_den)
    divisor = int(anchors.sum()) if on_no_positive == "exclude" else batch.n
    return float(per_anchor[anchors].sum() / divisor)


def contrastive_grad(batch: FeatureBatch, *, on_no_positive: str = "exclude") -> np.ndarray:
    """Analytic gradient of contrastive_loss w.r.t. every feature row.

    Rows of anchors without positives still receive contributions through
    the other anchors' denominators.
    """
    if on_no_positive not in ("exclude", "zero"):
        raise ValueError(f"unknown on_no_positive mode {on_no_positive!r}")
    scores, off_diag, positive = _similarity_masks(batch)
    anchors = positive.any(axis=1)
    if not anchors.any():
        raise NoPositivePairsError("every label in the batch is unique")
    divisor = int(anchors.sum()) if on_no_positive == "exclude" else batch.n

    def masked_softmax(mask: np.ndarray) -> np.ndarray:
        out = np.zeros_like(scores)
        rows = mask.any(axis=1)
        masked = np.where(mask[rows], scores[rows], -np.inf)
        peak = masked.max(axis=1, keepdims=True)
        e = np.exp(masked - peak, where=mask[rows], out=np.zeros_like(masked))
        out[rows] = e / e.sum(axis=1, keepdims=True)
        return out

    p = masked_softmax(positive)   # softmax over positives (anchor rows)
    q = masked_softmax(off_diag)   # softmax over all non-self entries
    g_scores = np.zeros_like(scores)
    g_scores[anchors] = -(p[anchors] - q[anchors]) / divisor
    grad = (g_scores @ batch.features + g_scores.T @ batch.features) / batch.temperature
    return grad


@dataclass(frozen=True)
class AlignmentBatch:
    """Object features, text features, and the binary alignment target."""

    object_features: np.ndarray
    text_features: np.ndarray
    target: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.object_features, dtype=float)
        t = np.asarray(self.text_features, dtype=float)
        s = np.asarray(self.target, dtype=float)
        if p.ndim != 2 or t.ndim != 2 or p.shape[1] != t.shape[1]:
            raise ValueError("object/text features must share the feature dimension")
        if s.shape != (p.shape[0], t.shape[0]):
            raise ValueError(
                f"target must be ({p.shape[0]}, {t.shape[0]}), got {s.shape}"
            )
        if not np.isin(s, (0.0, 1.0)).all():
            raise ValueError("target matrix must be binary")
        for name, arr in (("object_features", p), ("text_features", t)):
            if not np.isfinite(arr).all():
                raise ValueError(f"{name} contains non-finite entries")
            arr.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "object_features", p)
        object.__setattr__(self, "text_features", t)
        object.__setattr__(self, "target", s)


def alignment_loss(batch: AlignmentBatch) -> float:
    """Mean binary cross-entropy with logits S = P T^T against the target.

    Uses the max(x,0) - x*t + log(1 + exp(-|x|)) form, stable for large
    logits of either sign.
    """
    logits = batch.object_features @ batch.text_features.T
    t = batch.target
    loss = np.maximum(logits, 0.0) - logits * t + np.log1p(np.exp(-np.abs(logits)))
    return float(loss.mean())


@dataclass(frozen=True)
class BoxRegressionBatch:
    """Matched predicted / ground-truth axis-aligned box pairs."""

    predicted: tuple[Box3, ...]
    ground_truth: tuple[Box3, ...]

    def __post_init__(self):
        object.__setattr__(self, "predicted", tuple(self.predicted))
        object.__setattr__(self, "ground_truth", tuple(self.ground_truth))
        if len(self.predicted) != len(self.ground_truth):
            raise ValueError("predicted and ground_truth must pair up")


def localization_loss(
    batch: BoxRegressionBatch,
    weights: tuple[float, float] = DEFAULT_LOC_WEIGHTS,
) -> float:
    """lambda_l1 * mean L1 over (center, size) + lambda_giou * mean (1 - GIoU).

    The L1 term averages |delta| over the six box parameters per pair.
    """
    if not batch.predicted:
        raise EmptyInputError("empty box regression batch")
    lam_l1, lam_giou = weights
    l1_total = 0.0
    giou_total = 0.0
    for pred, gt in zip(batch.predicted, batch.ground_truth):
        diffs = [abs(p - g) for p, g in zip(pred.center, gt.center)]
        diffs += [abs(p - g) for p, g in zip(pred.size, gt.size)]
        l1_total += sum(diffs) / 6.0
        giou_total += 1.0 - giou3d(pred, gt)
    n = len(batch.predicted)
    return lam_l1 * (l1_total / n) + lam_giou * (giou_total / n)
