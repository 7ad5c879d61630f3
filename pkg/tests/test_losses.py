"""Loss numerics against independent high-precision / direct oracles."""

import math

import numpy as np
import pytest

from sceneforge import (
    AlignmentBatch,
    Box3,
    BoxRegressionBatch,
    EmptyInputError,
    FeatureBatch,
    NoPositivePairsError,
    alignment_loss,
    contrastive_grad,
    contrastive_loss,
    localization_loss,
)

from oracles import (
    contrastive_naive,
    contrastive_oracle_mpmath,
    finite_difference_grad,
    max_rel_err,
    random_batch,
)


class TestContrastiveLoss:
    def test_two_same_class_is_zero(self, rng):
        batch = FeatureBatch(rng.standard_normal((2, 4)), ("A", "A"), ("x", "y"), 1.0)
        assert contrastive_loss(batch) == 0.0

    def test_three_element_fixture(self):
        batch = FeatureBatch(
            np.array([[1.0], [1.0], [0.0]]), ("A", "A", "B"), ("s", "s", "t"), 1.0
        )
        expected = -math.log(math.e / (math.e + 1.0))
        assert contrastive_loss(batch) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.313262, abs=1e-6)

    def test_all_distinct_labels(self, rng):
        batch = FeatureBatch(rng.standard_normal((4, 3)), (1, 2, 3, 4), ("s",) * 4, 0.07)
        with pytest.raises(NoPositivePairsError):
            contrastive_loss(batch)

    def test_matches_mpmath_oracle(self, rng):
        for _ in range(50):
            batch = random_batch(rng)
            expected = contrastive_oracle_mpmath(
                batch.features, batch.labels, batch.temperature
            )
            assert contrastive_loss(batch) == pytest.approx(expected, abs=1e-9)

    def test_lse_matches_naive_when_safe(self, rng):
        for _ in range(100):
            batch = random_batch(rng, taus=(0.5, 1.0))
            naive = contrastive_naive(batch.features, batch.labels, batch.temperature)
            assert contrastive_loss(batch) == pytest.approx(naive, abs=1e-9)

    def test_loss_nonnegative(self, rng):
        for _ in range(200):
            batch = random_batch(rng)
            assert contrastive_loss(batch) >= 0.0

    def test_stable_for_extreme_logits(self):
        # naive path overflows (exp(4000)); stabilized path must not
        batch = FeatureBatch(
            np.array([[200.0], [200.0], [-200.0]]), ("A", "A", "B"), ("s",) * 3, 0.05
        )
        value = contrastive_loss(batch)
        assert math.isfinite(value) and value >= 0.0

    def test_permutation_invariance(self, rng):
        for _ in range(100):
            batch = random_batch(rng)
            perm = rng.permutation(batch.n)
            shuffled = FeatureBatch(
                batch.features[perm],
                tuple(batch.labels[i] for i in perm),
                tuple(batch.sources[i] for i in perm),
                batch.temperature,
            )
            assert abs(contrastive_loss(batch) - contrastive_loss(shuffled)) <= 1e-12

    def test_temperature_scale_duality(self, rng):
        for _ in range(100):
            batch = random_batch(rng, taus=(0.5, 1.0))
            c = float(rng.uniform(0.5, 2.0))
            scaled = FeatureBatch(
                batch.features * math.sqrt(c),
                batch.labels,
                batch.sources,
                batch.temperature,
            )
            retempered = FeatureBatch(
                batch.features, batch.labels, batch.sources, batch.temperature / c
            )
            assert contrastive_loss(scaled) == pytest.approx(
                contrastive_loss(retempered), abs=1e-9
            )

    def test_sources_never_affect_loss(self, rng):
        for _ in range(100):
            batch = random_batch(rng)
            reshuffled = FeatureBatch(
                batch.features,
                batch.labels,
                tuple(reversed(batch.sources)),
                batch.temperature,
            )
            assert contrastive_loss(batch) == contrastive_loss(reshuffled)

    def test_zero_mode_divides_by_n(self):
        batch = FeatureBatch(
            np.array([[1.0], [1.0], [0.0]]), ("A", "A", "B"), ("s",) * 3, 1.0
        )
        excl = contrastive_loss(batch, on_no_positive="exclude")
        zero = contrastive_loss(batch, on_no_positive="zero")
        assert zero == pytest.approx(excl * 2 / 3, abs=1e-12)


class TestContrastiveGrad:
    def test_two_same_class_zero_gradient(self, rng):
        # loss is identically zero in this configuration
        batch = FeatureBatch(rng.standard_normal((2, 5)), ("A", "A"), ("x", "y"), 0.5)
        assert np.allclose(contrastive_grad(batch), 0.0, atol=1e-15)

    def test_matches_finite_differences(self, rng):
        for _ in range(20):
            batch = random_batch(rng, n_max=8, d_max=4, taus=(0.5, 1.0))
            grad = contrastive_grad(batch)
            fd = finite_difference_grad(batch)
            assert max_rel_err(grad, fd) <= 1e-5

    def test_excluded_anchor_rows_receive_gradient(self, rng):
        # anchor 3 (label B) has no positives but appears in others'
        # denominators, so its feature still gets a nonzero gradient
        batch = FeatureBatch(
            np.array([[1.0, 0.2], [0.8, -0.1], [0.3, 0.9]]),
            ("A", "A", "B"),
            ("s",) * 3,
            0.5,
        )
        grad = contrastive_grad(batch)
        fd = finite_difference_grad(batch)
        assert max_rel_err(grad, fd) <= 1e-5
        assert np.abs(grad[2]).max() > 1e-6


class TestAlignmentLoss:
    def test_zero_logits(self):
        batch = AlignmentBatch(np.zeros((3, 4)), np.zeros((2, 4)), np.zeros((3, 2)))
        assert alignment_loss(batch) == pytest.approx(math.log(2.0), abs=1e-12)

    def test_saturated_logits(self):
        p = np.array([[100.0], [-100.0]])
        t = np.array([[1.0]])
        target = np.array([[1.0], [0.0]])
        batch = AlignmentBatch(p, t, target)
        assert alignment_loss(batch) <= 1e-12

    def test_matches_direct_evaluation(self, rng):
        for _ in range(50):
            n, m, d = (int(v) for v in rng.integers(1, 6, 3))
            p = rng.standard_normal((n, d))
            t = rng.standard_normal((m, d))
            target = (rng.random((n, m)) < 0.5).astype(float)
            batch = AlignmentBatch(p, t, target)
            total = 0.0
            for i in range(n):
                for j in range(m):
                    x = float(np.dot(p[i], t[j]))
                    sig = 1.0 / (1.0 + math.exp(-x))
                    y = target[i, j]
                    total += -(y * math.log(sig) + (1 - y) * math.log(1 - sig))
            assert alignment_loss(batch) == pytest.approx(total / (n * m), abs=1e-12)

    def test_binary_target_enforced(self):
        with pytest.raises(ValueError):
            AlignmentBatch(np.zeros((1, 2)), np.zeros((1, 2)), np.array([[0.5]]))


class TestLocalizationLoss:
    def test_perfect_predictions(self):
        boxes = (Box3((0, 0, 0), (1, 1, 1)), Box3((2, 0, 0), (1, 2, 1)))
        batch = BoxRegressionBatch(boxes, boxes)
        assert localization_loss(batch) == 0.0

    def test_unit_offset_closed_form(self):
        pred = (Box3((1.0, 0, 0), (1, 1, 1)),)
        gt = (Box3((0.0, 0, 0), (1, 1, 1)),)
        batch = BoxRegressionBatch(pred, gt)
        # L1 = 1/6 over the six parameters; face-to-face GIoU = 0
        assert localization_loss(batch) == pytest.approx(5.0 / 6.0 + 2.0, abs=1e-12)

    def test_nonnegative(self, rng):
        from helpers import random_box

        for _ in range(100):
            pred = tuple(random_box(rng) for _ in range(3))
            gt = tuple(random_box(rng) for _ in range(3))
            assert localization_loss(BoxRegressionBatch(pred, gt)) >= 0.0

    def test_matches_direct_evaluation(self, rng):
        from helpers import random_box

        def giou_direct(p, g):
            lo_p = np.array(p.center) - np.array(p.size) / 2
            hi_p = np.array(p.center) + np.array(p.size) / 2
            lo_g = np.array(g.center) - np.array(g.size) / 2
            hi_g = np.array(g.center) + np.array(g.size) / 2
            widths = np.minimum(hi_p, hi_g) - np.maximum(lo_p, lo_g)
            inter = float(np.prod(widths)) if (widths > 0).all() else 0.0
            union = float(np.prod(hi_p - lo_p)) + float(np.prod(hi_g - lo_g)) - inter
            hull = float(np.prod(np.maximum(hi_p, hi_g) - np.minimum(lo_p, lo_g)))
            return inter / union - (hull - union) / hull

        for _ in range(50):
            n = int(rng.integers(1, 5))
            pred = tuple(random_box(rng) for _ in range(n))
            gt = tuple(random_box(rng) for _ in range(n))
            lam1, lam2 = float(rng.uniform(0, 6)), float(rng.uniform(0, 4))
            expected = 0.0
            for p, g in zip(pred, gt):
                l1 = sum(
                    abs(a - b)
                    for a, b in zip(p.center + p.size, g.center + g.size)
                ) / 6.0
                expected += lam1 * l1 / n + lam2 * (1.0 - giou_direct(p, g)) / n
            got = localization_loss(BoxRegressionBatch(pred, gt), (lam1, lam2))
            assert got == pytest.approx(expected, abs=1e-12)

    def test_custom_weights(self):
        pred = (Box3((1.0, 0, 0), (1, 1, 1)),)
        gt = (Box3((0.0, 0, 0), (1, 1, 1)),)
        batch = BoxRegressionBatch(pred, gt)
        assert localization_loss(batch, weights=(6.0, 0.0)) == pytest.approx(1.0, abs=1e-12)

    def test_empty_batch(self):
        with pytest.raises(EmptyInputError):
            localization_loss(BoxRegressionBatch((), ()))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            BoxRegressionBatch((Box3((0, 0, 0), (1, 1, 1)),), ())
