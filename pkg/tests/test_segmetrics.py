import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as npst

from periscreen.errors import ValidationError
from periscreen.masks import BinaryMask, ProbabilityMap
from periscreen.segmetrics import (
    auc_trapezoid,
    confusion_counts,
    implied_prevalence,
    iou,
    mean_iou,
    pooled_roc,
    pr_curve,
    RocCurve,
)


def mask(rows) -> BinaryMask:
    return BinaryMask(np.array(rows, dtype=bool))


def pmap(rows) -> ProbabilityMap:
    return ProbabilityMap(np.array(rows, dtype=float))


class TestConfusionCounts:
    def test_identity_prediction(self):
        m = mask([[1, 0], [0, 1]])
        c = confusion_counts(m, m)
        assert (c.fp, c.fn) == (0, 0)
        assert (c.tp, c.tn) == (2, 2)

    def test_complement_prediction(self):
        truth = mask([[1, 0], [0, 1]])
        pred = mask([[0, 1], [1, 0]])
        c = confusion_counts(pred, truth)
        assert (c.tp, c.tn) == (0, 0)
        assert (c.fp, c.fn) == (2, 2)

    def test_four_pixel_hand_enumeration(self):
        pred = mask([[1, 1, 0, 0]])
        truth = mask([[1, 0, 1, 0]])
        c = confusion_counts(pred, truth)
        assert (c.tp, c.fp, c.fn, c.tn) == (1, 1, 1, 1)

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            confusion_counts(mask([[1, 0]]), mask([[1], [0]]))

    def test_undefined_rates_are_none(self):
        c = confusion_counts(mask([[0, 0]]), mask([[0, 0]]))
        assert c.tpr is None
        assert c.precision is None
        assert c.fpr == 0.0

    def test_totals_cover_frame(self):
        pred = mask(np.zeros((480, 640)))
        truth = mask(np.ones((480, 640)))
        assert confusion_counts(pred, truth).total == 640 * 480


class TestPooledRoc:
    def test_binary_three_point_curve(self):
        # one 1000-pixel frame tuned to tpr=0.429, fpr=0.075
        # positives: 429 of 1000... use 1000 positives + 1000 negatives
        pos_hits, pos_total = 429, 1000
        neg_hits, neg_total = 75, 1000
        truth_row = [1] * pos_total + [0] * neg_total
        pred_row = [1] * pos_hits + [0] * (pos_total - pos_hits) + [1] * neg_hits + [0] * (
            neg_total - neg_hits
        )
        curve = pooled_roc([mask([pred_row])], [mask([truth_row])])
        assert curve.points == ((0.0, 0.0), (0.075, 0.429), (1.0, 1.0))
        assert auc_trapezoid(curve) == pytest.approx(0.677, abs=5e-4)

    def test_perfect_scores_pass_through_corner(self):
        truth = mask([[1, 1, 0, 0]])
        scores = pmap([[0.9, 0.8, 0.2, 0.1]])
        curve = pooled_roc([scores], [truth])
        assert (0.0, 1.0) in curve.points
        assert auc_trapezoid(curve) == 1.0

    def test_constant_scores_collapse_to_anchors(self):
        truth = mask([[1, 0, 1, 0]])
        scores = pmap([[0.5, 0.5, 0.5, 0.5]])
        curve = pooled_roc([scores], [truth])
        assert curve.points == ((0.0, 0.0), (1.0, 1.0))
        assert auc_trapezoid(curve) == pytest.approx(0.5)

    def test_single_class_rejected(self):
        with pytest.raises(ValidationError):
            pooled_roc([mask([[1, 0]])], [mask([[1, 1]])])

    def test_pools_across_images(self):
        truths = [mask([[1, 0]]), mask([[1, 0]])]
        preds = [pmap([[0.9, 0.2]]), pmap([[0.6, 0.7]])]
        curve = pooled_roc(preds, truths)
        # thresholds: inf anchor then descending unique scores
        assert curve.thresholds[0] == math.inf
        assert list(curve.thresholds[1:]) == [0.9, 0.7, 0.6, 0.2]

    @given(
        scores=npst.arrays(
            float, (3, 8), elements=st.floats(0.01, 0.99, allow_nan=False)
        ),
        labels=npst.arrays(bool, (3, 8)),
    )
    @settings(max_examples=60, deadline=None)
    def test_rank_invariance_under_monotone_transform(self, scores, labels):
        if labels.all() or not labels.any():
            return
        truth = [mask(labels)]
        base = auc_trapezoid(pooled_roc([pmap(scores)], truth))
        cubed = auc_trapezoid(pooled_roc([pmap(scores**3)], truth))
        shrunk = auc_trapezoid(pooled_roc([pmap(0.5 + scores / 4)], truth))
        assert base == pytest.approx(cubed, abs=1e-12)
        assert base == pytest.approx(shrunk, abs=1e-12)

    def test_binary_auc_matches_closed_form(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            truth_bits = rng.random((4, 6)) < 0.4
            pred_bits = rng.random((4, 6)) < 0.5
            if truth_bits.all() or not truth_bits.any():
                continue
            curve = pooled_roc([mask(pred_bits)], [mask(truth_bits)])
            assert len(curve.points) in (2, 3)
            if len(curve.points) == 3:
                (fpr, tpr) = curve.points[1]
                assert auc_trapezoid(curve) == pytest.approx(
                    (tpr - fpr + 1) / 2, abs=1e-12
                )


class TestAuc:
    def test_reference_operating_point(self):
        curve = RocCurve(
            points=((0.0, 0.0), (0.075, 0.429), (1.0, 1.0)),
            thresholds=(math.inf, 1.0, 0.0),
        )
        assert auc_trapezoid(curve) == pytest.approx(0.677, abs=5e-4)
        assert auc_trapezoid(curve) == pytest.approx((0.429 - 0.075 + 1) / 2, abs=1e-12)

    def test_diagonal_is_chance(self):
        curve = RocCurve(points=((0.0, 0.0), (1.0, 1.0)), thresholds=(math.inf, 0.0))
        assert auc_trapezoid(curve) == pytest.approx(0.5)

    def test_perfect_corner(self):
        curve = RocCurve(
            points=((0.0, 0.0), (0.0, 1.0), (1.0, 1.0)), thresholds=(math.inf, 1.0, 0.0)
        )
        assert auc_trapezoid(curve) == pytest.approx(1.0)

    def test_monotonicity_enforced(self):
        with pytest.raises(ValidationError):
            RocCurve(
                points=((0.0, 0.0), (0.5, 0.9), (0.4, 1.0), (1.0, 1.0)),
                thresholds=(math.inf, 0.7, 0.3, 0.0),
            )


class TestPrCurve:
    def test_reference_operating_point_present(self):
        pos_hits, pos_total = 429, 1000
        # precision 0.271 => total predicted = 429 / 0.271 ~ 1583; fp = 1154
        fp = round(pos_hits / 0.271) - pos_hits
        truth_row = [1] * pos_total + [0] * (fp + 1000)
        pred_row = [1] * pos_hits + [0] * (pos_total - pos_hits) + [1] * fp + [0] * 1000
        curve = pr_curve([mask([pred_row])], [mask([truth_row])])
        interior = curve.points[1]
        assert interior[0] == pytest.approx(0.429, abs=5e-4)
        assert interior[1] == pytest.approx(0.271, abs=5e-4)

    def test_perfect_classifier_reaches_one_one(self):
        truth = mask([[1, 1, 0, 0]])
        curve = pr_curve([pmap([[0.9, 0.8, 0.1, 0.2]])], [truth])
        assert (1.0, 1.0) in curve.points

    def test_all_positive_prediction_hits_prevalence(self):
        truth = mask([[1, 0, 0, 0]])
        curve = pr_curve([mask([[1, 1, 1, 1]])], [truth])
        assert curve.points[-1] == (1.0, 0.25)

    def test_zero_prediction_convention_flagged(self):
        curve = pr_curve([pmap([[0.4, 0.6]])], [mask([[1, 0]])])
        assert curve.zero_prediction_convention
        assert curve.points[0] == (0.0, 1.0)

    def test_no_positive_truth_rejected(self):
        with pytest.raises(ValidationError):
            pr_curve([pmap([[0.4, 0.6]])], [mask([[0, 0]])])


class TestIou:
    def test_identical_masks(self):
        m = mask([[1, 1], [0, 1]])
        assert iou(m, m) == 1.0

    def test_disjoint_masks(self):
        assert iou(mask([[1, 0]]), mask([[0, 1]])) == 0.0

    def test_half_frame_overlap(self):
        left = np.zeros((480, 640), dtype=bool)
        left[:, :320] = True
        full = np.ones((480, 640), dtype=bool)
        assert iou(BinaryMask(left), BinaryMask(full)) == pytest.approx(
            153600 / 307200
        )

    def test_both_empty_convention(self):
        empty = mask([[0, 0]])
        assert iou(empty, empty) == 1.0

    @given(
        a=npst.arrays(bool, (5, 7)),
        b=npst.arrays(bool, (5, 7)),
    )
    @settings(max_examples=100, deadline=None)
    def test_symmetry_range_identity(self, a, b):
        ma, mb = BinaryMask(a), BinaryMask(b)
        v = iou(ma, mb)
        assert 0.0 <= v <= 1.0
        assert v == iou(mb, ma)
        assert iou(ma, ma) == 1.0


class TestMeanIou:
    def test_identical_pairs(self):
        m = mask([[1, 0]])
        assert mean_iou([(m, m), (m, m)]) == (1.0, 0.0)

    def test_two_point_sample_sd(self):
        same = mask([[1, 0]])
        other = mask([[0, 1]])
        m, sd = mean_iou([(same, same), (same, other)])
        assert m == pytest.approx(0.5)
        assert sd == pytest.approx(math.sqrt(0.5), abs=1e-12)

    def test_singleton_sd_zero(self):
        m = mask([[1, 0]])
        assert mean_iou([(m, m)]) == (1.0, 0.0)

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            mean_iou([])


class TestImpliedPrevalence:
    def test_reference_metrics_are_consistent(self):
        pi = implied_prevalence(0.429, 0.075, 0.271)
        assert 0.055 <= pi <= 0.067
        assert pi == pytest.approx(0.0610, abs=5e-4)

    def test_balanced_case(self):
        tpr, fpr = 0.8, 0.3
        precision = tpr * 0.5 / (tpr * 0.5 + fpr * 0.5)
        assert implied_prevalence(tpr, fpr, precision) == pytest.approx(0.5, rel=1e-12)

    def test_high_precision_limit(self):
        pi = implied_prevalence(0.5, 0.01, 0.999999)
        assert 0.9 < pi < 1.0

    def test_rejects_boundary_inputs(self):
        with pytest.raises(ValidationError):
            implied_prevalence(1.0, 0.1, 0.5)
        with pytest.raises(ValidationError):
            implied_prevalence(0.5, 0.0, 0.5)

    @given(
        tpr=st.floats(0.01, 0.99), fpr=st.floats(0.01, 0.99),
        pi=st.floats(0.01, 0.99),
    )
    @settings(max_examples=100, deadline=None)
    def test_round_trips_the_definition(self, tpr, fpr, pi):
        precision = tpr * pi / (tpr * pi + fpr * (1 - pi))
        assert implied_prevalence(tpr, fpr, precision) == pytest.approx(pi, rel=1e-9)
