"""Acceptance criteria, one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines alongside pytest's own pass/fail report.
"""

import math
import random
import time

import numpy as np
import pytest

import oracles
from periscreen.cooccurrence import TableScheme, comparison_table, run_grid
from periscreen.dataio import ingest
from periscreen.masks import BinaryMask, ProbabilityMap
from periscreen.masksynth import (
    ColorThresholdConfig,
    RgbImage,
    bound_annotations,
    color_threshold_mask,
)
from periscreen.annotations import AnnotationSite, SiteMark
from periscreen.model import DERIVED_FIELDS, QUESTIONNAIRE_FIELDS
from periscreen.reports import build_report_bundle, write_report_bundle
from periscreen.segmetrics import (
    auc_trapezoid,
    implied_prevalence,
    iou,
    pooled_roc,
)
from periscreen.stats import (
    ContingencyTable,
    SummaryStats,
    TailMode,
    fisher_exact,
    student_t_sf,
    welch_t_from_summary,
)
from periscreen.synthetic import write_reference_dataset

# The calibrated reproduction convention (see docs/tail_calibration.md):
# two-sided tail everywhere; condition-grid counts compare as ratio pairs,
# demographic counts as complements.
PUBLISHED_FISHER = [
    ((14, 16, 56, 198), TableScheme.RATIO_PAIRS, 0.0422, 5e-4),
    ((2, 28, 1, 253), TableScheme.RATIO_PAIRS, 0.0337, 5e-4),
    ((67, 100, 25, 92), TableScheme.COMPLEMENT, 0.0012, 5e-4),
    ((58, 59, 62, 105), TableScheme.COMPLEMENT, 0.0389, 5e-4),
]
PUBLISHED_FISHER_UPPER_BOUND = ((5, 34, 0, 245), TableScheme.RATIO_PAIRS, 1e-4)


def ok(name: str):
    print(f"\nACCEPTANCE {name}: PASS")


class TestAcceptance:
    def test_fisher_reproduction_suite(self):
        start = time.perf_counter()
        for (a, b, c, d), scheme, expected, tol in PUBLISHED_FISHER:
            table = comparison_table(ContingencyTable(a, b, c, d), scheme)
            p = fisher_exact(table, TailMode.TWO_SIDED).p_value
            assert p == pytest.approx(expected, abs=tol), (a, b, c, d)
        (a, b, c, d), scheme, bound = PUBLISHED_FISHER_UPPER_BOUND
        table = comparison_table(ContingencyTable(a, b, c, d), scheme)
        assert fisher_exact(table, TailMode.TWO_SIDED).p_value < bound
        elapsed = time.perf_counter() - start
        assert elapsed < 1.0, f"suite took {elapsed:.3f}s"
        ok(f"fisher-reproduction ({elapsed * 1000:.0f} ms)")

    def test_fisher_oracle_equivalence(self):
        start = time.perf_counter()
        checked = 0
        for n in range(1, 31):  # full sweep over every table with N <= 30
            for a in range(n + 1):
                for b in range(n - a + 1):
                    for c in range(n - a - b + 1):
                        d = n - a - b - c
                        got = fisher_exact(ContingencyTable(a, b, c, d)).p_value
                        want = oracles.fisher_two_sided(a, b, c, d)
                        assert abs(got - want) < 1e-10, (a, b, c, d)
                        checked += 1
        rng = random.Random(20240515)
        for _ in range(10_000):
            n = rng.randint(1, 500)
            a = rng.randint(0, n)
            b = rng.randint(0, n - a)
            c = rng.randint(0, n - a - b)
            d = n - a - b - c
            got = fisher_exact(ContingencyTable(a, b, c, d)).p_value
            want = oracles.fisher_two_sided(a, b, c, d)
            assert abs(got - want) < 1e-10, (a, b, c, d)
            checked += 1
        elapsed = time.perf_counter() - start
        assert elapsed < 60.0, f"oracle sweep took {elapsed:.1f}s"
        ok(f"fisher-oracle-equivalence ({checked} tables, {elapsed:.1f} s)")

    def test_grid_end_to_end(self, cohort_aligned):
        subjects, _, mgi = cohort_aligned
        questionnaire = run_grid(subjects, mgi, conditions=QUESTIONNAIRE_FIELDS, alpha=0.05)
        screening = run_grid(subjects, mgi, conditions=DERIVED_FIELDS, alpha=0.05)
        q_stars = {(c.mgi_level, c.condition) for c in questionnaire.significant_cells()}
        s_stars = {(c.mgi_level, c.condition) for c in screening.significant_cells()}
        assert q_stars == {(4, "swollen_joints"), (4, "fh_eye_disease")}
        assert s_stars == {(1, "retinal")}
        ok("grid-end-to-end")

    def test_auc_reproduction(self):
        tpr, fpr = 0.429, 0.075
        pos, neg = 1000, 1000
        truth = BinaryMask(np.array([[1] * pos + [0] * neg], dtype=bool))
        pred = BinaryMask(
            np.array(
                [[1] * 429 + [0] * (pos - 429) + [1] * 75 + [0] * (neg - 75)], dtype=bool
            )
        )
        curve = pooled_roc([pred], [truth])
        assert curve.points == ((0.0, 0.0), (fpr, tpr), (1.0, 1.0))
        auc = auc_trapezoid(curve)
        assert auc == pytest.approx(0.677, abs=5e-4)
        assert auc == pytest.approx((tpr - fpr + 1) / 2, abs=1e-12)
        ok(f"auc-reproduction (auc={auc:.4f})")

    def test_metric_consistency(self):
        pi = implied_prevalence(0.429, 0.075, 0.271)
        assert 0.055 <= pi <= 0.067
        assert pi == pytest.approx(0.0610, abs=5e-4)
        ok(f"metric-consistency (implied prevalence={pi:.4f})")

    def test_special_functions(self):
        worst = 0.0
        for df in (1, 2, 5, 10, 100, 1000):
            for ti in range(-100, 101):
                t = ti / 10.0
                got = student_t_sf(t, float(df))
                want = oracles.t_sf_quadrature(t, df)
                worst = max(worst, abs(got - want))
                assert abs(got - want) < 1e-8, (t, df)
        for t in (-5.0, -1.0, 0.5, 1.0, 3.0, 10.0):  # Cauchy closed form
            assert student_t_sf(t, 1.0) == pytest.approx(
                0.5 - math.atan(t) / math.pi, abs=1e-12
            )
        ok(f"special-functions (worst |err| = {worst:.2e})")

    def test_welch_check(self):
        g1 = SummaryStats(0.1824, 0.1547, 405)
        g2 = SummaryStats(0.1710, 0.1544, 810)
        result = welch_t_from_summary(g1, g2)
        want = oracles.welch_p_two_sided(0.1824, 0.1547, 405, 0.1710, 0.1544, 810)
        assert result.p_value == pytest.approx(want, abs=1e-8)
        # The study reported p = 0.4099 for this comparison without stating
        # the sample sizes actually used; from the published summaries the
        # test gives a different value. Recorded, not forced.
        published = 0.4099
        agreement = abs(result.p_value - published) < 5e-4
        ok(
            "welch-check "
            f"(p={result.p_value:.4f} vs oracle ok; published {published} "
            f"{'matches' if agreement else 'differs - documented discrepancy'})"
        )

    def test_table_regeneration(self, tmp_path):
        outputs = []
        for run in ("one", "two"):
            data_dir = tmp_path / f"data_{run}"
            paths = write_reference_dataset(data_dir, alignment="cohort")
            dataset = ingest(
                paths["subjects"], paths["questionnaire"], paths["screenings"],
                paths["annotations"],
            )
            bundle = build_report_bundle(dataset)
            assert bundle.distribution.histogram() == (2, 39, 120, 92, 30, 1)
            from periscreen.model import Gender

            assert bundle.distribution.count(gender=Gender.FEMALE) == 117
            assert bundle.distribution.count(gender=Gender.MALE) == 167
            assert bundle.distribution.count() == 284
            outputs.append(write_report_bundle(bundle, tmp_path / f"report_{run}"))
        for p1, p2 in zip(*outputs):
            assert p1.read_bytes() == p2.read_bytes(), p1.name
        ok("table-regeneration (byte-identical reruns)")

    def test_segmentation_property_suite(self):
        rng = np.random.default_rng(20240601)

        # IOU symmetry / range / identity on random small masks
        for _ in range(100):
            a = BinaryMask(rng.random((6, 9)) < rng.random())
            b = BinaryMask(rng.random((6, 9)) < rng.random())
            v = iou(a, b)
            assert 0.0 <= v <= 1.0
            assert v == iou(b, a)
            assert iou(a, a) == 1.0

        # ROC rank invariance under monotone transforms
        for _ in range(40):
            scores = rng.random((4, 7)) * 0.98 + 0.01
            labels = rng.random((4, 7)) < 0.5
            if labels.all() or not labels.any():
                continue
            truths = [BinaryMask(labels)]
            base = auc_trapezoid(pooled_roc([ProbabilityMap(scores)], truths))
            for transform in (lambda s: s**3, lambda s: 0.2 + 0.6 * s, lambda s: s**0.5):
                transformed = auc_trapezoid(
                    pooled_roc([ProbabilityMap(transform(scores))], truths)
                )
                assert transformed == pytest.approx(base, abs=1e-12)

        # mask synthesis: containment and monotonicity on randomized fixtures
        arr = (rng.random((480, 640, 3)) * 255).astype(np.uint8)
        image = RgbImage(arr)
        for case in range(100):
            n_points = int(rng.integers(1, 7))
            points = tuple(
                (float(rng.uniform(0, 639)), float(rng.uniform(0, 479)))
                for _ in range(n_points)
            )
            mark = SiteMark(site=AnnotationSite.GINGIVAL_MARGIN, points=points, diseased=True)
            radius = int(rng.integers(0, 40))
            region = bound_annotations([mark], radius)
            raster = region.rasterize()
            threshold = float(rng.uniform(0.6, 1.6))
            loose = color_threshold_mask(
                image, region, ColorThresholdConfig(redness_ratio_min=threshold, min_component_px=0)
            )
            strict = color_threshold_mask(
                image, region,
                ColorThresholdConfig(redness_ratio_min=threshold + 0.3, min_component_px=0),
            )
            # containment in the region
            assert np.array_equal(loose.pixels & raster, loose.pixels)
            # threshold monotonicity
            assert np.array_equal(strict.pixels & loose.pixels, strict.pixels)
            # dilation monotonicity
            bigger = bound_annotations([mark], radius + 8).rasterize()
            assert np.array_equal(raster & bigger, raster)
        ok("segmentation-property-suite (100 randomized fixtures)")

    def test_calibration_report_artifact_current(self):
        # the committed report must match what the generator produces today
        import importlib.util
        import pathlib

        repo = pathlib.Path(__file__).resolve().parents[1]
        committed = repo / "docs" / "tail_calibration.md"
        assert committed.is_file(), "calibration report missing; run tools/make_calibration_report.py"
        spec = importlib.util.spec_from_file_location(
            "make_calibration_report", repo / "tools" / "make_calibration_report.py"
        )
        module = importlib.util.module_from_spec(spec)
        spec.loader.exec_module(module)
        assert committed.read_text(encoding="utf-8") == module.render()
        ok("calibration-report-artifact")

    def test_runs_without_secondary_component(self):
        # the primary suite must not touch the browser portal: no module in
        # the package imports from or shells out to the frontend build
        import pathlib

        pkg_root = pathlib.Path(__file__).resolve().parents[1] / "src" / "periscreen"
        for path in pkg_root.rglob("*.py"):
            text = path.read_text(encoding="utf-8")
            assert "frontend" not in text, path
        ok("independent-of-secondary")
