"""Report regeneration: severity distribution, condition grids, curve files.

All outputs are machine-readable CSV/JSON and deterministic: repeated runs
on identical inputs and configuration are byte-identical. Counts render as
"14 (46.7)" with a star suffix on significant cells; percentages use
round-half-away-from-zero to one decimal, with bare "0" and "100" at the
extremes.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .annotations import MGI_MAX, MGI_MIN, subject_mgi_table
from .cooccurrence import (
    CorrelationGrid,
    TableScheme,
    run_grid,
    run_stratified_grids,
)
from .dataio import Dataset
from .errors import ValidationError
from .model import (
    DERIVED_FIELDS,
    QUESTIONNAIRE_FIELDS,
    AgeCohort,
    Gender,
    SubjectRecord,
    assign_age_cohort,
)
from .segmetrics import PrCurve, RocCurve, auc_trapezoid
from .stats import TailMode

__all__ = [
    "MgiDistribution",
    "ReportBundle",
    "format_count_pct",
    "build_mgi_distribution",
    "build_report_bundle",
    "grid_to_json",
    "grid_to_csv_rows",
    "write_report_bundle",
    "emit_curves",
]

_GENDERS = (Gender.FEMALE, Gender.MALE)
_COHORTS = tuple(AgeCohort)
_LEVELS = tuple(range(MGI_MIN, MGI_MAX + 1))


@dataclass(frozen=True)
class MgiDistribution:
    """Subject counts by (severity, gender, age cohort), with totals."""

    counts: Mapping[tuple[int, Gender, AgeCohort], int]

    def count(
        self,
        mgi: int | None = None,
        gender: Gender | None = None,
        cohort: AgeCohort | None = None,
    ) -> int:
        total = 0
        for (m, g, c), n in self.counts.items():
            if mgi is not None and m != mgi:
                continue
            if gender is not None and g is not gender:
                continue
            if cohort is not None and c is not cohort:
                continue
            total += n
        return total

    def histogram(self) -> tuple[int, ...]:
        return tuple(self.count(mgi=m) for m in _LEVELS)

    def to_rows(self) -> list[list[str]]:
        header = ["mgi"]
        for cohort in _COHORTS:
            for gender in _GENDERS:
                header.append(f"{cohort.value}_{gender.value}")
            header.append(f"{cohort.value}_total")
        header += ["all_female", "all_male", "all_total"]
        rows = [header]
        for m in _LEVELS:
            row = [str(m)]
            for cohort in _COHORTS:
                for gender in _GENDERS:
                    row.append(str(self.count(mgi=m, gender=gender, cohort=cohort)))
                row.append(str(self.count(mgi=m, cohort=cohort)))
            row += [
                str(self.count(mgi=m, gender=Gender.FEMALE)),
                str(self.count(mgi=m, gender=Gender.MALE)),
                str(self.count(mgi=m)),
            ]
            rows.append(row)
        totals = ["total"]
        for cohort in _COHORTS:
            for gender in _GENDERS:
                totals.append(str(self.count(gender=gender, cohort=cohort)))
            totals.append(str(self.count(cohort=cohort)))
        totals += [
            str(self.count(gender=Gender.FEMALE)),
            str(self.count(gender=Gender.MALE)),
            str(self.count()),
        ]
        rows.append(totals)
        return rows


@dataclass(frozen=True)
class ReportBundle:
    distribution: MgiDistribution
    questionnaire_grid: CorrelationGrid
    screening_grid: CorrelationGrid
    stratified_grids: tuple[CorrelationGrid, ...]
    metadata: dict


def build_mgi_distribution(
    subjects: Sequence[SubjectRecord], mgi_by_subject: Mapping[str, int]
) -> MgiDistribution:
    counts: dict[tuple[int, Gender, AgeCohort], int] = {}
    for s in subjects:
        mgi = mgi_by_subject.get(s.subject_id)
        if mgi is None:
            continue
        key = (mgi, s.gender, assign_age_cohort(s.age))
        counts[key] = counts.get(key, 0) + 1
    return MgiDistribution(counts=counts)


def format_count_pct(count: int, denominator: int, significant: bool = False) -> str:
    """Render "count (pct)" with the study tables' formatting rules."""
    if denominator <= 0:
        raise ValidationError("denominator must be positive")
    if count == 0:
        pct = "0"
    elif count == denominator:
        pct = "100"
    else:
        # round half away from zero at one decimal
        pct = f"{math.floor(1000.0 * count / denominator + 0.5) / 10.0:.1f}"
    star = "*" if significant else ""
    return f"{count} ({pct}){star}"


def grid_to_json(grid: CorrelationGrid) -> dict:
    """Serialization schema for one grid; key order is canonical."""
    return {
        "filter": grid.filter.describe(),
        "alpha": grid.alpha,
        "tail": grid.tail.value,
        "scheme": grid.scheme.value,
        "population_size": grid.population_size,
        "cells": [
            {
                "mgi": c.mgi_level,
                "condition": c.condition,
                "table": [c.table.a, c.table.b, c.table.c, c.table.d],
                "p_value": c.result.p_value,
                "odds_ratio": _json_float(c.result.statistic),
                "significant": c.significant,
            }
            for c in grid.cells
        ],
        "skipped": [
            {"mgi": s.mgi_level, "condition": s.condition, "reason": s.reason}
            for s in grid.skipped
        ],
    }


def _json_float(v: float):
    if math.isnan(v):
        return None
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def grid_to_csv_rows(grid: CorrelationGrid, conditions: Sequence[str]) -> list[list[str]]:
    """Rows of "count (pct)*" cells, severities down, conditions across."""
    by_key = {(c.mgi_level, c.condition): c for c in grid.cells}
    rows = [["mgi", "n_subjects", *conditions]]
    for level in grid.levels():
        level_total = next(
            (c.table.row1 for c in grid.cells if c.mgi_level == level), 0
        )
        row = [str(level), str(level_total)]
        for condition in conditions:
            cell = by_key.get((level, condition))
            if cell is None:
                row.append("n/a")
            else:
                row.append(format_count_pct(cell.table.a, cell.table.row1, cell.significant))
        rows.append(row)
    return rows


def build_report_bundle(
    dataset: Dataset,
    alpha: float = 0.05,
    tail: TailMode = TailMode.TWO_SIDED,
    scheme: TableScheme = TableScheme.RATIO_PAIRS,
    strata: str | None = None,
) -> ReportBundle:
    """Aggregate severity scores and regenerate every report table."""
    mgi_by_subject = subject_mgi_table(dataset.annotations)
    skipped_subjects = sorted(dataset.subject_ids() - mgi_by_subject.keys())

    distribution = build_mgi_distribution(dataset.subjects, mgi_by_subject)
    questionnaire = run_grid(
        dataset.subjects, mgi_by_subject, conditions=QUESTIONNAIRE_FIELDS,
        alpha=alpha, tail=tail, scheme=scheme,
    )
    screening = run_grid(
        dataset.subjects, mgi_by_subject, conditions=DERIVED_FIELDS,
        alpha=alpha, tail=tail, scheme=scheme,
    )
    stratified: list[CorrelationGrid] = []
    if strata in ("gender", "age"):
        for conditions in (QUESTIONNAIRE_FIELDS, DERIVED_FIELDS):
            stratified.extend(
                run_stratified_grids(
                    dataset.subjects, mgi_by_subject, strata=strata,
                    conditions=conditions, alpha=alpha, tail=tail, scheme=scheme,
                )
            )
    elif strata is not None:
        raise ValidationError(f"strata must be 'gender', 'age' or None, got {strata!r}")

    config = {
        "alpha": alpha,
        "tail": tail.value,
        "scheme": scheme.value,
        "strata": strata,
    }
    metadata = {
        "config": config,
        "config_digest": hashlib.sha256(
            json.dumps(config, sort_keys=True).encode()
        ).hexdigest(),
        "source_digests": dict(sorted(dataset.provenance.digests.items())),
        "subjects_total": len(dataset.subjects),
        "subjects_scored": len(mgi_by_subject),
        "subjects_without_annotations": skipped_subjects,
    }
    return ReportBundle(
        distribution=distribution,
        questionnaire_grid=questionnaire,
        screening_grid=screening,
        stratified_grids=tuple(stratified),
        metadata=metadata,
    )


def _write_csv(rows: list[list[str]], path: Path) -> None:
    path.write_text("\n".join(",".join(row) for row in rows) + "\n", encoding="utf-8")


def _write_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_report_bundle(bundle: ReportBundle, outdir: str | Path) -> list[Path]:
    """Write every report file under ``outdir``; returns the paths written."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit_csv(rows, name):
        path = outdir / name
        _write_csv(rows, path)
        written.append(path)

    def emit_json(obj, name):
        path = outdir / name
        _write_json(obj, path)
        written.append(path)

    emit_csv(bundle.distribution.to_rows(), "mgi_distribution.csv")
    emit_csv(
        grid_to_csv_rows(bundle.questionnaire_grid, QUESTIONNAIRE_FIELDS),
        "questionnaire_grid.csv",
    )
    emit_json(grid_to_json(bundle.questionnaire_grid), "questionnaire_grid.json")
    emit_csv(grid_to_csv_rows(bundle.screening_grid, DERIVED_FIELDS), "screening_grid.csv")
    emit_json(grid_to_json(bundle.screening_grid), "screening_grid.json")
    for grid in bundle.stratified_grids:
        conditions = sorted({c.condition for c in grid.cells} | {s.condition for s in grid.skipped})
        canonical = [c for c in (*QUESTIONNAIRE_FIELDS, *DERIVED_FIELDS) if c in conditions]
        kind = "questionnaire" if set(canonical) & set(QUESTIONNAIRE_FIELDS) else "screening"
        stem = f"stratified_{kind}_{grid.filter.describe().replace('=', '_')}"
        emit_csv(grid_to_csv_rows(grid, canonical), f"{stem}.csv")
        emit_json(grid_to_json(grid), f"{stem}.json")
    emit_json(bundle.metadata, "report_metadata.json")
    return written


def emit_curves(roc: RocCurve, pr: PrCurve, out_prefix: str | Path) -> list[Path]:
    """Write ROC/PR point CSVs plus a summary JSON next to ``out_prefix``.

    The summary records the trapezoidal AUC and, when one exists, the
    operating point nearest threshold 0.5 (the interior point of a curve
    built from hard masks).
    """
    prefix = Path(out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    roc_path = prefix.parent / (prefix.name + "roc.csv")
    pr_path = prefix.parent / (prefix.name + "pr.csv")
    summary_path = prefix.parent / (prefix.name + "curves.json")

    rows = [["threshold", "fpr", "tpr"]]
    for (x, y), thr in zip(roc.points, roc.thresholds):
        rows.append([_fmt_threshold(thr), f"{x:.10g}", f"{y:.10g}"])
    _write_csv(rows, roc_path)

    rows = [["threshold", "recall", "precision"]]
    for (r, p), thr in zip(pr.points, pr.thresholds):
        rows.append([_fmt_threshold(thr), f"{r:.10g}", f"{p:.10g}"])
    _write_csv(rows, pr_path)

    operating = _operating_point(roc)
    summary = {
        "auc": auc_trapezoid(roc),
        "roc_points": len(roc.points),
        "pr_points": len(pr.points),
        "operating_point": operating,
    }
    _write_json(summary, summary_path)
    return [roc_path, pr_path, summary_path]


def _fmt_threshold(thr: float) -> str:
    return "inf" if math.isinf(thr) else f"{thr:.10g}"


def _operating_point(roc: RocCurve) -> dict | None:
    candidates = [
        (abs(thr - 0.5), (x, y), thr)
        for (x, y), thr in zip(roc.points, roc.thresholds)
        if math.isfinite(thr) and (x, y) not in ((0.0, 0.0), (1.0, 1.0))
    ]
    if not candidates:
        return None
    _, (x, y), thr = min(candidates)
    return {"fpr": x, "tpr": y, "threshold": thr}
