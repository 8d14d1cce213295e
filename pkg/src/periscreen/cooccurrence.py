"""Co-occurrence grids: severity level x condition contingency analysis.

For every (severity level, condition) pair the engine builds a 2x2 table
over the filtered population, runs Fisher's exact test and flags
significance against a grid-level alpha. Demographic splits (gender or
age cohort versus the rest, or one cohort versus another) reuse the same
machinery.

Two comparison schemes are supported, because the study's published
condition grids were computed with the group totals, not the complements,
in the second table column:

* COMPLEMENT: test [[a, b], [c, d]] as built. The statistically standard
  construction, and the one the study's demographic comparisons used.
* RATIO_PAIRS: test [[a, a+b], [c, c+d]], i.e. the two incidence ratios'
  numerator/denominator pairs entered directly. This reproduces the
  study's published condition-grid p-values exactly and is therefore the
  default for condition grids. See docs/tail_calibration.md.

The tail convention is a single grid-level parameter, never per-cell.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from .annotations import validate_mgi
from .errors import ValidationError
from .model import (
    CONDITION_FIELDS,
    AgeCohort,
    Gender,
    SubjectRecord,
    assign_age_cohort,
    derive_condition_flags,
)
from .stats import ContingencyTable, TailMode, TestResult, fisher_exact

__all__ = [
    "TableScheme",
    "CohortFilter",
    "CellResult",
    "SkippedCell",
    "CorrelationGrid",
    "comparison_table",
    "build_mgi_condition_table",
    "build_demographic_table",
    "run_grid",
    "run_stratified_grids",
    "run_demographic_grid",
]

log = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.05

SubjectMgi = tuple[SubjectRecord, int]


class TableScheme(Enum):
    COMPLEMENT = "complement"
    RATIO_PAIRS = "ratio-pairs"


@dataclass(frozen=True)
class CohortFilter:
    """Optional gender/age restriction; an empty filter keeps everyone."""

    gender: Gender | None = None
    age_cohort: AgeCohort | None = None

    def matches(self, subject: SubjectRecord) -> bool:
        if self.gender is not None and subject.gender is not self.gender:
            return False
        if self.age_cohort is not None and assign_age_cohort(subject.age) is not self.age_cohort:
            return False
        return True

    def describe(self) -> str:
        parts = []
        if self.gender is not None:
            parts.append(f"gender={self.gender.value}")
        if self.age_cohort is not None:
            parts.append(f"age_cohort={self.age_cohort.value}")
        return ",".join(parts) if parts else "all"


@dataclass(frozen=True)
class CellResult:
    """One grid cell: counts, test outcome and the significance flag."""

    mgi_level: int
    condition: str
    table: ContingencyTable
    result: TestResult
    significant: bool


@dataclass(frozen=True)
class SkippedCell:
    """A cell whose table could not be built, with the reason recorded."""

    mgi_level: int
    condition: str
    reason: str


@dataclass(frozen=True)
class CorrelationGrid:
    filter: CohortFilter
    alpha: float
    tail: TailMode
    scheme: TableScheme
    population_size: int
    cells: tuple[CellResult, ...]
    skipped: tuple[SkippedCell, ...] = ()

    def cell(self, mgi_level: int, condition: str) -> CellResult | None:
        for c in self.cells:
            if c.mgi_level == mgi_level and c.condition == condition:
                return c
        return None

    def significant_cells(self) -> tuple[CellResult, ...]:
        return tuple(c for c in self.cells if c.significant)

    def levels(self) -> tuple[int, ...]:
        return tuple(sorted({c.mgi_level for c in self.cells} | {s.mgi_level for s in self.skipped}))


def comparison_table(table: ContingencyTable, scheme: TableScheme) -> ContingencyTable:
    """The matrix actually handed to the exact test under ``scheme``."""
    if scheme is TableScheme.COMPLEMENT:
        return table
    return ContingencyTable(table.a, table.row1, table.c, table.row2)


def _filtered(subjects: Iterable[SubjectMgi], filt: CohortFilter) -> list[SubjectMgi]:
    return [(s, validate_mgi(m)) for s, m in subjects if filt.matches(s)]


def build_mgi_condition_table(
    subjects: Iterable[SubjectMgi],
    mgi_level: int,
    condition: str,
    filt: CohortFilter = CohortFilter(),
) -> ContingencyTable:
    """Counts for severity == level versus all other levels, by one flag.

    a = at level with the condition, b = at level without, c = other
    levels with, d = other levels without, over the filtered population.
    """
    validate_mgi(mgi_level)
    if condition not in CONDITION_FIELDS:
        raise ValidationError(f"unknown condition {condition!r}")
    population = _filtered(subjects, filt)
    if not population:
        raise ValidationError(f"no subjects match filter ({filt.describe()})")
    a = b = c = d = 0
    for subject, mgi in population:
        flag = derive_condition_flags(subject)[condition]
        if mgi == mgi_level:
            if flag:
                a += 1
            else:
                b += 1
        elif flag:
            c += 1
        else:
            d += 1
    if a + b == 0:
        raise ValidationError(
            f"no subjects at MGI {mgi_level} in filtered population ({filt.describe()})"
        )
    return ContingencyTable(a, b, c, d)


def build_demographic_table(
    subjects: Iterable[SubjectMgi],
    mgi_level: int,
    in_group: Gender | AgeCohort,
    out_group: Gender | AgeCohort | None = None,
) -> ContingencyTable:
    """Counts for one demographic group versus another, at one severity level.

    a = in-group at the level, b = in-group elsewhere, c/d the same for
    the out-group. The out-group defaults to everyone else; passing an
    explicit cohort restricts the comparison to the two named groups,
    which is how the study compared age cohorts pairwise.
    """
    validate_mgi(mgi_level)

    def group_of(subject: SubjectRecord) -> Gender | AgeCohort:
        if isinstance(in_group, Gender):
            return subject.gender
        return assign_age_cohort(subject.age)

    if out_group is not None and type(out_group) is not type(in_group):
        raise ValidationError("in_group and out_group must split the same axis")
    a = b = c = d = 0
    for subject, mgi in subjects:
        validate_mgi(mgi)
        g = group_of(subject)
        if g is in_group:
            if mgi == mgi_level:
                a += 1
            else:
                b += 1
        elif out_group is None or g is out_group:
            if mgi == mgi_level:
                c += 1
            else:
                d += 1
    if a + b == 0:
        raise ValidationError(f"no subjects in group {in_group.value!r}")
    if c + d == 0:
        raise ValidationError("comparison group is empty")
    return ContingencyTable(a, b, c, d)


def _pair_subjects(
    subjects: Sequence[SubjectRecord], mgi_by_subject: Mapping[str, int]
) -> list[SubjectMgi]:
    paired = []
    for s in subjects:
        if s.subject_id in mgi_by_subject:
            paired.append((s, mgi_by_subject[s.subject_id]))
        else:
            log.warning("subject %s has no aggregated MGI; excluded from grids", s.subject_id)
    return paired


def run_grid(
    subjects: Sequence[SubjectRecord],
    mgi_by_subject: Mapping[str, int],
    conditions: Sequence[str] | None = None,
    filt: CohortFilter = CohortFilter(),
    alpha: float = DEFAULT_ALPHA,
    tail: TailMode = TailMode.TWO_SIDED,
    scheme: TableScheme = TableScheme.RATIO_PAIRS,
    levels: Sequence[int] | None = None,
) -> CorrelationGrid:
    """One cell per (severity level, condition) over the filtered population.

    Levels default to those present after filtering; a caller may pass the
    full-population level set so strata report absent levels as skipped
    rather than silently dropping them. Cells whose table cannot be built
    are recorded with their reason; the grid itself never aborts.
    Cell order is deterministic: level ascending, then canonical condition
    order.
    """
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    if conditions is None:
        conditions = CONDITION_FIELDS
    unknown = [c for c in conditions if c not in CONDITION_FIELDS]
    if unknown:
        raise ValidationError(f"unknown conditions: {unknown}")

    paired = _pair_subjects(subjects, mgi_by_subject)
    population = _filtered(paired, filt)
    if levels is None:
        levels = sorted({m for _, m in population})
    cells: list[CellResult] = []
    skipped: list[SkippedCell] = []
    for level in sorted(levels):
        for condition in conditions:
            try:
                table = build_mgi_condition_table(population, level, condition)
            except ValidationError as exc:
                skipped.append(SkippedCell(level, condition, str(exc)))
                continue
            result = fisher_exact(comparison_table(table, scheme), tail)
            cells.append(
                CellResult(
                    mgi_level=level,
                    condition=condition,
                    table=table,
                    result=result,
                    significant=result.p_value < alpha,
                )
            )
    return CorrelationGrid(
        filter=filt,
        alpha=alpha,
        tail=tail,
        scheme=scheme,
        population_size=len(population),
        cells=tuple(cells),
        skipped=tuple(skipped),
    )


def run_stratified_grids(
    subjects: Sequence[SubjectRecord],
    mgi_by_subject: Mapping[str, int],
    strata: str,
    conditions: Sequence[str] | None = None,
    alpha: float = DEFAULT_ALPHA,
    tail: TailMode = TailMode.TWO_SIDED,
    scheme: TableScheme = TableScheme.RATIO_PAIRS,
) -> list[CorrelationGrid]:
    """One grid per stratum value; comparisons stay inside each stratum.

    ``strata`` is "gender" or "age". Every stratum grid iterates the level
    set of the whole population, so levels missing within a stratum show
    up as skipped cells. Empty strata are omitted with a warning.
    """
    if strata == "gender":
        values: Sequence[Gender | AgeCohort] = tuple(Gender)
    elif strata == "age":
        values = tuple(AgeCohort)
    else:
        raise ValidationError(f"strata must be 'gender' or 'age', got {strata!r}")

    paired = _pair_subjects(subjects, mgi_by_subject)
    all_levels = sorted({m for _, m in paired})
    grids = []
    for value in values:
        filt = (
            CohortFilter(gender=value)
            if isinstance(value, Gender)
            else CohortFilter(age_cohort=value)
        )
        if not any(filt.matches(s) for s, _ in paired):
            log.warning("stratum %s has no subjects; grid omitted", filt.describe())
            continue
        grids.append(
            run_grid(
                subjects,
                mgi_by_subject,
                conditions=conditions,
                filt=filt,
                alpha=alpha,
                tail=tail,
                scheme=scheme,
                levels=all_levels,
            )
        )
    return grids


def run_demographic_grid(
    subjects: Sequence[SubjectRecord],
    mgi_by_subject: Mapping[str, int],
    axis: str,
    alpha: float = DEFAULT_ALPHA,
    tail: TailMode = TailMode.TWO_SIDED,
) -> list[CellResult]:
    """Severity-by-demographic comparisons: each group versus the rest.

    Demographic comparisons use the complement scheme, which is the
    construction the study's published gender and cohort p-values follow.
    Cells are keyed by the group value in ``condition``.
    """
    if axis == "gender":
        groups: Sequence[Gender | AgeCohort] = tuple(Gender)
    elif axis == "age":
        groups = tuple(AgeCohort)
    else:
        raise ValidationError(f"axis must be 'gender' or 'age', got {axis!r}")
    paired = _pair_subjects(subjects, mgi_by_subject)
    levels = sorted({m for _, m in paired})
    cells = []
    for level in levels:
        for group in groups:
            try:
                table = build_demographic_table(paired, level, group)
            except ValidationError:
                continue
            result = fisher_exact(table, tail)
            cells.append(
                CellResult(
                    mgi_level=level,
                    condition=group.value,
                    table=table,
                    result=result,
                    significant=result.p_value < alpha,
                )
            )
    return cells
