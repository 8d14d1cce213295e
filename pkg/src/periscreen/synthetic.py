"""Synthetic cohorts engineered to hit reference marginal counts exactly.

The raw data of the reference screening study is private, so tests and
demos run on generated cohorts whose marginal distributions reproduce its
published summary tables: the severity distribution by gender and age
cohort, and the per-severity condition counts.

The study's stratified tables disagree with each other in a handful of
cells, so one generated dataset cannot match every stratified view at
once. Two alignments are provided:

* "cohort": condition counts follow the age-stratified views, whose
  column sums match the study's main grids exactly. This is the canonical
  profile for whole-population checks.
* "gender": condition counts follow the gender-stratified views (five of
  their questionnaire cells are internally inconsistent with the main
  grid; the main-grid significance pattern is unaffected).

Two screening cells are reconciled across views: at severity 3 the
stratified tables agree on 33 high-BMI subjects and 11 tympanic
abnormalities, and those are the counts used here.
"""

from __future__ import annotations

from datetime import datetime, timezone
from pathlib import Path

from .annotations import AnnotationSite, ImageAnnotation, SiteMark
from .dataio import (
    QUESTIONNAIRE_HEADER,
    SCREENINGS_HEADER,
    SUBJECTS_HEADER,
    write_annotations_jsonl,
)
from .errors import ValidationError
from .model import (
    QUESTIONNAIRE_FIELDS,
    AgeCohort,
    EcgLabel,
    Gender,
    QuestionnaireResponse,
    RoutineScreenings,
    SubjectRecord,
    TesResults,
)

__all__ = [
    "MGI_GENDER_COHORT_COUNTS",
    "QUESTIONNAIRE_BY_GENDER",
    "QUESTIONNAIRE_BY_COHORT",
    "SCREENINGS_BY_GENDER",
    "SCREENINGS_BY_COHORT",
    "build_reference_cohort",
    "write_reference_dataset",
]

_COHORTS = tuple(AgeCohort)
_GENDERS = (Gender.FEMALE, Gender.MALE)

# Ages cycled per cohort so every band edge gets exercised.
_COHORT_AGES = {
    AgeCohort.ADOLESCENT: (18, 19),
    AgeCohort.YOUNG_ADULT: (20, 30, 39),
    AgeCohort.MIDDLE_AGE: (40, 52, 64),
    AgeCohort.OLD_AGE: (65, 75, 90),
}

# Severity x cohort -> (female, male) subject counts. Totals: 117 female,
# 167 male, 284 subjects, severity histogram (2, 39, 120, 92, 30, 1).
MGI_GENDER_COHORT_COUNTS: dict[int, dict[AgeCohort, tuple[int, int]]] = {
    0: {
        AgeCohort.ADOLESCENT: (1, 0),
        AgeCohort.YOUNG_ADULT: (0, 0),
        AgeCohort.MIDDLE_AGE: (0, 1),
        AgeCohort.OLD_AGE: (0, 0),
    },
    1: {
        AgeCohort.ADOLESCENT: (9, 4),
        AgeCohort.YOUNG_ADULT: (10, 5),
        AgeCohort.MIDDLE_AGE: (3, 5),
        AgeCohort.OLD_AGE: (0, 3),
    },
    2: {
        AgeCohort.ADOLESCENT: (20, 8),
        AgeCohort.YOUNG_ADULT: (17, 23),
        AgeCohort.MIDDLE_AGE: (19, 21),
        AgeCohort.OLD_AGE: (2, 10),
    },
    3: {
        AgeCohort.ADOLESCENT: (3, 7),
        AgeCohort.YOUNG_ADULT: (10, 21),
        AgeCohort.MIDDLE_AGE: (9, 24),
        AgeCohort.OLD_AGE: (3, 15),
    },
    4: {
        AgeCohort.ADOLESCENT: (0, 0),
        AgeCohort.YOUNG_ADULT: (0, 5),
        AgeCohort.MIDDLE_AGE: (8, 8),
        AgeCohort.OLD_AGE: (2, 7),
    },
    5: {
        AgeCohort.ADOLESCENT: (0, 0),
        AgeCohort.YOUNG_ADULT: (0, 0),
        AgeCohort.MIDDLE_AGE: (1, 0),
        AgeCohort.OLD_AGE: (0, 0),
    },
}

# Questionnaire yes-counts by severity, split (female, male). Severities
# absent from a condition's map have zero count.
QUESTIONNAIRE_BY_GENDER: dict[str, dict[int, tuple[int, int]]] = {
    "glasses": {0: (0, 1), 1: (15, 8), 2: (18, 31), 3: (15, 28), 4: (6, 9)},
    "dental": {1: (4, 7), 2: (10, 17), 3: (6, 19), 4: (3, 5)},
    "swollen_joints": {1: (1, 3), 2: (10, 13), 3: (9, 20), 4: (7, 7)},
    "hearing": {1: (2, 5), 2: (6, 11), 3: (4, 18), 4: (5, 6)},
    "fh_diabetes": {0: (1, 0), 1: (8, 5), 2: (11, 11), 3: (4, 18), 4: (1, 6)},
    "fh_high_bp": {1: (5, 2), 2: (14, 8), 3: (4, 8), 4: (0, 2)},
    "tobacco": {0: (0, 1), 1: (0, 1), 2: (1, 6), 3: (0, 11), 4: (0, 3)},
    "difficulty_walking": {1: (0, 3), 2: (5, 3), 3: (2, 10), 4: (4, 1)},
    "high_bp": {1: (0, 1), 2: (2, 4), 3: (3, 5), 4: (0, 2)},
    "diabetes": {0: (0, 1), 1: (0, 1), 2: (3, 5), 3: (2, 5), 4: (0, 3)},
    "high_bp_rx": {1: (0, 1), 2: (2, 3), 3: (1, 5), 4: (1, 0)},
    "asthma": {1: (1, 2), 2: (2, 3), 3: (0, 2), 4: (1, 0)},
    "smoking": {1: (0, 1), 2: (0, 3), 3: (0, 2), 4: (0, 3)},
    "fh_cardiac": {1: (1, 2), 2: (0, 2), 3: (2, 1)},
    "cardiac_rx": {2: (0, 2), 3: (0, 3), 4: (1, 0)},
    "cardiovascular": {2: (0, 1), 3: (0, 1)},
    "low_bp": {2: (1, 0), 3: (2, 0)},
    "fh_stroke": {1: (1, 0), 2: (1, 1), 3: (1, 0)},
    "fh_eye_disease": {3: (1, 0), 4: (0, 2)},
    "heart_attack": {3: (0, 2)},
    "coronary_bypass": {1: (0, 1)},
    "drinking": {2: (0, 1), 3: (0, 1)},
    "eye_treatment": {4: (1, 0)},
    "memory_loss": {},
    "ear_treatment": {1: (0, 1), 2: (1, 0)},
    "fh_ear_disease": {4: (0, 1)},
}

# Questionnaire yes-counts by severity, split across the four age cohorts
# (adolescent, young adult, middle age, old age). Column sums equal the
# study's whole-population questionnaire grid exactly.
QUESTIONNAIRE_BY_COHORT: dict[str, dict[int, tuple[int, int, int, int]]] = {
    "glasses": {
        0: (0, 0, 1, 0), 1: (7, 7, 8, 1), 2: (10, 13, 29, 7), 3: (3, 12, 16, 12),
        4: (0, 1, 10, 4),
    },
    "dental": {1: (1, 3, 5, 2), 2: (1, 8, 14, 4), 3: (2, 6, 12, 5), 4: (0, 1, 5, 2)},
    "swollen_joints": {1: (0, 1, 1, 2), 2: (0, 5, 13, 5), 3: (0, 1, 18, 10), 4: (0, 1, 7, 6)},
    "hearing": {1: (0, 2, 3, 2), 2: (1, 1, 9, 6), 3: (0, 2, 14, 6), 4: (0, 0, 7, 4)},
    "fh_diabetes": {0: (1, 0, 0, 0), 1: (4, 7, 2, 0), 2: (7, 9, 13, 1), 3: (3, 6, 3, 0),
                    4: (0, 3, 2, 0)},
    "fh_high_bp": {1: (3, 4, 0, 0), 2: (6, 8, 8, 0), 3: (2, 6, 2, 2), 4: (0, 1, 1, 0)},
    "tobacco": {0: (0, 0, 1, 0), 1: (0, 1, 0, 0), 2: (0, 3, 2, 2), 3: (0, 1, 5, 5),
                4: (0, 1, 1, 1)},
    "difficulty_walking": {1: (0, 0, 0, 3), 2: (0, 1, 4, 3), 3: (0, 0, 9, 3), 4: (0, 0, 4, 1)},
    "high_bp": {1: (0, 0, 1, 0), 2: (0, 0, 5, 1), 3: (0, 0, 2, 6), 4: (0, 0, 1, 1)},
    "diabetes": {0: (0, 0, 1, 0), 1: (0, 0, 1, 0), 2: (0, 1, 6, 1), 3: (0, 0, 4, 3),
                 4: (0, 0, 3, 1)},
    "high_bp_rx": {1: (0, 0, 1, 0), 2: (0, 0, 4, 1), 3: (0, 0, 1, 5), 4: (0, 0, 1, 0)},
    "asthma": {1: (0, 0, 3, 0), 2: (0, 1, 3, 1), 3: (0, 0, 2, 0), 4: (0, 0, 1, 0)},
    "smoking": {1: (0, 0, 1, 0), 2: (0, 1, 1, 1), 3: (0, 0, 2, 0), 4: (0, 0, 1, 2)},
    "fh_cardiac": {1: (0, 2, 1, 0), 2: (0, 1, 1, 0), 3: (0, 2, 0, 1)},
    "cardiac_rx": {2: (0, 0, 2, 0), 3: (0, 0, 0, 3), 4: (0, 0, 1, 0)},
    "cardiovascular": {2: (0, 0, 1, 0), 3: (0, 0, 1, 0)},
    "low_bp": {2: (1, 0, 0, 0), 3: (0, 1, 1, 0)},
    "fh_stroke": {1: (0, 1, 0, 0), 2: (0, 1, 1, 0), 3: (1, 0, 0, 0)},
    "fh_eye_disease": {3: (0, 0, 1, 0), 4: (0, 2, 0, 0)},
    "heart_attack": {3: (0, 0, 1, 1)},
    "coronary_bypass": {1: (0, 0, 0, 1)},
    "drinking": {2: (0, 0, 1, 0), 3: (0, 0, 1, 0)},
    "eye_treatment": {4: (0, 0, 0, 1)},
    "memory_loss": {},
    "ear_treatment": {1: (0, 0, 1, 0), 2: (0, 0, 1, 0)},
    "fh_ear_disease": {4: (0, 1, 0, 0)},
}

# Abnormal screening counts by severity, split (female, male).
SCREENINGS_BY_GENDER: dict[str, dict[int, tuple[int, int]]] = {
    "high_bp_measured": {0: (0, 1), 1: (1, 3), 2: (7, 17), 3: (1, 13), 4: (2, 7)},
    "low_bp_measured": {1: (1, 0), 3: (1, 1)},
    "high_bmi": {0: (1, 1), 1: (11, 7), 2: (24, 31), 3: (8, 25), 4: (4, 7)},
    "low_bmi": {1: (3, 2), 2: (12, 7), 3: (6, 12), 4: (2, 5)},
    "low_o2": {1: (1, 0), 2: (1, 5), 3: (1, 3), 4: (1, 0)},
    "retinal": {1: (1, 4)},
    "tm": {1: (2, 1), 2: (5, 3), 3: (1, 10), 4: (1, 1)},
    "finger_nose": {3: (0, 2)},
    "gait": {3: (0, 1), 4: (0, 1)},
}

# Abnormal screening counts by severity, split across age cohorts.
SCREENINGS_BY_COHORT: dict[str, dict[int, tuple[int, int, int, int]]] = {
    "high_bp_measured": {0: (0, 0, 1, 0), 1: (0, 3, 1, 0), 2: (1, 6, 12, 5), 3: (0, 1, 9, 4),
                         4: (0, 1, 6, 2)},
    "low_bp_measured": {1: (0, 1, 0, 0), 3: (1, 0, 1, 0)},
    "high_bmi": {0: (1, 0, 1, 0), 1: (5, 6, 6, 1), 2: (8, 16, 28, 3), 3: (2, 8, 16, 7),
                 4: (0, 2, 8, 1)},
    "low_bmi": {1: (4, 1, 0, 0), 2: (7, 9, 1, 2), 3: (3, 4, 5, 6), 4: (0, 2, 3, 2)},
    "low_o2": {1: (0, 0, 1, 0), 2: (2, 1, 2, 1), 3: (0, 1, 1, 2), 4: (0, 0, 1, 0)},
    "retinal": {1: (1, 1, 1, 2)},
    "tm": {1: (0, 2, 1, 0), 2: (1, 2, 3, 2), 3: (2, 2, 4, 3), 4: (0, 0, 1, 1)},
    "finger_nose": {3: (0, 0, 2, 0)},
    "gait": {3: (0, 0, 0, 1), 4: (0, 1, 0, 0)},
}

_BASE_TIME = datetime(2024, 3, 1, 9, 0, tzinfo=timezone.utc)

# Raw measurement values that code to the intended categorical levels.
_BP_HIGH, _BP_LOW, _BP_NORMAL = (150.0, 85.0), (85.0, 55.0), (120.0, 80.0)
_BMI_HIGH, _BMI_LOW, _BMI_NORMAL = 27.0, 17.5, 22.0
_SPO2_LOW, _SPO2_NORMAL = 88.0, 98.0


def _group_key(alignment: str, mgi: int, gender: Gender, cohort: AgeCohort):
    if alignment == "gender":
        return (mgi, gender)
    return (mgi, cohort)


def _split_count(alignment, counts_by_gender, counts_by_cohort, condition, mgi, group):
    if alignment == "gender":
        per = counts_by_gender.get(condition, {}).get(mgi)
        if per is None:
            return 0
        return per[_GENDERS.index(group[1])]
    per = counts_by_cohort.get(condition, {}).get(mgi)
    if per is None:
        return 0
    return per[_COHORTS.index(group[1])]


def build_reference_cohort(
    alignment: str = "cohort",
) -> tuple[list[SubjectRecord], list[ImageAnnotation]]:
    """Generate subjects and annotations hitting the reference marginals.

    Deterministic: identical calls produce identical records. Subjects are
    laid out by (severity, cohort, gender); within each alignment group
    the first k subjects carry each condition, with the mutually exclusive
    BP and BMI levels assigned to disjoint index ranges.
    """
    if alignment not in ("gender", "cohort"):
        raise ValidationError(f"alignment must be 'gender' or 'cohort', got {alignment!r}")

    # Skeleton: (mgi, cohort, gender, index_within_group) per subject.
    members: dict[tuple, list[dict]] = {}
    ordered: list[dict] = []
    for mgi in sorted(MGI_GENDER_COHORT_COUNTS):
        for cohort in _COHORTS:
            counts = MGI_GENDER_COHORT_COUNTS[mgi][cohort]
            for gender, n in zip(_GENDERS, counts):
                for _ in range(n):
                    entry = {"mgi": mgi, "cohort": cohort, "gender": gender}
                    key = _group_key(alignment, mgi, gender, cohort)
                    members.setdefault(key, []).append(entry)
                    ordered.append(entry)

    # Condition flags: first k members of each group answer yes.
    for condition in QUESTIONNAIRE_FIELDS:
        for key, group_members in members.items():
            mgi = key[0]
            k = _split_count(
                alignment, QUESTIONNAIRE_BY_GENDER, QUESTIONNAIRE_BY_COHORT, condition, mgi, key
            )
            if k > len(group_members):
                raise ValidationError(
                    f"profile infeasible: {condition} needs {k} of {len(group_members)} in {key}"
                )
            for i, entry in enumerate(group_members):
                entry.setdefault("flags", {})[condition] = i < k

    # Screenings: BP and BMI families occupy disjoint ranges per group.
    for key, group_members in members.items():
        mgi = key[0]

        def count(cond: str) -> int:
            return _split_count(
                alignment, SCREENINGS_BY_GENDER, SCREENINGS_BY_COHORT, cond, mgi, key
            )

        n_bp_high, n_bp_low = count("high_bp_measured"), count("low_bp_measured")
        n_bmi_high, n_bmi_low = count("high_bmi"), count("low_bmi")
        n_o2 = count("low_o2")
        if n_bp_high + n_bp_low > len(group_members) or n_bmi_high + n_bmi_low > len(group_members):
            raise ValidationError(f"profile infeasible: exclusive levels overflow group {key}")
        for i, entry in enumerate(group_members):
            entry["bp"] = (
                _BP_HIGH if i < n_bp_high
                else _BP_LOW if i < n_bp_high + n_bp_low
                else _BP_NORMAL
            )
            entry["bmi"] = (
                _BMI_HIGH if i < n_bmi_high
                else _BMI_LOW if i < n_bmi_high + n_bmi_low
                else _BMI_NORMAL
            )
            entry["spo2"] = _SPO2_LOW if i < n_o2 else _SPO2_NORMAL
            entry["retinal"] = i < count("retinal")
            entry["tm"] = i < count("tm")
            entry["finger_nose"] = i < count("finger_nose")
            entry["gait"] = i < count("gait")

    subjects: list[SubjectRecord] = []
    annotations: list[ImageAnnotation] = []
    age_cursor: dict[AgeCohort, int] = {c: 0 for c in _COHORTS}
    for i, entry in enumerate(ordered):
        sid = f"s{i + 1:03d}"
        ages = _COHORT_AGES[entry["cohort"]]
        age = ages[age_cursor[entry["cohort"]] % len(ages)]
        age_cursor[entry["cohort"]] += 1
        systolic, diastolic = entry["bp"]
        subjects.append(
            SubjectRecord(
                subject_id=sid,
                age=age,
                gender=entry["gender"],
                questionnaire=QuestionnaireResponse.from_flags(entry["flags"]),
                routine=RoutineScreenings(systolic=systolic, diastolic=diastolic, bmi=entry["bmi"]),
                tes=TesResults(
                    spo2_percent=entry["spo2"],
                    retinal_abnormal=entry["retinal"],
                    tympanic_abnormal=entry["tm"],
                    finger_nose_abnormal=entry["finger_nose"],
                    gait_abnormal=entry["gait"],
                    ecg_label=EcgLabel.NORMAL,
                ),
            )
        )
        annotations.extend(_annotations_for(sid, i, entry["mgi"]))
    return subjects, annotations


def _mark(diseased: bool) -> tuple[SiteMark, ...]:
    if not diseased:
        return ()
    return (
        SiteMark(
            site=AnnotationSite.GINGIVAL_MARGIN,
            points=((120.0, 300.0), (320.0, 280.0), (520.0, 300.0)),
            diseased=True,
        ),
    )


def _annotations_for(sid: str, index: int, mgi: int) -> list[ImageAnnotation]:
    """Score patterns whose consensus lands exactly on the target severity.

    Pattern 1 exercises the greater-tie rule across images; pattern 2
    exercises it across annotators on one image.
    """
    ts = lambda k: _BASE_TIME.replace(minute=index % 60, second=k)  # noqa: E731
    marks = _mark(mgi >= 1)
    lower = max(mgi - 1, 0)
    pattern = index % 3
    if pattern == 0:
        return [
            ImageAnnotation(f"{sid}-img1", sid, "expA", mgi, marks, ts(0)),
        ]
    if pattern == 1:
        return [
            ImageAnnotation(f"{sid}-img1", sid, "expA", lower if mgi else 0, marks, ts(0)),
            ImageAnnotation(f"{sid}-img2", sid, "expA", mgi, marks, ts(1)),
        ]
    return [
        ImageAnnotation(f"{sid}-img1", sid, "expA", lower if mgi else 0, marks, ts(0)),
        ImageAnnotation(f"{sid}-img1", sid, "expB", mgi, marks, ts(1)),
        ImageAnnotation(f"{sid}-img2", sid, "expA", mgi, marks, ts(2)),
    ]


def write_reference_dataset(directory: str | Path, alignment: str = "cohort") -> dict[str, Path]:
    """Write the four ingestion files for a generated cohort.

    Returns the paths keyed by role: subjects, questionnaire, screenings,
    annotations.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    subjects, annotations = build_reference_cohort(alignment)

    paths = {
        "subjects": directory / "subjects.csv",
        "questionnaire": directory / "questionnaire.csv",
        "screenings": directory / "screenings.csv",
        "annotations": directory / "annotations.jsonl",
    }
    with paths["subjects"].open("w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(SUBJECTS_HEADER) + "\n")
        for s in subjects:
            fh.write(f"{s.subject_id},{s.age},{s.gender.value}\n")
    with paths["questionnaire"].open("w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(QUESTIONNAIRE_HEADER) + "\n")
        for s in subjects:
            flags = s.questionnaire.as_flags()
            row = [s.subject_id] + [str(int(flags[name])) for name in QUESTIONNAIRE_FIELDS]
            fh.write(",".join(row) + "\n")
    with paths["screenings"].open("w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(SCREENINGS_HEADER) + "\n")
        for s in subjects:
            row = [
                s.subject_id,
                f"{s.routine.systolic:g}",
                f"{s.routine.diastolic:g}",
                f"{s.routine.bmi:g}",
                f"{s.tes.spo2_percent:g}",
                str(int(s.tes.retinal_abnormal)),
                str(int(s.tes.tympanic_abnormal)),
                str(int(s.tes.finger_nose_abnormal)),
                str(int(s.tes.gait_abnormal)),
                s.tes.ecg_label.value,
            ]
            fh.write(",".join(row) + "\n")
    write_annotations_jsonl(annotations, paths["annotations"])
    return paths
