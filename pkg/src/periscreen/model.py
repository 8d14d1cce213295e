"""Domain types for subjects and screenings, plus categorical coding rules.

The coding thresholds follow the study protocol this pipeline supports:
BMI below 19 is low and 25 or above is high; blood pressure is low below
90/60 and high above 140/90 (boundary values are normal); blood oxygen of
90% or less is low and is never coded high.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from enum import Enum

from .errors import ValidationError

__all__ = [
    "Gender",
    "AgeCohort",
    "CategoricalLevel",
    "EcgLabel",
    "QuestionnaireResponse",
    "RoutineScreenings",
    "TesResults",
    "SubjectRecord",
    "QUESTIONNAIRE_FIELDS",
    "DERIVED_FIELDS",
    "CONDITION_FIELDS",
    "categorize_bmi",
    "categorize_bp",
    "categorize_spo2",
    "assign_age_cohort",
    "derive_condition_flags",
]

AGE_MIN = 18
AGE_MAX = 90


class Gender(Enum):
    FEMALE = "female"
    MALE = "male"


class AgeCohort(Enum):
    """Age bands; together they partition the study range 18-90."""

    ADOLESCENT = "adolescent"      # 18-19
    YOUNG_ADULT = "young_adult"    # 20-39
    MIDDLE_AGE = "middle_age"      # 40-64
    OLD_AGE = "old_age"            # 65-90


_COHORT_UPPER_BOUNDS = (
    (19, AgeCohort.ADOLESCENT),
    (39, AgeCohort.YOUNG_ADULT),
    (64, AgeCohort.MIDDLE_AGE),
    (90, AgeCohort.OLD_AGE),
)


class CategoricalLevel(Enum):
    LOW = "low"
    NORMAL = "normal"
    HIGH = "high"


class EcgLabel(Enum):
    """The two labels the single-lead ECG app emits, verbatim."""

    NORMAL = "Normal"
    POSSIBLE_AFIB = "Possible atrial fibrillation"


# Questionnaire condition keys, in canonical reporting order. These names
# are the stable external contract for CSV columns and condition flags.
QUESTIONNAIRE_FIELDS = (
    "glasses",
    "dental",
    "swollen_joints",
    "hearing",
    "fh_diabetes",
    "fh_high_bp",
    "tobacco",
    "difficulty_walking",
    "high_bp",
    "diabetes",
    "high_bp_rx",
    "asthma",
    "smoking",
    "fh_cardiac",
    "cardiac_rx",
    "cardiovascular",
    "low_bp",
    "fh_stroke",
    "fh_eye_disease",
    "heart_attack",
    "coronary_bypass",
    "drinking",
    "eye_treatment",
    "memory_loss",
    "ear_treatment",
    "fh_ear_disease",
)

# Flags derived from measurements and device screenings, in canonical
# reporting order. ``afib`` has no column in the screening reports' source
# tables and is ordered last.
DERIVED_FIELDS = (
    "high_bp_measured",
    "low_bp_measured",
    "high_bmi",
    "low_bmi",
    "low_o2",
    "retinal",
    "tm",
    "finger_nose",
    "gait",
    "afib",
)

CONDITION_FIELDS = QUESTIONNAIRE_FIELDS + DERIVED_FIELDS


@dataclass(frozen=True)
class QuestionnaireResponse:
    """One boolean per medical-history question; no partial records."""

    glasses: bool
    dental: bool
    swollen_joints: bool
    hearing: bool
    fh_diabetes: bool
    fh_high_bp: bool
    tobacco: bool
    difficulty_walking: bool
    high_bp: bool
    diabetes: bool
    high_bp_rx: bool
    asthma: bool
    smoking: bool
    fh_cardiac: bool
    cardiac_rx: bool
    cardiovascular: bool
    low_bp: bool
    fh_stroke: bool
    fh_eye_disease: bool
    heart_attack: bool
    coronary_bypass: bool
    drinking: bool
    eye_treatment: bool
    memory_loss: bool
    ear_treatment: bool
    fh_ear_disease: bool

    def __post_init__(self):
        for f in fields(self):
            if not isinstance(getattr(self, f.name), bool):
                raise ValidationError(f"questionnaire field {f.name} must be a bool")

    def as_flags(self) -> dict[str, bool]:
        return {name: getattr(self, name) for name in QUESTIONNAIRE_FIELDS}

    @classmethod
    def from_flags(cls, flags: dict[str, bool]) -> "QuestionnaireResponse":
        missing = set(QUESTIONNAIRE_FIELDS) - flags.keys()
        extra = flags.keys() - set(QUESTIONNAIRE_FIELDS)
        if missing or extra:
            raise ValidationError(
                f"questionnaire flags mismatch: missing={sorted(missing)} extra={sorted(extra)}"
            )
        return cls(**{k: bool(flags[k]) for k in QUESTIONNAIRE_FIELDS})


# QuestionnaireResponse field names must stay bijective with the canonical key set.
assert tuple(f.name for f in fields(QuestionnaireResponse)) == QUESTIONNAIRE_FIELDS


@dataclass(frozen=True)
class RoutineScreenings:
    """Blood pressure (mmHg) and body mass index (kg/m^2) measurements."""

    systolic: float
    diastolic: float
    bmi: float

    def __post_init__(self):
        for name in ("systolic", "diastolic", "bmi"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValidationError(f"{name} must be finite and positive, got {v!r}")
        if self.systolic <= self.diastolic:
            raise ValidationError(
                f"systolic must exceed diastolic, got {self.systolic}/{self.diastolic}"
            )


@dataclass(frozen=True)
class TesResults:
    """Technology-enabled screening outcomes for one subject."""

    spo2_percent: float
    retinal_abnormal: bool
    tympanic_abnormal: bool
    finger_nose_abnormal: bool
    gait_abnormal: bool
    ecg_label: EcgLabel

    def __post_init__(self):
        v = self.spo2_percent
        if not (isinstance(v, (int, float)) and math.isfinite(v) and 0.0 <= v <= 100.0):
            raise ValidationError(f"spo2_percent must lie in [0, 100], got {v!r}")
        if not isinstance(self.ecg_label, EcgLabel):
            raise ValidationError(f"ecg_label must be an EcgLabel, got {self.ecg_label!r}")


@dataclass(frozen=True)
class SubjectRecord:
    """Everything known about one consenting subject."""

    subject_id: str
    age: int
    gender: Gender
    questionnaire: QuestionnaireResponse
    routine: RoutineScreenings
    tes: TesResults

    def __post_init__(self):
        if not self.subject_id:
            raise ValidationError("subject_id must be non-empty")
        if not isinstance(self.age, int) or isinstance(self.age, bool):
            raise ValidationError(f"age must be an integer, got {self.age!r}")
        if not AGE_MIN <= self.age <= AGE_MAX:
            raise ValidationError(f"age {self.age} outside study range [{AGE_MIN}, {AGE_MAX}]")


def _check_positive_finite(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise ValidationError(f"{name} must be finite and positive, got {value!r}")


def categorize_bmi(bmi: float) -> CategoricalLevel:
    """Low below 19, normal in [19, 25), high at 25 and above."""
    _check_positive_finite("bmi", bmi)
    if bmi < 19:
        return CategoricalLevel.LOW
    if bmi < 25:
        return CategoricalLevel.NORMAL
    return CategoricalLevel.HIGH


def categorize_bp(
    systolic: float,
    diastolic: float,
    precedence: CategoricalLevel = CategoricalLevel.HIGH,
) -> CategoricalLevel:
    """Code a blood pressure reading as low, normal or high.

    High means systolic above 140 or diastolic above 90; low means
    systolic below 90 or diastolic below 60; 140/90 and 90/60 themselves
    are normal. A reading can satisfy both rules (e.g. 85/95); the
    ``precedence`` argument picks the winner and defaults to HIGH because
    a hypertensive flag is the clinically urgent one.
    """
    _check_positive_finite("systolic", systolic)
    _check_positive_finite("diastolic", diastolic)
    if systolic <= diastolic:
        raise ValidationError(f"systolic must exceed diastolic, got {systolic}/{diastolic}")
    if precedence not in (CategoricalLevel.HIGH, CategoricalLevel.LOW):
        raise ValidationError("precedence must be HIGH or LOW")
    is_high = systolic > 140 or diastolic > 90
    is_low = systolic < 90 or diastolic < 60
    if is_high and is_low:
        return precedence
    if is_high:
        return CategoricalLevel.HIGH
    if is_low:
        return CategoricalLevel.LOW
    return CategoricalLevel.NORMAL


def categorize_spo2(spo2: float) -> CategoricalLevel:
    """Low at 90% or less, otherwise normal. HIGH is never produced."""
    if not (isinstance(spo2, (int, float)) and math.isfinite(spo2) and 0.0 <= spo2 <= 100.0):
        raise ValidationError(f"spo2 must lie in [0, 100], got {spo2!r}")
    return CategoricalLevel.LOW if spo2 <= 90.0 else CategoricalLevel.NORMAL


def assign_age_cohort(age: int) -> AgeCohort:
    """Map an integer age in [18, 90] to its cohort band."""
    if not isinstance(age, int) or isinstance(age, bool):
        raise ValidationError(f"age must be an integer, got {age!r}")
    if not AGE_MIN <= age <= AGE_MAX:
        raise ValidationError(f"age {age} outside [{AGE_MIN}, {AGE_MAX}]")
    for upper, cohort in _COHORT_UPPER_BOUNDS:
        if age <= upper:
            return cohort
    raise AssertionError("unreachable: bounds cover the validated range")


def derive_condition_flags(subject: SubjectRecord) -> dict[str, bool]:
    """All condition flags for one subject, keyed canonically.

    The 26 questionnaire answers pass through verbatim; measurement and
    device flags are derived with the categorize_* rules. The key set is
    fixed (CONDITION_FIELDS) and the result is deterministic for a given
    record.
    """
    flags = subject.questionnaire.as_flags()
    bp = categorize_bp(subject.routine.systolic, subject.routine.diastolic)
    bmi = categorize_bmi(subject.routine.bmi)
    spo2 = categorize_spo2(subject.tes.spo2_percent)
    flags["high_bp_measured"] = bp is CategoricalLevel.HIGH
    flags["low_bp_measured"] = bp is CategoricalLevel.LOW
    flags["high_bmi"] = bmi is CategoricalLevel.HIGH
    flags["low_bmi"] = bmi is CategoricalLevel.LOW
    flags["low_o2"] = spo2 is CategoricalLevel.LOW
    flags["retinal"] = subject.tes.retinal_abnormal
    flags["tm"] = subject.tes.tympanic_abnormal
    flags["finger_nose"] = subject.tes.finger_nose_abnormal
    flags["gait"] = subject.tes.gait_abnormal
    flags["afib"] = subject.tes.ecg_label is EcgLabel.POSSIBLE_AFIB
    return flags
