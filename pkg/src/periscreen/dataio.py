"""Dataset ingestion and validation.

File schemas (all UTF-8; CSV headers must match exactly):

* subjects.csv       subject_id,age,gender
* questionnaire.csv  subject_id plus the 26 condition columns, values 0/1
* screenings.csv     subject_id,systolic,diastolic,bmi,spo2,retinal,tm,
                     finger_nose,gait,ecg_label
* annotations.jsonl  one JSON object per line mirroring ImageAnnotation

Errors name the offending file, line and column; referential failures
list every orphan id.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

from .annotations import AnnotationSite, ImageAnnotation, SiteMark
from .errors import SchemaError, ValidationError
from .model import (
    QUESTIONNAIRE_FIELDS,
    EcgLabel,
    Gender,
    QuestionnaireResponse,
    RoutineScreenings,
    SubjectRecord,
    TesResults,
)

__all__ = [
    "Provenance",
    "Dataset",
    "ingest",
    "annotation_to_json",
    "annotation_from_json",
    "write_annotations_jsonl",
]

SUBJECTS_HEADER = ["subject_id", "age", "gender"]
QUESTIONNAIRE_HEADER = ["subject_id", *QUESTIONNAIRE_FIELDS]
SCREENINGS_HEADER = [
    "subject_id",
    "systolic",
    "diastolic",
    "bmi",
    "spo2",
    "retinal",
    "tm",
    "finger_nose",
    "gait",
    "ecg_label",
]


@dataclass(frozen=True)
class Provenance:
    """Digests of the source files plus the ingestion instant."""

    digests: dict[str, str]
    ingested_at: datetime


@dataclass(frozen=True)
class Dataset:
    subjects: tuple[SubjectRecord, ...]
    annotations: tuple[ImageAnnotation, ...]
    provenance: Provenance

    def subject_ids(self) -> set[str]:
        return {s.subject_id for s in self.subjects}


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _open_csv(path: Path, expected_header: list[str]):
    # missing/unreadable files surface as OSError (an I/O failure, not a
    # schema violation)
    handle = path.open(newline="", encoding="utf-8")
    reader = csv.reader(handle)
    header = next(reader, None)
    if header != expected_header:
        handle.close()
        raise SchemaError(
            f"bad header {header!r}, expected {expected_header!r}", source=path.name, line=1
        )
    return handle, reader


def _parse_bool01(value: str, *, source: str, line: int, column: str) -> bool:
    if value == "0":
        return False
    if value == "1":
        return True
    raise SchemaError(f"column {column!r} must be 0 or 1, got {value!r}", source=source, line=line)


def _parse_float(value: str, *, source: str, line: int, column: str) -> float:
    try:
        return float(value)
    except ValueError as exc:
        raise SchemaError(
            f"column {column!r} must be numeric, got {value!r}", source=source, line=line
        ) from exc


def _read_subjects(path: Path) -> dict[str, tuple[int, Gender]]:
    handle, reader = _open_csv(path, SUBJECTS_HEADER)
    out: dict[str, tuple[int, Gender]] = {}
    with handle:
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(SUBJECTS_HEADER):
                raise SchemaError(
                    f"expected {len(SUBJECTS_HEADER)} columns, got {len(row)}",
                    source=path.name,
                    line=lineno,
                )
            subject_id, age_s, gender_s = row
            if subject_id in out:
                raise SchemaError(f"duplicate subject_id {subject_id!r}", source=path.name, line=lineno)
            try:
                age = int(age_s)
            except ValueError as exc:
                raise SchemaError(
                    f"column 'age' must be an integer, got {age_s!r}", source=path.name, line=lineno
                ) from exc
            try:
                gender = Gender(gender_s.lower())
            except ValueError as exc:
                raise SchemaError(
                    f"column 'gender' must be female or male, got {gender_s!r}",
                    source=path.name,
                    line=lineno,
                ) from exc
            out[subject_id] = (age, gender)
    return out


def _read_questionnaire(path: Path) -> dict[str, QuestionnaireResponse]:
    handle, reader = _open_csv(path, QUESTIONNAIRE_HEADER)
    out: dict[str, QuestionnaireResponse] = {}
    with handle:
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(QUESTIONNAIRE_HEADER):
                raise SchemaError(
                    f"expected {len(QUESTIONNAIRE_HEADER)} columns, got {len(row)}",
                    source=path.name,
                    line=lineno,
                )
            subject_id = row[0]
            if subject_id in out:
                raise SchemaError(f"duplicate subject_id {subject_id!r}", source=path.name, line=lineno)
            flags = {
                name: _parse_bool01(value, source=path.name, line=lineno, column=name)
                for name, value in zip(QUESTIONNAIRE_FIELDS, row[1:])
            }
            out[subject_id] = QuestionnaireResponse.from_flags(flags)
    return out


def _read_screenings(path: Path) -> dict[str, tuple[RoutineScreenings, TesResults]]:
    handle, reader = _open_csv(path, SCREENINGS_HEADER)
    out: dict[str, tuple[RoutineScreenings, TesResults]] = {}
    with handle:
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(SCREENINGS_HEADER):
                raise SchemaError(
                    f"expected {len(SCREENINGS_HEADER)} columns, got {len(row)}",
                    source=path.name,
                    line=lineno,
                )
            (subject_id, systolic, diastolic, bmi, spo2, retinal, tm, finger_nose, gait,
             ecg_label) = row
            if subject_id in out:
                raise SchemaError(f"duplicate subject_id {subject_id!r}", source=path.name, line=lineno)
            try:
                ecg = EcgLabel(ecg_label)
            except ValueError as exc:
                raise SchemaError(
                    f"column 'ecg_label' must be one of "
                    f"{[e.value for e in EcgLabel]}, got {ecg_label!r}",
                    source=path.name,
                    line=lineno,
                ) from exc
            try:
                routine = RoutineScreenings(
                    systolic=_parse_float(systolic, source=path.name, line=lineno, column="systolic"),
                    diastolic=_parse_float(diastolic, source=path.name, line=lineno, column="diastolic"),
                    bmi=_parse_float(bmi, source=path.name, line=lineno, column="bmi"),
                )
                tes = TesResults(
                    spo2_percent=_parse_float(spo2, source=path.name, line=lineno, column="spo2"),
                    retinal_abnormal=_parse_bool01(retinal, source=path.name, line=lineno, column="retinal"),
                    tympanic_abnormal=_parse_bool01(tm, source=path.name, line=lineno, column="tm"),
                    finger_nose_abnormal=_parse_bool01(
                        finger_nose, source=path.name, line=lineno, column="finger_nose"
                    ),
                    gait_abnormal=_parse_bool01(gait, source=path.name, line=lineno, column="gait"),
                    ecg_label=ecg,
                )
            except ValidationError as exc:
                raise SchemaError(str(exc), source=path.name, line=lineno) from exc
            out[subject_id] = (routine, tes)
    return out


def annotation_to_json(ann: ImageAnnotation) -> dict:
    return {
        "image_id": ann.image_id,
        "subject_id": ann.subject_id,
        "annotator_id": ann.annotator_id,
        "mgi": ann.mgi,
        "marks": [
            {
                "site": m.site.value,
                "points": [[x, y] for x, y in m.points],
                "diseased": m.diseased,
            }
            for m in ann.marks
        ],
        "timestamp": ann.timestamp.isoformat() if ann.timestamp else None,
    }


def annotation_from_json(obj: dict) -> ImageAnnotation:
    try:
        marks = tuple(
            SiteMark(
                site=AnnotationSite(m["site"]),
                points=tuple((float(x), float(y)) for x, y in m["points"]),
                diseased=bool(m["diseased"]),
            )
            for m in obj.get("marks", [])
        )
        ts = obj.get("timestamp")
        return ImageAnnotation(
            image_id=obj["image_id"],
            subject_id=obj["subject_id"],
            annotator_id=obj["annotator_id"],
            mgi=obj["mgi"],
            marks=marks,
            timestamp=datetime.fromisoformat(ts) if ts else None,
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed annotation record: {exc!r}") from exc


def _read_annotations(path: Path) -> list[ImageAnnotation]:
    out = []
    seen: set[tuple[str, str]] = set()
    lines = path.read_text(encoding="utf-8").splitlines()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}", source=path.name, line=lineno) from exc
        try:
            ann = annotation_from_json(obj)
        except ValidationError as exc:
            raise SchemaError(str(exc), source=path.name, line=lineno) from exc
        key = (ann.image_id, ann.annotator_id)
        if key in seen:
            raise SchemaError(
                f"duplicate (image_id, annotator_id) = {key}", source=path.name, line=lineno
            )
        seen.add(key)
        out.append(ann)
    return out


def write_annotations_jsonl(annotations: Iterable[ImageAnnotation], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for ann in annotations:
            fh.write(json.dumps(annotation_to_json(ann), sort_keys=True) + "\n")


def ingest(
    subjects_csv: str | Path,
    questionnaire_csv: str | Path,
    screenings_csv: str | Path,
    annotations_jsonl: str | Path,
) -> Dataset:
    """Parse and cross-validate the four input files into one Dataset.

    Every row is either consumed or reported with its location. Subjects
    must appear in all three CSVs; annotations must reference known
    subjects; (image_id, annotator_id) pairs must be unique.
    """
    subjects_path = Path(subjects_csv)
    questionnaire_path = Path(questionnaire_csv)
    screenings_path = Path(screenings_csv)
    annotations_path = Path(annotations_jsonl)

    base = _read_subjects(subjects_path)
    questionnaires = _read_questionnaire(questionnaire_path)
    screenings = _read_screenings(screenings_path)
    annotations = _read_annotations(annotations_path)

    missing_q = sorted(base.keys() - questionnaires.keys())
    if missing_q:
        raise ValidationError(f"{questionnaire_path.name}: no row for subjects {missing_q}")
    orphan_q = sorted(questionnaires.keys() - base.keys())
    if orphan_q:
        raise ValidationError(f"{questionnaire_path.name}: unknown subjects {orphan_q}")
    missing_s = sorted(base.keys() - screenings.keys())
    if missing_s:
        raise ValidationError(f"{screenings_path.name}: no row for subjects {missing_s}")
    orphan_s = sorted(screenings.keys() - base.keys())
    if orphan_s:
        raise ValidationError(f"{screenings_path.name}: unknown subjects {orphan_s}")
    orphan_a = sorted({a.subject_id for a in annotations} - base.keys())
    if orphan_a:
        raise ValidationError(
            f"{annotations_path.name}: annotations reference unknown subjects {orphan_a}"
        )

    records = []
    for subject_id in base:
        age, gender = base[subject_id]
        routine, tes = screenings[subject_id]
        try:
            records.append(
                SubjectRecord(
                    subject_id=subject_id,
                    age=age,
                    gender=gender,
                    questionnaire=questionnaires[subject_id],
                    routine=routine,
                    tes=tes,
                )
            )
        except ValidationError as exc:
            raise ValidationError(f"subject {subject_id}: {exc}") from exc

    provenance = Provenance(
        digests={
            subjects_path.name: _sha256(subjects_path),
            questionnaire_path.name: _sha256(questionnaire_path),
            screenings_path.name: _sha256(screenings_path),
            annotations_path.name: _sha256(annotations_path),
        },
        ingested_at=datetime.now(timezone.utc),
    )
    return Dataset(
        subjects=tuple(records), annotations=tuple(annotations), provenance=provenance
    )
