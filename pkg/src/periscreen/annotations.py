"""Expert image annotations and their aggregation to subject-level labels.

One expert scores one image with a gingival-severity index (0 healthy to
5 severe) and marks diseased sites. Aggregation is order-independent:
per-image consensus is the modal score with ties broken upward so disease
prevalence is never understated, and the subject score applies the same
rule across the subject's images. Condition votes keep a label only on a
strict majority.
"""

from __future__ import annotations

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Iterable, Sequence

from .errors import ValidationError

__all__ = [
    "MGI_MIN",
    "MGI_MAX",
    "IMAGE_WIDTH",
    "IMAGE_HEIGHT",
    "AnnotationSite",
    "SiteMark",
    "ImageAnnotation",
    "ConsensusResult",
    "validate_mgi",
    "aggregate_subject_mgi",
    "consensus_mgi",
    "consensus_condition",
    "subject_mgi_table",
]

log = logging.getLogger(__name__)

MGI_MIN, MGI_MAX = 0, 5

# Intraoral frame geometry shared with the mask pipeline.
IMAGE_WIDTH, IMAGE_HEIGHT = 640, 480


class AnnotationSite(Enum):
    GINGIVAL_MARGIN = "gingival_margin"
    LEFT_PAPILLA = "left_papilla"
    RIGHT_PAPILLA = "right_papilla"


def validate_mgi(value: int) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise ValidationError(f"MGI must be an integer, got {value!r}")
    if not MGI_MIN <= value <= MGI_MAX:
        raise ValidationError(f"MGI {value} outside [{MGI_MIN}, {MGI_MAX}]")
    return value


@dataclass(frozen=True)
class SiteMark:
    """A point chain one expert placed on one anatomical site."""

    site: AnnotationSite
    points: tuple[tuple[float, float], ...]
    diseased: bool

    def __post_init__(self):
        if not isinstance(self.site, AnnotationSite):
            raise ValidationError(f"unknown site {self.site!r}")
        if self.diseased and not self.points:
            raise ValidationError(f"diseased mark on {self.site.value} needs at least one point")
        for x, y in self.points:
            if not (0 <= x < IMAGE_WIDTH and 0 <= y < IMAGE_HEIGHT):
                raise ValidationError(
                    f"point ({x}, {y}) outside image bounds "
                    f"[0,{IMAGE_WIDTH})x[0,{IMAGE_HEIGHT})"
                )


@dataclass(frozen=True)
class ImageAnnotation:
    """One expert's complete annotation of one intraoral image."""

    image_id: str
    subject_id: str
    annotator_id: str
    mgi: int
    marks: tuple[SiteMark, ...] = ()
    timestamp: datetime | None = None

    def __post_init__(self):
        for name in ("image_id", "subject_id", "annotator_id"):
            if not getattr(self, name):
                raise ValidationError(f"{name} must be non-empty")
        validate_mgi(self.mgi)
        sites = [m.site for m in self.marks]
        if len(sites) != len(set(sites)):
            raise ValidationError(f"duplicate site mark in annotation of {self.image_id}")

    def diseased_marks(self) -> tuple[SiteMark, ...]:
        return tuple(m for m in self.marks if m.diseased)


@dataclass(frozen=True)
class ConsensusResult:
    """A consensus label plus how many annotators backed it."""

    label: bool | int
    n_annotators: int
    n_agree: int

    def __post_init__(self):
        if self.n_agree > self.n_annotators:
            raise ValidationError("n_agree cannot exceed n_annotators")


def aggregate_subject_mgi(scores: Sequence[int]) -> int:
    """Modal score; among counts tied for the maximum, the greatest wins."""
    if not scores:
        raise ValidationError("cannot aggregate an empty score list")
    counts = Counter(validate_mgi(s) for s in scores)
    best = max(counts.values())
    return max(score for score, n in counts.items() if n == best)


def consensus_mgi(scores: Sequence[int]) -> ConsensusResult:
    """Per-image consensus across annotators, same modal/greater-tie rule."""
    winner = aggregate_subject_mgi(scores)
    return ConsensusResult(
        label=winner,
        n_annotators=len(scores),
        n_agree=sum(1 for s in scores if s == winner),
    )


def consensus_condition(votes: Sequence[bool]) -> ConsensusResult:
    """Keep a condition only when a strict majority voted for it.

    An even split is not a majority: [yes, no] resolves to absent.
    """
    if not votes:
        raise ValidationError("cannot take consensus of zero votes")
    yes = sum(1 for v in votes if v)
    label = yes * 2 > len(votes)
    agree = yes if label else len(votes) - yes
    return ConsensusResult(label=label, n_annotators=len(votes), n_agree=agree)


def subject_mgi_table(annotations: Iterable[ImageAnnotation]) -> dict[str, int]:
    """Subject id -> consensus score over that subject's images.

    Each image is first resolved across its annotators (modal score,
    greater tie), then the per-image scores aggregate to the subject level
    with the same rule. Timestamps and input order never matter.
    """
    per_image: dict[str, dict[str, list[int]]] = defaultdict(lambda: defaultdict(list))
    for ann in annotations:
        per_image[ann.subject_id][ann.image_id].append(ann.mgi)
    result: dict[str, int] = {}
    for subject_id in sorted(per_image):
        image_scores = [
            aggregate_subject_mgi(scores) for _, scores in sorted(per_image[subject_id].items())
        ]
        result[subject_id] = aggregate_subject_mgi(image_scores)
    return result
