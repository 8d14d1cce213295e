"""HTTP service behind the expert examination portal.

Experts fetch their work queue, submit annotations and watch consensus
form. Storage is an append-only JSON-lines log: every submission is one
line, the latest record per (image, annotator) pair wins, and replaying
the log after a restart reproduces identical state. Consensus is computed
on read with the same aggregation rules the batch pipeline uses, so the
two paths can never diverge.

No authentication: annotator ids are self-declared bookkeeping for a
de-identified research workflow, not a security boundary.
"""

from __future__ import annotations

import threading
from collections import Counter, defaultdict
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, JSONResponse
from pydantic import BaseModel, Field, field_validator

from .annotations import (
    IMAGE_HEIGHT,
    IMAGE_WIDTH,
    MGI_MAX,
    MGI_MIN,
    AnnotationSite,
    ImageAnnotation,
    SiteMark,
    aggregate_subject_mgi,
    consensus_condition,
    consensus_mgi,
)
from .dataio import annotation_from_json, annotation_to_json
from .errors import ValidationError

__all__ = ["AnnotationStore", "create_app", "DEFAULT_PORT"]

DEFAULT_PORT = 8350


class AnnotationStore:
    """Durable append-only log of annotation records.

    Appends are serialized under a lock; readers take a snapshot of the
    derived index, so a request sees consistent state even while writes
    land. Last write wins per (image_id, annotator_id).
    """

    def __init__(self, path: str | Path):
        self._path = Path(path)
        self._lock = threading.Lock()
        self._latest: dict[tuple[str, str], ImageAnnotation] = {}
        if self._path.exists():
            self._replay()
        else:
            self._path.parent.mkdir(parents=True, exist_ok=True)
            self._path.touch()

    def _replay(self) -> None:
        import json

        for line in self._path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            ann = annotation_from_json(json.loads(line))
            self._latest[(ann.image_id, ann.annotator_id)] = ann

    def append(self, ann: ImageAnnotation) -> None:
        import json

        line = json.dumps(annotation_to_json(ann), sort_keys=True) + "\n"
        with self._lock:
            with self._path.open("a", encoding="utf-8") as fh:
                fh.write(line)
            self._latest[(ann.image_id, ann.annotator_id)] = ann

    def snapshot(self) -> dict[tuple[str, str], ImageAnnotation]:
        with self._lock:
            return dict(self._latest)

    def annotations(self) -> list[ImageAnnotation]:
        return list(self.snapshot().values())


class MarkPayload(BaseModel):
    site: str
    points: list[tuple[float, float]] = Field(default_factory=list)
    diseased: bool

    @field_validator("site")
    @classmethod
    def _known_site(cls, v: str) -> str:
        if v not in {s.value for s in AnnotationSite}:
            raise ValueError(f"unknown site {v!r}")
        return v

    @field_validator("points")
    @classmethod
    def _in_bounds(cls, points):
        for x, y in points:
            if not (0 <= x < IMAGE_WIDTH and 0 <= y < IMAGE_HEIGHT):
                raise ValueError(f"point ({x}, {y}) outside image bounds")
        return points


class AnnotationPayload(BaseModel):
    image_id: str = Field(min_length=1)
    subject_id: str = Field(min_length=1)
    annotator_id: str = Field(min_length=1)
    mgi: int = Field(ge=MGI_MIN, le=MGI_MAX)
    marks: list[MarkPayload] = Field(default_factory=list)
    timestamp: datetime | None = None

    def to_record(self) -> ImageAnnotation:
        return ImageAnnotation(
            image_id=self.image_id,
            subject_id=self.subject_id,
            annotator_id=self.annotator_id,
            mgi=self.mgi,
            marks=tuple(
                SiteMark(
                    site=AnnotationSite(m.site),
                    points=tuple(m.points),
                    diseased=m.diseased,
                )
                for m in self.marks
            ),
            timestamp=self.timestamp or datetime.now(timezone.utc),
        )


def _subject_payload(subject_id: str, annotations: Iterable[ImageAnnotation]) -> dict:
    by_image: dict[str, list[ImageAnnotation]] = defaultdict(list)
    for ann in annotations:
        by_image[ann.image_id].append(ann)

    images = []
    image_scores = []
    for image_id in sorted(by_image):
        anns = by_image[image_id]
        mgi_consensus = consensus_mgi([a.mgi for a in anns])
        image_scores.append(mgi_consensus.label)
        sites = {}
        for site in AnnotationSite:
            votes = [
                any(m.site is site and m.diseased for m in a.marks)
                for a in anns
            ]
            site_consensus = consensus_condition(votes)
            sites[site.value] = {
                "diseased": site_consensus.label,
                "n_annotators": site_consensus.n_annotators,
                "n_agree": site_consensus.n_agree,
            }
        images.append(
            {
                "image_id": image_id,
                "mgi": mgi_consensus.label,
                "n_annotators": mgi_consensus.n_annotators,
                "n_agree": mgi_consensus.n_agree,
                "sites": sites,
            }
        )
    return {
        "subject_id": subject_id,
        "mgi": aggregate_subject_mgi(image_scores),
        "n_images": len(images),
        "images": images,
    }


def create_app(
    store: AnnotationStore,
    media_dir: str | Path | None = None,
    cors_origins: list[str] | None = None,
) -> FastAPI:
    """Assemble the portal API around one annotation store."""
    app = FastAPI(title="periscreen annotation service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=cors_origins or ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    media = Path(media_dir) if media_dir else None

    def catalog() -> list[str]:
        ids = {ann.image_id for ann in store.annotations()}
        if media is not None and media.is_dir():
            ids.update(p.stem for p in media.glob("*.png"))
        return sorted(ids)

    @app.get("/api/images")
    def work_queue(annotator: str | None = Query(default=None)):
        if not annotator:
            raise HTTPException(status_code=400, detail="annotator query parameter is required")
        snapshot = store.snapshot()
        done = {image_id for (image_id, ann_id) in snapshot if ann_id == annotator}
        return [
            {"image_id": image_id, "completed": image_id in done}
            for image_id in catalog()
        ]

    @app.post("/api/annotations", status_code=201)
    def submit(payload: AnnotationPayload):
        try:
            record = payload.to_record()
        except ValidationError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        store.append(record)
        return annotation_to_json(record)

    @app.get("/api/consensus/{subject_id}")
    def consensus(subject_id: str):
        annotations = [a for a in store.annotations() if a.subject_id == subject_id]
        if not annotations:
            raise HTTPException(status_code=404, detail=f"unknown subject {subject_id!r}")
        return _subject_payload(subject_id, annotations)

    @app.get("/api/progress")
    def progress():
        total = len(catalog())
        counts: Counter[str] = Counter()
        for image_id, annotator_id in store.snapshot():
            counts[annotator_id] += 1
        return {
            "n_images": total,
            "annotators": {
                annotator: (counts[annotator] / total if total else 0.0)
                for annotator in sorted(counts)
            },
        }

    @app.get("/api/images/{image_id}/file")
    def image_file(image_id: str):
        if media is None:
            raise HTTPException(status_code=404, detail="no media directory configured")
        path = media / f"{image_id}.png"
        if not path.is_file():
            raise HTTPException(status_code=404, detail=f"no media for image {image_id!r}")
        return FileResponse(path, media_type="image/png")

    @app.exception_handler(ValidationError)
    def _validation_error(_request, exc: ValidationError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    return app
