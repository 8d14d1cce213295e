"""Command-line surface tying the pipeline together.

Exit codes: 0 success, 1 validation failure, 2 I/O failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import masks as maskio
from .annotations import subject_mgi_table
from .cooccurrence import TableScheme, run_stratified_grids
from .dataio import Dataset, ingest
from .errors import PeriscreenError, ValidationError
from .masksynth import (
    ColorThresholdConfig,
    baseline_segment,
    bound_annotations,
    color_threshold_mask,
    read_rgb_png,
)
from .reports import build_report_bundle, emit_curves, grid_to_json, write_report_bundle
from .segmetrics import confusion_counts, mean_iou, pooled_roc, pr_curve
from .stats import TailMode

EXIT_VALIDATION = 1
EXIT_IO = 2

_TAILS = {t.value: t for t in TailMode}
_SCHEMES = {s.value: s for s in TableScheme}


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _run(fn):
    try:
        fn()
    except ValidationError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except PeriscreenError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except OSError as exc:
        _fail(EXIT_IO, str(exc))


def _load_config(config_path: str | None) -> ColorThresholdConfig:
    if not config_path:
        return ColorThresholdConfig()
    data = json.loads(Path(config_path).read_text(encoding="utf-8"))
    return ColorThresholdConfig.from_mapping(data)


def _ingest_dir(dataset_dir: str) -> Dataset:
    d = Path(dataset_dir)
    return ingest(
        d / "subjects.csv",
        d / "questionnaire.csv",
        d / "screenings.csv",
        d / "annotations.jsonl",
    )


dataset_dir_argument = click.argument("dataset_dir", type=click.Path(exists=True, file_okay=False))


@click.group()
def main():
    """Oral-systemic screening pipeline."""


@main.command()
@dataset_dir_argument
def ingest_cmd(dataset_dir):
    """Parse and validate a dataset directory (alias of validate)."""

    def go():
        dataset = _ingest_dir(dataset_dir)
        click.echo(
            f"ok: {len(dataset.subjects)} subjects, {len(dataset.annotations)} annotations"
        )

    _run(go)


main.add_command(ingest_cmd, name="ingest")
main.add_command(ingest_cmd, name="validate")


@main.command("aggregate-mgi")
@dataset_dir_argument
@click.option("--out", type=click.Path(), default=None, help="CSV output path (default stdout).")
def aggregate_mgi(dataset_dir, out):
    """Aggregate per-image annotations to subject severity scores."""

    def go():
        dataset = _ingest_dir(dataset_dir)
        table = subject_mgi_table(dataset.annotations)
        lines = ["subject_id,mgi"] + [f"{sid},{mgi}" for sid, mgi in sorted(table.items())]
        text = "\n".join(lines) + "\n"
        if out:
            Path(out).write_text(text, encoding="utf-8")
            click.echo(f"wrote {out}")
        else:
            click.echo(text, nl=False)

    _run(go)


@main.command()
@click.option("--images", "images_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--annotations", "annotations_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def masks(images_dir, annotations_path, out_dir, config_path):
    """Synthesize ground-truth masks from expert marks.

    Marks from every annotator of an image are pooled before bounding.
    """

    def go():
        from .dataio import annotation_from_json

        config = _load_config(config_path)
        by_image: dict[str, list] = {}
        for line in Path(annotations_path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            ann = annotation_from_json(json.loads(line))
            by_image.setdefault(ann.image_id, []).append(ann)
        outp = Path(out_dir)
        outp.mkdir(parents=True, exist_ok=True)
        written = 0
        for image_id, anns in sorted(by_image.items()):
            image_path = Path(images_dir) / f"{image_id}.png"
            if not image_path.is_file():
                continue
            image = read_rgb_png(image_path)
            all_marks = [m for ann in anns for m in ann.marks]
            region = bound_annotations(all_marks, config.dilation_radius_px)
            mask = color_threshold_mask(image, region, config)
            maskio.write_mask_png(mask, outp / f"{image_id}.png")
            written += 1
        (outp / "config.json").write_text(config.to_json() + "\n", encoding="utf-8")
        click.echo(f"wrote {written} masks to {out_dir}")

    _run(go)


@main.command()
@click.option("--images", "images_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def segment(images_dir, out_dir, config_path):
    """Run the color-threshold baseline segmenter over a directory."""

    def go():
        config = _load_config(config_path)
        outp = Path(out_dir)
        outp.mkdir(parents=True, exist_ok=True)
        written = 0
        for image_path in sorted(Path(images_dir).glob("*.png")):
            mask = baseline_segment(read_rgb_png(image_path), config)
            maskio.write_mask_png(mask, outp / image_path.name)
            written += 1
        (outp / "config.json").write_text(config.to_json() + "\n", encoding="utf-8")
        click.echo(f"wrote {written} masks to {out_dir}")

    _run(go)


@main.command("seg-eval")
@click.option("--pred", "pred_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--truth", "truth_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path())
def seg_eval(pred_dir, truth_dir, out_dir):
    """Evaluate predicted masks or probability maps against ground truth.

    Pairs files by stem: predictions may be .png/.pgm masks or .pmap score
    maps; truths are masks.
    """

    def go():
        preds, truths = [], []
        truth_paths = {p.stem: p for p in sorted(Path(truth_dir).iterdir()) if p.is_file()}
        for pred_path in sorted(Path(pred_dir).iterdir()):
            stem = pred_path.stem
            if stem not in truth_paths:
                continue
            truth = _read_mask_any(truth_paths[stem])
            if pred_path.suffix == ".pmap":
                preds.append(maskio.read_probability_map(pred_path))
            else:
                preds.append(_read_mask_any(pred_path))
            truths.append(truth)
        if not preds:
            raise ValidationError("no matching prediction/truth pairs found")
        outp = Path(out_dir)
        outp.mkdir(parents=True, exist_ok=True)
        roc = pooled_roc(preds, truths)
        pr = pr_curve(preds, truths)
        paths = emit_curves(roc, pr, outp / "")
        hard_pairs = [
            (p, t) for p, t in zip(preds, truths) if isinstance(p, maskio.BinaryMask)
        ]
        metrics = {"n_pairs": len(preds)}
        if hard_pairs:
            pooled = confusion_counts(hard_pairs[0][0], hard_pairs[0][1])
            for p, t in hard_pairs[1:]:
                pooled = pooled + confusion_counts(p, t)
            m, sd = mean_iou(hard_pairs)
            metrics.update(
                tp=pooled.tp, fp=pooled.fp, tn=pooled.tn, fn=pooled.fn,
                tpr=pooled.tpr, fpr=pooled.fpr, precision=pooled.precision,
                mean_iou=m, sd_iou=sd,
            )
        (outp / "metrics.json").write_text(
            json.dumps(metrics, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        click.echo(f"wrote metrics and curves to {out_dir}")

    _run(go)


def _read_mask_any(path: Path):
    if path.suffix == ".pgm":
        return maskio.read_mask_pgm(path)
    return maskio.read_mask_png(path)


@main.command()
@dataset_dir_argument
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--tail", type=click.Choice(sorted(_TAILS)), default="two-sided", show_default=True)
@click.option("--scheme", type=click.Choice(sorted(_SCHEMES)), default="ratio-pairs",
              show_default=True, help="How comparison tables are built from the counts.")
@click.option("--stratify", type=click.Choice(["none", "gender", "age"]), default="none",
              show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def correlate(dataset_dir, alpha, tail, scheme, stratify, out_dir):
    """Run the severity-by-condition co-occurrence grids."""

    def go():
        dataset = _ingest_dir(dataset_dir)
        mgi_by_subject = subject_mgi_table(dataset.annotations)
        outp = Path(out_dir)
        outp.mkdir(parents=True, exist_ok=True)
        if stratify == "none":
            from .cooccurrence import run_grid

            grid = run_grid(
                dataset.subjects, mgi_by_subject, alpha=alpha,
                tail=_TAILS[tail], scheme=_SCHEMES[scheme],
            )
            grids = [grid]
        else:
            grids = run_stratified_grids(
                dataset.subjects, mgi_by_subject, strata=stratify,
                alpha=alpha, tail=_TAILS[tail], scheme=_SCHEMES[scheme],
            )
        for grid in grids:
            name = f"grid_{grid.filter.describe().replace('=', '_')}.json"
            (outp / name).write_text(
                json.dumps(grid_to_json(grid), indent=2, sort_keys=True) + "\n",
                encoding="utf-8",
            )
        click.echo(f"wrote {len(grids)} grid(s) to {out_dir}")

    _run(go)


@main.command()
@dataset_dir_argument
@click.option("--alpha", type=float, default=0.05, show_default=True)
@click.option("--tail", type=click.Choice(sorted(_TAILS)), default="two-sided", show_default=True)
@click.option("--scheme", type=click.Choice(sorted(_SCHEMES)), default="ratio-pairs",
              show_default=True)
@click.option("--stratify", type=click.Choice(["none", "gender", "age"]), default="none",
              show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
def report(dataset_dir, alpha, tail, scheme, stratify, out_dir):
    """Regenerate the full report bundle: distribution plus all grids."""

    def go():
        dataset = _ingest_dir(dataset_dir)
        bundle = build_report_bundle(
            dataset,
            alpha=alpha,
            tail=_TAILS[tail],
            scheme=_SCHEMES[scheme],
            strata=None if stratify == "none" else stratify,
        )
        paths = write_report_bundle(bundle, out_dir)
        click.echo(f"wrote {len(paths)} report files to {out_dir}")

    _run(go)


@main.command()
@click.option("--store", "store_path", required=True, type=click.Path())
@click.option("--media-dir", type=click.Path(file_okay=False), default=None)
@click.option("--port", type=int, default=8350, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--cors-origin", "cors_origins", multiple=True,
              help="Allowed portal origins (default: any).")
def serve(store_path, media_dir, port, host, cors_origins):
    """Start the annotation service."""

    def go():
        import uvicorn

        from .service import AnnotationStore, create_app

        store = AnnotationStore(store_path)
        app = create_app(store, media_dir=media_dir, cors_origins=list(cors_origins) or None)
        uvicorn.run(app, host=host, port=port, log_level="info")

    _run(go)


if __name__ == "__main__":
    main()
